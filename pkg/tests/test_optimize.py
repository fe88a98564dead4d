import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cemi import io
from cemi import optimize as op
from cemi.conditioning import cemi_objective, multipartite_cemi_objective, reduction_defect
from cemi.entropy import multipartite_mi, mutual_information, subsystem_entropy
from cemi.errors import LayoutError
from cemi.tensor import (
    DensityMatrix,
    SubsystemLayout,
    bell_state,
    classical_correlated,
    ghz_state,
    maximally_mixed,
    projector,
    random_density,
    random_pure,
    relabel,
    tensor,
)

AB = SubsystemLayout.of(("A", 2), ("B", 2))
FAST = op.OptimizerConfig(restarts=2, max_evals=2000, seed=3)


def test_generator_is_antihermitian_with_d2_params():
    theta = np.random.default_rng(0).normal(size=9)
    k = op.generator(theta, 3)
    np.testing.assert_allclose(k, -k.conj().T, atol=0)
    with pytest.raises(ValueError):
        op.generator(theta[:8], 3)


def test_params_round_trip():
    theta = 0.3 * np.random.default_rng(1).normal(size=16)
    from scipy.linalg import expm
    back = op.params_from_unitary(expm(op.generator(theta, 4)))
    np.testing.assert_allclose(back, theta, atol=1e-10)


def test_zero_params_give_canonical_extension():
    rho = random_density(AB, 2)
    ext = op.extension_from_params(rho, op.AnsatzDims.bipartite(2, 2, 1), np.zeros(16))
    assert reduction_defect(ext.state, ext.parties, rho) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dims=st.tuples(st.integers(1, 2), st.integers(1, 2), st.integers(2, 3)))
def test_every_candidate_is_feasible(seed, dims):
    rho = random_density(AB, seed, rank=2)
    d = op.AnsatzDims.bipartite(*dims)
    theta = np.random.default_rng(seed).normal(size=d.total ** 2)
    ext = op.extension_from_params(rho, d, theta)
    assert reduction_defect(ext.state, ext.parties, rho) <= 1e-8
    assert cemi_objective(ext) >= -1e-9


@pytest.mark.parametrize("seed", range(3))
def test_pure_base_objective_is_schmidt_entropy(seed):
    psi = random_pure(AB, seed)
    want = subsystem_entropy(psi, ["A"])
    d = op.AnsatzDims.bipartite(2, 2, 1)
    rng = np.random.default_rng(seed)
    for _ in range(10):
        ext = op.extension_from_params(psi.density(), d, rng.normal(size=16))
        assert cemi_objective(ext) == pytest.approx(want, abs=1e-9)


def test_embeddability_error_names_requirement():
    rho = random_density(AB, 0, rank=3)
    with pytest.raises(ValueError, match="3"):
        op.cemi_upper_bound(rho, op.AnsatzDims.bipartite(1, 1, 2), FAST)


def test_bell_trivial_dims_exact():
    r = op.cemi_upper_bound(bell_state().density(), op.AnsatzDims.bipartite(1, 1, 1))
    assert r.best_value == 1.0
    assert r.best_source == "baseline"
    assert r.evaluations == 0


def test_default_dims():
    rho = random_density(AB, 0, rank=3)
    assert op.default_dims(rho) == op.AnsatzDims((2, 2), 3)


def test_baseline_dominance_and_nonnegativity():
    for seed in range(3):
        rho = random_density(AB, seed, rank=2)
        r = op.cemi_upper_bound(rho, op.AnsatzDims.bipartite(2, 1, 2), FAST)
        assert r.baseline_trivial == pytest.approx(0.5 * mutual_information(rho, [["A"], ["B"]]), abs=1e-12)
        assert -1e-9 <= r.best_value <= r.baseline_trivial + 1e-9


def test_classical_state_reaches_zero_with_residual():
    r = op.cemi_upper_bound(classical_correlated(), op.AnsatzDims.bipartite(2, 2, 2),
                            op.OptimizerConfig(restarts=2, seed=0))
    assert r.best_value <= 1e-6


def test_report_reproducible_and_serializable(tmp_path):
    rho = random_density(AB, 4, rank=2)
    d = op.AnsatzDims.bipartite(2, 1, 2)
    r1 = op.cemi_upper_bound(rho, d, FAST)
    r2 = op.cemi_upper_bound(rho, d, FAST)
    assert r1 == r2
    io.write(r1.to_dict(), tmp_path / "r.json")
    doc = io.read(tmp_path / "r.json")
    assert doc["kind"] == "bound_report"
    back = op.BoundReport.from_dict(doc)
    assert back == r1
    w = op.isometry_from_report(back)
    ans = op.cemi_ansatz(rho, d)
    assert ans.value(w) == pytest.approx(r1.best_value, abs=1e-12)


def test_parallel_restarts_match_serial():
    rho = random_density(AB, 5, rank=2)
    d = op.AnsatzDims.bipartite(2, 1, 2)
    serial = op.cemi_upper_bound(rho, d, FAST)
    par = op.cemi_upper_bound(rho, d, op.OptimizerConfig(restarts=2, max_evals=2000, seed=3, workers=3))
    assert serial == par


def test_monotone_in_dims_with_padded_start():
    rho = random_density(AB, 6, rank=2)
    small = op.AnsatzDims.bipartite(1, 2, 2)
    big = op.AnsatzDims.bipartite(2, 2, 2)
    r_small = op.cemi_upper_bound(rho, small, FAST)
    w = op.isometry_from_report(r_small)
    warm = [op.pad_isometry(w, (1, 2, 2), (2, 2, 2))] if w is not None else []
    r_big = op.cemi_upper_bound(rho, big, FAST, warm_starts=warm)
    assert r_big.best_value <= r_small.best_value + 1e-9


def test_pad_isometry_preserves_value():
    rho = random_density(AB, 7, rank=2)
    a_small = op.cemi_ansatz(rho, op.AnsatzDims.bipartite(1, 2, 2))
    a_big = op.cemi_ansatz(rho, op.AnsatzDims.bipartite(2, 3, 2))
    w = a_small.isometry(np.random.default_rng(0).normal(size=a_small.n_params))
    wp = op.pad_isometry(w, (1, 2, 2), (2, 3, 2))
    np.testing.assert_allclose(wp.conj().T @ wp, np.eye(2), atol=1e-12)
    assert a_big.value(wp) == pytest.approx(a_small.value(w), abs=1e-12)


def test_product_isometry_realizes_product_extension():
    r1 = random_density(AB, 8, rank=2)
    r2 = relabel(random_density(AB, 9, rank=2), {"A": "C", "B": "D"})
    a1 = op.cemi_ansatz(r1, op.AnsatzDims.bipartite(2, 1, 2))
    a2 = op.cemi_ansatz(r2, op.AnsatzDims.bipartite(1, 2, 2))
    rng = np.random.default_rng(1)
    w1 = a1.isometry(rng.normal(size=a1.n_params))
    w2 = a2.isometry(rng.normal(size=a2.n_params))
    prod = op.cemi_ansatz(tensor(r1, r2), op.AnsatzDims.bipartite(2, 2, 4), parties=[["A", "C"], ["B", "D"]])
    w = op.product_isometry(prod, a1, w1, a2, w2)
    assert prod.value(w) == pytest.approx(a1.value(w1) + a2.value(w2), abs=1e-9)


# -- squashed entanglement bound -------------------------------------


def test_esq_bell_trivial_env():
    r = op.esq_upper_bound(bell_state().density(), 1, FAST)
    assert r.best_value == pytest.approx(1.0, abs=1e-12)


def test_esq_classical_state_flag_env():
    r = op.esq_upper_bound(classical_correlated(), 2, op.OptimizerConfig(restarts=2, seed=0))
    assert r.best_value <= 1e-6


def test_esq_product_base_is_zero():
    rho = tensor(random_density(SubsystemLayout.of(("A", 2)), 1), random_density(SubsystemLayout.of(("B", 2)), 2))
    for env in (1, 2):
        r = op.esq_upper_bound(rho, env, op.OptimizerConfig(restarts=1, max_evals=500, seed=0))
        assert abs(r.baseline_trivial) < 1e-12
        assert abs(r.best_value) <= 1e-9


# -- multipartite bound -----------------------------------------------


def test_multipartite_two_party_agrees():
    rho = random_density(AB, 10, rank=2)
    d = op.AnsatzDims.bipartite(2, 1, 2)
    a = op.cemi_upper_bound(rho, d, FAST)
    b = op.multipartite_cemi_upper_bound(rho, d, FAST)
    assert a.best_value == pytest.approx(b.best_value, abs=1e-9)


def test_multipartite_ghz_trivial_primes():
    r = op.multipartite_cemi_upper_bound(ghz_state().density(), op.AnsatzDims((1, 1, 1), 2), FAST)
    assert r.best_value == pytest.approx(1.5, abs=1e-12)
    assert r.baseline_trivial == pytest.approx(0.5 * multipartite_mi(ghz_state(), [["A"], ["B"], ["C"]]))


def test_multipartite_classical_flag_dims():
    lay = SubsystemLayout.of(("A", 2), ("B", 2), ("C", 2))
    cc3 = DensityMatrix(lay, 0.5 * (projector(lay, (0, 0, 0)).matrix + projector(lay, (1, 1, 1)).matrix))
    r = op.multipartite_cemi_upper_bound(cc3, op.AnsatzDims((2, 2, 2), 2), op.OptimizerConfig(restarts=1, seed=0))
    assert r.best_value <= 1e-6
    ext = op.cemi_ansatz(cc3, op.AnsatzDims((2, 2, 2), 2), multi=True).extension(op.isometry_from_report(r))
    assert multipartite_cemi_objective(ext) == pytest.approx(r.best_value, abs=1e-9)


def test_maximally_mixed_needs_no_search():
    rho = maximally_mixed(AB)
    r = op.cemi_upper_bound(rho, op.AnsatzDims.bipartite(1, 1, 4), FAST)
    assert r.best_value == pytest.approx(0.0, abs=1e-12)
    json.dumps(r.to_dict())


def test_config_validation():
    with pytest.raises(ValueError):
        op.OptimizerConfig(restarts=0)
    with pytest.raises(ValueError):
        op.AnsatzDims.bipartite(0, 1, 1)
    with pytest.raises(LayoutError):
        op.cemi_upper_bound(random_density(AB, 0), parties=[["A"], ["Z"]])
