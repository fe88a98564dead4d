"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a PASS/FAIL line (see ``conftest.py``); the lines are
printed at the end of the pytest run. ``python -m tests.test_acceptance``
runs the same checks without pytest.
"""

import subprocess
import sys
import time

import numpy as np

from cemi import merging as mg
from cemi import optimize as op
from cemi import verify
from cemi.conditioning import cemi_objective, separable_flag_extension
from cemi.entropy import mutual_information, subsystem_entropy
from cemi.tensor import (
    SubsystemLayout,
    bell_state,
    classical_correlated,
    ket,
    random_density,
    random_pure,
    relabel,
    split_seeds,
    tensor,
)

RESULTS: list[str] = []
AB = SubsystemLayout.of(("A", 2), ("B", 2))


def report(criterion: str, checks: dict[str, bool], detail: str) -> None:
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    if failed:
        line += f" (failed: {', '.join(failed)})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_separable_zero():
    q = SubsystemLayout.of(("A", 2)), SubsystemLayout.of(("B", 2))
    t0 = time.perf_counter()
    r = op.cemi_upper_bound(classical_correlated(), op.AnsatzDims.bipartite(2, 2, 1),
                            op.OptimizerConfig(restarts=8, seed=7))
    runtime = time.perf_counter() - t0
    flag = separable_flag_extension([(0.5, ket(q[0], (0,)), ket(q[1], (0,))),
                                     (0.5, ket(q[0], (1,)), ket(q[1], (1,)))])
    flag_value = cemi_objective(flag)
    report("C1 separable zero", {
        "cemi-ub dims (2,2,1) <= 1e-6": r.best_value <= 1e-6,
        "flag extension |value| <= 1e-9": abs(flag_value) <= 1e-9,
        "runtime < 60 s": runtime < 60,
    }, f"best_value={r.best_value:.12e} flag={flag_value:.3e} runtime={runtime:.1f}s")


def test_criterion_2_pure_state_value():
    t0 = time.perf_counter()
    dims = op.AnsatzDims.bipartite(2, 2, 2)
    worst = 0.0
    for ss in split_seeds(2024, 20):
        rng = np.random.default_rng(ss)
        psi = random_pure(AB, rng)
        want = subsystem_entropy(psi, ["A"])
        ans = op.cemi_ansatz(psi.density(), dims)
        for _ in range(100):
            theta = rng.normal(size=ans.n_params) * rng.uniform(0.1, 3.0)
            worst = max(worst, abs(ans.value(ans.isometry(theta)) - want))
    bell = op.cemi_upper_bound(bell_state().density(), op.AnsatzDims.bipartite(1, 1, 1))
    runtime = time.perf_counter() - t0
    report("C2 pure-state value", {
        "constant = S(A) within 1e-9": worst <= 1e-9,
        "Bell (1,1,1) exactly 1.0": bell.best_value == 1.0,
        "runtime < 120 s": runtime < 120,
    }, f"max deviation={worst:.3e} bell={bell.best_value!r} runtime={runtime:.1f}s")


def _worst(rep, name):
    return rep.checks[name].worst_slack


def test_criterion_3_monotonicity():
    t0 = time.perf_counter()
    rep = verify.verify_monotonicity(seed=3, trials=100)
    runtime = time.perf_counter() - t0
    report("C3 monotonicity", {
        "final inequality slack >= -1e-9": _worst(rep, "final_inequality") >= -1e-9,
        "Holevo decomposition within 1e-9": _worst(rep, "holevo_decomposition") >= -1e-9,
        "no failures": rep.passed,
        "runtime < 5 min": runtime < 300,
    }, f"worst inequality={_worst(rep, 'final_inequality'):.3e} "
       f"holevo={_worst(rep, 'holevo_decomposition'):.3e} runtime={runtime:.1f}s")


def test_criterion_4_additivity():
    rep = verify.verify_additivity(seed=4, trials=100)
    cfg1 = op.OptimizerConfig(restarts=2, max_evals=3000, seed=4)
    cfg_prod = op.OptimizerConfig(restarts=1, max_evals=400, seed=4)
    d1 = op.AnsatzDims.bipartite(2, 2, 1)
    worst_gap = -np.inf
    for i, ss in enumerate(split_seeds(44, 5)):
        s_rho, s_sig = ss.spawn(2)
        rho = random_density(AB, s_rho, rank=2)
        sig = relabel(random_density(AB, s_sig, rank=2), {"A": "C", "B": "D"})
        r1 = op.cemi_upper_bound(rho, d1, cfg1)
        r2 = op.cemi_upper_bound(sig, d1, cfg1)
        a1, a2 = op.cemi_ansatz(rho, d1), op.cemi_ansatz(sig, d1)
        w1 = op.isometry_from_report(r1)
        w2 = op.isometry_from_report(r2)
        w1 = a1.isometry(np.zeros(a1.n_params)) if w1 is None else w1
        w2 = a2.isometry(np.zeros(a2.n_params)) if w2 is None else w2
        prod_dims = op.AnsatzDims.bipartite(4, 4, 1)
        parties = [["A", "C"], ["B", "D"]]
        prod = op.cemi_ansatz(tensor(rho, sig), prod_dims, parties=parties)
        warm = op.product_isometry(prod, a1, w1, a2, w2)
        rp = op.cemi_upper_bound(tensor(rho, sig), prod_dims, cfg_prod, parties=parties, warm_starts=[warm])
        worst_gap = max(worst_gap, rp.best_value - (r1.best_value + r2.best_value))
    report("C4 additivity", {
        "product additivity within 1e-9": _worst(rep, "product_additivity") >= -1e-9,
        "telescoping within 1e-10": _worst(rep, "telescoping") >= -1e-10 and rep.checks["telescoping"].tol <= 1e-10,
        "no failures": rep.passed,
        "UB(rho x sigma) <= UB(rho)+UB(sigma)+1e-6": worst_gap <= 1e-6,
    }, f"product={_worst(rep, 'product_additivity'):.3e} telescoping={_worst(rep, 'telescoping'):.3e} "
       f"max UB gap={worst_gap:.3e}")


def test_criterion_5_convexity():
    rep = verify.verify_convexity(seed=5, trials=100)
    report("C5 convexity", {
        "equality within 1e-9": _worst(rep, "convex_combination") >= -1e-9,
        "no failures": rep.passed,
    }, f"worst={_worst(rep, 'convex_combination'):.3e} over {rep.trials} triples")


def test_criterion_6_conservation():
    five = SubsystemLayout.of(("A", 2), ("A'", 2), ("B", 2), ("B'", 2), ("E", 2))
    worst_route = 0.0
    for ss in split_seeds(6, 100):
        psi = random_pure(five, ss)
        scn = mg.bipartite_scenario(psi)
        target = 0.5 * (mutual_information(psi, [["A", "A'"], ["B", "B'"]])
                        - mutual_information(psi, [["A'"], ["B'"]]))
        q1 = mg.route_cost(scn, mg.route_one(scn)).total
        q2 = mg.route_cost(scn, mg.route_two(scn)).total
        worst_route = max(worst_route, abs(q1 - target), abs(q2 - target))
    seven = SubsystemLayout.of(("A", 2), ("A'", 2), ("B", 2), ("B'", 2), ("C", 2), ("C'", 2), ("E", 2))
    worst_order = 0.0
    for ss in split_seeds(66, 20):
        scn = mg.multiparty_scenario(random_pure(seven, ss), [("A", "A'"), ("B", "B'"), ("C", "C'")], ("E",))
        spread, totals = mg.order_spread(scn)
        assert len(totals) == 6
        worst_order = max(worst_order, spread)
    rep = verify.verify_conservation(seed=6, trials=100)
    report("C6 conservation", {
        "Q_I = Q_II = objective within 1e-9": worst_route <= 1e-9,
        "multiparty order independence within 1e-9": worst_order <= 1e-9,
        "suite has no failures": rep.passed,
    }, f"route deviation={worst_route:.3e} order spread={worst_order:.3e}")


def test_criterion_7_entropic():
    rep = verify.verify_entropic(seed=7, trials=1000)
    report("C7 entropic identities", {
        ">= 1000 states": rep.trials >= 1000,
        "sym/asym identity": _worst(rep, "sym_asym_identity") >= -rep.checks["sym_asym_identity"].tol,
        "strong subadditivity >= -1e-9": _worst(rep, "strong_subadditivity") >= -1e-9,
        "purity identity <= 1e-10": _worst(rep, "purity_entropy_match") >= -1e-10
        and rep.checks["purity_entropy_match"].tol <= 1e-10,
        "no failures": rep.passed,
    }, f"sym/asym={_worst(rep, 'sym_asym_identity'):.3e} ssa={_worst(rep, 'strong_subadditivity'):.3e} "
       f"purity={_worst(rep, 'purity_entropy_match'):.3e}")


def test_criterion_8_determinism(tmp_path):
    outs, codes, stdouts = [], [], []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        res = subprocess.run([sys.executable, "-m", "cemi.cli", "verify", "--suite", "all", "--trials", "50",
                              "--seed", "1", "--out", str(path)], capture_output=True, text=True)
        codes.append(res.returncode)
        stdouts.append(res.stdout)
        outs.append(path.read_bytes() if path.exists() else b"")
    report("C8 determinism", {
        "exit code 0": codes == [0, 0],
        "byte-identical reports": outs[0] == outs[1] and len(outs[0]) > 0,
        "identical stdout": stdouts[0] == stdouts[1],
    }, f"exit codes={codes} report bytes={len(outs[0])}")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion")):
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
