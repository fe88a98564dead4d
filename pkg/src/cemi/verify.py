"""Seeded numerical verification of the extension constructions and flow identities.

Each suite draws ``trials`` random cases from a master seed, evaluates one
or more *checks* per case and records a signed slack per check:

* inequality checks: ``slack = LHS - RHS``
* identity checks:   ``slack = -|LHS - RHS|``

A check passes iff ``slack >= -tol``. Every case is computed by a pure
function of serializable inputs, so a recorded failure can be replayed
with :func:`replay` and reproduces its slack exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import conditioning as cond
from . import entropy as ent
from . import io
from . import merging
from .optimize import AnsatzDims, cemi_ansatz
from .tensor import (
    DensityMatrix,
    KrausInstrument,
    PureStateVector,
    SubsystemLayout,
    apply_instrument,
    condition_on_pointer,
    dilate_instrument,
    make_rng,
    random_density,
    random_instrument,
    random_pure,
    trace_distance,
)

TOL = 1e-9


@dataclass
class CheckStat:
    tol: float
    kind: str
    worst_slack: float = float("inf")
    count: int = 0

    def to_dict(self):
        return {"kind": self.kind, "tol": self.tol, "worst_slack": self.worst_slack, "count": self.count}


@dataclass
class SuiteReport:
    suite: str
    trials: int
    seed: int
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, case: str, trial: int, slacks: dict, inputs: dict) -> None:
        for name, (slack, kind, tol) in slacks.items():
            st = self.checks.setdefault(name, CheckStat(tol, kind))
            st.count += 1
            st.worst_slack = min(st.worst_slack, float(slack))
            if not slack >= -tol:
                self.failures.append(
                    {"case": case, "check": name, "trial": trial, "slack": float(slack), "tol": tol, "input": inputs}
                )

    def to_dict(self) -> dict:
        return {
            "kind": "suite_report",
            "suite": self.suite,
            "trials": self.trials,
            "seed": self.seed,
            "passed": self.passed,
            "checks": {k: v.to_dict() for k, v in sorted(self.checks.items())},
            "failures": sorted(self.failures, key=lambda f: (f["trial"], f["check"])),
            "info": self.info,
        }


def ineq(lhs, rhs, tol=TOL):
    return (float(lhs - rhs), "inequality", tol)


def ident(lhs, rhs, tol=TOL):
    return (-abs(float(lhs - rhs)), "identity", tol)


# --------------------------------------------------------------------------
# case functions: serializable inputs -> slacks
# --------------------------------------------------------------------------


def _mi(state, x, y):
    return ent.mutual_information(state, [x, y])


def monotonicity_case(state: DensityMatrix, measured: tuple, other: tuple, m: KrausInstrument) -> dict:
    """All links of the local-measurement chain for one (extension, instrument) pair.

    ``measured`` and ``other`` are ``(system, prime)`` label pairs; the
    instrument acts on ``measured[0]``.
    """
    a, ap = measured
    b, bp = other
    lhs = _mi(state, [a, ap], [b, bp]) - _mi(state, [ap], [bp])

    ens = apply_instrument(state, m)
    avg = sum(p * (_mi(s, [a, ap], [b, bp]) - _mi(s, [ap], [bp])) for p, s in ens.members)

    pointer = f"{a}_0"
    flagged = dilate_instrument(state, m, pointer=pointer)
    dilated = _mi(flagged, [pointer, a, ap], [b, bp]) - _mi(flagged, [ap], [bp])

    # ancillas in |00> and the dilation unitary leave the measured-side MI unchanged
    full = dilate_instrument(state, m, pointer=pointer, keep_scratch=True)
    scratch = f"{a}_1"
    unitary_side = _mi(full, [pointer, scratch, a, ap], [b, bp]) - _mi(full, [ap], [bp])

    chi = lambda labs: ent.holevo(ens.reduce(labs))  # noqa: E731
    chis = chi([b, bp]) + chi([ap, bp]) - chi([ap]) - chi([bp])

    equiv = 0.0
    for k, (p, s) in enumerate(apply_instrument(state, m).members):
        pk, sk = condition_on_pointer(flagged, pointer, k)
        equiv = max(equiv, abs(pk - p), float(np.max(np.abs(sk.matrix - s.matrix))))

    return {
        "ancilla_unitary_invariance": ident(lhs, unitary_side),
        "discard_ancilla": ineq(lhs, dilated),
        "holevo_decomposition": ident(dilated - avg, chis),
        "holevo_monotone": ineq(chis, 0.0),
        "final_inequality": ineq(lhs, avg),
        "dilation_equivalence": (-equiv, "identity", 1e-10),
    }


def additivity_case(e1_state: DensityMatrix, e2_state: DensityMatrix, joint: DensityMatrix) -> dict:
    e1 = cond.extension(e1_state, [("A", "A'"), ("B", "B'")])
    e2 = cond.extension(e2_state, [("C", "C'"), ("D", "D'")])
    prod = cond.product_extension(e1, e2)
    o1, o2, op = cond.cemi_objective(e1), cond.cemi_objective(e2), cond.cemi_objective(prod)
    # second direction: tau on A C E' : B D F'
    full = _mi(joint, ["A", "C", "E'"], ["B", "D", "F'"])
    mid = _mi(joint, ["C", "E'"], ["D", "F'"])
    low = _mi(joint, ["E'"], ["F'"])
    return {
        "product_additivity": ident(op, o1 + o2),
        "telescoping": (-abs((full - low) - ((full - mid) + (mid - low))), "identity", 1e-10),
        "telescoping_first_term": ineq(full - mid, 0.0),
        "telescoping_second_term": ineq(mid - low, 0.0),
    }


def convexity_case(s1: DensityMatrix, s2: DensityMatrix, lam: float) -> dict:
    parties = [("A", "A'"), ("B", "B'")]
    e1, e2 = cond.extension(s1, parties), cond.extension(s2, parties)
    mix = cond.convex_flag_extension(e1, e2, lam)
    return {
        "convex_combination": ident(cond.cemi_objective(mix), lam * cond.cemi_objective(e1)
                                    + (1 - lam) * cond.cemi_objective(e2)),
        "reduction_constraint": (-cond.reduction_defect(mix.state, mix.parties, mix.base), "identity", 1e-8),
    }


def conservation_case(state: PureStateVector) -> dict:
    scn = merging.bipartite_scenario(state)
    r1 = merging.route_cost(scn, merging.route_one(scn))
    r2 = merging.route_cost(scn, merging.route_two(scn))
    direct = 0.5 * (_mi(state, ["A", "A'"], ["B", "B'"]) - _mi(state, ["A'"], ["B'"]))
    via = merging.q_one_via_complements(state)
    return {
        "route_one_formula": ident(r1.total, merging.q_one_formula(state)),
        "route_two_formula": ident(r2.total, merging.q_two_formula(state)),
        "route_one_equals_objective": ident(r1.total, direct),
        "route_two_equals_objective": ident(r2.total, direct),
        "purity_identity_step1": ident(r1.steps[0].cost, via[0]),
        "purity_identity_step2": ident(r1.steps[1].cost, via[1]),
        "route_two_middle_step_zero": ident(r2.steps[1].cost, 0.0),
    }


def multiparty_case(state: PureStateVector) -> dict:
    parties = [("A", "A'"), ("B", "B'"), ("C", "C'")]
    scn = merging.multiparty_scenario(state, parties, center=("E",))
    totals = [merging.multiparty_route_cost(scn, o).total for o in permutations(scn.parties)]
    target = merging.scenario_objective(scn)
    return {
        "order_independence": ident(max(totals), min(totals)),
        "order_total_equals_objective": ident(totals[0], target),
    }


def entropic_case(tri: DensityMatrix, pure: PureStateVector) -> dict:
    lhs = _mi(tri, ["A"], ["B", "E"]) - _mi(tri, ["A"], ["E"])
    rhs = _mi(tri, ["A", "E"], ["B"]) - _mi(tri, ["E"], ["B"])
    x = [lab for lab in pure.layout.labels if lab.startswith("X")]
    y = [lab for lab in pure.layout.labels if lab.startswith("Y")]
    return {
        "sym_asym_identity": ident(lhs, rhs),
        "strong_subadditivity": ineq(ent.conditional_mi(tri, ["A"], ["B"], ["E"]), 0.0),
        "purity_entropy_match": (-abs(ent.subsystem_entropy(pure, x) - ent.subsystem_entropy(pure, y)), "identity", 1e-10),
        "mi_monotone_under_discard": ineq(_mi(tri, ["A", "E"], ["B"]), _mi(tri, ["A"], ["B"])),
    }


def separable_case(decomposition) -> dict:
    ext = cond.separable_flag_extension(decomposition)
    val = cond.cemi_objective(ext)
    return {
        "separable_zero": ident(val, 0.0),
        "separable_net_flow_zero": ident(merging.net_flow(ext), 0.0),
    }


def pure_base_case(base: PureStateVector, params: list) -> dict:
    rho = base.density()
    dims = AnsatzDims.bipartite(2, 2, 2)
    ans = cemi_ansatz(rho, dims)
    w = ans.isometry(np.asarray(params))
    ext = ans.extension(w)
    s_a = ent.subsystem_entropy(base, ["A"])
    return {
        "pure_base_constancy": ident(cond.cemi_objective(ext), s_a),
        "objective_nonnegative": ineq(cond.cemi_objective(ext), 0.0),
        "net_flow_matches_objective": ident(merging.net_flow(ext), cond.cemi_objective(ext)),
    }


# --------------------------------------------------------------------------
# serialization for replay
# --------------------------------------------------------------------------


def _enc(v):
    if isinstance(v, (DensityMatrix, PureStateVector)):
        return {"state": io.state_to_dict(v)}
    if isinstance(v, KrausInstrument):
        return {"instrument": io.instrument_to_dict(v)}
    if isinstance(v, tuple):
        return {"tuple": [_enc(x) for x in v]}
    if isinstance(v, list):
        return {"list": [_enc(x) for x in v]}
    return {"value": v}


def _dec(d):
    if "state" in d:
        return io.state_from_dict(d["state"]) if d["state"]["kind"] == "pure" else \
            DensityMatrix.trusted(SubsystemLayout.from_lists(d["state"]["labels"], d["state"]["dims"]),
                                  io._complex(d["state"]["matrix"]))
    if "instrument" in d:
        return io.instrument_from_dict(d["instrument"])
    if "tuple" in d:
        return tuple(_dec(x) for x in d["tuple"])
    if "list" in d:
        return [_dec(x) for x in d["list"]]
    return d["value"]


CASES = {
    "monotonicity": monotonicity_case,
    "additivity": additivity_case,
    "convexity": convexity_case,
    "conservation": conservation_case,
    "multiparty": multiparty_case,
    "entropic": entropic_case,
    "separable": separable_case,
    "pure_base": pure_base_case,
}


def _run_case(report: SuiteReport, case: str, trial: int, *args):
    slacks = CASES[case](*args)
    failing = any(not s >= -tol for s, _, tol in slacks.values())
    inputs = {"args": [_enc(a) for a in args]} if failing else {}
    report.record(case, trial, slacks, inputs)


def replay(failure: dict) -> float:
    """Recompute the slack of a recorded failure from its serialized inputs."""
    args = [_dec(a) for a in failure["input"]["args"]]
    return CASES[failure["case"]](*args)[failure["check"]][0]


# --------------------------------------------------------------------------
# random case generators
# --------------------------------------------------------------------------


def _lay(pairs):
    return SubsystemLayout(tuple(pairs))


def _ext_layout(rng, sys=("A", "B"), max_dim=2):
    a, b = sys
    dims = [int(rng.integers(1, max_dim + 1)) for _ in range(4)]
    dims[0] = dims[2] = max_dim
    return _lay([(a, dims[0]), (a + "'", dims[1]), (b, dims[2]), (b + "'", dims[3])])


def _random_ext_state(rng, sys=("A", "B")):
    lay = _ext_layout(rng, sys)
    rank = int(rng.integers(1, lay.total_dim + 1))
    return random_density(lay, rng, rank)


def _trial_rngs(seed: int, suite: str, trials: int):
    tag = sum(ord(c) * 31 ** i for i, c in enumerate(suite)) % (2 ** 32)
    return [make_rng(s) for s in np.random.SeedSequence([int(seed), tag]).spawn(trials)]


def verify_monotonicity(seed: int = 0, trials: int = 100) -> SuiteReport:
    rep = SuiteReport("monotonicity", trials, seed)
    for t, rng in enumerate(_trial_rngs(seed, "monotonicity", trials)):
        state = _random_ext_state(rng)
        on_a = bool(rng.integers(0, 2))
        measured, other = (("A", "A'"), ("B", "B'")) if on_a else (("B", "B'"), ("A", "A'"))
        k = int(rng.integers(1, 4))
        m = random_instrument(measured[0], state.layout.dim(measured[0]), k, rng)
        _run_case(rep, "monotonicity", t, state, measured, other, m)
    return rep


def verify_additivity(seed: int = 0, trials: int = 100) -> SuiteReport:
    rep = SuiteReport("additivity", trials, seed)
    for t, rng in enumerate(_trial_rngs(seed, "additivity", trials)):
        s1 = _random_ext_state(rng, ("A", "B"))
        s2 = _random_ext_state(rng, ("C", "D"))
        joint_lay = _lay([("A", 2), ("C", 2), ("E'", 2), ("B", 2), ("D", 2), ("F'", 2)])
        joint = random_density(joint_lay, rng, int(rng.integers(1, 65)))
        _run_case(rep, "additivity", t, s1, s2, joint)
    return rep


def verify_convexity(seed: int = 0, trials: int = 100) -> SuiteReport:
    rep = SuiteReport("convexity", trials, seed)
    for t, rng in enumerate(_trial_rngs(seed, "convexity", trials)):
        lay = _ext_layout(rng)
        s1 = random_density(lay, rng, int(rng.integers(1, lay.total_dim + 1)))
        s2 = random_density(lay, rng, int(rng.integers(1, lay.total_dim + 1)))
        _run_case(rep, "convexity", t, s1, s2, float(rng.uniform()))
    return rep


def verify_conservation(seed: int = 0, trials: int = 100) -> SuiteReport:
    rep = SuiteReport("conservation", trials, seed)
    for t, rng in enumerate(_trial_rngs(seed, "conservation", trials)):
        dims = [int(rng.integers(1, 3)) for _ in range(5)]
        lay = _lay(zip(["A", "A'", "B", "B'", "E"], dims))
        _run_case(rep, "conservation", t, random_pure(lay, rng))
        lay3 = _lay([("A", 2), ("A'", 2), ("B", 2), ("B'", 2), ("C", 2), ("C'", 2), ("E", 2)])
        _run_case(rep, "multiparty", t, random_pure(lay3, rng))
    return rep


def verify_entropic(seed: int = 0, trials: int = 1000) -> SuiteReport:
    rep = SuiteReport("entropic", trials, seed)
    for t, rng in enumerate(_trial_rngs(seed, "entropic", trials)):
        d = [int(rng.integers(1, 4)) for _ in range(3)]
        tri_lay = _lay(zip(["A", "B", "E"], d))
        tri = random_density(tri_lay, rng, int(rng.integers(1, tri_lay.total_dim + 1)))
        nx, ny = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        plab = [f"X{i}" for i in range(nx)] + [f"Y{i}" for i in range(ny)]
        pure = random_pure(_lay([(lab, int(rng.integers(1, 4))) for lab in plab]), rng)
        _run_case(rep, "entropic", t, tri, pure)
    return rep


def _random_local_pure(rng, label):
    return random_pure(_lay([(label, 2)]), rng).density()


def verify_constructions(seed: int = 0, trials: int = 100) -> SuiteReport:
    """Separable-flag zero and pure-base constancy on random inputs."""
    rep = SuiteReport("constructions", trials, seed)
    for t, rng in enumerate(_trial_rngs(seed, "constructions", trials)):
        n_terms = int(rng.integers(1, 5))
        p = rng.dirichlet(np.ones(n_terms))
        decomposition = [
            (float(p[i]), _random_local_pure(rng, "A"), _random_local_pure(rng, "B")) for i in range(n_terms)
        ]
        _run_case(rep, "separable", t, decomposition)
        base = random_pure(_lay([("A", 2), ("B", 2)]), rng)
        params = (rng.standard_normal(64) * rng.uniform(0.1, 3.0)).tolist()
        _run_case(rep, "pure_base", t, base, params)
    return rep


def verify_continuity_smoke(base: DensityMatrix, eps: float, params, dims: AnsatzDims, seed: int = 0) -> dict:
    """Objective change at fixed ansatz parameters under a perturbation of trace distance ``eps``.

    Diagnostic only; nothing is asserted about the size of the change.
    """
    rng = make_rng(seed)
    other = random_density(base.layout, rng)
    gap = trace_distance(base, other)
    t = min(1.0, eps / gap) if gap > 0 else 0.0
    sigma = DensityMatrix.trusted(base.layout, (1 - t) * base.matrix + t * other.matrix)
    ans_r = cemi_ansatz(base, dims)
    ans_s = cemi_ansatz(sigma, dims)
    params = np.asarray(params, dtype=float)
    v_r = ans_r.value(ans_r.isometry(params))
    v_s = ans_s.value(ans_s.isometry(params))
    return {
        "eps": float(eps),
        "trace_distance": trace_distance(base, sigma),
        "objective_base": v_r,
        "objective_perturbed": v_s,
        "difference": abs(v_r - v_s),
    }


def continuity_sweep(seed: int = 0, eps_values=(0.0, 1e-6, 1e-4, 1e-2)) -> dict:
    from .tensor import bell_state

    base = bell_state().density()
    dims = AnsatzDims.bipartite(2, 2, 4)
    params = np.zeros(dims.total ** 2)
    return {"base": "bell", "dims": [2, 2, 4],
            "points": [verify_continuity_smoke(base, e, params, dims, seed) for e in eps_values]}


SUITES = {
    "monotonicity": verify_monotonicity,
    "additivity": verify_additivity,
    "convexity": verify_convexity,
    "conservation": verify_conservation,
    "entropic": verify_entropic,
    "constructions": verify_constructions,
}


def run_suites(names, seed: int, trials: int) -> dict:
    reports = [SUITES[n](seed=seed, trials=trials).to_dict() for n in names]
    out = {
        "kind": "suite_bundle",
        "seed": seed,
        "trials": trials,
        "passed": all(r["passed"] for r in reports),
        "suites": reports,
    }
    if set(names) == set(SUITES):
        out["continuity_smoke"] = continuity_sweep(seed)
    return out


__all__ = [
    "SuiteReport",
    "CASES",
    "SUITES",
    "replay",
    "run_suites",
    "verify_monotonicity",
    "verify_additivity",
    "verify_convexity",
    "verify_conservation",
    "verify_entropic",
    "verify_constructions",
    "verify_continuity_smoke",
    "continuity_sweep",
]
