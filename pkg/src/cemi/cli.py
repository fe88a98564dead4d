"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys

from . import entropy as ent
from . import io, merging, optimize, verify
from .errors import CemiError
from .tensor import (
    PureStateVector,
    SubsystemLayout,
    bell_state,
    classical_correlated,
    ghz_state,
    purify,
    random_state,
)


def fmt(x: float) -> str:
    return f"{x:.12e}"


def _labels(text) -> list[str]:
    if not isinstance(text, str):
        text = ",".join(text)
    return [t for t in text.split(",") if t]


def _blocks(text) -> list[list[str]]:
    if not isinstance(text, str):
        text = ",".join(text)
    return [_labels(part) for part in text.split(":")]


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise CemiError(f"expected comma-separated integers, got {text!r}") from None


def _parties(args):
    if getattr(args, "parties", None):
        return _blocks(args.parties)
    return None


def _cfg(args) -> optimize.OptimizerConfig:
    return optimize.OptimizerConfig(restarts=args.restarts, max_evals=args.max_evals, tol=args.tol,
                                    step=args.step, seed=args.seed, workers=args.workers,
                                    polish=not args.no_polish)


def _density(state):
    return state.density() if isinstance(state, PureStateVector) else state


def cmd_entropy(args) -> int:
    state = io.load_state(args.state)
    if args.subsys:
        groups = [_labels(args.subsys)]
    else:
        groups = [list(state.layout.labels)] + [[lab] for lab in state.layout.labels]
    for g, s in zip(groups, ent.entropies(state, groups)):
        print(f"S({','.join(g)}) = {fmt(s)}")
    return 0


def cmd_mi(args) -> int:
    state = io.load_state(args.state)
    blocks = _blocks(args.cut)
    if len(blocks) == 2:
        val, name = ent.mutual_information(state, blocks), "I"
    else:
        val, name = ent.multipartite_mi(state, blocks), f"I_{len(blocks)}"
    print(f"{name}({':'.join(','.join(b) for b in blocks)}) = {fmt(val)}")
    return 0


def cmd_cmi(args) -> int:
    state = io.load_state(args.state)
    a, b, e = _labels(args.a), _labels(args.b), _labels(args.e)
    print(f"I({','.join(a)}:{','.join(b)}|{','.join(e)}) = {fmt(ent.conditional_mi(state, a, b, e))}")
    return 0


def _emit_report(report: optimize.BoundReport, out) -> None:
    print(f"objective = {report.objective}")
    print(f"best_value = {fmt(report.best_value)}")
    print(f"baseline_trivial = {fmt(report.baseline_trivial)}")
    print(f"best_source = {report.best_source}")
    print(f"evaluations = {report.evaluations}")
    if out:
        io.write(report.to_dict(), out)


def cmd_cemi_ub(args) -> int:
    base = _density(io.load_state(args.state))
    parties = _parties(args)
    dims = None
    if args.dims:
        d = _ints(args.dims)
        if len(d) < 3:
            raise CemiError("--dims needs one prime dimension per party plus the residual dimension")
        dims = optimize.AnsatzDims(tuple(d[:-1]), d[-1])
    cfg = _cfg(args)
    n_parties = len(parties) if parties else len(base.layout)
    if n_parties == 2 and (dims is None or len(dims.primes) == 2):
        report = optimize.cemi_upper_bound(base, dims, cfg, parties)
    else:
        report = optimize.multipartite_cemi_upper_bound(base, dims, cfg, parties)
    _emit_report(report, args.out)
    return 0


def cmd_esq_ub(args) -> int:
    base = _density(io.load_state(args.state))
    report = optimize.esq_upper_bound(base, args.env, _cfg(args), args.residual, _parties(args))
    _emit_report(report, args.out)
    return 0


def cmd_flows(args) -> int:
    state = io.load_state(args.state)
    if args.parties:
        parties = [(b[0:1], b[1:]) for b in _blocks(args.parties)]
    else:
        labs = state.layout.labels
        parties = [((lab,), (lab + "'",) if lab + "'" in labs else ()) for lab in labs
                   if not lab.endswith("'") and lab != args.center]
    center = _labels(args.center) if args.center else []
    if not isinstance(state, PureStateVector):
        purifier = "E" if "E" not in state.layout else "E_pur"
        state = purify(state, purifier)
        center.append(purifier)
    if len(parties) == 2:
        names = ("alice", "bob")
    else:
        names = tuple(f"p{i}" for i in range(len(parties)))
    scn = merging.MergeScenario(state, dict(zip(names, parties)), tuple(center))
    routes = {}
    if args.route:
        routes["custom"] = merging.plan_from_tokens(scn, _labels(args.route))
    elif len(parties) == 2:
        routes["I"] = merging.route_one(scn)
        routes["II"] = merging.route_two(scn)
    else:
        routes["sequential"] = merging.RoutePlan(tuple(
            merging.Transfer(scn.parties[name][0], name, merging.CENTER) for name in names))
    doc = {"kind": "route_report", "objective": merging.scenario_objective(scn), "routes": {}}
    for name, plan in routes.items():
        cost = merging.route_cost(scn, plan)
        doc["routes"][name] = cost.to_dict()
        print(f"route {name}:")
        for st in cost.steps:
            arrow = "->center" if st.sign > 0 else "<-center"
            print(f"  {'+'.join(st.sent)} {arrow}  R={','.join(st.r)} Z={','.join(st.z)}  cost = {fmt(st.cost)}")
        print(f"  total = {fmt(cost.total)}")
    print(f"objective = {fmt(doc['objective'])}")
    if args.out:
        io.write(doc, args.out)
    return 0


def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "bell":
        state = bell_state(tuple(_labels(args.labels)) if args.labels else ("A", "B"))
    elif kind == "ghz":
        state = ghz_state(tuple(_labels(args.labels)) if args.labels else ("A", "B", "C"))
    elif kind == "cc":
        state = classical_correlated(tuple(_labels(args.labels)) if args.labels else ("A", "B"))
    else:
        if not args.dims:
            raise CemiError("--dims is required for random kinds")
        dims = _ints(args.dims)
        labels = _labels(args.labels) if args.labels else [chr(ord("A") + i) for i in range(len(dims))]
        lay = SubsystemLayout.from_lists(labels, dims)
        obj = random_state(kind, lay, args.seed, rank=args.rank, num_kraus=args.num_kraus)
        if kind == "unitary":
            io.write(io.unitary_to_dict(obj), args.out)
            return 0
        if kind == "instrument":
            io.write(io.instrument_to_dict(obj), args.out)
            return 0
        state = obj
    io.save_state(state, args.out)
    return 0


def cmd_verify(args) -> int:
    names = list(verify.SUITES) if args.suite == "all" else [args.suite]
    doc = verify.run_suites(names, args.seed, args.trials)
    for rep in doc["suites"]:
        worst = min((c["worst_slack"] for c in rep["checks"].values()), default=0.0)
        status = "PASS" if rep["passed"] else "FAIL"
        print(f"{status} {rep['suite']}: {rep['trials']} trials, worst slack {fmt(worst)}, "
              f"{len(rep['failures'])} failures")
    if args.out:
        io.write(doc, args.out)
    return 0 if doc["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cemi", description="Conditional entanglement of mutual information toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("entropy", help="von Neumann entropies of a state and its marginals")
    s.add_argument("state")
    s.add_argument("--subsys", nargs="+", help="labels of one subsystem group")
    s.set_defaults(fn=cmd_entropy)

    s = sub.add_parser("mi", help="mutual information across a cut")
    s.add_argument("state")
    s.add_argument("--cut", required=True, nargs="+", help="blocks separated by ':', e.g. A,A':B,B'")
    s.set_defaults(fn=cmd_mi)

    s = sub.add_parser("cmi", help="conditional mutual information I(A:B|E)")
    s.add_argument("state")
    s.add_argument("--a", required=True, nargs="+")
    s.add_argument("--b", required=True, nargs="+")
    s.add_argument("--e", nargs="*", default=[])
    s.set_defaults(fn=cmd_cmi)

    def opt_args(s):
        s.add_argument("state")
        s.add_argument("--parties", help="party blocks, e.g. A,C:B,D")
        s.add_argument("--restarts", type=int, default=8)
        s.add_argument("--max-evals", type=int, default=20000)
        s.add_argument("--tol", type=float, default=1e-7)
        s.add_argument("--step", type=float, default=0.1)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--no-polish", action="store_true", help="skip the L-BFGS-B stage after Nelder-Mead")
        s.add_argument("--out")

    s = sub.add_parser("cemi-ub", help="upper bound on the conditional entanglement of mutual information")
    opt_args(s)
    s.add_argument("--dims", help="prime dims per party then residual dim, e.g. 2,2,1")
    s.set_defaults(fn=cmd_cemi_ub)

    s = sub.add_parser("esq-ub", help="upper bound on squashed entanglement")
    opt_args(s)
    s.add_argument("--env", type=int, required=True, help="dimension of the conditioning system")
    s.add_argument("--residual", type=int, help="dimension of the traced residual (default: rank)")
    s.set_defaults(fn=cmd_esq_ub)

    s = sub.add_parser("flows", help="net qubit flows of merging routes")
    s.add_argument("state")
    s.add_argument("--parties", help="party blocks 'system,prime...', e.g. A,A':B,B'")
    s.add_argument("--center", default="E")
    s.add_argument("--route", help="ordered tokens, e.g. A,B or A+A',B,-A'")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_flows)

    s = sub.add_parser("gen", help="write a named or seeded random state file")
    s.add_argument("--kind", required=True,
                   choices=["density", "pure", "unitary", "instrument", "bell", "ghz", "cc"])
    s.add_argument("--dims")
    s.add_argument("--labels")
    s.add_argument("--rank", type=int)
    s.add_argument("--num-kraus", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_gen)

    s = sub.add_parser("verify", help="run seeded verification suites")
    s.add_argument("--suite", default="all", choices=["all"] + list(verify.SUITES))
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (CemiError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
