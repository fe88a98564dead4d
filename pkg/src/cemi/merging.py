"""Qubit-flow accounting for partial state merging.

A scenario is a global pure state whose labels are held by remote parties
and by a center. A route is an ordered list of transfers; each transfer of
systems ``Y`` from a sender (keeping ``X``) to a receiver (holding ``Z``)
costs ``1/2 I(R:Y|Z)`` qubits, where ``R`` is everything held by neither.
Transfers into the center count positive, transfers out of it negative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

from . import conditioning as cond
from . import entropy as ent
from .errors import InvariantError, LayoutError
from .tensor import PureStateVector, SubsystemLayout, purify, tensor

CENTER = "center"


def _labels(x) -> tuple[str, ...]:
    if isinstance(x, str):
        return (x,)
    return tuple(x)


def _require_pure(state) -> None:
    if not isinstance(state, PureStateVector):
        raise InvariantError("purity", 1.0, "merging needs a global pure state vector")
    defect = abs(np.linalg.norm(state.amplitudes) - 1.0)
    if defect > 1e-10:
        raise InvariantError("unit norm", defect)


def redistribution_cost(global_state: PureStateVector, r, x, y, z) -> float:
    """½ I(R:Y|Z) for a pure state on the partition R, X, Y, Z."""
    _require_pure(global_state)
    r, x, y, z = (_labels(v) for v in (r, x, y, z))
    allv = r + x + y + z
    if len(set(allv)) != len(allv) or set(allv) != set(global_state.layout.labels):
        raise LayoutError(f"R, X, Y, Z must partition {list(global_state.layout.labels)}")
    return 0.5 * ent.conditional_mi(global_state, r, y, z)


@dataclass(frozen=True)
class MergeScenario:
    state: PureStateVector
    parties: dict  # name -> (systems, primes)
    center: tuple[str, ...] = ()

    def __post_init__(self):
        _require_pure(self.state)
        parties = {name: (_labels(s), _labels(p)) for name, (s, p) in self.parties.items()}
        if CENTER in parties:
            raise LayoutError(f"party name {CENTER!r} is reserved")
        center = _labels(self.center)
        named = [lab for s, p in parties.values() for lab in s + p] + list(center)
        if len(set(named)) != len(named) or set(named) != set(self.state.layout.labels):
            raise LayoutError("party systems, primes and center must partition the layout")
        object.__setattr__(self, "parties", parties)
        object.__setattr__(self, "center", center)

    def initial_holdings(self) -> dict[str, set[str]]:
        h = {name: set(s) | set(p) for name, (s, p) in self.parties.items()}
        h[CENTER] = set(self.center)
        return h

    def owner(self, label: str) -> str:
        for name, (s, p) in self.parties.items():
            if label in s or label in p:
                return name
        return CENTER


@dataclass(frozen=True)
class Transfer:
    labels: tuple[str, ...]
    sender: str
    receiver: str


@dataclass(frozen=True)
class RoutePlan:
    steps: tuple[Transfer, ...]


@dataclass
class StepCost:
    sent: list[str]
    sender: str
    receiver: str
    r: list[str]
    x: list[str]
    z: list[str]
    sign: int
    cost: float

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class RouteCost:
    steps: list[StepCost] = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(sum(s.cost for s in self.steps))

    def to_dict(self):
        return {"steps": [s.to_dict() for s in self.steps], "total": self.total}


def route_cost(scn: MergeScenario, plan: RoutePlan, require_merged: bool = True) -> RouteCost:
    """Per-step signed costs of a route and their total.

    With ``require_merged`` the plan must end with every party system at
    the center and every prime back with its party.
    """
    held = scn.initial_holdings()
    lay = scn.state.layout
    out = RouteCost()
    for step in plan.steps:
        y = set(step.labels)
        if step.sender not in held or step.receiver not in held or step.sender == step.receiver:
            raise LayoutError(f"invalid transfer {step}")
        if not y or not y <= held[step.sender]:
            raise LayoutError(f"{step.sender} does not hold {sorted(y)}")
        if CENTER not in (step.sender, step.receiver):
            raise LayoutError("parties exchange systems only through the center")
        x = held[step.sender] - y
        z = held[step.receiver]
        r = set(lay.labels) - held[step.sender] - z
        order = lambda s: [lab for lab in lay.labels if lab in s]  # noqa: E731
        sign = 1 if step.receiver == CENTER else -1
        q = redistribution_cost(scn.state, order(r), order(x), order(y), order(z))
        out.steps.append(StepCost(order(y), step.sender, step.receiver, order(r), order(x), order(z), sign, sign * q))
        held[step.sender] -= y
        held[step.receiver] |= y
    if require_merged:
        want_center = set(scn.center) | {lab for s, _ in scn.parties.values() for lab in s}
        if held[CENTER] != want_center:
            raise LayoutError(f"route leaves the center holding {sorted(held[CENTER])}, want {sorted(want_center)}")
    return out


def plan_from_tokens(scn: MergeScenario, tokens: Sequence[str]) -> RoutePlan:
    """Parse ``["A+A'", "B", "-A'"]``: ``+`` groups labels into one transfer, a
    leading ``-`` sends the labels from the center back to their owner."""
    steps = []
    for tok in tokens:
        back = tok.startswith("-")
        labels = tuple(t for t in tok.lstrip("-").split("+") if t)
        if not labels:
            raise LayoutError(f"empty route token {tok!r}")
        owners = {scn.owner(lab) for lab in labels}
        if len(owners) != 1 or CENTER in owners:
            raise LayoutError(f"route token {tok!r} must name labels of a single remote party")
        party = owners.pop()
        steps.append(Transfer(labels, CENTER, party) if back else Transfer(labels, party, CENTER))
    return RoutePlan(tuple(steps))


def bipartite_scenario(state: PureStateVector, a=("A", "A'"), b=("B", "B'"), center="E") -> MergeScenario:
    return MergeScenario(state, {"alice": (a[0], a[1:]), "bob": (b[0], b[1:])}, _labels(center) if center else ())


def route_one(scn: MergeScenario) -> RoutePlan:
    """Alice sends her systems, then Bob sends his."""
    (a_sys, _), (b_sys, _) = scn.parties["alice"], scn.parties["bob"]
    return RoutePlan((Transfer(a_sys, "alice", CENTER), Transfer(b_sys, "bob", CENTER)))


def route_two(scn: MergeScenario) -> RoutePlan:
    """Alice sends everything, Bob sends his systems, the center returns Alice's primes."""
    (a_sys, a_pr), (b_sys, _) = scn.parties["alice"], scn.parties["bob"]
    steps = [Transfer(a_sys + a_pr, "alice", CENTER), Transfer(b_sys, "bob", CENTER)]
    if a_pr:
        steps.append(Transfer(a_pr, CENTER, "alice"))
    return RoutePlan(tuple(steps))


def q_one_formula(state: PureStateVector, a="A", ap="A'", b="B", bp="B'", e="E") -> float:
    """½{I(BB':A|E) + I(A':B|EA)} evaluated directly."""
    a, ap, b, bp, e = (_labels(v) for v in (a, ap, b, bp, e))
    return 0.5 * (ent.conditional_mi(state, b + bp, a, e) + ent.conditional_mi(state, ap, b, e + a))


def q_two_formula(state: PureStateVector, a="A", ap="A'", b="B", bp="B'") -> float:
    """½{I(BB':AA') + 0 - I(A':B')} evaluated directly."""
    a, ap, b, bp = (_labels(v) for v in (a, ap, b, bp))
    return 0.5 * (ent.mutual_information(state, [b + bp, a + ap]) - ent.mutual_information(state, [ap, bp]))


def q_one_via_complements(state: PureStateVector, a="A", ap="A'", b="B", bp="B'", e="E") -> list[float]:
    """The two Route-I step costs rewritten with S(X) = S(complement) before evaluation."""
    a, ap, b, bp, e = (_labels(v) for v in (a, ap, b, bp, e))
    S = lambda labs: ent.subsystem_entropy(state, labs)  # noqa: E731
    # I(BB':A|E) = S(BB'E) + S(AE) - S(ABB'E) - S(E), then complement each term
    first = S(a + ap) + S(b + bp + ap) - S(ap) - S(a + ap + b + bp)
    # I(A':B|EA) = S(A'EA) + S(BEA) - S(A'BEA) - S(EA)
    second = S(b + bp) + S(ap + bp) - S(bp) - S(b + bp + ap)
    return [0.5 * first, 0.5 * second]


def net_flow(ext: cond.Extension) -> float:
    """Route-I net flow for an extension, purified with the purifier at the center."""
    if ext.n != 2:
        raise LayoutError("net_flow is bipartite; use multiparty_route_cost")
    state = ext.state
    lay = state.layout
    taken = set(lay.labels)
    center = "E"
    while center in taken:
        center += "'"
    if isinstance(state, PureStateVector):
        psi = tensor(state, PureStateVector(SubsystemLayout.of((center, 1)), [1.0]))
    else:
        psi = purify(state, center)
    # environment labels travel with the center
    env = ext.env + ext.cond
    parties = {
        "alice": (ext.parties[0].systems, ext.parties[0].primes),
        "bob": (ext.parties[1].systems, ext.parties[1].primes),
    }
    scn = MergeScenario(psi, parties, env + (center,))
    return route_cost(scn, route_one(scn)).total


def multiparty_scenario(state: PureStateVector, parties: Sequence[tuple], center=()) -> MergeScenario:
    return MergeScenario(state, {f"p{i}": (s, p) for i, (s, p) in enumerate(parties)}, center)


def multiparty_route_cost(scn: MergeScenario, order: Sequence[str]) -> RouteCost:
    """Parties send their base systems to the center one after another, in ``order``."""
    if sorted(order) != sorted(scn.parties):
        raise LayoutError(f"order must be a permutation of {sorted(scn.parties)}")
    plan = RoutePlan(tuple(Transfer(scn.parties[name][0], name, CENTER) for name in order))
    return route_cost(scn, plan)


def order_spread(scn: MergeScenario) -> tuple[float, dict]:
    """Largest difference of totals over all sending orders, and the totals."""
    totals = {o: multiparty_route_cost(scn, o).total for o in permutations(scn.parties)}
    vals = list(totals.values())
    return float(max(vals) - min(vals)), totals


def scenario_objective(scn: MergeScenario) -> float:
    """½{I_n(party systems + primes) - I_n(primes)} on the scenario state."""
    blocks = [s + p for s, p in scn.parties.values()]
    primes = [p for _, p in scn.parties.values()]
    return 0.5 * (ent.multipartite_mi(scn.state, blocks) - ent.multipartite_mi(scn.state, primes))


__all__ = [
    "CENTER",
    "MergeScenario",
    "RoutePlan",
    "Transfer",
    "RouteCost",
    "redistribution_cost",
    "route_cost",
    "plan_from_tokens",
    "bipartite_scenario",
    "route_one",
    "route_two",
    "q_one_formula",
    "q_two_formula",
    "q_one_via_complements",
    "net_flow",
    "multiparty_scenario",
    "multiparty_route_cost",
    "order_spread",
    "scenario_objective",
]
