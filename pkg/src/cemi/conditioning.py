"""Conditioned correlation functionals and explicit extension constructions.

An :class:`Extension` is a state together with a party map: each party owns
one or more base systems and zero or more prime systems. Optional
conditioning labels (the ``E`` of the asymmetric version) and discarded
environment labels may also be present. Tracing out everything but the
base systems must reproduce the declared base state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import entropy as ent
from .errors import InvariantError, LayoutError
from .tensor import (
    DensityMatrix,
    PureStateVector,
    SubsystemLayout,
    embed,
    reduce_to,
    reorder,
    tensor,
)

REDUCTION_TOL = 1e-8


@dataclass(frozen=True)
class Party:
    systems: tuple[str, ...]
    primes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "systems", tuple(self.systems))
        object.__setattr__(self, "primes", tuple(self.primes))
        if not self.systems:
            raise LayoutError("a party needs at least one base system")

    @property
    def all(self) -> tuple[str, ...]:
        return self.systems + self.primes


def _base_labels(layout: SubsystemLayout, parties) -> list[str]:
    systems = {s for p in parties for s in p.systems}
    return [lab for lab in layout.labels if lab in systems]


def reduction_defect(state, parties, base: DensityMatrix) -> float:
    """Max-entry distance between the reduction to the base systems and ``base``."""
    order = _base_labels(state.layout, parties)
    red = reduce_to(state, order)
    ref = reorder(base, order) if list(base.layout.labels) != order else base
    if red.layout != ref.layout:
        raise LayoutError(f"base layout {ref.layout.entries} does not match reduction {red.layout.entries}")
    return float(np.max(np.abs(red.matrix - ref.matrix)))


@dataclass(frozen=True)
class Extension:
    state: DensityMatrix | PureStateVector
    parties: tuple[Party, ...]
    cond: tuple[str, ...] = ()
    base: DensityMatrix | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "parties", tuple(self.parties))
        object.__setattr__(self, "cond", tuple(self.cond))
        lay = self.state.layout
        named: list[str] = [lab for p in self.parties for lab in p.all] + list(self.cond)
        if len(set(named)) != len(named):
            raise LayoutError("a label is assigned to more than one role")
        lay.check(named)
        if len(self.parties) < 2:
            raise LayoutError("an extension needs at least two parties")
        if self.base is None:
            object.__setattr__(self, "base", reduce_to(self.state, _base_labels(lay, self.parties)))
        else:
            defect = reduction_defect(self.state, self.parties, self.base)
            if defect > REDUCTION_TOL:
                raise InvariantError("reduction constraint", defect)

    @property
    def env(self) -> tuple[str, ...]:
        """Labels with no role; they are traced out by every functional."""
        named = {lab for p in self.parties for lab in p.all} | set(self.cond)
        return tuple(lab for lab in self.state.layout.labels if lab not in named)

    @property
    def n(self) -> int:
        return len(self.parties)


def extension(state, parties: Sequence, cond=(), base=None) -> Extension:
    """Build an :class:`Extension` from ``(systems, primes)`` pairs or label strings."""
    ps = []
    for p in parties:
        if isinstance(p, Party):
            ps.append(p)
        elif isinstance(p, str):
            ps.append(Party((p,)))
        else:
            sys_, primes = p
            ps.append(Party(_tup(sys_), _tup(primes)))
    return Extension(state, tuple(ps), _tup(cond), base)


def _tup(x) -> tuple[str, ...]:
    if x is None:
        return ()
    if isinstance(x, str):
        return (x,)
    return tuple(x)


def trivial_extension(rho, parties: Sequence | None = None) -> Extension:
    """The extension with no primes; every functional reduces to its unconditioned value."""
    if parties is None:
        parties = [(lab,) for lab in rho.layout.labels]
    return extension(rho, [(_tup(p), ()) for p in parties])


# --------------------------------------------------------------------------
# functionals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationFunctional:
    name: str
    fn: Callable
    min_blocks: int = 2
    max_blocks: int | None = 2

    def __call__(self, state, blocks) -> float:
        blocks = list(blocks)
        if len(blocks) < self.min_blocks or (self.max_blocks and len(blocks) > self.max_blocks):
            raise LayoutError(f"{self.name} cannot take {len(blocks)} blocks")
        return self.fn(state, blocks)


MUTUAL_INFORMATION = CorrelationFunctional("mutual_information", ent.mutual_information)
MULTIPARTITE_MI = CorrelationFunctional("multipartite_mi", ent.multipartite_mi, max_blocks=None)


def sym_conditioned(f: CorrelationFunctional, ext: Extension) -> float:
    """f(A A' : B B') - f(A' : B')."""
    full = [p.all for p in ext.parties]
    primes = [p.primes for p in ext.parties]
    return f(ext.state, full) - f(ext.state, primes)


def asym_conditioned(f: CorrelationFunctional, ext: Extension) -> float:
    """f(A : B E) - f(A : E), with E the extension's conditioning labels."""
    if ext.n != 2 or any(p.primes for p in ext.parties):
        raise LayoutError("asymmetric conditioning takes two parties without primes")
    a, b = (p.systems for p in ext.parties)
    e = ext.cond
    return f(ext.state, [a, b + e]) - f(ext.state, [a, e])


def cemi_objective(ext: Extension) -> float:
    if ext.n != 2:
        raise LayoutError("cemi_objective is bipartite; use multipartite_cemi_objective")
    return 0.5 * sym_conditioned(MUTUAL_INFORMATION, ext)


def esq_objective(ext: Extension) -> float:
    """Half the conditional mutual information I(A:B|E)."""
    if ext.n != 2 or any(p.primes for p in ext.parties):
        raise LayoutError("esq_objective takes two parties without primes")
    a, b = (p.systems for p in ext.parties)
    return 0.5 * ent.conditional_mi(ext.state, a, b, ext.cond)


def multipartite_cemi_objective(ext: Extension) -> float:
    return 0.5 * sym_conditioned(MULTIPARTITE_MI, ext)


# --------------------------------------------------------------------------
# constructions
# --------------------------------------------------------------------------


def _dedupe(states) -> tuple[list[DensityMatrix], list[int]]:
    reps: list[DensityMatrix] = []
    index = []
    for s in states:
        for i, r in enumerate(reps):
            if r.layout == s.layout and np.allclose(r.matrix, s.matrix, atol=1e-10, rtol=0):
                index.append(i)
                break
        else:
            reps.append(s)
            index.append(len(reps) - 1)
    return reps, index


def _as_density(s) -> DensityMatrix:
    return s.density() if isinstance(s, PureStateVector) else s


def _flag(label: str, dim: int, k: int) -> DensityMatrix:
    m = np.zeros((dim, dim))
    m[k, k] = 1.0
    return DensityMatrix.trusted(SubsystemLayout.of((label, dim)), m)


def separable_flag_extension(decomposition, prime_labels: Sequence[str] | None = None) -> Extension:
    """Flag every local component of a separable decomposition with an orthogonal prime state.

    ``decomposition`` is a list of ``(p, phi_1, ..., phi_n)`` terms with the
    ``phi_k`` of party ``k`` sharing one layout. The prime of party ``k``
    gets one basis state per distinct ``phi_k``; the resulting objective
    vanishes.
    """
    terms = [(float(t[0]), [_as_density(s) for s in t[1:]]) for t in decomposition]
    if not terms:
        raise InvariantError("probability sum", 1.0, "empty decomposition")
    probs = np.array([p for p, _ in terms])
    if np.any(probs < -1e-12):
        raise InvariantError("probability range", float(-probs.min()))
    if abs(probs.sum() - 1.0) > 1e-10:
        raise InvariantError("probability sum", abs(probs.sum() - 1.0))
    n = len(terms[0][1])
    if n < 2 or any(len(s) != n for _, s in terms):
        raise LayoutError("every term needs the same number (>= 2) of local states")
    per_party = [_dedupe([s[k] for _, s in terms]) for k in range(n)]
    parties = []
    for k in range(n):
        labels = per_party[k][0][0].layout.labels
        prime = prime_labels[k] if prime_labels else labels[0] + "'"
        parties.append(Party(labels, (prime,)))
    acc = None
    for t, (p, _) in enumerate(terms):
        if p == 0.0:
            continue
        pieces = []
        for k in range(n):
            reps, index = per_party[k]
            pieces.append(tensor(reps[index[t]], _flag(parties[k].primes[0], len(reps), index[t])))
        term = pieces[0]
        for piece in pieces[1:]:
            term = tensor(term, piece)
        acc = (term.layout, p * term.matrix if acc is None else acc[1] + p * term.matrix)
    state = DensityMatrix(acc[0], acc[1])
    return Extension(state, tuple(parties))


def _pad_to(state, target: SubsystemLayout):
    for lab, d in target.entries:
        state = embed(state, lab, d)
    return state


def convex_flag_extension(e1: Extension, e2: Extension, lam: float) -> Extension:
    """λ e1 ⊗ |0..0><0..0| + (1-λ) e2 ⊗ |1..1><1..1| with one new flag prime per party.

    Prime, conditioning and environment factors of unequal size are
    zero-padded to the larger dimension first.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    l1, l2 = e1.state.layout, e2.state.layout
    if l1.labels != l2.labels or e1.parties != e2.parties or e1.cond != e2.cond:
        raise LayoutError("convex mixture needs extensions with identical labels and party maps")
    systems = {s for p in e1.parties for s in p.systems}
    entries = []
    for (lab, d1), (_, d2) in zip(l1.entries, l2.entries):
        if lab in systems and d1 != d2:
            raise LayoutError(f"base system {lab!r} has dims {d1} and {d2}")
        entries.append((lab, max(d1, d2)))
    target = SubsystemLayout(tuple(entries))
    s1 = _as_density(_pad_to(e1.state, target))
    s2 = _as_density(_pad_to(e2.state, target))
    flags = []
    for p in e1.parties:
        name = p.systems[0] + "''"
        while name in target or name in flags:
            name += "'"
        flags.append(name)
    def flagged(s, k):
        out = s
        for f in flags:
            out = tensor(out, _flag(f, 2, k))
        return out
    t1, t2 = flagged(s1, 0), flagged(s2, 1)
    state = DensityMatrix.trusted(t1.layout, lam * t1.matrix + (1 - lam) * t2.matrix)
    parties = tuple(Party(p.systems, p.primes + (f,)) for p, f in zip(e1.parties, flags))
    base = DensityMatrix.trusted(e1.base.layout, lam * e1.base.matrix + (1 - lam) * e2.base.matrix)
    return Extension(state, parties, e1.cond, base)


def product_extension(e1: Extension, e2: Extension) -> Extension:
    """Tensor product with party ``k`` owning the systems and primes of both factors."""
    if e1.n != e2.n:
        raise LayoutError("product of extensions needs equal party counts")
    state = tensor(e1.state, e2.state)
    parties = tuple(
        Party(p.systems + q.systems, p.primes + q.primes) for p, q in zip(e1.parties, e2.parties)
    )
    base = tensor(e1.base, e2.base)
    return Extension(state, parties, e1.cond + e2.cond, base)
