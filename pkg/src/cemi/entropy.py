"""Entropic functionals in bits.

All multi-term quantities are assembled from entropies of reductions of a
single state, evaluated in one kernel call, so shared roundoff cancels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _accel
from .errors import LayoutError
from .tensor import Ensemble, PureStateVector


@dataclass(frozen=True)
class Partition:
    """Ordered disjoint label blocks; labels outside every block are traced out."""

    blocks: tuple[frozenset, ...]

    def __post_init__(self):
        blocks = tuple(frozenset(b) for b in self.blocks)
        seen: set = set()
        for b in blocks:
            if seen & b:
                raise LayoutError(f"overlapping blocks: {sorted(seen & b)}")
            seen |= b
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def of(cls, *blocks: Iterable[str]) -> "Partition":
        return cls(tuple(frozenset(b) for b in blocks))

    @property
    def labels(self) -> frozenset:
        out: frozenset = frozenset()
        for b in self.blocks:
            out |= b
        return out

    def __len__(self):
        return len(self.blocks)


def _as_partition(part) -> Partition:
    if isinstance(part, Partition):
        return part
    return Partition.of(*part)


def entropies(state, groups: Sequence[Iterable[str]]) -> np.ndarray:
    """Entropies of the reductions of ``state`` onto each label group.

    The empty group has entropy 0. Pure vectors are reduced on the smaller
    side of each cut.
    """
    lay = state.layout
    masks = np.array([lay.mask(g) for g in groups], dtype=np.uint8).reshape(len(groups), len(lay))
    if isinstance(state, PureStateVector):
        return _accel.vector_group_entropies(state.amplitudes, lay.dims, masks)
    return _accel.density_group_entropies(state.matrix, lay.dims, masks)


def vn_entropy(rho) -> float:
    """-Σ λ log2 λ over eigenvalues clamped to [0, 1]."""
    if isinstance(rho, PureStateVector):
        return 0.0
    return _accel.entropy(rho.matrix)


def subsystem_entropy(rho, labels: Iterable[str]) -> float:
    return float(entropies(rho, [labels])[0])


def conditional_entropy(rho, given: Iterable[str]) -> float:
    """S(full) - S(given); negative for entangled states."""
    given = set(given)
    rho.layout.check(given)
    if given == set(rho.layout.labels):
        raise LayoutError("conditioning set must be a proper subset of the layout")
    s_all, s_given = entropies(rho, [rho.layout.labels, given])
    return float(s_all - s_given)


def mutual_information(rho, part) -> float:
    """I(X:Y) = S(X) + S(Y) - S(XY)."""
    part = _as_partition(part)
    if len(part) != 2:
        raise LayoutError(f"mutual information needs 2 blocks, got {len(part)}")
    x, y = part.blocks
    sx, sy, sxy = entropies(rho, [x, y, x | y])
    return float(sx + sy - sxy)


def conditional_mi(rho, a: Iterable[str], b: Iterable[str], e: Iterable[str] = ()) -> float:
    """I(A:B|E) = S(AE) + S(BE) - S(ABE) - S(E)."""
    a, b, e = (frozenset(x) for x in (a, b, e))
    Partition((a, b, e))  # disjointness
    s_ae, s_be, s_abe, s_e = entropies(rho, [a | e, b | e, a | b | e, e])
    return float(s_ae + s_be - s_abe - s_e)


def multipartite_mi(rho, part) -> float:
    """I_n = Σ_i S(X_i) - S(X_1 ... X_n)."""
    part = _as_partition(part)
    if len(part) < 2:
        raise LayoutError("multipartite mutual information needs at least 2 blocks")
    s = entropies(rho, list(part.blocks) + [part.labels])
    return float(np.sum(s[:-1]) - s[-1])


def holevo(ens: Ensemble) -> float:
    """χ = S(Σ p_k ρ_k) - Σ p_k S(ρ_k)."""
    avg = vn_entropy(ens.average())
    return float(avg - sum(p * vn_entropy(rho) for p, rho in ens.members))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


__all__ = [
    "Partition",
    "entropies",
    "vn_entropy",
    "subsystem_entropy",
    "conditional_entropy",
    "mutual_information",
    "conditional_mi",
    "multipartite_mi",
    "holevo",
    "binary_entropy",
]
