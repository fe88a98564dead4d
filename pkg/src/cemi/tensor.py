"""Labeled multipartite states, partial traces, purification and instruments.

Composite indices are row-major with the leftmost label most significant, so
a layout ``[("A", 2), ("B", 3)]`` stores ``|a, b>`` at index ``3 * a + b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from . import _accel
from .errors import InvariantError, LayoutError

HERM_TOL = 1e-8
TRACE_TOL = 1e-8
EIG_FLOOR = -1e-10
NORM_TOL = 1e-10
KRAUS_TOL = 1e-8
RANK_TOL = 1e-12


@dataclass(frozen=True)
class SubsystemLayout:
    entries: tuple[tuple[str, int], ...]

    def __post_init__(self):
        entries = tuple((str(lab), int(d)) for lab, d in self.entries)
        object.__setattr__(self, "entries", entries)
        seen = set()
        for lab, d in entries:
            if not lab:
                raise LayoutError("empty subsystem label")
            if lab in seen:
                raise LayoutError(f"duplicate subsystem label {lab!r}")
            if d < 1:
                raise LayoutError(f"subsystem {lab!r} has dimension {d} < 1")
            seen.add(lab)

    @classmethod
    def of(cls, *entries: tuple[str, int]) -> "SubsystemLayout":
        return cls(tuple(entries))

    @classmethod
    def from_lists(cls, labels: Sequence[str], dims: Sequence[int]) -> "SubsystemLayout":
        if len(labels) != len(dims):
            raise LayoutError(f"{len(labels)} labels but {len(dims)} dims")
        return cls(tuple(zip(labels, dims)))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.entries)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.entries)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.entries else 1

    def __len__(self):
        return len(self.entries)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown subsystem label {label!r}; have {list(self.labels)}") from None

    def dim(self, label: str) -> int:
        return self.entries[self.index(label)][1]

    def dim_of(self, labels: Iterable[str]) -> int:
        d = 1
        for lab in labels:
            d *= self.dim(lab)
        return d

    def check(self, labels: Iterable[str]) -> set[str]:
        labels = set(labels)
        for lab in labels:
            self.index(lab)
        return labels

    def mask(self, labels: Iterable[str]) -> np.ndarray:
        keep = self.check(labels)
        return np.array([lab in keep for lab in self.labels], dtype=np.uint8)

    def restrict(self, labels: Iterable[str]) -> "SubsystemLayout":
        keep = self.check(labels)
        return SubsystemLayout(tuple(e for e in self.entries if e[0] in keep))

    def concat(self, other: "SubsystemLayout") -> "SubsystemLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LayoutError(f"label collision: {sorted(clash)[0]!r}")
        return SubsystemLayout(self.entries + other.entries)

    def with_dim(self, label: str, dim: int) -> "SubsystemLayout":
        i = self.index(label)
        entries = list(self.entries)
        entries[i] = (label, dim)
        return SubsystemLayout(tuple(entries))

    def relabel(self, mapping: dict[str, str]) -> "SubsystemLayout":
        return SubsystemLayout(tuple((mapping.get(lab, lab), d) for lab, d in self.entries))


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix on a layout.

    The constructor checks Hermiticity and trace against fixed tolerances,
    then symmetrizes and renormalizes before checking the eigenvalue floor.
    """

    __slots__ = ("layout", "matrix")

    def __init__(self, layout: SubsystemLayout, matrix, validate: bool = True):
        m = np.array(matrix, dtype=np.complex128)
        n = layout.total_dim
        if m.shape != (n, n):
            raise InvariantError("shape", abs(m.size - n * n), f"expected {n}x{n}, got {m.shape}")
        if validate:
            herm = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
            if herm > HERM_TOL:
                raise InvariantError("hermiticity", herm)
            tr = np.trace(m).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise InvariantError("unit trace", abs(tr - 1.0))
            m = 0.5 * (m + m.conj().T)
            m /= np.trace(m).real
            lo = float(np.linalg.eigvalsh(m)[0])
            if lo < EIG_FLOOR:
                raise InvariantError("positivity", -lo, "minimum eigenvalue below floor")
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "matrix", _readonly(m))

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @classmethod
    def trusted(cls, layout: SubsystemLayout, matrix) -> "DensityMatrix":
        return cls(layout, matrix, validate=False)

    @property
    def labels(self):
        return self.layout.labels

    @property
    def dims(self):
        return self.layout.dims

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def __repr__(self):
        return f"DensityMatrix({list(self.layout.entries)})"


class PureStateVector:
    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: SubsystemLayout, amplitudes, validate: bool = True):
        v = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if v.shape != (layout.total_dim,):
            raise InvariantError("shape", abs(v.size - layout.total_dim))
        if validate:
            defect = abs(np.linalg.norm(v) - 1.0)
            if defect > NORM_TOL:
                raise InvariantError("unit norm", defect)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amplitudes", _readonly(v))

    def __setattr__(self, name, value):
        raise AttributeError("PureStateVector is immutable")

    @property
    def labels(self):
        return self.layout.labels

    def density(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix.trusted(self.layout, np.outer(v, v.conj()))

    def __repr__(self):
        return f"PureStateVector({list(self.layout.entries)})"


@dataclass(frozen=True)
class KrausInstrument:
    target: str
    operators: tuple

    def __post_init__(self):
        ops = tuple(np.array(a, dtype=np.complex128) for a in self.operators)
        if not ops:
            raise InvariantError("completeness", 1.0, "instrument has no Kraus operators")
        din = ops[0].shape[1]
        dout = ops[0].shape[0]
        for a in ops:
            if a.ndim != 2 or a.shape != (dout, din):
                raise InvariantError("shape", 1.0, "Kraus operators must share one shape")
        acc = sum(a.conj().T @ a for a in ops)
        defect = float(np.max(np.abs(acc - np.eye(din))))
        if defect > KRAUS_TOL:
            raise InvariantError("completeness", defect, "sum_k A_k^dag A_k != I")
        for a in ops:
            _readonly(a)
        object.__setattr__(self, "operators", ops)

    @property
    def in_dim(self) -> int:
        return self.operators[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.operators[0].shape[0]

    def completeness_defect(self) -> float:
        acc = sum(a.conj().T @ a for a in self.operators)
        return float(np.max(np.abs(acc - np.eye(self.in_dim))))


@dataclass(frozen=True)
class Ensemble:
    members: tuple

    def __post_init__(self):
        kept = []
        total = 0.0
        for p, rho in self.members:
            p = float(p)
            if p < -NORM_TOL or p > 1 + NORM_TOL:
                raise InvariantError("probability range", max(-p, p - 1))
            total += p
            if p > 0.0:
                kept.append((p, rho))
        if abs(total - 1.0) > NORM_TOL:
            raise InvariantError("probability sum", abs(total - 1.0))
        if kept:
            lay = kept[0][1].layout
            for _, rho in kept[1:]:
                if rho.layout != lay:
                    raise LayoutError("ensemble members live on different layouts")
        object.__setattr__(self, "members", tuple(kept))

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.members])

    @property
    def states(self) -> list[DensityMatrix]:
        return [rho for _, rho in self.members]

    def average(self) -> DensityMatrix:
        lay = self.members[0][1].layout
        return DensityMatrix.trusted(lay, sum(p * rho.matrix for p, rho in self.members))

    def reduce(self, keep: Iterable[str]) -> "Ensemble":
        keep = list(keep)
        lay = self.members[0][1].layout
        drop = set(lay.labels) - set(keep)
        return Ensemble(tuple((p, partial_trace(rho, drop)) for p, rho in self.members))


# --------------------------------------------------------------------------
# structural operations
# --------------------------------------------------------------------------


def tensor(a, b):
    """Kronecker product of two states with disjoint labels."""
    layout = a.layout.concat(b.layout)
    if isinstance(a, PureStateVector) and isinstance(b, PureStateVector):
        return PureStateVector(layout, np.kron(a.amplitudes, b.amplitudes), validate=False)
    ma = a.density().matrix if isinstance(a, PureStateVector) else a.matrix
    mb = b.density().matrix if isinstance(b, PureStateVector) else b.matrix
    return DensityMatrix.trusted(layout, np.kron(ma, mb))


def tensor_all(states):
    states = list(states)
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def partial_trace(rho, drop: Iterable[str]) -> DensityMatrix:
    """Trace out the labels in ``drop``; remaining labels keep their order."""
    lay = rho.layout
    drop = lay.check(drop)
    if drop and drop == set(lay.labels):
        raise LayoutError("cannot trace out every subsystem")
    keep = [lab for lab in lay.labels if lab not in drop]
    new = lay.restrict(keep)
    if isinstance(rho, PureStateVector):
        if not drop:
            return rho.density()
        m = _accel.reduce_vector(rho.amplitudes, lay.dims, lay.mask(keep))
        return DensityMatrix.trusted(new, m)
    if not drop:
        return rho
    return DensityMatrix.trusted(new, _accel.partial_trace(rho.matrix, lay.dims, lay.mask(keep)))


def reduce_to(rho, keep: Iterable[str]) -> DensityMatrix:
    keep = rho.layout.check(keep)
    return partial_trace(rho, set(rho.layout.labels) - keep)


def reorder(rho, labels: Sequence[str]):
    """Permute tensor factors into the given label order."""
    lay = rho.layout
    if sorted(labels) != sorted(lay.labels):
        raise LayoutError(f"reorder needs a permutation of {list(lay.labels)}, got {list(labels)}")
    perm = [lay.index(lab) for lab in labels]
    new = SubsystemLayout(tuple(lay.entries[i] for i in perm))
    if isinstance(rho, PureStateVector):
        v = np.transpose(rho.amplitudes.reshape(lay.dims), perm).reshape(-1)
        return PureStateVector(new, v, validate=False)
    n = len(lay)
    t = rho.matrix.reshape(lay.dims * 2)
    t = np.transpose(t, perm + [n + i for i in perm])
    return DensityMatrix.trusted(new, t.reshape(rho.matrix.shape))


def relabel(rho, mapping: dict[str, str]):
    new = rho.layout.relabel(mapping)
    if isinstance(rho, PureStateVector):
        return PureStateVector(new, rho.amplitudes, validate=False)
    return DensityMatrix.trusted(new, rho.matrix)


def local_operator(layout: SubsystemLayout, label: str, op: np.ndarray) -> np.ndarray:
    """Full matrix of ``op`` acting on one factor (``op`` may be rectangular)."""
    i = layout.index(label)
    left = int(np.prod(layout.dims[:i], dtype=np.int64))
    right = int(np.prod(layout.dims[i + 1:], dtype=np.int64))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def embed(rho, label: str, new_dim: int):
    """Zero-pad one factor into a larger space (a local isometry)."""
    d = rho.layout.dim(label)
    if new_dim < d:
        raise LayoutError(f"cannot embed {label!r} of dim {d} into dim {new_dim}")
    if new_dim == d:
        return rho
    iso = np.eye(new_dim, d)
    op = local_operator(rho.layout, label, iso)
    lay = rho.layout.with_dim(label, new_dim)
    if isinstance(rho, PureStateVector):
        return PureStateVector(lay, op @ rho.amplitudes, validate=False)
    return DensityMatrix.trusted(lay, op @ rho.matrix @ op.conj().T)


def purify(rho: DensityMatrix, purifier_label: str = "P") -> PureStateVector:
    """Canonical purification; the purifier width is the numerical rank."""
    if purifier_label in rho.layout:
        raise LayoutError(f"purifier label {purifier_label!r} already in layout")
    w, v = np.linalg.eigh(rho.matrix)
    idx = np.nonzero(w > RANK_TOL)[0][::-1]
    r = len(idx)
    amps = v[:, idx] * np.sqrt(w[idx])[None, :]
    amps /= np.linalg.norm(amps)
    lay = rho.layout.concat(SubsystemLayout.of((purifier_label, r)))
    return PureStateVector(lay, amps.reshape(-1), validate=False)


def numerical_rank(rho: DensityMatrix) -> int:
    return int(np.sum(rho.eigvals() > RANK_TOL))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Trace norm of ``a - b`` (ranges over [0, 2])."""
    if a.layout != b.layout:
        raise LayoutError("trace_distance needs identical layouts")
    return float(np.sum(np.abs(np.linalg.eigvalsh(a.matrix - b.matrix))))


# --------------------------------------------------------------------------
# instruments
# --------------------------------------------------------------------------


def _check_instrument(rho: DensityMatrix, m: KrausInstrument):
    d = rho.layout.dim(m.target)
    if m.in_dim != d:
        raise LayoutError(f"instrument input dim {m.in_dim} != dim {d} of {m.target!r}")


def apply_instrument(rho: DensityMatrix, m: KrausInstrument) -> Ensemble:
    """Outcome probabilities ``tr(A_k rho A_k^dag)`` and normalized post-states."""
    _check_instrument(rho, m)
    lay = rho.layout.with_dim(m.target, m.out_dim)
    members = []
    for a in m.operators:
        op = local_operator(rho.layout, m.target, a)
        post = op @ rho.matrix @ op.conj().T
        p = float(np.trace(post).real)
        if p <= 0.0:
            continue
        members.append((p, DensityMatrix.trusted(lay, post / p)))
    total = sum(p for p, _ in members)
    # absorb roundoff so the ensemble sums to one exactly
    return Ensemble(tuple((p / total, s) for p, s in members))


def dilation_unitary(m: KrausInstrument) -> np.ndarray:
    """Unitary on (target, A_0, A_1) with ``|psi,0,0> -> sum_k A_k|psi>|k>|k>``.

    The target factor is padded to ``max(in_dim, out_dim)``. Columns outside
    the ``|., 0, 0>`` block are an orthonormal completion.
    """
    k = len(m.operators)
    d = max(m.in_dim, m.out_dim)
    big = d * k * k
    iso = np.zeros((big, m.in_dim), dtype=np.complex128)
    for j, a in enumerate(m.operators):
        pad = np.zeros((d, m.in_dim), dtype=np.complex128)
        pad[: m.out_dim, :] = a
        # |out> ⊗ |j>_{A0} ⊗ |j>_{A1}
        rows = np.arange(d) * k * k + j * k + j
        iso[rows, :] += pad
    u = np.zeros((big, big), dtype=np.complex128)
    cols = np.arange(m.in_dim) * k * k
    u[:, cols] = iso
    rest = [c for c in range(big) if c not in set(cols.tolist())]
    comp = scipy.linalg.null_space(iso.conj().T)
    u[:, rest] = comp[:, : len(rest)]
    return u


def dilate_instrument(rho: DensityMatrix, m: KrausInstrument, pointer: str | None = None,
                      keep_scratch: bool = False) -> DensityMatrix:
    """Flagged post-measurement state ``sum_k A_k rho A_k^dag ⊗ |k><k|`` on (A_0, original systems).

    Built by appending two ancillas in ``|0>``, applying
    :func:`dilation_unitary` on the target and both ancillas, and tracing
    the second ancilla (kept, as ``<target>_1``, when ``keep_scratch``).
    """
    _check_instrument(rho, m)
    pointer = pointer or f"{m.target}_0"
    scratch = f"{m.target}_1"
    for lab in (pointer, scratch):
        if lab in rho.layout:
            raise LayoutError(f"ancilla label {lab!r} already in layout")
    k = len(m.operators)
    d = max(m.in_dim, m.out_dim)
    padded = embed(rho, m.target, d)
    lay = padded.layout
    # place ancillas right after the target so the unitary acts on a contiguous block
    i = lay.index(m.target)
    entries = list(lay.entries)
    entries[i + 1:i + 1] = [(pointer, k), (scratch, k)]
    big_lay = SubsystemLayout(tuple(entries))
    left = int(np.prod(lay.dims[:i], dtype=np.int64))
    right = int(np.prod(lay.dims[i + 1:], dtype=np.int64))
    anc0 = np.zeros((k * k, k * k))
    anc0[0, 0] = 1.0
    # rho ⊗ |00><00| with ancillas inserted after the target factor
    t = padded.matrix.reshape(left, d, right, left, d, right)
    full = np.einsum("aibcjd,xy->aixbcjyd", t, anc0).reshape(big_lay.total_dim, big_lay.total_dim)
    u = np.kron(np.kron(np.eye(left), dilation_unitary(m)), np.eye(right))
    out = DensityMatrix.trusted(big_lay, u @ full @ u.conj().T)
    if not keep_scratch:
        out = partial_trace(out, {scratch})
    if m.out_dim < d:
        keep = np.zeros((m.out_dim, d))
        keep[:, : m.out_dim] = np.eye(m.out_dim)
        op = local_operator(out.layout, m.target, keep)
        out = DensityMatrix.trusted(out.layout.with_dim(m.target, m.out_dim), op @ out.matrix @ op.conj().T)
    order = [pointer] + [lab for lab in out.layout.labels if lab != pointer]
    return reorder(out, order)


def condition_on_pointer(rho: DensityMatrix, pointer: str, k: int) -> tuple[float, DensityMatrix]:
    """Probability of pointer value ``k`` and the normalized conditional state."""
    proj = np.zeros((rho.layout.dim(pointer),) * 2)
    proj[k, k] = 1.0
    op = local_operator(rho.layout, pointer, proj)
    sub = op @ rho.matrix @ op
    p = float(np.trace(sub).real)
    cond = partial_trace(DensityMatrix.trusted(rho.layout, sub / p if p > 0 else sub), {pointer})
    return p, cond


# --------------------------------------------------------------------------
# seeded random generation
# --------------------------------------------------------------------------


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an int, a SeedSequence, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def split_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(n)


def _ginibre(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def _as_layout(layout_or_dims) -> SubsystemLayout:
    if isinstance(layout_or_dims, SubsystemLayout):
        lay = layout_or_dims
    else:
        dims = list(layout_or_dims)
        lay = SubsystemLayout.from_lists([f"S{i}" for i in range(len(dims))], dims)
    if len(lay) == 0:
        raise LayoutError("empty dims")
    return lay


def random_unitary(dim: int, seed) -> np.ndarray:
    """Haar unitary via QR of a Ginibre matrix with phase normalization."""
    rng = make_rng(seed)
    q, r = np.linalg.qr(_ginibre(rng, dim, dim))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def random_isometry(rows: int, cols: int, seed) -> np.ndarray:
    if cols > rows:
        raise ValueError(f"isometry needs rows >= cols, got {rows}x{cols}")
    return random_unitary(rows, seed)[:, :cols]


def random_density(layout, seed, rank: int | None = None) -> DensityMatrix:
    """``G G^dag / tr`` with ``G`` complex Gaussian of width ``rank``."""
    lay = _as_layout(layout)
    n = lay.total_dim
    rank = n if rank is None else int(rank)
    if not 1 <= rank <= n:
        raise ValueError(f"rank must lie in [1, {n}], got {rank}")
    g = _ginibre(make_rng(seed), n, rank)
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix.trusted(lay, m / np.trace(m).real)


def random_pure(layout, seed) -> PureStateVector:
    lay = _as_layout(layout)
    v = _ginibre(make_rng(seed), lay.total_dim, 1)[:, 0]
    return PureStateVector(lay, v / np.linalg.norm(v), validate=False)


def random_instrument(target: str, dim: int, num_kraus: int, seed, out_dim: int | None = None) -> KrausInstrument:
    """Instrument from row blocks of a Haar isometry ``dim -> num_kraus * out_dim``."""
    if num_kraus < 1:
        raise ValueError("num_kraus must be >= 1")
    out_dim = dim if out_dim is None else out_dim
    rows = num_kraus * out_dim
    if rows < dim:
        raise ValueError(f"num_kraus * out_dim = {rows} < input dim {dim}")
    v = random_isometry(rows, dim, seed)
    return KrausInstrument(target, tuple(v[k * out_dim:(k + 1) * out_dim, :] for k in range(num_kraus)))


def random_state(kind: str, layout, seed, rank: int | None = None, num_kraus: int | None = None):
    """Dispatch on ``kind`` in {"density", "pure", "unitary", "instrument"}."""
    if kind == "density":
        return random_density(layout, seed, rank)
    if kind == "pure":
        return random_pure(layout, seed)
    lay = _as_layout(layout)
    if kind == "unitary":
        return random_unitary(lay.total_dim, seed)
    if kind == "instrument":
        if len(lay) != 1:
            raise LayoutError("an instrument acts on a single subsystem")
        return random_instrument(lay.labels[0], lay.dims[0], num_kraus or 2, seed)
    raise ValueError(f"unknown kind {kind!r}")


# --------------------------------------------------------------------------
# named states
# --------------------------------------------------------------------------


def ket(layout: SubsystemLayout, digits: Sequence[int]) -> PureStateVector:
    v = np.zeros(layout.total_dim, dtype=np.complex128)
    v[np.ravel_multi_index(tuple(digits), layout.dims)] = 1.0
    return PureStateVector(layout, v, validate=False)


def projector(layout: SubsystemLayout, digits: Sequence[int]) -> DensityMatrix:
    return ket(layout, digits).density()


def bell_state(labels=("A", "B")) -> PureStateVector:
    lay = SubsystemLayout.from_lists(labels, [2, 2])
    return PureStateVector(lay, np.array([1, 0, 0, 1]) / np.sqrt(2))


def ghz_state(labels=("A", "B", "C")) -> PureStateVector:
    n = len(labels)
    lay = SubsystemLayout.from_lists(labels, [2] * n)
    v = np.zeros(2 ** n)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return PureStateVector(lay, v)


def classical_correlated(labels=("A", "B"), dim: int = 2) -> DensityMatrix:
    """Uniform mixture of ``|kk...k>`` over all parties."""
    n = len(labels)
    lay = SubsystemLayout.from_lists(labels, [dim] * n)
    m = np.zeros((lay.total_dim,) * 2)
    for k in range(dim):
        i = np.ravel_multi_index((k,) * n, lay.dims)
        m[i, i] = 1.0 / dim
    return DensityMatrix(lay, m)


def maximally_mixed(layout: SubsystemLayout) -> DensityMatrix:
    n = layout.total_dim
    return DensityMatrix.trusted(layout, np.eye(n) / n)
