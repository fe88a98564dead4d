"""Upper bounds on the conditioned objectives over fixed-dimension extensions.

Every candidate extension is generated from the canonical purification
``|psi>`` of the base state on ``(base systems, P)``: an isometry ``W`` maps
``P`` into the output factors (one prime per party plus a residual ``C``,
or a conditioning system ``E`` plus ``C`` for the squashed objective), and
``C`` is traced out. Tracing the outputs always returns the base state, so
the optimizer never leaves the feasible set.

``W`` is parametrized as the first ``rank`` columns of ``expm(K(theta)) U0``
where ``K`` is anti-Hermitian with ``D**2`` real coordinates and ``U0`` is a
per-restart base point (identity, Haar-random, or a supplied warm start).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from . import _accel
from . import conditioning as cond
from .errors import InvariantError, LayoutError
from .tensor import (
    DensityMatrix,
    PureStateVector,
    SubsystemLayout,
    purify,
    random_unitary,
    split_seeds,
)

REDUCTION_TOL = 1e-8


@dataclass(frozen=True)
class AnsatzDims:
    """Per-party prime dimensions and the dimension of the traced residual."""

    primes: tuple[int, ...]
    env: int

    def __post_init__(self):
        object.__setattr__(self, "primes", tuple(int(d) for d in self.primes))
        if any(d < 1 for d in self.primes) or self.env < 1:
            raise ValueError(f"ansatz dims must be positive, got {self}")

    @classmethod
    def bipartite(cls, d_Aprime: int, d_Bprime: int, d_env: int) -> "AnsatzDims":
        return cls((d_Aprime, d_Bprime), d_env)

    @property
    def d_Aprime(self) -> int:
        return self.primes[0]

    @property
    def d_Bprime(self) -> int:
        return self.primes[1]

    @property
    def d_env(self) -> int:
        return self.env

    @property
    def total(self) -> int:
        return math.prod(self.primes) * self.env


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 8
    max_evals: int = 20000
    tol: float = 1e-7
    step: float = 0.1
    seed: int = 0
    workers: int = 1
    polish: bool = True

    def __post_init__(self):
        if self.restarts < 1 or self.max_evals < 1 or self.tol <= 0 or self.step <= 0:
            raise ValueError(f"invalid optimizer config {self}")


@dataclass
class BoundReport:
    objective: str
    best_value: float
    baseline_trivial: float
    best_source: str
    best_params: list[float] | None
    best_isometry: list | None
    restart_values: list[float]
    restart_evals: list[int]
    evaluations: int
    dims: dict
    seed: int
    restarts: int
    polish_evals: int = 0
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = "bound_report"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        d = dict(d)
        d.pop("kind", None)
        return cls(**d)


def _fresh(label: str, taken: set[str]) -> str:
    while label in taken:
        label += "'"
    return label


def generator(theta: np.ndarray, dim: int) -> np.ndarray:
    """Anti-Hermitian matrix from ``dim**2`` reals: diagonal phases, then upper real, then upper imaginary parts."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (dim * dim,):
        raise ValueError(f"expected {dim * dim} parameters, got {theta.shape}")
    m = dim * (dim - 1) // 2
    k = np.zeros((dim, dim), dtype=np.complex128)
    iu = np.triu_indices(dim, 1)
    k[iu] = theta[dim:dim + m] + 1j * theta[dim + m:]
    k = k - k.conj().T
    k[np.diag_indices(dim)] = 1j * theta[:dim]
    return k


def params_from_unitary(u: np.ndarray) -> np.ndarray:
    """Inverse of :func:`generator` ∘ expm via the principal matrix logarithm."""
    dim = u.shape[0]
    k = scipy.linalg.logm(u)
    k = 0.5 * (k - k.conj().T)
    iu = np.triu_indices(dim, 1)
    return np.concatenate([k[np.diag_indices(dim)].imag, k[iu].real, k[iu].imag])


def complete_unitary(w: np.ndarray) -> np.ndarray:
    """Unitary whose leading columns are the isometry ``w``."""
    comp = scipy.linalg.null_space(w.conj().T)
    return np.hstack([w, comp])


class Ansatz:
    """Isometric-extension generator for one base state and one output shape.

    ``mode`` is ``"cemi"`` (per-party primes + residual), ``"multi"``
    (same outputs, multipartite objective) or ``"esq"`` (conditioning
    system + residual).
    """

    def __init__(self, base: DensityMatrix, out_dims: Sequence[int], mode: str = "cemi",
                 parties: Sequence[Sequence[str]] | None = None):
        self.base = base
        self.mode = mode
        lay = base.layout
        if parties is None:
            parties = [(lab,) for lab in lay.labels]
        self.parties = [tuple(p) for p in parties]
        flat = [lab for p in self.parties for lab in p]
        if sorted(flat) != sorted(lay.labels) or len(set(flat)) != len(flat):
            raise LayoutError(f"parties {self.parties} must partition the base labels {list(lay.labels)}")
        if mode in ("cemi", "esq") and len(self.parties) != 2:
            raise LayoutError(f"{mode} ansatz needs exactly two parties")
        psi = purify(base, _fresh("P", set(lay.labels)))
        self.rank = psi.layout.dims[-1]
        self.base_dim = lay.total_dim
        self.m0 = psi.amplitudes.reshape(self.base_dim, self.rank)
        taken = set(lay.labels)
        self.out_dims = tuple(int(d) for d in out_dims)
        self.D = math.prod(self.out_dims)
        if self.D < self.rank:
            other = math.prod(self.out_dims[:-1])
            need = -(-self.rank // other)
            raise LayoutError(
                f"output dimension {self.D} < base rank {self.rank}; need residual dimension >= {need}"
            )
        if mode == "esq":
            e = _fresh("E", taken)
            taken.add(e)
            self.out_labels = [e]
        else:
            self.out_labels = []
            for p in self.parties:
                lab = _fresh(p[0] + "'", taken)
                taken.add(lab)
                self.out_labels.append(lab)
        self.env_label = _fresh("C", taken)
        self.out_labels.append(self.env_label)
        self.layout = lay.concat(SubsystemLayout.from_lists(self.out_labels, self.out_dims))
        self._dims = np.array(self.layout.dims, dtype=np.int64)
        self._masks, self._weights = self._objective_groups()

    # groups and signed weights such that objective = Σ w_g S(group_g)
    def _objective_groups(self):
        lay = self.layout
        if self.mode == "esq":
            a, b = self.parties
            e = [self.out_labels[0]]
            groups = [list(a) + e, list(b) + e, list(a) + list(b) + e, e]
            weights = [0.5, 0.5, -0.5, -0.5]
        else:
            primes = [[lab] for lab in self.out_labels[:-1]]
            full = [list(p) + q for p, q in zip(self.parties, primes)]
            groups = full + [sum(full, [])] + primes + [sum(primes, [])]
            n = len(full)
            weights = [0.5] * n + [-0.5] + [-0.5] * n + [0.5]
        masks = np.array([lay.mask(g) for g in groups], dtype=np.uint8)
        return masks, np.array(weights)

    @property
    def n_params(self) -> int:
        return self.D * self.D

    def isometry(self, theta, u0: np.ndarray | None = None) -> np.ndarray:
        u = scipy.linalg.expm(generator(theta, self.D))
        if u0 is not None:
            u = u @ u0
        return u[:, : self.rank]

    def output_vector(self, w: np.ndarray) -> np.ndarray:
        return (self.m0 @ w.T).reshape(-1)

    def reduction_defect(self, w: np.ndarray) -> float:
        m = self.m0 @ w.T
        return float(np.max(np.abs(m @ m.conj().T - self.base.matrix)))

    def value(self, w: np.ndarray, check: bool = True) -> float:
        if check:
            defect = self.reduction_defect(w)
            if defect > REDUCTION_TOL:
                raise InvariantError("reduction constraint", defect)
        psi = self.output_vector(w)
        s = _accel.vector_group_entropies(psi, self._dims, self._masks)
        return float(self._weights @ s)

    def extension(self, w: np.ndarray) -> cond.Extension:
        """Extension object for an isometry, with the residual traced out."""
        from .tensor import partial_trace

        psi = PureStateVector(self.layout, self.output_vector(w), validate=False)
        rho = partial_trace(psi, {self.env_label})
        if self.mode == "esq":
            return cond.extension(rho, self.parties, cond=self.out_labels[:1], base=self.base)
        parties = [(p, (q,)) for p, q in zip(self.parties, self.out_labels[:-1])]
        return cond.extension(rho, parties, base=self.base)

    def isometry_for_state(self, phi: np.ndarray) -> np.ndarray:
        """The isometry that turns the canonical purification into ``phi``.

        ``phi`` is a vector on ``(base systems, outputs)`` whose reduction to
        the base systems equals the base state.
        """
        m = np.asarray(phi).reshape(self.base_dim, self.D)
        w = (np.linalg.pinv(self.m0) @ m).T
        defect = float(np.max(np.abs(w.conj().T @ w - np.eye(self.rank))))
        if defect > 1e-8:
            raise InvariantError("isometry", defect, "target state is not an extension of the base")
        return w


def baseline_value(base: DensityMatrix, mode: str, parties=None) -> float:
    """Objective of the trivial extension (no primes / trivial conditioning)."""
    ext = cond.trivial_extension(base, parties)
    if mode == "cemi":
        return cond.cemi_objective(ext)
    if mode == "esq":
        return cond.esq_objective(ext)
    return cond.multipartite_cemi_objective(ext)


def _minimize(ans: Ansatz, u0: np.ndarray, cfg: OptimizerConfig):
    """Nelder–Mead around base point ``u0``, re-seeded from the incumbent until it stalls."""
    n = ans.n_params
    evals = 0

    def f(theta):
        nonlocal evals
        evals += 1
        v = ans.value(ans.isometry(theta, u0))
        return v if np.isfinite(v) else np.inf

    x = np.zeros(n)
    fx = f(x)
    step = cfg.step
    while evals < cfg.max_evals:
        simplex = np.vstack([x, x + step * np.eye(n)])
        res = scipy.optimize.minimize(
            f, x, method="Nelder-Mead",
            options=dict(maxfev=cfg.max_evals - evals, initial_simplex=simplex,
                         xatol=1e-7, fatol=cfg.tol * 1e-2, adaptive=n > 10),
        )
        improved = fx - res.fun
        if res.fun < fx:
            x, fx = res.x, float(res.fun)
        if improved <= cfg.tol:
            if step <= cfg.step * 1e-3:
                break
            step *= 0.1
    w = ans.isometry(x, u0)
    return fx, w, evals


def _polish(ans: Ansatz, w: np.ndarray, cfg: OptimizerConfig):
    """Finite-difference L-BFGS-B from isometry ``w``."""
    u0 = complete_unitary(w)
    evals = 0

    def f(theta):
        nonlocal evals
        evals += 1
        v = ans.value(ans.isometry(theta, u0))
        return v if np.isfinite(v) else 1e3

    res = scipy.optimize.minimize(f, np.zeros(ans.n_params), method="L-BFGS-B",
                                  options=dict(maxfun=cfg.max_evals, ftol=1e-15, gtol=1e-12))
    return float(res.fun), ans.isometry(res.x, u0), evals


def _run(ans: Ansatz, cfg: OptimizerConfig, warm_starts: Sequence[np.ndarray], objective: str,
         dims: dict) -> BoundReport:
    t0 = time.perf_counter()
    baseline = baseline_value(ans.base, ans.mode if ans.mode != "multi" else "multi", ans.parties)
    starts: list[tuple[str, np.ndarray | None]] = [("zero", np.eye(ans.D))]
    for i, w in enumerate(warm_starts):
        w = np.asarray(w, dtype=np.complex128)
        if w.shape != (ans.D, ans.rank):
            raise ValueError(f"warm start {i} has shape {w.shape}, expected {(ans.D, ans.rank)}")
        starts.append((f"warm{i}", complete_unitary(w)))
    for i, ss in enumerate(split_seeds(cfg.seed, cfg.restarts)):
        starts.append((f"restart{i}", random_unitary(ans.D, ss)))

    trivial = ans.D == 1 or (ans.mode != "esq" and math.prod(ans.out_dims[:-1]) == 1) \
        or (ans.mode == "esq" and ans.out_dims[0] == 1)
    if trivial:
        results = [(baseline, None, 0) for _ in starts]
    elif cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(lambda s: _minimize(ans, s[1], cfg), starts))
    else:
        results = [_minimize(ans, u0, cfg) for _, u0 in starts]

    values = [float(r[0]) for r in results]
    best_i = int(np.argmin(values))
    best_value, best_w = values[best_i], results[best_i][1]
    source = starts[best_i][0]
    polish_evals = 0
    if cfg.polish and best_w is not None:
        pv, pw, polish_evals = _polish(ans, best_w, cfg)
        if pv < best_value:
            best_value, best_w, source = pv, pw, source + "+polish"
    if best_value > baseline or best_w is None:
        best_value, best_w, source = baseline, None, "baseline"
    params = iso = None
    if best_w is not None:
        params = params_from_unitary(complete_unitary(best_w)).tolist()
        iso = [[[float(z.real), float(z.imag)] for z in row] for row in best_w]
    return BoundReport(
        objective=objective,
        best_value=float(best_value),
        baseline_trivial=float(baseline),
        best_source=source,
        best_params=params,
        best_isometry=iso,
        restart_values=values,
        restart_evals=[int(r[2]) for r in results],
        evaluations=int(sum(r[2] for r in results)) + polish_evals,
        dims=dims,
        seed=cfg.seed,
        restarts=cfg.restarts,
        polish_evals=polish_evals,
        wall_time=time.perf_counter() - t0,
    )


def isometry_from_report(report: BoundReport) -> np.ndarray | None:
    if report.best_isometry is None:
        return None
    a = np.array(report.best_isometry, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def default_dims(base: DensityMatrix, parties=None) -> AnsatzDims:
    """Primes as large as the local base factors, residual as large as the rank."""
    from .tensor import numerical_rank

    parties = parties or [(lab,) for lab in base.layout.labels]
    return AnsatzDims(tuple(base.layout.dim_of(p) for p in parties), numerical_rank(base))


def cemi_ansatz(base: DensityMatrix, dims: AnsatzDims, parties=None, multi: bool = False) -> Ansatz:
    return Ansatz(base, dims.primes + (dims.env,), "multi" if multi else "cemi", parties)


def extension_from_params(base: DensityMatrix, dims: AnsatzDims, params, parties=None) -> cond.Extension:
    """Extension generated by ``expm(K(params))`` with the residual traced out."""
    ans = cemi_ansatz(base, dims, parties, multi=len(dims.primes) > 2)
    return ans.extension(ans.isometry(params))


def cemi_upper_bound(base: DensityMatrix, dims: AnsatzDims | None = None, cfg: OptimizerConfig | None = None,
                     parties=None, warm_starts: Sequence[np.ndarray] = ()) -> BoundReport:
    cfg = cfg or OptimizerConfig()
    dims = dims or default_dims(base, parties)
    if len(dims.primes) != 2:
        raise ValueError("cemi_upper_bound takes two prime dimensions")
    ans = cemi_ansatz(base, dims, parties)
    return _run(ans, cfg, warm_starts, "cemi", {"primes": list(dims.primes), "env": dims.env})


def multipartite_cemi_upper_bound(base: DensityMatrix, dims: AnsatzDims | None = None,
                                  cfg: OptimizerConfig | None = None, parties=None,
                                  warm_starts: Sequence[np.ndarray] = ()) -> BoundReport:
    cfg = cfg or OptimizerConfig()
    dims = dims or default_dims(base, parties)
    ans = cemi_ansatz(base, dims, parties, multi=True)
    return _run(ans, cfg, warm_starts, "multipartite_cemi", {"primes": list(dims.primes), "env": dims.env})


def esq_ansatz(base: DensityMatrix, d_env: int, d_residual: int | None = None, parties=None) -> Ansatz:
    from .tensor import numerical_rank

    d_residual = numerical_rank(base) if d_residual is None else d_residual
    return Ansatz(base, (d_env, d_residual), "esq", parties)


def esq_upper_bound(base: DensityMatrix, d_env: int, cfg: OptimizerConfig | None = None,
                    d_residual: int | None = None, parties=None,
                    warm_starts: Sequence[np.ndarray] = ()) -> BoundReport:
    """Upper bound on half the infimum of I(A:B|E) with ``dim E = d_env``.

    The extension on ABE is the reduction of a pure state on ABEC; the
    residual ``C`` defaults to the rank of the base state.
    """
    cfg = cfg or OptimizerConfig()
    ans = esq_ansatz(base, d_env, d_residual, parties)
    return _run(ans, cfg, warm_starts, "esq", {"env": d_env, "residual": ans.out_dims[1]})


# --------------------------------------------------------------------------
# warm starts
# --------------------------------------------------------------------------


def pad_isometry(w: np.ndarray, small: Sequence[int], big: Sequence[int]) -> np.ndarray:
    """Embed an isometry into larger output factors by zero padding each factor."""
    small, big = tuple(small), tuple(big)
    if len(small) != len(big) or any(s > b for s, b in zip(small, big)):
        raise ValueError(f"cannot pad output dims {small} into {big}")
    r = w.shape[1]
    t = np.asarray(w).reshape(small + (r,))
    out = np.zeros(big + (r,), dtype=np.complex128)
    out[tuple(slice(0, s) for s in small) + (slice(None),)] = t
    return out.reshape(-1, r)


def product_isometry(prod: Ansatz, a1: Ansatz, w1: np.ndarray, a2: Ansatz, w2: np.ndarray) -> np.ndarray:
    """Isometry for the product base realizing the tensor product of two extensions.

    ``prod`` must be built on ``base1 ⊗ base2`` with party ``k`` owning the
    party-``k`` systems of both factors and output dims equal to the
    factorwise products.
    """
    n_out = len(a1.out_dims)
    if len(a2.out_dims) != n_out or len(prod.out_dims) != n_out:
        raise ValueError("ansatz shapes differ")
    if tuple(prod.out_dims) != tuple(x * y for x, y in zip(a1.out_dims, a2.out_dims)):
        raise ValueError("product ansatz output dims must be factorwise products")
    s1, s2 = a1.base.layout.dims, a2.base.layout.dims
    t1 = a1.output_vector(w1).reshape(s1 + a1.out_dims)
    t2 = a2.output_vector(w2).reshape(s2 + a2.out_dims)
    t = np.multiply.outer(t1, t2)
    n1, n2 = len(s1), len(s2)
    ax1_out = [n1 + i for i in range(n_out)]
    off = n1 + n_out
    ax2_out = [off + n2 + i for i in range(n_out)]
    perm = list(range(n1)) + [off + i for i in range(n2)]
    for i in range(n_out):
        perm += [ax1_out[i], ax2_out[i]]
    phi = np.transpose(t, perm).reshape(-1)
    expect = a1.base.layout.labels + a2.base.layout.labels
    if prod.base.layout.labels != expect:
        raise LayoutError(f"product base labels must be {expect}")
    return prod.isometry_for_state(phi)
