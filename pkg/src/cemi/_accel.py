"""Hot numeric kernels: reductions and entropies of small dense states.

Every kernel has a pure-numpy implementation and, when numba is importable,
an ``@njit`` twin. The compiled path is used unless the environment variable
``CEMI_DISABLE_NUMBA`` is set to a non-empty value other than ``0``. Both
paths are always importable by name (``numpy_*`` / ``numba_*``) so tests and
the benchmark can compare them directly.

Conventions shared by all kernels:

* ``dims`` is an int64 array of local dimensions, leftmost most significant.
* ``mask`` / ``masks`` are uint8 arrays, 1 for kept factors.
* entropies are in bits; eigenvalues below ``EIG_FLOOR`` count as zero.
"""

import os

import numpy as np

EIG_FLOOR = 1e-12
# eigenvalues this close to 1 are roundoff on a pure reduction
EIG_CEIL = 1.0 - 1e-13

_flag = os.environ.get("CEMI_DISABLE_NUMBA", "")
NUMBA_REQUESTED = _flag in ("", "0")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and NUMBA_REQUESTED


# --------------------------------------------------------------------------
# numpy reference path
# --------------------------------------------------------------------------


def numpy_entropy_of_eigs(w):
    w = np.clip(w, 0.0, 1.0)
    w = np.where(w > EIG_CEIL, 1.0, w)
    w = w[w > EIG_FLOOR]
    if w.size == 0:
        return 0.0
    return float(-np.sum(w * np.log2(w)))


def numpy_entropy(mat):
    return numpy_entropy_of_eigs(np.linalg.eigvalsh(mat))


def numpy_partial_trace(rho, dims, mask):
    n = len(dims)
    keep = [i for i in range(n) if mask[i]]
    drop = [i for i in range(n) if not mask[i]]
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    dd = int(np.prod([dims[i] for i in drop])) if drop else 1
    t = rho.reshape(tuple(dims) * 2)
    perm = keep + drop + [n + i for i in keep] + [n + i for i in drop]
    t = np.transpose(t, perm).reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", t)


def numpy_reduce_vector(psi, dims, mask):
    """Reduced density matrix of ``|psi><psi|`` on the kept factors."""
    n = len(dims)
    keep = [i for i in range(n) if mask[i]]
    drop = [i for i in range(n) if not mask[i]]
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    m = np.transpose(psi.reshape(tuple(dims)), keep + drop).reshape(dk, -1)
    return m @ m.conj().T


def numpy_vector_group_entropies(psi, dims, masks):
    """Entropies of several reductions of one pure state.

    Uses S(X) = S(complement) and always diagonalizes the smaller side.
    """
    out = np.zeros(masks.shape[0])
    total = int(np.prod(dims))
    for g in range(masks.shape[0]):
        mask = masks[g]
        dk = 1
        for i in range(len(dims)):
            if mask[i]:
                dk *= int(dims[i])
        if dk == 1 or dk == total:
            continue
        if dk * dk > total:
            mask = 1 - mask
        out[g] = numpy_entropy(numpy_reduce_vector(psi, dims, mask))
    return out


def numpy_density_group_entropies(rho, dims, masks):
    out = np.zeros(masks.shape[0])
    for g in range(masks.shape[0]):
        if not masks[g].any():
            continue
        out[g] = numpy_entropy(numpy_partial_trace(rho, dims, masks[g]))
    return out


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

if HAVE_NUMBA:
    njit = numba.njit(cache=True, nogil=True)

    @njit
    def _split_indices(dims, mask):
        # For every composite index: its (kept, dropped) sub-indices.
        n = dims.shape[0]
        total = 1
        dk = 1
        for i in range(n):
            total *= dims[i]
            if mask[i]:
                dk *= dims[i]
        kidx = np.empty(total, dtype=np.int64)
        didx = np.empty(total, dtype=np.int64)
        digits = np.zeros(n, dtype=np.int64)
        for flat in range(total):
            k = 0
            d = 0
            for i in range(n):
                if mask[i]:
                    k = k * dims[i] + digits[i]
                else:
                    d = d * dims[i] + digits[i]
            kidx[flat] = k
            didx[flat] = d
            j = n - 1
            while j >= 0:
                digits[j] += 1
                if digits[j] < dims[j]:
                    break
                digits[j] = 0
                j -= 1
        return kidx, didx, dk, total // dk

    @njit
    def numba_entropy_of_eigs(w):
        s = 0.0
        for x in w:
            if x > 1.0 - 1e-13:
                x = 1.0
            if x > 1e-12:
                s -= x * np.log2(x)
        return s

    @njit
    def numba_entropy(mat):
        return numba_entropy_of_eigs(np.linalg.eigvalsh(mat))

    @njit
    def numba_partial_trace(rho, dims, mask):
        kidx, didx, dk, _ = _split_indices(dims, mask)
        total = kidx.shape[0]
        out = np.zeros((dk, dk), dtype=np.complex128)
        for r in range(total):
            kr = kidx[r]
            dr = didx[r]
            for c in range(total):
                if didx[c] == dr:
                    out[kr, kidx[c]] += rho[r, c]
        return out

    @njit
    def numba_reduce_vector(psi, dims, mask):
        kidx, didx, dk, dd = _split_indices(dims, mask)
        m = np.zeros((dk, dd), dtype=np.complex128)
        for f in range(kidx.shape[0]):
            m[kidx[f], didx[f]] = psi[f]
        return m @ m.conj().T

    @njit
    def numba_vector_group_entropies(psi, dims, masks):
        ng = masks.shape[0]
        out = np.zeros(ng)
        total = 1
        for i in range(dims.shape[0]):
            total *= dims[i]
        for g in range(ng):
            mask = masks[g].copy()
            dk = 1
            for i in range(dims.shape[0]):
                if mask[i]:
                    dk *= dims[i]
            if dk == 1 or dk == total:
                continue
            if dk * dk > total:
                for i in range(mask.shape[0]):
                    mask[i] = 1 - mask[i]
            out[g] = numba_entropy(numba_reduce_vector(psi, dims, mask))
        return out

    @njit
    def numba_density_group_entropies(rho, dims, masks):
        ng = masks.shape[0]
        out = np.zeros(ng)
        for g in range(ng):
            anyk = False
            for i in range(masks.shape[1]):
                if masks[g, i]:
                    anyk = True
            if anyk:
                out[g] = numba_entropy(numba_partial_trace(rho, dims, masks[g]))
        return out


def _as_args(arr, dims, mask):
    return (
        np.ascontiguousarray(arr, dtype=np.complex128),
        np.asarray(dims, dtype=np.int64),
        np.ascontiguousarray(mask, dtype=np.uint8),
    )


if USE_NUMBA:
    _entropy = numba_entropy
    _partial_trace = numba_partial_trace
    _reduce_vector = numba_reduce_vector
    _vector_group_entropies = numba_vector_group_entropies
    _density_group_entropies = numba_density_group_entropies
else:
    _entropy = numpy_entropy
    _partial_trace = numpy_partial_trace
    _reduce_vector = numpy_reduce_vector
    _vector_group_entropies = numpy_vector_group_entropies
    _density_group_entropies = numpy_density_group_entropies


def entropy(mat):
    """Von Neumann entropy (bits) of a Hermitian matrix."""
    return float(_entropy(np.ascontiguousarray(mat, dtype=np.complex128)))


def partial_trace(rho, dims, mask):
    return _partial_trace(*_as_args(rho, dims, mask))


def reduce_vector(psi, dims, mask):
    return _reduce_vector(*_as_args(psi, dims, mask))


def vector_group_entropies(psi, dims, masks):
    return _vector_group_entropies(*_as_args(psi, dims, np.atleast_2d(masks)))


def density_group_entropies(rho, dims, masks):
    return _density_group_entropies(*_as_args(rho, dims, np.atleast_2d(masks)))


def backend():
    return "numba" if USE_NUMBA else "numpy"
