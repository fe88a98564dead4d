"""Compare the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Both paths are timed in one process through their explicit names, so the
CEMI_DISABLE_NUMBA flag does not need to be toggled. The last section times a
full optimizer objective evaluation under the active backend.
"""

import argparse
import timeit

import numpy as np

from cemi import _accel
from cemi import optimize as op
from cemi.tensor import SubsystemLayout, random_density


def _inputs(dims, seed=0):
    rng = np.random.default_rng(seed)
    dims = np.asarray(dims, dtype=np.int64)
    total = int(np.prod(dims))
    g = rng.normal(size=(total, total)) + 1j * rng.normal(size=(total, total))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    psi = rng.normal(size=total) + 1j * rng.normal(size=total)
    psi /= np.linalg.norm(psi)
    n = len(dims)
    masks = np.array([[(g >> i) & 1 for i in range(n)] for g in range(1, 2**n - 1)], dtype=np.uint8)
    return rho, psi, dims, masks


def _time(fn, repeat):
    fn()  # compile / warm caches
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1

    cases = [(2, 2, 2), (2, 2, 2, 2), (2, 2, 2, 2, 2), (2, 3, 2, 3, 2), (2,) * 7]
    print(f"{'kernel':<26}{'dims':<18}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>9}")
    for dims in cases:
        rho, psi, d, masks = _inputs(dims)
        kernels = [
            ("partial_trace", lambda f: f(rho, d, masks[0]),
             _accel.numpy_partial_trace, _accel.numba_partial_trace),
            ("vector_group_entropies", lambda f: f(psi, d, masks),
             _accel.numpy_vector_group_entropies, _accel.numba_vector_group_entropies),
            ("density_group_entropies", lambda f: f(rho, d, masks),
             _accel.numpy_density_group_entropies, _accel.numba_density_group_entropies),
        ]
        for name, call, f_np, f_nb in kernels:
            t_np = _time(lambda: call(f_np), args.repeat) * 1e6
            t_nb = _time(lambda: call(f_nb), args.repeat) * 1e6
            print(f"{name:<26}{str(tuple(dims)):<18}{t_np:>12.1f}{t_nb:>12.1f}{t_np / t_nb:>8.2f}x")

    base = random_density(SubsystemLayout.of(("A", 2), ("B", 2)), 0, rank=2)
    for dims in (op.AnsatzDims.bipartite(2, 2, 1), op.AnsatzDims.bipartite(2, 2, 2), op.AnsatzDims.bipartite(3, 3, 2)):
        ans = op.cemi_ansatz(base, dims)
        theta = np.random.default_rng(1).normal(size=ans.n_params)
        t = _time(lambda: ans.value(ans.isometry(theta)), args.repeat) * 1e6
        print(f"objective eval [{_accel.backend()}] dims={dims.primes + (dims.env,)}: {t:.1f} us")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
