"""Compare the numba and pure-numpy kernels.

Times the CSR sparse-dense product and the cyclic Jacobi eigensolver on
random symmetric graphs, plus a three-tap polynomial filter built from
repeated products. Both backends are imported directly, so the
``AAGCN_DISABLE_NUMBA`` flag does not matter here. Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]
"""

import argparse
import timeit

import numpy as np

from aagcn import kernels
from aagcn._accel import HAVE_NUMBA


def random_csr(n, avg_degree, rng):
    m = int(n * avg_degree / 2)
    i = rng.integers(0, n, m)
    j = rng.integers(0, n, m)
    keep = i != j
    rows = np.concatenate([i[keep], j[keep]])
    cols = np.concatenate([j[keep], i[keep]])
    key = np.unique(rows * n + cols)
    rows, cols = key // n, key % n
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=row_ptr[1:])
    return row_ptr, cols.astype(np.int64), np.ones(cols.size)


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile on first call)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def filter3(spmm, row_ptr, col_idx, values, x, h=(0.5, 1.0, -0.3)):
    p1 = spmm(row_ptr, col_idx, values, x)
    p2 = spmm(row_ptr, col_idx, values, p1)
    return h[0] * x + h[1] * p1 + h[2] * p2


def row(name, size, t_nb, t_np, err):
    print(f"{name:<8} {size:<16} {t_nb * 1e3:>10.3f} {t_np * 1e3:>10.3f} {t_np / t_nb:>8.1f}x {err:>10.1e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<8} {'size':<16} {'numba ms':>10} {'numpy ms':>10} {'speedup':>9} {'max diff':>10}")

    sizes = [(1000, 10, 16), (5000, 10, 32)] if args.quick else [(1000, 10, 16), (5000, 10, 32), (20000, 20, 32)]
    for n, deg, f in sizes:
        g = random_csr(n, deg, rng)
        x = rng.normal(size=(n, f))
        a = kernels.spmm_numba(*g, x)
        b = kernels.spmm_numpy(*g, x)
        t_nb = best_of(lambda: kernels.spmm_numba(*g, x), args.repeat)
        t_np = best_of(lambda: kernels.spmm_numpy(*g, x), args.repeat)
        row("spmm", f"n={n} F={f}", t_nb, t_np, float(np.max(np.abs(a - b))))
        t_nb = best_of(lambda: filter3(kernels.spmm_numba, *g, x), args.repeat)
        t_np = best_of(lambda: filter3(kernels.spmm_numpy, *g, x), args.repeat)
        err = float(np.max(np.abs(filter3(kernels.spmm_numba, *g, x) - filter3(kernels.spmm_numpy, *g, x))))
        row("filter", f"n={n} R=3", t_nb, t_np, err)

    for n in ([50, 100] if args.quick else [50, 100, 200]):
        m = rng.normal(size=(n, n))
        s = (m + m.T) / 2
        tol = 1e-12 * np.linalg.norm(s)
        reps = max(1, args.repeat // 2)
        t_nb = best_of(lambda: kernels.jacobi_numba(s, tol, 100), reps)
        t_np = best_of(lambda: kernels.jacobi_numpy(s, tol, 100), reps)
        la = np.sort(kernels.jacobi_numba(s, tol, 100)[0])
        lb = np.sort(kernels.jacobi_numpy(s, tol, 100)[0])
        row("jacobi", f"n={n}", t_nb, t_np, float(np.max(np.abs(la - lb))))


if __name__ == "__main__":
    main()
