"""Hot inner loops: CSR sparse-dense product and cyclic Jacobi sweeps.

Each kernel has a numba implementation (``*_numba``) and a vectorized numpy
implementation (``*_numpy``) that visit entries in the same order; results
agree to rounding (numba may fuse multiply-adds). The public names dispatch
on :data:`aagcn._accel.USE_NUMBA`.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit


# --------------------------------------------------------------------------
# CSR x dense
# --------------------------------------------------------------------------


@njit(nogil=True, cache=True)
def spmm_numba(row_ptr, col_idx, values, x):
    n = row_ptr.shape[0] - 1
    f = x.shape[1]
    out = np.zeros((n, f))
    for i in range(n):
        for k in range(row_ptr[i], row_ptr[i + 1]):
            j = col_idx[k]
            v = values[k]
            for c in range(f):
                out[i, c] += v * x[j, c]
    return out


def spmm_numpy(row_ptr, col_idx, values, x):
    n = row_ptr.shape[0] - 1
    out = np.zeros((n, x.shape[1]))
    if values.size == 0:
        return out
    contrib = values[:, None] * x[col_idx]
    starts = row_ptr[:-1]
    nonempty = row_ptr[1:] > starts
    out[nonempty] = np.add.reduceat(contrib, starts[nonempty], axis=0)
    return out


# --------------------------------------------------------------------------
# Cyclic Jacobi eigensolver
# --------------------------------------------------------------------------


@njit(cache=True)
def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    return t, c, t * c


def _rotation_py(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
        if theta < 0.0:
            t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    return t, c, t * c


@njit(nogil=True, cache=True)
def _offdiag_norm_numba(a):
    n = a.shape[0]
    acc = 0.0
    for p in range(n):
        for q in range(p + 1, n):
            acc += a[p, q] * a[p, q]
    return math.sqrt(2.0 * acc)


@njit(nogil=True, cache=True)
def jacobi_numba(s, tol, max_sweeps):
    """Returns (diag, V, sweeps, converged); ``tol`` is absolute."""
    n = s.shape[0]
    a = s.copy()
    v = np.eye(n)
    for sweep in range(max_sweeps + 1):
        if _offdiag_norm_numba(a) <= tol:
            return np.diag(a).copy(), v, sweep, True
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                t, c, sn = _rotation(app, aqq, apq)
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - sn * akq
                    a[k, q] = sn * akp + c * akq
                for k in range(n):
                    a[p, k] = a[k, p]
                    a[q, k] = a[k, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - sn * vkq
                    v[k, q] = sn * vkp + c * vkq
    return np.diag(a).copy(), v, max_sweeps, False


def jacobi_numpy(s, tol, max_sweeps):
    n = s.shape[0]
    a = np.array(s, dtype=np.float64, copy=True)
    v = np.eye(n)
    iu = np.triu_indices(n, 1)
    for sweep in range(max_sweeps + 1):
        if math.sqrt(2.0 * float(np.sum(a[iu] ** 2))) <= tol:
            return np.diag(a).copy(), v, sweep, True
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                t, c, sn = _rotation_py(app, aqq, apq)
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - sn * col_q
                a[:, q] = sn * col_p + c * col_q
                a[p, :] = a[:, p]
                a[q, :] = a[:, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    return np.diag(a).copy(), v, max_sweeps, False


if USE_NUMBA:
    spmm = spmm_numba
    jacobi = jacobi_numba
else:
    spmm = spmm_numpy
    jacobi = jacobi_numpy
