"""Sparse symmetric graphs in CSR form and the shift-operator machinery built
on them: degree normalization, polynomial filters, homophily, permutation.

A filter with coefficients ``h`` is applied as ``sum_r h[r] A^r X`` by
repeated sparse shifts, so ``A^r`` is never formed. Cost is
``O(R * nnz * F + n * F)``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ShapeError, UndefinedScoreError, ValidationError


@dataclass(frozen=True, eq=False)
class SparseGraph:
    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return int(self.col_idx.shape[0])

    def rows(self) -> np.ndarray:
        """Row index of every stored entry (COO expansion of ``row_ptr``)."""
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_ptr))

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        a[self.rows(), self.col_idx] = self.values
        return a

    def degrees(self) -> np.ndarray:
        """Weighted row sums."""
        return np.bincount(self.rows(), weights=self.values, minlength=self.n).astype(np.float64)

    def edges(self):
        """Unordered edges ``(i, j, w)`` with ``i <= j``, in CSR order."""
        r = self.rows()
        keep = r <= self.col_idx
        return r[keep], self.col_idx[keep], self.values[keep]

    def structurally_equal(self, other: "SparseGraph") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.col_idx, other.col_idx)
            and np.array_equal(self.values, other.values)
        )

    def validate(self) -> None:
        """Raise ``ValidationError`` unless all CSR invariants hold."""
        if self.row_ptr.shape != (self.n + 1,) or self.row_ptr[0] != 0 or self.row_ptr[-1] != self.nnz:
            raise ValidationError("row_ptr is inconsistent with n/nnz")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValidationError("row_ptr is not monotone")
        if self.values.shape != self.col_idx.shape:
            raise ValidationError("values and col_idx lengths differ")
        if self.nnz == 0:
            return
        if self.col_idx.min() < 0 or self.col_idx.max() >= self.n:
            raise ValidationError("column index out of range")
        if not np.all(np.isfinite(self.values)) or np.any(self.values == 0.0):
            raise ValidationError("values must be finite and nonzero")
        r = self.rows()
        key = r * self.n + self.col_idx
        if np.any(np.diff(key) <= 0):
            raise ValidationError("columns must be strictly ascending within each row")
        tkey = self.col_idx * self.n + r
        order = np.argsort(tkey, kind="stable")
        if not (np.array_equal(tkey[order], key) and np.array_equal(self.values[order], self.values)):
            raise ValidationError("graph is not symmetric")


def _from_coo(rows, cols, vals, n: int) -> SparseGraph:
    """Sort, merge duplicates by summation, drop exact zeros."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if rows.size:
        key = rows * n + cols
        order = np.argsort(key, kind="stable")
        key = key[order]
        vals = vals[order]
        uniq, start = np.unique(key, return_index=True)
        merged = np.add.reduceat(vals, start) if uniq.size else vals[:0]
        keep = merged != 0.0
        uniq = uniq[keep]
        merged = merged[keep]
        rows = uniq // n
        cols = uniq % n
        vals = merged
    counts = np.bincount(rows, minlength=n)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    return SparseGraph(n, row_ptr, cols.astype(np.int64), vals.astype(np.float64))


def from_edge_list(edges, n: int, symmetrize: bool = True) -> SparseGraph:
    """Build a graph from ``(i, j, weight)`` triples.

    With ``symmetrize`` every off-diagonal triple also inserts ``(j, i, w)``.
    Duplicates are summed.
    """
    n = int(n)
    if n < 0:
        raise ValidationError(f"node count must be nonnegative, got {n}")
    arr = np.asarray(edges, dtype=np.float64).reshape(-1, 3) if len(edges) else np.zeros((0, 3))
    i = arr[:, 0]
    j = arr[:, 1]
    w = arr[:, 2]
    if np.any(i != np.floor(i)) or np.any(j != np.floor(j)):
        raise ValidationError("node ids must be integers")
    i = i.astype(np.int64)
    j = j.astype(np.int64)
    bad = (i < 0) | (i >= n) | (j < 0) | (j >= n)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ValidationError(f"edge {k} ({i[k]}, {j[k]}) has a node id outside [0, {n})")
    if not np.all(np.isfinite(w)):
        raise ValidationError("edge weights must be finite")
    if symmetrize:
        off = i != j
        rows = np.concatenate([i, j[off]])
        cols = np.concatenate([j, i[off]])
        vals = np.concatenate([w, w[off]])
        return _from_coo(rows, cols, vals, n)
    g = _from_coo(i, j, w, n)
    try:
        g.validate()
    except ValidationError as exc:
        raise ValidationError(f"asymmetric edge list with symmetrize=False: {exc}") from None
    return g


def spmm(g: SparseGraph, x: np.ndarray) -> np.ndarray:
    """``A @ x`` for a dense ``x`` with ``g.n`` rows."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != g.n:
        raise ShapeError(f"spmm expects x with {g.n} rows, got shape {x.shape}")
    return kernels.spmm(g.row_ptr, g.col_idx, g.values, x)


def scale_rows(x: np.ndarray, d: np.ndarray) -> np.ndarray:
    return x * d[:, None]


def _symmetric_scale(g: SparseGraph, scale: np.ndarray) -> SparseGraph:
    # s_i * s_j first: exactly commutative, so the result stays bitwise symmetric
    vals = (scale[g.rows()] * scale[g.col_idx]) * g.values
    return _from_coo(g.rows(), g.col_idx, vals, g.n)


def _inv_sqrt_degrees(d: np.ndarray) -> np.ndarray:
    if np.any(d < 0):
        raise ValidationError("negative weighted degree; cannot normalize")
    out = np.zeros_like(d)
    pos = d > 0
    out[pos] = 1.0 / np.sqrt(d[pos])
    return out


def normalize_adjacency(g: SparseGraph) -> SparseGraph:
    """``D^{-1/2} A D^{-1/2}``; isolated nodes keep an all-zero row."""
    return _symmetric_scale(g, _inv_sqrt_degrees(g.degrees()))


def gcn_operator(g: SparseGraph) -> SparseGraph:
    """Self-loop augmented, symmetrically normalized operator of the GCN."""
    diag = np.arange(g.n, dtype=np.int64)
    with_loops = _from_coo(
        np.concatenate([g.rows(), diag]),
        np.concatenate([g.col_idx, diag]),
        np.concatenate([g.values, np.ones(g.n)]),
        g.n,
    )
    return normalize_adjacency(with_loops)


def _check_coefficients(h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    if h.size == 0:
        raise ValidationError("filter needs at least one coefficient")
    return h


def shift_powers(g: SparseGraph, x: np.ndarray, r: int) -> list:
    """``[x, A x, ..., A^{r-1} x]`` by iterated shifts."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != g.n:
        raise ShapeError(f"expected {g.n} rows, got shape {x.shape}")
    out = [x]
    for _ in range(1, r):
        out.append(spmm(g, out[-1]))
    return out


def combine(h: np.ndarray, powers: list) -> np.ndarray:
    """``sum_r h[r] * powers[r]``, accumulated in order."""
    acc = h[0] * powers[0]
    for r in range(1, len(h)):
        acc = acc + h[r] * powers[r]
    return acc


def apply_filter(g: SparseGraph, h, x: np.ndarray) -> np.ndarray:
    h = _check_coefficients(h)
    return combine(h, shift_powers(g, x, h.size))


def filter_degrees(g: SparseGraph, h, eps: float = 1e-6) -> np.ndarray:
    """``|H 1| + eps``: the degree vector of the filter ``H = sum_r h_r A^r``."""
    if not eps > 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    return np.abs(apply_filter(g, h, np.ones((g.n, 1)))[:, 0]) + eps


def apply_normalized_filter(g: SparseGraph, h, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """``D_H^{-1/2} H D_H^{-1/2} x`` with ``D_H = diag(|H 1| + eps)``."""
    h = _check_coefficients(h)
    s = 1.0 / np.sqrt(filter_degrees(g, h, eps))
    return scale_rows(apply_filter(g, h, scale_rows(x, s)), s)


def edge_homophily(g: SparseGraph, labels) -> float:
    """Fraction of unordered non-loop edges joining same-label endpoints."""
    labels = np.asarray(labels)
    if labels.shape != (g.n,):
        raise ShapeError(f"labels must have length {g.n}, got shape {labels.shape}")
    r = g.rows()
    keep = r < g.col_idx
    total = int(np.count_nonzero(keep))
    if total == 0:
        raise UndefinedScoreError("edge homophily is undefined on a graph without edges")
    same = np.count_nonzero(labels[r[keep]] == labels[g.col_idx[keep]])
    return same / total


def permute(g: SparseGraph, perm) -> SparseGraph:
    """Relabel node ``i`` as ``perm[i]`` (the graph of ``P A P^T``)."""
    perm = np.asarray(perm)
    if perm.shape != (g.n,) or not np.array_equal(np.sort(perm), np.arange(g.n)):
        raise ValidationError("perm must be a permutation of 0..n-1")
    perm = perm.astype(np.int64)
    return _from_coo(perm[g.rows()], perm[g.col_idx], g.values, g.n)
