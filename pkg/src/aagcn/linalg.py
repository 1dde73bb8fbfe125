"""Dense double-precision helpers: seeded PRNG, checked matmul, Glorot init,
and the symmetric eigensolver used for spectral analysis.

Dense matrices are plain ``numpy.ndarray`` objects of dtype float64 and
shape ``(rows, cols)``, stored C-contiguous (row-major).
"""

import hashlib
import math

import numpy as np

from . import kernels
from .errors import NumericalError, ShapeError, ValidationError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class Prng:
    """SplitMix64 generator (Steele, Lea & Flood 2014).

    The state is a 64-bit integer advanced by the golden-ratio increment
    ``0x9E3779B97F4A7C15`` per draw; each output is the state passed through
    the two xor-shift/multiply rounds of the reference implementation.
    Integer arithmetic is modulo 2**64, so the integer stream is identical on
    every platform. Uniform doubles take the top 53 bits.

    ``substream(name)`` derives an independent generator from the *original*
    seed and a name, so adding a new consumer never shifts an existing one.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._state = self.seed

    def next_u64(self, size: int) -> np.ndarray:
        size = int(size)
        steps = np.arange(1, size + 1, dtype=np.uint64)
        z = np.uint64(self._state) + steps * np.uint64(_GAMMA)
        self._state = (self._state + size * _GAMMA) & _MASK64
        return _mix64(z)

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        shape = () if size is None else size
        count = int(np.prod(shape, dtype=np.int64))
        u = (self.next_u64(count) >> np.uint64(11)).astype(np.float64) * (2.0**-53)
        u = low + (high - low) * u
        if size is None:
            return float(u[0])
        return u.reshape(shape)

    def normal(self, size) -> np.ndarray:
        """Standard normal draws via the Box-Muller transform."""
        count = int(np.prod(size, dtype=np.int64))
        pairs = (count + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        angle = 2.0 * math.pi * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = radius * np.cos(angle)
        z[:, 1] = radius * np.sin(angle)
        return z.reshape(-1)[:count].reshape(size)

    def permutation(self, n: int) -> np.ndarray:
        keys = self.next_u64(n)
        return np.argsort(keys, kind="stable")

    def substream(self, name: str) -> "Prng":
        digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
        salt = int.from_bytes(digest, "little")
        derived = _mix64(np.array([(self.seed ^ salt) & _MASK64], dtype=np.uint64))
        return Prng(int(derived[0]))


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    return a @ b


def glorot_uniform(rows: int, cols: int, prng: Prng) -> np.ndarray:
    if rows < 1 or cols < 1:
        raise ValidationError(f"glorot_uniform needs positive dims, got {rows}x{cols}")
    bound = math.sqrt(6.0 / (rows + cols))
    return prng.uniform((rows, cols), -bound, bound)


def sym_eig(s: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm drops below
    ``tol * ||s||_F``. Returns ``(eigenvalues ascending, V)`` with
    eigenvectors in the columns of ``V``.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValidationError(f"sym_eig needs a square matrix, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValidationError("sym_eig input has non-finite entries")
    scale = float(np.max(np.abs(s))) if s.size else 0.0
    if s.size and float(np.max(np.abs(s - s.T))) > 1e-12 * max(scale, 1.0):
        raise ValidationError("sym_eig input is not symmetric")
    n = s.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    sym = np.ascontiguousarray(0.5 * (s + s.T))
    fro = float(np.linalg.norm(sym))
    if fro == 0.0:
        return np.zeros(n), np.eye(n)
    lam, v, _, converged = kernels.jacobi(sym, tol * fro, max_sweeps)
    if not converged:
        raise NumericalError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
    order = np.argsort(lam, kind="stable")
    return lam[order], np.ascontiguousarray(v[:, order])
