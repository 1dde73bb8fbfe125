"""Frequency analysis of polynomial graph filters.

Graph frequencies are the eigenvalues of the shift matrix, ordered from low
to high by total variation ``|lambda_max - lambda|``. The response of a
filter ``h`` at frequency ``lambda`` is ``sum_j h_j lambda**j``.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError, ShapeError, UndefinedScoreError, ValidationError
from .graph import SparseGraph
from .linalg import sym_eig

DEFAULT_MAX_NODES = 5000


@dataclass(frozen=True, eq=False)
class Spectrum:
    lambdas: np.ndarray
    v: np.ndarray
    tv_order: np.ndarray

    @property
    def n(self) -> int:
        return int(self.lambdas.shape[0])


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    magnitudes: np.ndarray
    xaxis: np.ndarray
    metadata: dict = field(default_factory=dict)


def total_variation_order(lambdas: np.ndarray) -> np.ndarray:
    """Ascending ``|lambda_max - lambda|``; ties by eigenvalue descending,
    then by index."""
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.size == 0:
        return np.zeros(0, dtype=np.int64)
    tv = np.abs(lambdas.max() - lambdas)
    idx = np.arange(lambdas.size)
    return np.lexsort((idx, -lambdas, tv)).astype(np.int64)


def compute_spectrum(g: SparseGraph, max_nodes: int = DEFAULT_MAX_NODES) -> Spectrum:
    if g.n > max_nodes:
        raise ResourceError(
            f"graph has {g.n} nodes, above the dense eigensolver cap of {max_nodes}; "
            "raise it with --max-nodes if you have the memory and time"
        )
    lam, v = sym_eig(g.to_dense())
    return Spectrum(lam, v, total_variation_order(lam))


def frequency_response(h, spectrum: Spectrum) -> FrequencyResponse:
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    if h.size == 0:
        raise ShapeError("frequency response needs at least one coefficient")
    lam = spectrum.lambdas[spectrum.tv_order]
    # Horner evaluation of sum_j h_j lam^j
    resp = np.full(lam.shape, h[-1])
    for coef in h[-2::-1]:
        resp = resp * lam + coef
    n = lam.size
    xaxis = np.arange(n) / (n - 1) if n > 1 else np.zeros(n)
    return FrequencyResponse(np.abs(resp), xaxis)


def band_energy_ratio(resp: FrequencyResponse, band: float, which: str = "low") -> float:
    """Share of ``sum |h~|^2`` carried by the first (``low``) or last
    (``high``) ``ceil(band * N)`` ordered frequencies."""
    mags = np.asarray(resp.magnitudes, dtype=np.float64)
    n = mags.size
    if n == 0:
        raise ValidationError("empty frequency response")
    if not 0.0 < band < 1.0:
        raise ValidationError(f"band must lie in (0, 1), got {band}")
    if which not in ("low", "high"):
        raise ValidationError(f"which must be 'low' or 'high', got {which!r}")
    energy = mags**2
    total = float(energy.sum())
    if total == 0.0:
        raise UndefinedScoreError("band energy ratio is undefined for an all-zero response")
    k = math.ceil(band * n)
    part = energy[:k] if which == "low" else energy[n - k :]
    return float(part.sum()) / total


def export_response(responses, path) -> None:
    """Write ``[(label, FrequencyResponse), ...]`` as ``x,<label1>,...`` CSV.

    Values are written with 17 significant digits so they parse back exactly.
    """
    responses = list(responses)
    if not responses:
        raise ValidationError("nothing to export")
    n = responses[0][1].magnitudes.size
    for label, resp in responses:
        if any(ch in label for ch in ',"\r\n'):
            raise ValidationError(f"label {label!r} contains a comma, quote or newline")
        if resp.magnitudes.size != n:
            raise ShapeError("all responses must have the same length")
    xaxis = responses[0][1].xaxis
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x"] + [label for label, _ in responses])
        for i in range(n):
            row = [format(float(xaxis[i]), ".17g")]
            row += [format(float(resp.magnitudes[i]), ".17g") for _, resp in responses]
            writer.writerow(row)


def read_response_csv(path):
    """Parse a file written by :func:`export_response` into
    ``(labels, x, columns)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    body = np.array([[float(v) for v in row] for row in rows[1:]]).reshape(-1, len(header))
    return header[1:], body[:, 0], body[:, 1:]
