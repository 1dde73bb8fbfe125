"""Datasets: in-memory model, on-disk CSV/JSON format, stratified splits and
a contextual stochastic block model generator.

Directory layout read by :func:`load_dataset` and written by
:func:`save_dataset`::

    manifest.json   {"name", "n", "f", "c", "ratios": [tr, va, te], "split_seed"}
    edges.csv       header "src,dst,weight", one undirected edge per line
    features.csv    n rows of f comma-separated floats, no header
    labels.csv      n rows, one integer class id per line
    splits.csv      optional; n rows of train|val|test|none
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .graph import SparseGraph, _from_coo, edge_homophily, from_edge_list
from .linalg import Prng

DEFAULT_RATIOS = (0.48, 0.32, 0.20)
SPLIT_NAMES = ("train", "val", "test")
MAX_CSBM_NODES = 20000


class DatasetError(ValidationError):
    pass


@dataclass(eq=False)
class Dataset:
    graph: SparseGraph
    x: np.ndarray
    y: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    class_count: int
    name: str = "dataset"
    ratios: tuple = DEFAULT_RATIOS
    split_seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def masks(self) -> dict:
        return {"train": self.train_mask, "val": self.val_mask, "test": self.test_mask}

    def validate(self) -> None:
        n = self.graph.n
        if self.x.shape[0] != n:
            raise DatasetError(f"features have {self.x.shape[0]} rows but the graph has {n} nodes")
        if self.y.shape != (n,):
            raise DatasetError(f"labels have length {self.y.shape[0]} but the graph has {n} nodes")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.class_count):
            raise DatasetError(f"label ids must lie in [0, {self.class_count})")
        tr, va, te = self.train_mask, self.val_mask, self.test_mask
        if np.any(tr & va) or np.any(tr & te) or np.any(va & te):
            raise DatasetError("train/val/test masks overlap")
        missing = sorted(set(range(self.class_count)) - set(np.unique(self.y[tr]).tolist()))
        if missing:
            raise DatasetError(f"classes {missing} have no training nodes")

    def with_splits(self, masks) -> "Dataset":
        tr, va, te = masks
        return Dataset(self.graph, self.x, self.y, tr, va, te, self.class_count, self.name,
                       self.ratios, self.split_seed, dict(self.meta))

    def row_normalized(self) -> "Dataset":
        """Copy with each feature row scaled to unit L1 norm (zero rows kept)."""
        norms = np.abs(self.x).sum(axis=1, keepdims=True)
        x = np.divide(self.x, norms, out=np.zeros_like(self.x), where=norms > 0)
        return Dataset(self.graph, x, self.y, self.train_mask, self.val_mask, self.test_mask,
                       self.class_count, self.name, self.ratios, self.split_seed, dict(self.meta))


@dataclass(frozen=True)
class CsbmParams:
    n: int
    c: int
    f: int
    p_in: float
    p_out: float
    mu: float
    seed: int = 0
    ratios: tuple = DEFAULT_RATIOS

    def validate(self) -> None:
        if self.c < 1 or self.n < self.c:
            raise ValidationError(f"need n >= c >= 1, got n={self.n}, c={self.c}")
        if self.n > MAX_CSBM_NODES:
            raise ValidationError(f"csbm generation is limited to n <= {MAX_CSBM_NODES}")
        for name in ("p_in", "p_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be a probability, got {v}")
        if not self.mu >= 0:
            raise ValidationError(f"mu must be nonnegative, got {self.mu}")
        if self.f < self.c:
            raise ValidationError(f"feature dim f={self.f} cannot hold {self.c} orthogonal class means")


def _check_ratios(ratios) -> tuple:
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(not r > 0 for r in ratios) or sum(ratios) > 1.0 + 1e-9:
        raise ValidationError(f"ratios must be three positive fractions summing to <= 1, got {ratios}")
    return ratios


def random_split(n: int, labels, ratios=DEFAULT_RATIOS, seed: int = 0):
    """Per-class stratified split.

    Each class contributes ``floor(ratio * count)`` shuffled nodes to train
    and val (at least one each). When the ratios sum to 1 the remainder goes
    to test; otherwise test also takes ``floor(ratio * count)`` (at least one).
    """
    ratios = _check_ratios(ratios)
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValidationError(f"labels must have length {n}")
    full = abs(sum(ratios) - 1.0) <= 1e-9
    prng = Prng(seed)
    masks = [np.zeros(n, dtype=bool) for _ in range(3)]
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        count = members.size
        n_tr = max(1, math.floor(ratios[0] * count + 1e-9))
        n_va = max(1, math.floor(ratios[1] * count + 1e-9))
        n_te = count - n_tr - n_va if full else max(1, math.floor(ratios[2] * count + 1e-9))
        if n_te < 1 or n_tr + n_va + n_te > count:
            raise ValidationError(f"class {cls} has only {count} nodes; each split needs at least one")
        shuffled = members[prng.permutation(count)]
        masks[0][shuffled[:n_tr]] = True
        masks[1][shuffled[n_tr : n_tr + n_va]] = True
        masks[2][shuffled[n_tr + n_va : n_tr + n_va + n_te]] = True
    return tuple(masks)


def _sample_edges(n: int, labels: np.ndarray, p_in: float, p_out: float, prng: Prng):
    """Independent edge per unordered pair ``i < j``, drawn row by row."""
    src, dst = [], []
    for i in range(n - 1):
        j = np.arange(i + 1, n)
        u = prng.uniform(j.size)
        p = np.where(labels[j] == labels[i], p_in, p_out)
        hit = j[u < p]
        if hit.size:
            src.append(np.full(hit.size, i, dtype=np.int64))
            dst.append(hit)
    if not src:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(src), np.concatenate(dst)


def gen_csbm(p: CsbmParams) -> Dataset:
    """Contextual SBM: class-dependent edge probabilities plus Gaussian
    features centred at ``mu * e_c`` (orthogonal unit class means)."""
    p.validate()
    root = Prng(p.seed)
    labels = (np.arange(p.n) % p.c).astype(np.int64)
    labels = labels[root.substream("labels").permutation(p.n)]
    src, dst = _sample_edges(p.n, labels, p.p_in, p.p_out, root.substream("edges"))
    graph = _from_coo(np.concatenate([src, dst]), np.concatenate([dst, src]), np.ones(2 * src.size), p.n)
    means = np.eye(p.c, p.f)
    x = p.mu * means[labels] + root.substream("features").normal((p.n, p.f))
    split_seed = int(root.substream("split").seed)
    masks = random_split(p.n, labels, p.ratios, split_seed)
    name = f"csbm-n{p.n}-c{p.c}-pin{p.p_in:g}-pout{p.p_out:g}-mu{p.mu:g}-s{p.seed}"
    ds = Dataset(graph, x, labels, *masks, p.c, name, tuple(p.ratios), split_seed)
    ds.validate()
    return ds


# --------------------------------------------------------------------------
# disk format
# --------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_dataset(ds: Dataset, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {
        "name": ds.name,
        "n": int(ds.n),
        "f": int(ds.x.shape[1]),
        "c": int(ds.class_count),
        "ratios": [float(r) for r in ds.ratios],
        "split_seed": int(ds.split_seed),
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    src, dst, w = ds.graph.edges()
    with open(d / "edges.csv", "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["src", "dst", "weight"])
        for a, b, v in zip(src.tolist(), dst.tolist(), w.tolist()):
            out.writerow([a, b, _fmt(v)])
    with open(d / "features.csv", "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        for row in ds.x:
            out.writerow([_fmt(v) for v in row])
    (d / "labels.csv").write_text("".join(f"{int(v)}\n" for v in ds.y))
    names = np.full(ds.n, "none", dtype=object)
    names[ds.train_mask] = "train"
    names[ds.val_mask] = "val"
    names[ds.test_mask] = "test"
    (d / "splits.csv").write_text("".join(f"{v}\n" for v in names))


def _read_lines(path: Path) -> list:
    if not path.exists():
        raise DatasetError(f"missing file: {path}")
    return path.read_text().splitlines()


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    mpath = d / "manifest.json"
    if not mpath.exists():
        raise DatasetError(f"missing file: {mpath}")
    try:
        manifest = json.loads(mpath.read_text())
        n, f, c = int(manifest["n"]), int(manifest["f"]), int(manifest["c"])
    except (ValueError, KeyError, TypeError) as exc:
        raise DatasetError(f"{mpath}: malformed manifest ({exc})") from None
    ratios = _check_ratios(manifest.get("ratios", DEFAULT_RATIOS))
    split_seed = int(manifest.get("split_seed", 0))

    lines = _read_lines(d / "edges.csv")
    if not lines or lines[0].replace(" ", "") != "src,dst,weight":
        raise DatasetError(f"{d / 'edges.csv'}: line 1: expected header 'src,dst,weight'")
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            if len(parts) != 3:
                raise ValueError(f"expected 3 fields, got {len(parts)}")
            edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise DatasetError(f"{d / 'edges.csv'}: line {lineno}: malformed row ({exc})") from None
    try:
        graph = from_edge_list(edges, n, symmetrize=True)
    except ValidationError as exc:
        raise DatasetError(f"{d / 'edges.csv'}: {exc}") from None

    lines = [ln for ln in _read_lines(d / "features.csv") if ln.strip()]
    if len(lines) != n:
        raise DatasetError(f"features.csv has {len(lines)} rows but manifest n = {n}")
    x = np.empty((n, f))
    for lineno, line in enumerate(lines, start=1):
        parts = line.split(",")
        if len(parts) != f:
            raise DatasetError(f"features.csv: line {lineno}: expected {f} values, got {len(parts)}")
        try:
            x[lineno - 1] = [float(v) for v in parts]
        except ValueError as exc:
            raise DatasetError(f"features.csv: line {lineno}: malformed row ({exc})") from None

    lines = [ln for ln in _read_lines(d / "labels.csv") if ln.strip()]
    if len(lines) != n:
        raise DatasetError(f"labels.csv has {len(lines)} rows but manifest n = {n}")
    y = np.empty(n, dtype=np.int64)
    for lineno, line in enumerate(lines, start=1):
        try:
            y[lineno - 1] = int(line)
        except ValueError:
            raise DatasetError(f"labels.csv: line {lineno}: malformed label {line!r}") from None
        if not 0 <= y[lineno - 1] < c:
            raise DatasetError(f"labels.csv: line {lineno}: label {y[lineno - 1]} not in [0, {c})")

    spath = d / "splits.csv"
    if spath.exists():
        lines = [ln.strip() for ln in spath.read_text().splitlines() if ln.strip()]
        if len(lines) != n:
            raise DatasetError(f"splits.csv has {len(lines)} rows but manifest n = {n}")
        bad = [i for i, v in enumerate(lines, start=1) if v not in ("train", "val", "test", "none")]
        if bad:
            raise DatasetError(f"splits.csv: line {bad[0]}: expected train|val|test|none")
        arr = np.array(lines)
        masks = (arr == "train", arr == "val", arr == "test")
    else:
        masks = random_split(n, y, ratios, split_seed)
    ds = Dataset(graph, x, y, *masks, c, str(manifest.get("name", d.name)), ratios, split_seed)
    ds.validate()
    return ds


def dataset_homophily(ds: Dataset) -> float:
    return edge_homophily(ds.graph, ds.y)
