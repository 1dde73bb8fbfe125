"""Layer family (AAGCN and its normalized variants, GCN, filter-bank GCN, MLP)
with forward evaluation and hand-written reverse-mode gradients.

Layer rules, with ``X`` the layer input and ``A`` the operative shift:

    AAGCN      sigma( sum_r h_r A^r X W )
    AAGCN_NA   same with A -> D^{-1/2} A D^{-1/2}
    AAGCN_NH   sigma( D_H^{-1/2} H D_H^{-1/2} X W ),  H = sum_r h_r A^r
    GCN        sigma( A_gcn X W ),  A_gcn = D~^{-1/2} (A + I) D~^{-1/2}
    FBGCN      sigma( sum_r A^r X W_r )   (FBGCN_NA on the normalized A)
    MLP        sigma( X W )

sigma is ReLU on hidden layers and the identity on the output layer.

For AAGCN_NH the filter degree vector ``D_H`` depends on ``h`` but is treated
as a constant in :func:`backward`: gradients are exact for the network with
``D_H`` frozen at the value the forward pass computed. Pass those degrees back
into :func:`forward` via ``frozen_degrees`` to evaluate that same network.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NumericalError, ShapeError, ValidationError
from .graph import (
    SparseGraph,
    combine,
    filter_degrees,
    gcn_operator,
    normalize_adjacency,
    scale_rows,
    shift_powers,
    spmm,
)
from .linalg import Prng, glorot_uniform

KINDS = ("AAGCN", "AAGCN_NA", "AAGCN_NH", "GCN", "FBGCN", "FBGCN_NA", "MLP")
FILTER_KINDS = ("AAGCN", "AAGCN_NA", "AAGCN_NH")
BANK_KINDS = ("FBGCN", "FBGCN_NA")

# which shift matrix each kind propagates with
OPERATOR = {
    "AAGCN": "A",
    "AAGCN_NA": "A_norm",
    "AAGCN_NH": "A",
    "GCN": "A_gcn",
    "FBGCN": "A",
    "FBGCN_NA": "A_norm",
    "MLP": "none",
}

FORMAT_NAME = "aagcn-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    in_dim: int
    out_dim: int
    r: int = 1
    eps: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown layer kind {self.kind!r}; expected one of {KINDS}")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValidationError(f"layer dims must be >= 1, got {self.in_dim}x{self.out_dim}")
        if self.uses_order and self.r < 1:
            raise ValidationError(f"filter order must be >= 1, got {self.r}")
        if self.kind == "AAGCN_NH" and not self.eps > 0:
            raise ValidationError(f"AAGCN_NH eps must be positive, got {self.eps}")

    @property
    def uses_order(self) -> bool:
        return self.kind in FILTER_KINDS or self.kind in BANK_KINDS

    @property
    def has_filter(self) -> bool:
        return self.kind in FILTER_KINDS


@dataclass
class LayerParams:
    """``h`` is None for kinds without learnable filter coefficients. ``w`` is
    ``(in, out)``, or ``(R, in, out)`` for filter banks."""

    w: np.ndarray
    h: np.ndarray | None = None

    def copy(self) -> "LayerParams":
        return LayerParams(self.w.copy(), None if self.h is None else self.h.copy())


@dataclass
class Model:
    layers: list
    seed: int | None = None

    @property
    def specs(self) -> list:
        return [spec for spec, _ in self.layers]

    @property
    def params(self) -> list:
        return [p for _, p in self.layers]

    def copy(self) -> "Model":
        return Model([(s, p.copy()) for s, p in self.layers], self.seed)

    def with_params(self, params) -> "Model":
        return Model([(s, p) for (s, _), p in zip(self.layers, params)], self.seed)

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1][0].out_dim


class GraphOperators:
    """The raw, degree-normalized and GCN operators of one graph, built once
    and reused across training steps."""

    def __init__(self, graph: SparseGraph):
        self.graph = graph

    @property
    def n(self) -> int:
        return self.graph.n

    @cached_property
    def normalized(self) -> SparseGraph:
        return normalize_adjacency(self.graph)

    @cached_property
    def gcn(self) -> SparseGraph:
        return gcn_operator(self.graph)

    def get(self, name: str) -> SparseGraph:
        if name == "A":
            return self.graph
        if name == "A_norm":
            return self.normalized
        if name == "A_gcn":
            return self.gcn
        raise ValidationError(f"no graph operator for {name!r}")


def as_operators(g) -> GraphOperators:
    return g if isinstance(g, GraphOperators) else GraphOperators(g)


@dataclass
class LayerCache:
    x: np.ndarray
    powers: list
    filtered: np.ndarray | None
    z: np.ndarray
    out: np.ndarray
    degrees: np.ndarray | None = None
    scale: np.ndarray | None = None


@dataclass
class ForwardCache:
    layers: list = field(default_factory=list)

    @property
    def nh_degrees(self) -> list:
        return [c.degrees for c in self.layers]


def build_specs(kind: str, in_dim: int, hidden, out_dim: int, r: int = 3, eps: float = 1e-6) -> list:
    """Chain ``in_dim -> hidden... -> out_dim`` with one kind throughout."""
    dims = [in_dim, *hidden, out_dim]
    return [LayerSpec(kind, a, b, r, eps) for a, b in zip(dims[:-1], dims[1:])]


def init_model(specs, prng: Prng, seed: int | None = None) -> Model:
    """Glorot-uniform weights; filter coefficients start at ``(1, 1, 0, ...)``."""
    specs = list(specs)
    if not specs:
        raise ValidationError("model needs at least one layer")
    for a, b in zip(specs[:-1], specs[1:]):
        if a.out_dim != b.in_dim:
            raise ValidationError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")
    layers = []
    for spec in specs:
        if spec.kind in BANK_KINDS:
            w = np.stack([glorot_uniform(spec.in_dim, spec.out_dim, prng) for _ in range(spec.r)])
        else:
            w = glorot_uniform(spec.in_dim, spec.out_dim, prng)
        h = None
        if spec.has_filter:
            h = np.zeros(spec.r)
            h[:2] = 1.0
        layers.append((spec, LayerParams(w, h)))
    return Model(layers, seed)


def count_parameters(spec: LayerSpec) -> int:
    weights = spec.in_dim * spec.out_dim
    if spec.kind in BANK_KINDS:
        return spec.r * weights
    if spec.has_filter:
        return spec.r + weights
    return weights


def model_parameter_count(model: Model) -> int:
    return sum(count_parameters(s) for s in model.specs)


def _check_params(spec: LayerSpec, p: LayerParams) -> None:
    wshape = (spec.r, spec.in_dim, spec.out_dim) if spec.kind in BANK_KINDS else (spec.in_dim, spec.out_dim)
    if p.w.shape != wshape:
        raise ShapeError(f"{spec.kind} weights must have shape {wshape}, got {p.w.shape}")
    if spec.has_filter:
        if p.h is None or p.h.shape != (spec.r,):
            raise ShapeError(f"{spec.kind} needs {spec.r} filter coefficients")


def forward(model: Model, g, x: np.ndarray, frozen_degrees=None):
    """Evaluate the network; returns ``(logits, cache)``.

    ``frozen_degrees`` (one entry per layer, None where unused) overrides the
    AAGCN_NH filter degrees instead of recomputing them from ``h``.
    """
    ops = as_operators(g)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != ops.n:
        raise ShapeError(f"features must have {ops.n} rows, got shape {x.shape}")
    if x.shape[1] != model.in_dim:
        raise ShapeError(f"features have {x.shape[1]} columns, model expects {model.in_dim}")
    cache = ForwardCache()
    last = len(model.layers) - 1
    for idx, (spec, p) in enumerate(model.layers):
        _check_params(spec, p)
        degrees = scale = None
        filtered = None
        powers = []
        kind = spec.kind
        if kind in ("AAGCN", "AAGCN_NA"):
            powers = shift_powers(ops.get(OPERATOR[kind]), x, spec.r)
            filtered = combine(p.h, powers)
            z = filtered @ p.w
        elif kind == "AAGCN_NH":
            if frozen_degrees is not None and frozen_degrees[idx] is not None:
                degrees = np.asarray(frozen_degrees[idx], dtype=np.float64)
            else:
                degrees = filter_degrees(ops.graph, p.h, spec.eps)
            scale = 1.0 / np.sqrt(degrees)
            powers = shift_powers(ops.graph, scale_rows(x, scale), spec.r)
            filtered = scale_rows(combine(p.h, powers), scale)
            z = filtered @ p.w
        elif kind == "GCN":
            filtered = spmm(ops.gcn, x)
            z = filtered @ p.w
        elif kind in BANK_KINDS:
            powers = shift_powers(ops.get(OPERATOR[kind]), x, spec.r)
            z = powers[0] @ p.w[0]
            for r in range(1, spec.r):
                z = z + powers[r] @ p.w[r]
        else:  # MLP
            z = x @ p.w
        if not np.all(np.isfinite(z)):
            raise NumericalError(f"non-finite pre-activation in layer {idx} ({kind})")
        out = z if idx == last else np.maximum(z, 0.0)
        cache.layers.append(LayerCache(x, powers, filtered, z, out, degrees, scale))
        x = out
    return x, cache


def backward(model: Model, g, cache: ForwardCache, dlogits: np.ndarray):
    """Gradients of a scalar loss given its gradient w.r.t. the logits.

    Returns ``(dh, dw)``: per-layer lists, ``dh[l]`` is None for layers
    without filter coefficients.
    """
    ops = as_operators(g)
    if len(cache.layers) != len(model.layers):
        raise ShapeError("cache does not match model depth")
    if dlogits.shape != cache.layers[-1].z.shape:
        raise ShapeError(f"dlogits shape {dlogits.shape} != logits shape {cache.layers[-1].z.shape}")
    nl = len(model.layers)
    dh = [None] * nl
    dw = [None] * nl
    grad = np.asarray(dlogits, dtype=np.float64)
    for idx in range(nl - 1, -1, -1):
        spec, p = model.layers[idx]
        c = cache.layers[idx]
        if idx != nl - 1:
            grad = grad * (c.z > 0.0)
        need_input = idx > 0
        dx = None
        kind = spec.kind
        if kind in ("AAGCN", "AAGCN_NA"):
            gwt = grad @ p.w.T
            dw[idx] = c.filtered.T @ grad
            dh[idx] = np.array([np.vdot(pr, gwt) for pr in c.powers])
            if need_input:
                op = ops.get(OPERATOR[kind])
                dx = combine(p.h, shift_powers(op, gwt, spec.r))
        elif kind == "AAGCN_NH":
            gwt = scale_rows(grad @ p.w.T, c.scale)
            dw[idx] = c.filtered.T @ grad
            dh[idx] = np.array([np.vdot(pr, gwt) for pr in c.powers])
            if need_input:
                dx = scale_rows(combine(p.h, shift_powers(ops.graph, gwt, spec.r)), c.scale)
        elif kind == "GCN":
            dw[idx] = c.filtered.T @ grad
            if need_input:
                dx = spmm(ops.gcn, grad @ p.w.T)
        elif kind in BANK_KINDS:
            dw[idx] = np.stack([pr.T @ grad for pr in c.powers])
            if need_input:
                op = ops.get(OPERATOR[kind])
                # Horner: sum_r A^r (G W_r^T)
                dx = grad @ p.w[-1].T
                for r in range(spec.r - 2, -1, -1):
                    dx = spmm(op, dx) + grad @ p.w[r].T
        else:  # MLP
            dw[idx] = c.x.T @ grad
            if need_input:
                dx = grad @ p.w.T
        grad = dx
    return dh, dw


def predict(logits: np.ndarray) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest class index."""
    return np.argmax(logits, axis=1)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def model_to_dict(model: Model) -> dict:
    layers = []
    for spec, p in model.layers:
        layers.append(
            {
                "kind": spec.kind,
                "operator": OPERATOR[spec.kind],
                "in_dim": spec.in_dim,
                "out_dim": spec.out_dim,
                "r": spec.r,
                "eps": spec.eps,
                "h": None if p.h is None else [float(v) for v in p.h],
                "w_shape": list(p.w.shape),
                "w": [float(v) for v in p.w.ravel()],
            }
        )
    return {"format": FORMAT_NAME, "version": FORMAT_VERSION, "seed": model.seed, "layers": layers}


def model_from_dict(doc: dict) -> Model:
    if doc.get("format") != FORMAT_NAME:
        raise ValidationError(f"not a model document (format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise ValidationError(f"unsupported model format version {doc.get('version')!r}")
    layers = []
    for i, entry in enumerate(doc["layers"]):
        spec = LayerSpec(entry["kind"], int(entry["in_dim"]), int(entry["out_dim"]), int(entry["r"]), float(entry["eps"]))
        w = np.array(entry["w"], dtype=np.float64)
        shape = tuple(entry["w_shape"])
        if w.size != int(np.prod(shape)):
            raise ValidationError(f"layer {i}: {w.size} weights do not fill shape {shape}")
        h = None if entry["h"] is None else np.array(entry["h"], dtype=np.float64)
        params = LayerParams(w.reshape(shape), h)
        _check_params(spec, params)
        layers.append((spec, params))
    return Model(layers, doc.get("seed"))


def save_model(model: Model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> Model:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
