"""JSON run configuration with schema validation.

Unknown keys are rejected at every level. Example::

    {
      "dataset": {"csbm": {"n": 500, "c": 2, "f": 16, "p_in": 0.005,
                           "p_out": 0.05, "mu": 0.8, "seed": 1}},
      "model": {"kind": "AAGCN_NA", "hidden": [32], "r": 3},
      "train": {"lr": 0.5, "max_outer": 200, "i_h": 1, "i_w": 1, "patience": 100},
      "seeds": [0, 1, 2],
      "output": "runs/het"
    }
"""

import json
from dataclasses import dataclass, field

import jsonschema

from .data import CsbmParams, Dataset, gen_csbm, load_dataset, random_split
from .errors import ValidationError
from .linalg import Prng
from .model import KINDS, build_specs
from .training import MODES, TrainConfig

_CSBM = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "c", "f", "p_in", "p_out", "mu"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "c": {"type": "integer", "minimum": 1},
        "f": {"type": "integer", "minimum": 1},
        "p_in": {"type": "number", "minimum": 0, "maximum": 1},
        "p_out": {"type": "number", "minimum": 0, "maximum": 1},
        "mu": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "ratios": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 3, "maxItems": 3},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dataset", "model"],
    "properties": {
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": "string"}, "csbm": _CSBM},
            "minProperties": 1,
            "maxProperties": 1,
        },
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(KINDS)},
                "hidden": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "r": {"type": "integer", "minimum": 1},
                "eps": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lr": {"type": "number", "minimum": 0},
                "max_outer": {"type": "integer", "minimum": 1},
                "i_h": {"type": "integer", "minimum": 0},
                "i_w": {"type": "integer", "minimum": 0},
                "patience": {"type": "integer", "minimum": 1},
                "l2": {"type": "number", "minimum": 0},
                "mode": {"enum": list(MODES)},
                "restore_best": {"type": "boolean"},
            },
        },
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "split_per_seed": {"type": "boolean"},
        "row_normalize_features": {"type": "boolean"},
        "output": {"type": "string"},
    },
}

DEFAULT_HIDDEN = [32]
DEFAULT_R = 3


class ConfigError(ValidationError):
    pass


@dataclass
class RunConfig:
    model_kind: str
    hidden: list
    r: int
    eps: float
    train: TrainConfig
    seeds: list
    output: str
    dataset_path: str | None = None
    csbm: CsbmParams | None = None
    split_per_seed: bool = False
    row_normalize_features: bool = False
    raw: dict = field(default_factory=dict)

    def load_data(self) -> Dataset:
        ds = load_dataset(self.dataset_path) if self.dataset_path is not None else gen_csbm(self.csbm)
        return ds.row_normalized() if self.row_normalize_features else ds

    def data_for_seed(self, ds: Dataset, seed: int) -> Dataset:
        if not self.split_per_seed:
            return ds
        return ds.with_splits(random_split(ds.n, ds.y, ds.ratios, Prng(seed).substream("split").seed))

    def specs(self, in_dim: int, n_classes: int) -> list:
        return build_specs(self.model_kind, in_dim, self.hidden, n_classes, self.r, self.eps)


def parse_config(doc: dict) -> RunConfig:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None
    model = doc["model"]
    try:
        train = TrainConfig(**doc.get("train", {}))
    except ValidationError as exc:
        raise ConfigError(f"config error at train: {exc}") from None
    ds = doc["dataset"]
    csbm = None
    if "csbm" in ds:
        params = dict(ds["csbm"])
        if "ratios" in params:
            params["ratios"] = tuple(params["ratios"])
        csbm = CsbmParams(**params)
        try:
            csbm.validate()
        except ValidationError as exc:
            raise ConfigError(f"config error at dataset/csbm: {exc}") from None
    return RunConfig(
        model_kind=model["kind"],
        hidden=list(model.get("hidden", DEFAULT_HIDDEN)),
        r=int(model.get("r", DEFAULT_R)),
        eps=float(model.get("eps", 1e-6)),
        train=train,
        seeds=list(doc.get("seeds", [train.seed])),
        output=doc.get("output", "runs"),
        dataset_path=ds.get("path"),
        csbm=csbm,
        split_per_seed=bool(doc.get("split_per_seed", False)),
        row_normalize_features=bool(doc.get("row_normalize_features", False)),
        raw=doc,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc)
