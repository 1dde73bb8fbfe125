"""Objective, alternating-minimization trainer, evaluation and the
alternating-vs-joint ablation grid.

Training is full-batch gradient descent with a fixed step size. In
``alternating`` mode each outer epoch takes ``i_h`` steps on the filter
coefficients with the weights frozen, then ``i_w`` steps on the weights with
the coefficients frozen. ``joint`` mode takes ``i_h + i_w`` steps on all
parameters at once, so both modes spend the same number of gradient
evaluations per epoch.
"""

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import Dataset
from .errors import DivergenceError, NumericalError, ValidationError
from .linalg import Prng
from .model import GraphOperators, LayerParams, Model, backward, forward, init_model, predict

MODES = ("alternating", "joint")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.5
    max_outer: int = 1000
    i_h: int = 1
    i_w: int = 1
    patience: int = 100
    l2: float = 0.0
    seed: int = 0
    mode: str = "alternating"
    restore_best: bool = True

    def __post_init__(self):
        if not self.lr >= 0:
            raise ValidationError(f"lr must be >= 0, got {self.lr}")
        if self.i_h < 0 or self.i_w < 0 or self.i_h + self.i_w < 1:
            raise ValidationError(f"need i_h, i_w >= 0 with i_h + i_w >= 1, got {self.i_h}, {self.i_w}")
        if self.max_outer < 1:
            raise ValidationError(f"max_outer must be >= 1, got {self.max_outer}")
        if self.patience < 1:
            raise ValidationError(f"patience must be >= 1, got {self.patience}")
        if self.l2 < 0:
            raise ValidationError(f"l2 must be >= 0, got {self.l2}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)
    test_acc: list = field(default_factory=list)
    best_epoch: int = 0
    steps: int = 0

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def to_dict(self) -> dict:
        return asdict(self)


def cross_entropy(logits: np.ndarray, labels, mask):
    """Mean softmax cross-entropy over masked rows and its logit gradient."""
    labels = np.asarray(labels)
    mask = np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise ValidationError("cross_entropy needs a nonempty mask")
    z = logits[idx]
    z = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    y = labels[idx]
    loss = float(np.mean(logsum - z[np.arange(idx.size), y]))
    probs = np.exp(z - logsum[:, None])
    probs[np.arange(idx.size), y] -= 1.0
    dlogits = np.zeros_like(logits, dtype=np.float64)
    dlogits[idx] = probs / idx.size
    return loss, dlogits


def accuracy(preds, labels, mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    total = int(mask.sum())
    if total == 0:
        raise ValidationError("accuracy needs a nonempty mask")
    return int(np.count_nonzero(np.asarray(preds)[mask] == np.asarray(labels)[mask])) / total


def l2_penalty(model: Model, l2: float) -> float:
    if l2 == 0.0:
        return 0.0
    return 0.5 * l2 * sum(float(np.sum(p.w * p.w)) for p in model.params)


def evaluate(model: Model, g, data: Dataset) -> dict:
    logits, _ = forward(model, g, data.x)
    loss, _ = cross_entropy(logits, data.y, data.train_mask)
    preds = predict(logits)
    return {
        "loss": loss,
        "train": accuracy(preds, data.y, data.train_mask),
        "val": accuracy(preds, data.y, data.val_mask),
        "test": accuracy(preds, data.y, data.test_mask),
    }


def gradient_step(model: Model, ops, data: Dataset, cfg: TrainConfig, update_h: bool, update_w: bool):
    """One full-batch descent step. Returns ``(new_model, loss_before)``."""
    logits, cache = forward(model, ops, data.x)
    loss, dlogits = cross_entropy(logits, data.y, data.train_mask)
    loss += l2_penalty(model, cfg.l2)
    if not np.isfinite(loss):
        raise NumericalError("non-finite training loss")
    dh, dw = backward(model, ops, cache, dlogits)
    params = []
    for p, gh, gw in zip(model.params, dh, dw):
        h = p.h
        w = p.w
        if update_h and h is not None:
            h = h - cfg.lr * gh
        if update_w:
            if cfg.l2:
                gw = gw + cfg.l2 * w
            w = w - cfg.lr * gw
        params.append(LayerParams(w, h))
    return model.with_params(params), loss


def _schedule(cfg: TrainConfig) -> list:
    if cfg.mode == "alternating":
        return [("h", True, False)] * cfg.i_h + [("w", False, True)] * cfg.i_w
    return [("joint", True, True)] * (cfg.i_h + cfg.i_w)


def train(model: Model, g, data: Dataset, cfg: TrainConfig, on_step=None):
    """Run the outer loop until ``max_outer`` epochs or ``patience`` epochs
    without a validation-accuracy improvement.

    Returns ``(model, history)``; the model is the best-validation checkpoint
    unless ``cfg.restore_best`` is false. ``on_step(phase, before, after)``
    is called after every gradient step.
    """
    ops = g if isinstance(g, GraphOperators) else GraphOperators(g)
    if data.x.shape[1] != model.in_dim:
        raise ValidationError(f"features have {data.x.shape[1]} columns, model expects {model.in_dim}")
    schedule = _schedule(cfg)
    hist = TrainHistory()
    best_model = model
    best_val = -1.0
    stale = 0
    for epoch in range(1, cfg.max_outer + 1):
        try:
            for phase, upd_h, upd_w in schedule:
                new_model, _ = gradient_step(model, ops, data, cfg, upd_h, upd_w)
                if on_step is not None:
                    on_step(phase, model, new_model)
                model = new_model
                hist.steps += 1
            metrics = evaluate(model, ops, data)
        except NumericalError as exc:
            raise DivergenceError(f"training diverged in epoch {epoch}: {exc}", epoch) from None
        loss = metrics["loss"] + l2_penalty(model, cfg.l2)
        if not np.isfinite(loss):
            raise DivergenceError(f"training diverged in epoch {epoch}: non-finite loss", epoch)
        hist.train_loss.append(loss)
        hist.train_acc.append(metrics["train"])
        hist.val_acc.append(metrics["val"])
        hist.test_acc.append(metrics["test"])
        if metrics["val"] > best_val:
            best_val = metrics["val"]
            best_model = model
            hist.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return (best_model if cfg.restore_best else model), hist


def run_seed(specs, data: Dataset, cfg: TrainConfig, seed: int, ops=None) -> dict:
    """Initialize from ``seed``'s ``init`` sub-stream, train, evaluate."""
    ops = ops if ops is not None else GraphOperators(data.graph)
    model = init_model(specs, Prng(seed).substream("init"), seed=seed)
    started = time.perf_counter()
    trained, hist = train(model, ops, data, cfg)
    metrics = evaluate(trained, ops, data)
    return {
        "seed": seed,
        "model": trained,
        "history": hist,
        "metrics": metrics,
        "wall_time": time.perf_counter() - started,
    }


def map_jobs(fn, items, jobs: int):
    """Ordered map, on a thread pool when ``jobs > 1``."""
    if jobs <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def ablation_grid(cfg_base: TrainConfig, specs, data: Dataset, ih_values, iw_values, seeds, jobs: int = 1):
    """Mean over seeds of (alternating - joint) test accuracy per
    ``(i_h, i_w)`` cell. Rows follow ``ih_values``, columns ``iw_values``."""
    ih_values = [int(v) for v in ih_values]
    iw_values = [int(v) for v in iw_values]
    seeds = [int(s) for s in seeds]
    if not ih_values or not iw_values or not seeds:
        raise ValidationError("ablation grid needs at least one I_H, one I_W and one seed")
    ops = GraphOperators(data.graph)
    tasks = [(a, b, s, mode) for a in ih_values for b in iw_values for s in seeds for mode in MODES]

    def run(task):
        a, b, s, mode = task
        cfg = TrainConfig(**{**asdict(cfg_base), "i_h": a, "i_w": b, "mode": mode, "seed": s})
        return run_seed(specs, data, cfg, s, ops)["metrics"]["test"]

    results = dict(zip(tasks, map_jobs(run, tasks, jobs)))
    grid = np.zeros((len(ih_values), len(iw_values)))
    for i, a in enumerate(ih_values):
        for j, b in enumerate(iw_values):
            deltas = [results[(a, b, s, "alternating")] - results[(a, b, s, "joint")] for s in seeds]
            grid[i, j] = float(np.mean(deltas))
    return grid


def write_ablation_csv(path, ih_values, iw_values, grid: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["I_H\\I_W"] + [str(v) for v in iw_values])
        for a, row in zip(ih_values, grid):
            out.writerow([str(a)] + [f"{v:.4f}" for v in row])
