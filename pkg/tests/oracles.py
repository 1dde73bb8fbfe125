"""Independent dense reference implementations used as test oracles."""

import numpy as np

from aagcn.model import forward
from aagcn.training import cross_entropy


def dense_normalize(a):
    d = a.sum(axis=1)
    s = np.zeros_like(d)
    s[d > 0] = d[d > 0] ** -0.5
    return s[:, None] * a * s[None, :]


def dense_forward(model, a, x, frozen_degrees=None):
    """Layer rules written with dense matrices and explicit matrix powers."""
    n = a.shape[0]
    ops = {"A": a, "A_norm": dense_normalize(a), "A_gcn": dense_normalize(a + np.eye(n))}
    last = len(model.layers) - 1
    for idx, (spec, p) in enumerate(model.layers):
        kind = spec.kind
        if kind == "MLP":
            z = x @ p.w
        elif kind == "GCN":
            z = ops["A_gcn"] @ x @ p.w
        elif kind in ("FBGCN", "FBGCN_NA"):
            op = ops["A" if kind == "FBGCN" else "A_norm"]
            z = sum(np.linalg.matrix_power(op, r) @ x @ p.w[r] for r in range(spec.r))
        else:
            op = ops["A_norm" if kind == "AAGCN_NA" else "A"]
            hm = sum(c * np.linalg.matrix_power(op, r) for r, c in enumerate(p.h))
            if kind == "AAGCN_NH":
                if frozen_degrees is not None and frozen_degrees[idx] is not None:
                    d = frozen_degrees[idx]
                else:
                    d = np.abs(hm @ np.ones(n)) + spec.eps
                hm = np.diag(d**-0.5) @ hm @ np.diag(d**-0.5)
            z = hm @ x @ p.w
        x = z if idx == last else np.maximum(z, 0.0)
    return x


def loss_at(model, g, x, y, mask, frozen_degrees=None):
    logits, _ = forward(model, g, x, frozen_degrees=frozen_degrees)
    return cross_entropy(logits, y, mask)[0]


def fd_gradients(model, g, x, y, mask, step=1e-6, frozen_degrees=None):
    """Central finite differences over every coordinate of every h and W."""
    dh, dw = [], []
    for li, (_, p) in enumerate(model.layers):
        grads = []
        for arr in ([p.h] if p.h is not None else []) + [p.w]:
            g_arr = np.zeros_like(arr)
            flat = arr.reshape(-1)
            out = g_arr.reshape(-1)
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + step
                up = loss_at(model, g, x, y, mask, frozen_degrees)
                flat[k] = orig - step
                down = loss_at(model, g, x, y, mask, frozen_degrees)
                flat[k] = orig
                out[k] = (up - down) / (2 * step)
            grads.append(g_arr)
        dh.append(grads[0] if p.h is not None else None)
        dw.append(grads[-1])
    return dh, dw


def max_relative_error(analytic, numeric, floor=1e-5):
    """max |a - n| / max(|a|, |n|, floor) over all entries."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        if a is None:
            continue
        den = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / den)))
    return worst
