"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line with the measured value and the
pinned tolerance (shown in the terminal summary). Criteria 6-8 train real
models on 500-node graphs and take a few minutes; they carry the ``slow``
marker so ``-m "not slow"`` gives a quick run. Criterion 10 needs
user-supplied converted datasets (see the README) and is skipped otherwise.
"""

import math
import os
import time

import numpy as np
import pytest

from aagcn.data import CsbmParams, gen_csbm, load_dataset, save_dataset
from aagcn.graph import apply_filter, edge_homophily, gcn_operator, permute
from aagcn.linalg import Prng, sym_eig
from aagcn.model import (
    KINDS,
    OPERATOR,
    GraphOperators,
    LayerSpec,
    backward,
    build_specs,
    count_parameters,
    forward,
    init_model,
)
from aagcn.spectral import band_energy_ratio, compute_spectrum, frequency_response
from aagcn.training import TrainConfig, ablation_grid, cross_entropy, run_seed
from conftest import dense_filter, random_graph
from oracles import fd_gradients, max_relative_error

# Shared experiment setup: two-layer models, 32 hidden units, three taps.
HIDDEN = [32]
R = 3
HET = CsbmParams(n=500, c=2, f=16, p_in=0.005, p_out=0.05, mu=0.8, seed=1)
HOM = CsbmParams(n=500, c=2, f=16, p_in=0.05, p_out=0.005, mu=0.8, seed=1)
EXPERIMENT = TrainConfig(lr=0.5, max_outer=200, patience=100, i_h=1, i_w=1)
ABLATION = TrainConfig(lr=0.5, max_outer=20, patience=20)
GRID = [1, 5, 10, 25, 50]


@pytest.fixture(scope="module")
def het():
    return gen_csbm(HET)


@pytest.fixture(scope="module")
def hom():
    return gen_csbm(HOM)


def mean_test_accuracy(kind, ds, seeds, cfg=EXPERIMENT):
    specs = build_specs(kind, ds.x.shape[1], HIDDEN, ds.class_count, R)
    ops = GraphOperators(ds.graph)
    return float(np.mean([run_seed(specs, ds, cfg, s, ops)["metrics"]["test"] for s in seeds]))


# --------------------------------------------------------------------------


def test_criterion_01_filter_oracle(criterion):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 41))
        g = random_graph(rng, n, float(rng.uniform(0, 0.3)), weighted=bool(rng.integers(2)))
        h = rng.normal(size=int(rng.integers(1, 6)))
        x = rng.normal(size=(n, int(rng.integers(1, 9))))
        worst = max(worst, float(np.max(np.abs(apply_filter(g, h, x) - dense_filter(g.to_dense(), h, x)))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 5.0
    criterion("1 filter oracle", ok, f"max abs err {worst:.2e} (< 1e-10), {elapsed:.2f}s (< 5s)")
    assert ok


def test_criterion_02_permutation_equivariance(criterion):
    rng = np.random.default_rng(7)
    worst = {}
    for kind in KINDS:
        worst[kind] = 0.0
        for trial in range(10):
            g = random_graph(rng, 30, float(rng.uniform(0.05, 0.3)))
            x = rng.normal(size=(30, 5))
            model = init_model(build_specs(kind, 5, [6], 3, R), Prng(trial))
            for _, p in model.layers:
                if p.h is not None:
                    p.h[:] = rng.normal(size=p.h.size) / 2
            perm = rng.permutation(30)
            xp = np.empty_like(x)
            xp[perm] = x
            out = forward(model, g, x)[0]
            outp = forward(model, permute(g, perm), xp)[0]
            worst[kind] = max(worst[kind], float(np.max(np.abs(outp[perm] - out))))
    ok = max(worst.values()) < 1e-9
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    criterion("2 permutation equivariance", ok, f"max abs err per kind (< 1e-9): {detail}")
    assert ok


def test_criterion_03_gradient_exactness(criterion):
    start = time.perf_counter()
    errs = {}
    for i, kind in enumerate(KINDS):
        rng = np.random.default_rng(100 + i)
        g = random_graph(rng, 12, 0.3)
        x = 0.25 * rng.normal(size=(12, 4))
        y = rng.integers(0, 3, 12)
        mask = np.ones(12, bool)
        model = init_model(build_specs(kind, 4, [5], 3, R), Prng(i))
        for _, p in model.layers:
            if p.h is not None:
                p.h[:] = rng.uniform(0.2, 1.0, p.h.size)
        logits, cache = forward(model, g, x)
        dh, dw = backward(model, g, cache, cross_entropy(logits, y, mask)[1])
        frozen = cache.nh_degrees if kind == "AAGCN_NH" else None
        nh, nw = fd_gradients(model, g, x, y, mask, step=1e-6, frozen_degrees=frozen)
        errs[kind] = max(max_relative_error(dh, nh), max_relative_error(dw, nw))
    elapsed = time.perf_counter() - start
    ok = max(errs.values()) < 1e-4 and elapsed < 30.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    criterion("3 gradient exactness", ok, f"max rel err (< 1e-4; N_H with frozen degrees): {detail}; {elapsed:.1f}s (< 30s)")
    assert ok


def test_criterion_04_eigensolver(criterion):
    rng = np.random.default_rng(4)
    recon = ortho = 0.0
    for _ in range(20):
        a = rng.normal(size=(50, 50))
        s = (a + a.T) / 2
        lam, v = sym_eig(s)
        recon = max(recon, float(np.linalg.norm(v @ np.diag(lam) @ v.T - s) / np.linalg.norm(s)))
        ortho = max(ortho, float(np.max(np.abs(v.T @ v - np.eye(50)))))
    ok = recon < 1e-8 and ortho < 1e-8
    criterion("4 eigensolver", ok, f"reconstruction rel err {recon:.1e} (< 1e-8), |V'V - I|max {ortho:.1e} (< 1e-8)")
    assert ok


def test_criterion_05_collapse_identities(criterion):
    rng = np.random.default_rng(5)
    g = random_graph(rng, 25, 0.2)
    x = rng.normal(size=(25, 6))

    mlp = forward(init_model(build_specs("MLP", 6, [8], 3), Prng(1)), g, x)[0]
    r1 = forward(init_model(build_specs("AAGCN", 6, [8], 3, r=1), Prng(1)), g, x)[0]
    mlp_ok = np.array_equal(mlp, r1)

    gcn_model = init_model(build_specs("GCN", 6, [8], 3), Prng(2))
    gcn = forward(gcn_model, g, x)[0]
    unit = init_model(build_specs("AAGCN", 6, [8], 3, r=2), Prng(2))
    aag_unit = forward(unit, gcn_operator(g), x)[0]
    unit_ok = np.array_equal(aag_unit, gcn)
    shift = init_model(build_specs("AAGCN", 6, [8], 3, r=2), Prng(2))
    for _, p in shift.layers:
        p.h[:] = [0.0, 1.0]
    shift_ok = np.array_equal(forward(shift, gcn_operator(g), x)[0], gcn)

    counts_ok = all(
        count_parameters(LayerSpec("AAGCN", fi, fo, r=r)) == r + fi * fo
        and count_parameters(LayerSpec("FBGCN", fi, fo, r=r)) == r * fi * fo
        for fi, fo, r in [(6, 8, 1), (16, 32, 3), (32, 2, 5), (1, 1, 4)]
    )
    ok = mlp_ok and unit_ok and counts_ok
    criterion(
        "5 collapse identities",
        ok,
        f"R=1 AAGCN == MLP bitwise: {mlp_ok}; h=(1,1) on GCN operator == GCN bitwise: {unit_ok} "
        f"(max diff {np.max(np.abs(aag_unit - gcn)):.2e}; h=(0,1) == GCN bitwise: {shift_ok}); "
        f"parameter counts exact: {counts_ok}",
    )
    assert ok


@pytest.mark.slow
def test_criterion_06_heterophily_advantage(criterion, het, hom):
    start = time.perf_counter()
    seeds = range(10)
    het_aag = mean_test_accuracy("AAGCN_NA", het, seeds)
    het_gcn = mean_test_accuracy("GCN", het, seeds)
    hom_aag = mean_test_accuracy("AAGCN_NA", hom, seeds)
    hom_gcn = mean_test_accuracy("GCN", hom, seeds)
    elapsed = time.perf_counter() - start
    gap_ok = het_aag - het_gcn >= 0.10
    mirror_ok = abs(hom_aag - hom_gcn) <= 0.05
    ok = gap_ok and mirror_ok and elapsed < 300
    criterion(
        "6 heterophily advantage",
        ok,
        f"heterophilic (h={edge_homophily(het.graph, het.y):.3f}) AAGCN_NA {het_aag:.4f} vs GCN {het_gcn:.4f}, "
        f"gap {het_aag - het_gcn:+.4f} (>= 0.10: {gap_ok}); homophilic (h={edge_homophily(hom.graph, hom.y):.3f}) "
        f"AAGCN_NA {hom_aag:.4f} vs GCN {hom_gcn:.4f} (|diff| <= 0.05: {mirror_ok}); {elapsed:.0f}s (< 300s)",
    )
    assert ok


@pytest.mark.slow
def test_criterion_07_frequency_response(criterion, het, hom):
    counts = {}
    for name, ds in (("homophilic", hom), ("heterophilic", het)):
        spec = build_specs("AAGCN_NH", ds.x.shape[1], HIDDEN, ds.class_count, R)
        spectrum = compute_spectrum(GraphOperators(ds.graph).get(OPERATOR["AAGCN_NH"]))
        ops = GraphOperators(ds.graph)
        low_wins = 0
        for seed in range(5):
            model = run_seed(spec, ds, EXPERIMENT, seed, ops)["model"]
            resp = frequency_response(model.layers[0][1].h, spectrum)
            low_wins += band_energy_ratio(resp, 0.25, "low") > band_energy_ratio(resp, 0.25, "high")
        counts[name] = low_wins
    ok = counts["homophilic"] >= 4 and 5 - counts["heterophilic"] >= 4
    criterion(
        "7 frequency response",
        ok,
        f"low-band > high-band energy (q=0.25) in {counts['homophilic']}/5 homophilic seeds (>= 4), "
        f"reversed in {5 - counts['heterophilic']}/5 heterophilic seeds (>= 4)",
    )
    assert ok


@pytest.mark.slow
def test_criterion_08_ablation_shape(criterion, het):
    specs = build_specs("AAGCN_NA", het.x.shape[1], HIDDEN, het.class_count, R)
    seeds = range(5)
    grid = ablation_grid(ABLATION, specs, het, GRID, GRID, seeds)
    corners = ablation_grid(ABLATION, specs, het, [1, 50], [1, 50], seeds)
    deterministic = corners[0, 0] == grid[0, 0] and corners[1, 1] == grid[-1, -1]
    bounded = bool(np.all(np.abs(grid) <= 1))
    ok = grid.shape == (5, 5) and deterministic and bounded and grid[-1, -1] >= grid[0, 0]
    criterion(
        "8 ablation shape",
        ok,
        f"5x5 grid, delta(50,50) {grid[-1, -1]:+.4f} >= delta(1,1) {grid[0, 0]:+.4f}; "
        f"rerun bitwise identical: {deterministic}; all cells in [-1, 1]: {bounded}",
    )
    assert ok


def test_criterion_09_exact_values(criterion, tmp_path):
    ce = max(abs(cross_entropy(np.zeros((4, c)), np.arange(4) % c, np.ones(4, bool))[0] - math.log(c)) for c in (2, 3, 5, 10))
    same = gen_csbm(CsbmParams(200, 2, 4, 0.05, 0.0, 1.0, seed=3))
    cross = gen_csbm(CsbmParams(200, 2, 4, 0.0, 0.05, 1.0, seed=3))
    extremes = (edge_homophily(same.graph, same.y), edge_homophily(cross.graph, cross.y))
    ds = gen_csbm(CsbmParams(150, 3, 5, 0.08, 0.02, 0.9, seed=9))
    save_dataset(ds, tmp_path / "d")
    back = load_dataset(tmp_path / "d")
    round_trip = (
        back.graph.structurally_equal(ds.graph)
        and back.x.tobytes() == ds.x.tobytes()
        and np.array_equal(back.y, ds.y)
        and all(np.array_equal(back.masks[k], ds.masks[k]) for k in ds.masks)
    )
    ok = ce < 1e-12 and extremes == (1.0, 0.0) and round_trip
    criterion(
        "9 exact values",
        ok,
        f"|CE(uniform) - ln C| {ce:.1e} (< 1e-12); homophily extremes {extremes} (== (1.0, 0.0)); "
        f"round trip bitwise: {round_trip}",
    )
    assert ok


TABLE_HOMOPHILY = {"TEXAS": 0.11, "CORA": 0.81}


@pytest.mark.slow
def test_criterion_10_real_datasets(criterion):
    dirs = {name: os.environ.get(f"AAGCN_{name}_DIR") for name in TABLE_HOMOPHILY}
    if not any(dirs.values()):
        criterion("10 real datasets (optional)", None, "set AAGCN_TEXAS_DIR and/or AAGCN_CORA_DIR to run")
        pytest.skip("no converted datasets supplied")
    parts = []
    ok = True
    for name, path in dirs.items():
        if not path:
            continue
        ds = load_dataset(path)
        score = edge_homophily(ds.graph, ds.y)
        good = abs(score - TABLE_HOMOPHILY[name]) <= 0.03
        ok &= good
        parts.append(f"{name.lower()} homophily {score:.3f} (target {TABLE_HOMOPHILY[name]} +- 0.03)")
        if name == "TEXAS":
            from aagcn.data import random_split

            specs = build_specs("AAGCN_NH", ds.x.shape[1], HIDDEN, ds.class_count, R)
            ops = GraphOperators(ds.graph)
            accs = []
            for split in range(10):
                masks = random_split(ds.n, ds.y, ds.ratios, Prng(split).substream("split").seed)
                accs.append(run_seed(specs, ds.with_splits(masks), EXPERIMENT, split, ops)["metrics"]["test"])
            mean = float(np.mean(accs))
            good = abs(mean - 0.857) <= 0.08
            ok &= good
            parts.append(f"texas AAGCN_NH accuracy {mean:.4f} over 10 splits (target 0.857 +- 0.08)")
    criterion("10 real datasets (optional)", ok, "; ".join(parts))
    assert ok
