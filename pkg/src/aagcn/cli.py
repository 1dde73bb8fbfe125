"""Command-line entry point: ``aagcn <subcommand> ...``.

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
divergence, 1 anything unexpected.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import backend_name
from .config import load_config
from .data import DEFAULT_RATIOS, CsbmParams, dataset_homophily, gen_csbm, load_dataset, save_dataset
from .errors import AAGCNError, NumericalError, ResourceError, ShapeError, ValidationError
from .model import OPERATOR, GraphOperators, load_model, save_model
from .spectral import DEFAULT_MAX_NODES, compute_spectrum, export_response, frequency_response
from .training import ablation_grid, evaluate, run_seed, write_ablation_csv, map_jobs

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3

DEFAULT_GRID = [1, 5, 10, 25, 50]


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_gen_data(args) -> int:
    params = CsbmParams(args.n, args.c, args.f, args.p_in, args.p_out, args.mu, args.seed, tuple(args.ratios))
    ds = gen_csbm(params)
    save_dataset(ds, args.out)
    try:
        score = f"{dataset_homophily(ds):.4f}"
    except ValidationError:
        score = "undefined (no edges)"
    print(f"wrote {ds.name} to {args.out}: n={ds.n} edges={ds.graph.nnz // 2}")
    print(f"edge_homophily {score}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    ds = cfg.load_data()
    specs = cfg.specs(ds.x.shape[1], ds.class_count)
    ops = GraphOperators(ds.graph)

    def one(seed):
        return run_seed(specs, cfg.data_for_seed(ds, seed), cfg.train, seed, ops)

    results = sorted(map_jobs(one, cfg.seeds, args.jobs), key=lambda r: r["seed"])
    for res in results:
        seed = res["seed"]
        save_model(res["model"], out / f"model_seed{seed}.json")
        _write_json(
            out / f"metrics_seed{seed}.json",
            {
                "config": cfg.raw,
                "seed": seed,
                "history": res["history"].to_dict(),
                "final": res["metrics"],
                "test_accuracy": res["metrics"]["test"],
                "wall_time": res["wall_time"],
            },
        )
    accs = np.array([r["metrics"]["test"] for r in results])
    summary = {
        "model": cfg.model_kind,
        "dataset": ds.name,
        "seeds": [r["seed"] for r in results],
        "n_runs": len(results),
        "test_accuracy": {"mean": float(accs.mean()), "std": float(accs.std()), "values": accs.tolist()},
    }
    _write_json(out / "summary.json", summary)
    print(f"{cfg.model_kind} on {ds.name}: test accuracy {accs.mean():.4f} ± {accs.std():.4f} over {len(accs)} seeds")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.data)
    if args.row_normalize_features:
        ds = ds.row_normalized()
    metrics = evaluate(model, GraphOperators(ds.graph), ds)
    print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK


def cmd_freq(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.data)
    layers = [(i, spec, p) for i, (spec, p) in enumerate(model.layers) if spec.has_filter]
    if not layers:
        kinds = sorted({s.kind for s in model.specs})
        raise ValidationError(
            f"model layers {kinds} have no learned filter coefficients: their graph filter is fixed or absent"
        )
    ops = GraphOperators(ds.graph)
    spectra = {}
    responses = []
    for idx, spec, p in layers:
        op = OPERATOR[spec.kind]
        if op not in spectra:
            spectra[op] = compute_spectrum(ops.get(op), args.max_nodes)
        responses.append((f"layer{idx}_{spec.kind}", frequency_response(p.h, spectra[op])))
        if spec.kind == "AAGCN_NH":
            print(f"layer{idx}: AAGCN_NH response uses the unnormalized coefficients on A", file=sys.stderr)
    export_response(responses, args.out)
    print(f"wrote {len(responses)} response column(s) over {ds.n} frequencies to {args.out}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    ds = cfg.load_data()
    specs = cfg.specs(ds.x.shape[1], ds.class_count)
    seeds = args.seeds if args.seeds else cfg.seeds
    grid = ablation_grid(cfg.train, specs, ds, args.ih, args.iw, seeds, args.jobs)
    write_ablation_csv(args.out, args.ih, args.iw, grid)
    print(f"wrote {len(args.ih)}x{len(args.iw)} ablation grid to {args.out}")
    return EXIT_OK


def cmd_homophily(args) -> int:
    ds = load_dataset(args.data)
    print(f"{dataset_homophily(ds):.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="aagcn", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({backend_name()} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a contextual SBM dataset", formatter_class=fmt)
    p.add_argument("--n", type=int, default=500, help="number of nodes")
    p.add_argument("--c", type=int, default=2, help="number of classes")
    p.add_argument("--f", type=int, default=16, help="feature dimension (>= c)")
    p.add_argument("--p-in", type=float, default=0.05, help="within-class edge probability")
    p.add_argument("--p-out", type=float, default=0.005, help="cross-class edge probability")
    p.add_argument("--mu", type=float, default=1.0, help="class-mean feature strength")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--ratios", type=float, nargs=3, default=list(DEFAULT_RATIOS), metavar=("TR", "VA", "TE"),
                   help="stratified split ratios")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one model per configured seed", formatter_class=fmt)
    p.add_argument("config", help="JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (overrides config 'output')")
    p.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--row-normalize-features", action="store_true", default=False,
                   help="scale feature rows to unit L1 norm before evaluation")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("freq", help="export per-layer filter frequency responses", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--data", required=True, help="dataset directory providing the graph")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES, help="dense eigensolver node cap")
    p.set_defaults(func=cmd_freq)

    p = sub.add_parser("ablate", help="alternating-minus-joint accuracy grid over (I_H, I_W)", formatter_class=fmt)
    p.add_argument("config", help="JSON run configuration (train.mode is ignored)")
    p.add_argument("--ih", type=int, nargs="+", default=DEFAULT_GRID, help="I_H values (rows)")
    p.add_argument("--iw", type=int, nargs="+", default=DEFAULT_GRID, help="I_W values (columns)")
    p.add_argument("--seeds", type=int, nargs="+", default=None, help="seeds (default: config seeds)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("homophily", help="print the edge homophily of a dataset", formatter_class=fmt)
    p.add_argument("data", help="dataset directory")
    p.set_defaults(func=cmd_homophily)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValidationError, ShapeError, ResourceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AAGCNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except Exception as exc:  # noqa: BLE001
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
