"""Command-line entry points.

Subcommands: synth, train, evaluate, predict, ablate, baseline, serve.
Every command prints JSON on success and exits 2 on invalid usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .augment import augment_dataset
from .baselines import (
    baseline_predictor,
    clip_negative,
    fit_kriging_pca,
    fit_lasso_poly,
    fit_linear,
    fit_svr_per_location,
    global_mean_depth,
    predict_linear,
    select_lambda_cv,
)
from .baselines.persist import load_baseline, save_baseline
from .config import cutout_config, load_config, model_config, split_spec, train_config
from .data import Dataset, SynthOracleParams, generate_synthetic_dataset, load_dataset, split_dataset
from .gridcodec import build_index_map, encode_inundation, encode_susceptibility, extract_depths, write_grid
from .metrics import compute_metrics
from .model import build_ablation, build_caspian, load_checkpoint, save_checkpoint
from .scenario import ScenarioError, parse_scenario
from .train import train as run_training

BASELINE_METHODS = ("naive", "linear", "lasso", "svr", "kriging")


def _split_vectors(dataset: Dataset, spec):
    train, val, test = split_dataset(dataset.pairs, spec)
    return train, val, test


def cmd_synth(args) -> int:
    params = SynthOracleParams(
        base_min=args.base_min, base_max=args.base_max,
        alpha=args.alpha, beta=args.beta, seed=args.seed,
    )
    manifest = generate_synthetic_dataset(
        d_x=args.d_x, n_locations=args.locations, H=args.height, W=args.width,
        n_scenarios=args.scenarios, params=params, out_dir=args.out,
    )
    print(manifest.to_json())
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    dataset = load_dataset(args.data)
    mcfg = model_config(cfg)
    tcfg = train_config(cfg, seed_override=args.seed)
    cut, apply_to_val = cutout_config(cfg)
    spec = split_spec(cfg)
    train_vec, val_vec, _ = _split_vectors(dataset, spec)
    index_map = build_index_map(dataset.locations, mcfg.H, mcfg.W)

    def encode(pairs):
        return [
            (encode_susceptibility(s, dataset.locations, index_map), encode_inundation(d, index_map))
            for s, d in pairs
        ]

    train_pairs = augment_dataset(encode(train_vec), cut) if cut.m > 0 else encode(train_vec)
    val_pairs = encode(val_vec)
    if cut.m > 0 and apply_to_val:
        val_pairs = augment_dataset(val_pairs, cut)
    model = build_caspian(mcfg, seed=tcfg.seed)
    model, history = run_training(model, train_pairs, val_pairs, tcfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, out / "checkpoint")
    (out / "history.json").write_text(json.dumps(history.to_dict(), indent=2))
    val_preds = [extract_depths_from_model(model, s, dataset, index_map) for s, _ in val_vec]
    report = compute_metrics(val_preds, [d for _, d in val_vec])
    (out / "metrics_val.json").write_text(json.dumps(report.to_dict(), indent=2))
    print(json.dumps({"checkpoint": str(out / "checkpoint"), "best_val_loss": history.best_val_loss,
                      "epochs_run": len(history.epochs)}, indent=2))
    return 0


def extract_depths_from_model(model, scenario, dataset: Dataset, index_map) -> np.ndarray:
    smap = encode_susceptibility(scenario, dataset.locations, index_map)
    grid = model.predict_grid(smap.grid)
    mask = np.zeros_like(grid, dtype=bool)
    mask[index_map.rows, index_map.cols] = True
    from .gridcodec import InundationMap

    return extract_depths(InundationMap(grid=grid, mask=mask), index_map)


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    dataset = load_dataset(args.data)
    spec = split_spec(cfg)
    splits = dict(zip(("train", "val", "test"), _split_vectors(dataset, spec)))
    chosen = dataset.pairs if args.split == "all" else splits[args.split]
    model = load_checkpoint(args.model)
    index_map = build_index_map(dataset.locations, model.config.H, model.config.W)
    preds = [extract_depths_from_model(model, s, dataset, index_map) for s, _ in chosen]
    report = compute_metrics(preds, [d for _, d in chosen])
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_predict(args) -> int:
    dataset = load_dataset(args.data)
    model = load_checkpoint(args.model)
    try:
        scenario = parse_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if scenario.d_x != dataset.manifest.d_x:
        print(f"error: scenario has {scenario.d_x} bits, dataset expects {dataset.manifest.d_x}", file=sys.stderr)
        return 2
    index_map = build_index_map(dataset.locations, model.config.H, model.config.W)
    smap = encode_susceptibility(scenario, dataset.locations, index_map)
    grid = model.predict_grid(smap.grid)
    depths = grid[index_map.rows, index_map.cols]
    if args.grid_out:
        Path(args.grid_out).write_bytes(write_grid(grid, index_map.d_y))
    print(json.dumps({"scenario": args.scenario, "depths": depths.tolist()}))
    return 0


def cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    mcfg = model_config(cfg)
    model = build_ablation(mcfg, args.variant)
    print(json.dumps({"variant": model.config.variant, "parameter_count": model.count_params()}))
    return 0


def cmd_baseline_fit(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    dataset = load_dataset(args.data)
    spec = split_spec(cfg) if "split" in cfg else None
    if spec is not None:
        train_vec, _, test_vec = _split_vectors(dataset, spec)
    else:
        train_vec, test_vec = dataset.pairs, []
    X = np.array([s.as_array() for s, _ in train_vec])
    Y = np.array([d for _, d in train_vec], dtype=np.float64)

    result = {"method": args.method, "n_train": len(train_vec)}
    mean = None
    model = None
    if args.method == "naive":
        mean = global_mean_depth([d for _, d in train_vec])
        predict = lambda s, x: baseline_predictor(s, dataset.locations, mean)
        result["global_mean"] = mean
    elif args.method == "linear":
        model = fit_linear(X, Y)
        predict = lambda s, x: clip_negative(predict_linear(model, x))
    elif args.method == "lasso":
        lam = cfg.get("baseline", {}).get("lasso_lambda")
        if lam is None:
            lam = select_lambda_cv(X, Y, seed=0)
        model = fit_lasso_poly(X, Y, float(lam))
        predict = lambda s, x: clip_negative(model.predict(x))
        result["lambda"] = float(lam)
    elif args.method == "svr":
        model = fit_svr_per_location(X, Y)
        predict = lambda s, x: clip_negative(model.predict(x))
    else:  # kriging
        model = fit_kriging_pca(X, Y)
        predict = lambda s, x: clip_negative(model.predict(x))

    if args.out:
        save_baseline(args.out, args.method, model=model, global_mean=mean)
        result["artifact"] = str(args.out)
    if test_vec:
        preds = [np.asarray(predict(s, s.as_array())).reshape(-1) for s, _ in test_vec]
        report = compute_metrics(preds, [d for _, d in test_vec])
        result["test_metrics"] = report.to_dict()
    print(json.dumps(result, indent=2))
    return 0


def cmd_baseline_predict(args) -> int:
    dataset = load_dataset(args.data)
    try:
        scenario = parse_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if scenario.d_x != dataset.manifest.d_x:
        print(f"error: scenario has {scenario.d_x} bits, dataset expects {dataset.manifest.d_x}", file=sys.stderr)
        return 2
    loaded = load_baseline(args.model)
    if loaded.method == "naive":
        depths = baseline_predictor(scenario, dataset.locations, loaded.global_mean)
    else:
        depths = clip_negative(loaded.predict(scenario.as_array())).reshape(-1)
    print(json.dumps({"method": loaded.method, "scenario": args.scenario, "depths": depths.tolist()}))
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    port = int(os.environ.get("PORT", args.port))
    serve(args.model, args.data, port=port, host=args.host)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caspian", description="Coastal flood inundation surrogate toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset directory")
    p.add_argument("--d-x", type=int, dest="d_x", default=6)
    p.add_argument("--locations", type=int, default=400)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--width", type=int, default=128)
    p.add_argument("--scenarios", type=int, default=64)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.3)
    p.add_argument("--base-min", type=float, default=0.0)
    p.add_argument("--base-max", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the surrogate CNN")
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a data split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict depths for one scenario")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--grid-out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ablate", help="build an ablation variant and report its size")
    p.add_argument("--variant", choices=("full", "b", "gamma", "z", "omega"), required=True)
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("baseline", help="fit or apply a baseline regressor")
    baseline_sub = p.add_subparsers(dest="baseline_command", required=True)
    pf = baseline_sub.add_parser("fit", help="fit on the train split and persist the artifact")
    pf.add_argument("--method", choices=BASELINE_METHODS, required=True)
    pf.add_argument("--data", required=True)
    pf.add_argument("--config", default=None)
    pf.add_argument("--out", default=None, help="artifact directory (JSON manifest + float32 blobs)")
    pf.set_defaults(func=cmd_baseline_fit)
    pp = baseline_sub.add_parser("predict", help="predict depths from a saved artifact")
    pp.add_argument("--model", required=True)
    pp.add_argument("--data", required=True)
    pp.add_argument("--scenario", required=True)
    pp.set_defaults(func=cmd_baseline_predict)

    p = sub.add_parser("serve", help="run the HTTP inference service")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
