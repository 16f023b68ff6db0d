"""Command-line driver for the simulate / fit / predict / score pipeline.

Every command takes a JSON config (``--config``); individual flags
override config keys. Outputs are CSV and JSON files under ``--out``.
Exit codes: 0 success, 1 usage or config error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import pipeline
from .data import Dataset, load_csv, save_csv
from .errors import (
    ConfigError,
    DataError,
    InvalidInputError,
    NumericalSingularityError,
    ParameterOverflowError,
    SimulationInfeasibleError,
    SphereGPError,
)
from .inference import Chain
from .pipeline import SCHEMA_VERSION, derive_rng, load_config

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

SCORE_KEYS = ("mae", "rmse", "crps", "energy", "n_test", "seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spheregp",
        description="Nonstationary spherical Gaussian-process experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="JSON experiment config")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="root seed override")
        p.add_argument("--preset", choices=sorted(pipeline.PRESETS), default=None)
        p.add_argument("--degrees", action="store_true", default=None, help="input angles are degrees")

    p_sim = sub.add_parser("simulate", help="simulate a GP field on a lat/lon grid")
    common(p_sim)

    p_fit = sub.add_parser("fit", help="MCMC fit of the assumed covariance structure")
    common(p_fit)
    p_fit.add_argument("--data", type=Path, default=None, help="field CSV (lon,lat,value)")

    p_pred = sub.add_parser("predict", help="posterior predictive summaries at test locations")
    common(p_pred)
    p_pred.add_argument("--data", type=Path, default=None)
    p_pred.add_argument("--chain", type=Path, default=None, help="chain CSV from fit")

    p_score = sub.add_parser("score", help="predict and compute MAE/RMSE/CRPS/energy")
    common(p_score)
    p_score.add_argument("--data", type=Path, default=None)
    p_score.add_argument("--chain", type=Path, default=None)

    p_exp = sub.add_parser("experiment", help="true x assumed grid over replicates")
    common(p_exp)
    p_exp.add_argument("--workers", type=int, default=1, help="parallel cell workers")
    p_exp.add_argument("--resume", action="store_true", help="skip cells with existing outputs")

    return parser


def _config_from_args(args) -> dict:
    obj = None
    if args.config is not None:
        with open(args.config) as fh:
            obj = json.load(fh)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    if getattr(args, "degrees", None):
        overrides["degrees"] = True
    if getattr(args, "data", None) is not None:
        overrides["data"] = str(args.data)
    return load_config(obj, preset=args.preset, **overrides)


def _out_dir(cfg) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_dataset(cfg) -> Dataset:
    if not cfg["data"]:
        raise ConfigError("this command needs a dataset: pass --data or set the 'data' config key")
    return load_csv(cfg["data"], degrees=bool(cfg["degrees"]))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    dataset, model = pipeline.simulate_dataset(cfg)
    save_csv(dataset, out / "field.csv")
    _write_json(
        out / "params.json",
        {
            "schema_version": SCHEMA_VERSION,
            "seed": cfg["seed"],
            "grid": cfg["grid"],
            "model": pipeline.model_to_dict(model),
        },
    )
    print(f"wrote {out / 'field.csv'} ({dataset.n} rows) and params.json")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    dataset = _load_dataset(cfg)
    train, test, train_idx, test_idx = pipeline.split_dataset(cfg, dataset)
    labels = np.where(np.isin(np.arange(dataset.n), test_idx), "test", "train")
    save_csv(dataset, out / "split.csv", split_labels=labels)
    chain = pipeline.fit_chain(cfg, train)
    chain.save_csv(out / "chain.csv")
    post_mean = chain.retained(cfg["mcmc"]["burn_in"], cfg["mcmc"]["thin"], None).mean(axis=0)
    _write_json(
        out / "fit_summary.json",
        {
            "schema_version": SCHEMA_VERSION,
            "kind": cfg["assumed_kind"],
            "n_iter": cfg["mcmc"]["n_iter"],
            "burn_in": cfg["mcmc"]["burn_in"],
            "seed": cfg["seed"],
            "n_train": train.n,
            "n_test": test.n,
            "acceptance_rate": chain.acceptance_rate,
            "posterior_mean": dict(zip(chain.param_names, map(float, post_mean))),
        },
    )
    print(f"fit {cfg['assumed_kind']}: acceptance {chain.acceptance_rate:.3f}, wrote chain.csv")
    return EXIT_OK


def _load_chain(cfg, args, out: Path) -> Chain:
    path = args.chain if getattr(args, "chain", None) else out / "chain.csv"
    if not Path(path).exists():
        raise ConfigError(f"chain file {path} not found; run fit first or pass --chain")
    return Chain.load_csv(path)


def _predict_frame(cfg, train, test, chain):
    mixtures = pipeline.predict_mixtures(cfg, train, test, chain)
    rows = []
    for (lon, lat), truth, mix in zip(test.locs, test.values, mixtures):
        rows.append((lon, lat, truth, mix.mean, mix.variance))
    return mixtures, rows


def _write_predictions(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lon", "lat", "value", "pred_mean", "pred_variance"])
        for row in rows:
            writer.writerow([f"{v:.17g}" for v in row])


def cmd_predict(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    dataset = _load_dataset(cfg)
    train, test, _, _ = pipeline.split_dataset(cfg, dataset)
    chain = _load_chain(cfg, args, out)
    _, rows = _predict_frame(cfg, train, test, chain)
    _write_predictions(out / "predictions.csv", rows)
    print(f"wrote {out / 'predictions.csv'} ({len(rows)} test locations)")
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    dataset = _load_dataset(cfg)
    train, test, _, _ = pipeline.split_dataset(cfg, dataset)
    chain = _load_chain(cfg, args, out)
    mixtures, rows = _predict_frame(cfg, train, test, chain)
    _write_predictions(out / "predictions.csv", rows)
    samples = pipeline.joint_energy_samples(cfg, train, test, chain)
    from .scoring import score_record

    record = score_record(mixtures, test.values, samples, cfg["seed"])
    _write_json(out / "scores.json", {k: record[k] for k in SCORE_KEYS})
    print("scores: " + ", ".join(f"{k}={record[k]:.4g}" for k in ("mae", "rmse", "crps", "energy")))
    return EXIT_OK


def _cell_name(true_kind, assumed_kind, scheme, rep) -> str:
    return f"true-{true_kind}_split-{scheme}_rep-{rep}_assumed-{assumed_kind}"


def _run_cell_task(payload):
    cfg, true_kind, assumed_kind, scheme, rep = payload
    try:
        return pipeline.run_cell(cfg, true_kind, assumed_kind, scheme, rep)
    except SphereGPError as exc:  # recorded, not fatal to the grid
        return {
            "schema_version": SCHEMA_VERSION,
            "true_kind": true_kind,
            "assumed_kind": assumed_kind,
            "split": scheme,
            "replicate": rep,
            "error": f"{type(exc).__name__}: {exc}",
        }


def cmd_experiment(args) -> int:
    cfg = _config_from_args(args)
    out = _out_dir(cfg)
    cells_dir = out / "cells"
    cells_dir.mkdir(exist_ok=True)
    exp = cfg["experiment"]
    tasks, pending = [], []
    for scheme in exp["split_schemes"]:
        for true_kind in exp["true_kinds"]:
            for rep in range(exp["replicates"]):
                for assumed in exp["assumed_kinds"]:
                    name = _cell_name(true_kind, assumed, scheme, rep)
                    path = cells_dir / f"{name}.json"
                    if args.resume and path.exists():
                        continue
                    tasks.append((cfg, true_kind, assumed, scheme, rep))
                    pending.append(path)

    if tasks:
        if args.workers > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                results = list(pool.map(_run_cell_task, tasks))
        else:
            results = [_run_cell_task(t) for t in tasks]
        for path, record in zip(pending, results):
            _write_json(path, record)

    records = []
    for path in sorted(cells_dir.glob("*.json")):
        records.append(json.loads(path.read_text()))
    table_rows = aggregate_table(records, exp)
    _write_table(out / "table.csv", table_rows, exp["split_schemes"])
    n_err = sum(1 for r in records if "error" in r)
    print(f"experiment complete: {len(records)} cells ({n_err} failed), table at {out / 'table.csv'}")
    return EXIT_OK


def aggregate_table(records, exp) -> list:
    """Average completed cells over replicates; Table-1-shaped rows."""
    rows = []
    for true_kind in exp["true_kinds"]:
        for assumed in exp["assumed_kinds"]:
            row = {"true_kind": true_kind, "assumed_kind": assumed}
            for scheme in exp["split_schemes"]:
                cells = [
                    r
                    for r in records
                    if "error" not in r
                    and r["true_kind"] == true_kind
                    and r["assumed_kind"] == assumed
                    and r["split"] == scheme
                ]
                for key in ("mae", "rmse", "crps", "energy"):
                    row[f"{scheme}_{key}"] = (
                        float(np.mean([c[key] for c in cells])) if cells else float("nan")
                    )
                row[f"{scheme}_replicates"] = len(cells)
            rows.append(row)
    return rows


def _write_table(path: Path, rows, schemes) -> None:
    cols = ["true_kind", "assumed_kind"]
    for scheme in schemes:
        cols += [f"{scheme}_{k}" for k in ("mae", "rmse", "crps", "energy")] + [f"{scheme}_replicates"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([row.get(c, "") for c in cols])


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "score": cmd_score,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalSingularityError, SimulationInfeasibleError, ParameterOverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
