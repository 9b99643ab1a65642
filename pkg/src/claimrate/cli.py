"""Command-line front end.

Batch commands over policy CSV files: generate synthetic books, fit and
persist encoding statistics, evaluate and optimize the kernel exponent, rank
and select features, predict, calibrate, and explain single predictions.
Report commands write CSV artifacts plus rendered figures into the output
directory; identical inputs and seed always reproduce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .dataset import (CleaningRules, DEFAULT_MAX_DRIVER_AGE, DEFAULT_MIN_EXPOSURE_YEARS,
                      Portfolio, RowError, SchemaError, clean, load_portfolio,
                      parse_schema_file, write_schema_file)
from .encoder import encode_portfolio, fit_target_stats, read_target_stats, write_target_stats
from .evaluation import (DEFAULT_FOLDS, DegenerateTestSetError, apply_calibration,
                         calibrate, evaluate_kappa_curve)
from .explain import explain
from .features import DEFAULT_IMPORTANCE_KAPPA, feature_importance, greedy_select
from .predictor import KernelModel, predict_batch
from .synth import SynthConfig, SynthFeature, generate, noise_feature
from . import reports


@dataclass
class RunConfig:
    """Resolved options shared by the portfolio-consuming commands."""

    input_path: str
    schema_path: str
    out_dir: str
    features: tuple[str, ...] | None = None
    folds: int = DEFAULT_FOLDS
    seed: int = 0
    kappa: float = DEFAULT_IMPORTANCE_KAPPA
    grid: np.ndarray | None = None
    threads: int = 1
    min_exposure: float = DEFAULT_MIN_EXPOSURE_YEARS
    max_age: float = DEFAULT_MAX_DRIVER_AGE

    def cleaning_rules(self) -> CleaningRules:
        return CleaningRules(max_driver_age=self.max_age,
                             min_exposure_years=self.min_exposure)


def parse_kappa_grid(text: str) -> np.ndarray:
    """Parse 'lo:hi:step' into an ascending kappa grid (hi inclusive)."""
    match = re.fullmatch(r"([^:]+):([^:]+):([^:]+)", text.strip())
    if not match:
        raise ValueError(f"kappa grid must look like lo:hi:step, got {text!r}")
    lo, hi, step = (float(g) for g in match.groups())
    if step <= 0 or hi < lo or lo < 0:
        raise ValueError(f"invalid kappa grid bounds {text!r}")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _require_file(path: str) -> None:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"input file not found: {path}")


def _load_clean(cfg: RunConfig):
    """Load, clean, and return (portfolio, rejections) for a training input."""
    _require_file(cfg.input_path)
    _require_file(cfg.schema_path)
    schema = parse_schema_file(cfg.schema_path)
    portfolio = load_portfolio(cfg.input_path, schema)
    return clean(portfolio, cfg.cleaning_rules())


def _resolve_features(cfg: RunConfig, portfolio: Portfolio) -> tuple[str, ...]:
    if cfg.features is None:
        return portfolio.schema.feature_names
    for name in cfg.features:
        portfolio.schema.feature(name)
    return cfg.features


def _outpath(cfg_or_dir, name: str) -> str:
    out_dir = cfg_or_dir.out_dir if isinstance(cfg_or_dir, RunConfig) else cfg_or_dir
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _config_from_args(args) -> RunConfig:
    raw_features = getattr(args, "features", None)
    features = tuple(s.strip() for s in raw_features.split(",") if s.strip()) if raw_features else None
    return RunConfig(
        input_path=args.input,
        schema_path=args.schema,
        out_dir=args.out,
        features=features or None,
        folds=getattr(args, "folds", DEFAULT_FOLDS),
        seed=getattr(args, "seed", 0),
        kappa=getattr(args, "kappa", DEFAULT_IMPORTANCE_KAPPA),
        grid=parse_kappa_grid(args.kappa_grid) if getattr(args, "kappa_grid", None) else None,
        threads=getattr(args, "threads", 1),
        min_exposure=getattr(args, "min_exposure", DEFAULT_MIN_EXPOSURE_YEARS),
        max_age=getattr(args, "max_age", DEFAULT_MAX_DRIVER_AGE),
    )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _synth_features_from_json(entries) -> tuple[SynthFeature, ...]:
    features = []
    for entry in entries:
        name = entry["name"]
        kind = entry.get("kind", "categorical")
        numeric_range = tuple(entry.get("numeric_range", (0.0, 1.0)))
        if "factors" in entry:
            features.append(SynthFeature(name=name, factors=tuple(float(x) for x in entry["factors"]),
                                         kind=kind, numeric_range=numeric_range))
        else:
            features.append(noise_feature(name, int(entry["categories"]), kind=kind,
                                          numeric_range=numeric_range))
    return tuple(features)


def cmd_synth(args) -> int:
    overrides = {}
    if args.synth_config:
        _require_file(args.synth_config)
        with open(args.synth_config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if "features" in raw:
            raw["features"] = _synth_features_from_json(raw["features"])
        if "exposure_range" in raw:
            raw["exposure_range"] = tuple(raw["exposure_range"])
        overrides.update(raw)
    if args.n is not None:
        overrides["n"] = args.n
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = SynthConfig(**overrides)
    portfolio, expected = generate(cfg)

    reports.write_portfolio(_outpath(args.out, "portfolio.csv"), portfolio)
    reports.write_ground_truth(_outpath(args.out, "ground_truth.csv"),
                               portfolio.ids(), expected)
    write_schema_file(_outpath(args.out, "schema.txt"), portfolio.schema)
    print(f"wrote {len(portfolio)} records to {args.out}/portfolio.csv "
          f"(seed {cfg.seed}, mean claim rate {float(np.mean(portfolio.claim_rates())):.4f})")
    return 0


def cmd_fit(args) -> int:
    cfg = _config_from_args(args)
    portfolio, rejections = _load_clean(cfg)
    features = _resolve_features(cfg, portfolio)
    stats = fit_target_stats(portfolio, features)

    write_target_stats(_outpath(cfg, "target_stats.csv"), stats)
    reports.write_rejections(_outpath(cfg, "rejections.csv"), rejections)
    categories = sum(len(stats.category_means[f]) for f in stats.feature_names)
    print(f"fitted {len(features)} features on {len(portfolio)} records "
          f"({len(rejections)} rejected); mean claim rate {stats.cbar:.6g}; "
          f"{categories} category means -> {cfg.out_dir}/target_stats.csv")
    return 0


def _run_curve(cfg: RunConfig):
    portfolio, rejections = _load_clean(cfg)
    features = _resolve_features(cfg, portfolio)
    report = evaluate_kappa_curve(portfolio, features=features, grid=cfg.grid,
                                  k=cfg.folds, seed=cfg.seed, threads=cfg.threads)
    return report, rejections


def cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    report, rejections = _run_curve(cfg)
    reports.write_rejections(_outpath(cfg, "rejections.csv"), rejections)
    reports.write_kappa_curve(_outpath(cfg, "kappa_curve.csv"), report)
    reports.plot_kappa_curve(_outpath(cfg, "kappa_curve.png"), report)
    print(f"evaluated {len(report.grid)} kappa values with {report.folds}-fold CV "
          f"(seed {report.seed}); optimum kappa = {report.kappa_star:g} "
          f"with E = {report.e_at_star:.4f}")
    return 0


def cmd_optimize_kappa(args) -> int:
    cfg = _config_from_args(args)
    report, rejections = _run_curve(cfg)
    reports.write_rejections(_outpath(cfg, "rejections.csv"), rejections)
    reports.write_kappa_curve(_outpath(cfg, "kappa_curve.csv"), report)
    reports.write_kappa_star(_outpath(cfg, "kappa_star.csv"), report)
    reports.plot_kappa_curve(_outpath(cfg, "kappa_curve.png"), report)
    print(f"optimum kappa = {report.kappa_star:g} with E = {report.e_at_star:.4f} "
          f"-> {cfg.out_dir}/kappa_star.csv")
    return 0


def cmd_importance(args) -> int:
    cfg = _config_from_args(args)
    portfolio, rejections = _load_clean(cfg)
    features = _resolve_features(cfg, portfolio)
    table = feature_importance(portfolio, features=features, kappa=cfg.kappa,
                               k=cfg.folds, seed=cfg.seed, threads=cfg.threads)
    reports.write_rejections(_outpath(cfg, "rejections.csv"), rejections)
    reports.write_importance(_outpath(cfg, "importance.csv"), table)
    reports.plot_importance(_outpath(cfg, "importance.png"), table)
    print(f"single-feature normalized error at kappa = {cfg.kappa:g}:")
    for row in table.rows:
        marker = "" if row.useful else "  (no predictive value)"
        print(f"  {row.feature:<16} E = {row.e_value:.4f}{marker}")
    return 0


def cmd_select(args) -> int:
    cfg = _config_from_args(args)
    portfolio, rejections = _load_clean(cfg)
    features = _resolve_features(cfg, portfolio)
    table = feature_importance(portfolio, features=features, kappa=cfg.kappa,
                               k=cfg.folds, seed=cfg.seed, threads=cfg.threads)
    trace = greedy_select(portfolio, table, kappa=cfg.kappa,
                          k=cfg.folds, seed=cfg.seed, threads=cfg.threads)
    reports.write_rejections(_outpath(cfg, "rejections.csv"), rejections)
    reports.write_importance(_outpath(cfg, "importance.csv"), table)
    reports.plot_importance(_outpath(cfg, "importance.png"), table)
    reports.write_selection_csv(_outpath(cfg, "selection.csv"), trace)
    reports.write_selection_text(_outpath(cfg, "selection.txt"), trace)
    reports.plot_selection(_outpath(cfg, "selection.png"), trace)
    selected = ", ".join(trace.selected) if trace.selected else "(none)"
    print(f"selected features: {selected}")
    print(f"final E = {trace.final_e:.4f} at kappa = {cfg.kappa:g}")
    return 0


def _fit_model(cfg: RunConfig, args) -> tuple[KernelModel, Portfolio]:
    """Fit (or load) the frozen model from the training input."""
    training, _ = _load_clean(replace(cfg, input_path=args.train))
    features = _resolve_features(cfg, training)
    if getattr(args, "model", None):
        _require_file(args.model)
        stats = read_target_stats(args.model)
    else:
        stats = fit_target_stats(training, features)
    model = KernelModel(stats=stats, train_coords=encode_portfolio(training, stats),
                        train_rates=training.claim_rates(), kappa=cfg.kappa,
                        gamma=getattr(args, "gamma", 1.0))
    return model, training


def _load_test_records(cfg: RunConfig, schema_path: str) -> Portfolio:
    _require_file(cfg.input_path)
    schema = parse_schema_file(schema_path)
    portfolio = load_portfolio(cfg.input_path, schema)
    if len(portfolio) == 0:
        raise ValueError(f"{cfg.input_path}: no records to process")
    return portfolio


def cmd_predict(args) -> int:
    cfg = _config_from_args(args)
    model, _ = _fit_model(cfg, args)
    test = _load_test_records(cfg, cfg.schema_path)
    coords = encode_portfolio(test, model.stats)
    predictions = predict_batch(coords, model, threads=cfg.threads)
    reports.write_predictions(_outpath(cfg, "predictions.csv"), test.ids(), predictions)
    values = np.array([p.value for p in predictions])
    print(f"predicted {len(predictions)} records at kappa = {cfg.kappa:g}, "
          f"gamma = {model.gamma:g}; mean predicted rate {float(values.mean()):.6g} "
          f"-> {cfg.out_dir}/predictions.csv")
    return 0


def cmd_explain(args) -> int:
    cfg = _config_from_args(args)
    model, _ = _fit_model(cfg, args)
    test = _load_test_records(cfg, cfg.schema_path)
    label = args.label if args.label else os.path.basename(args.train)
    explained = [(r.id, explain(r, model, kappa=cfg.kappa, label=label))
                 for r in test.records]
    reports.write_impacts(_outpath(cfg, "impacts.csv"), explained)
    for rid, report in explained:
        safe = re.sub(r"[^A-Za-z0-9_.-]", "_", rid)
        reports.plot_impacts(_outpath(cfg, f"impact_{safe}.png"), report, record_id=rid)
    print(f"explained {len(explained)} records at kappa = {cfg.kappa:g} "
          f"(baseline mean {model.stats.cbar:.6g}, training set: {label})")
    first_id, first = explained[0]
    for row in first.rows:
        print(f"  {first_id} {row.feature:<16} impact {row.impact:.3f}")
    print(f"  {first_id} {'CLR':<16} impact {first.overall_ratio:.3f}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _config_from_args(args)
    model, _ = _fit_model(cfg, args)
    holdout = _load_test_records(cfg, cfg.schema_path)
    calibration = calibrate(model, holdout, period=args.period, threads=cfg.threads)
    reports.write_calibration(_outpath(cfg, "calibration.csv"), calibration)
    calibrated = apply_calibration(model, calibration)
    print(f"calibration factor gamma = {calibration.gamma:.6g} "
          f"(model gamma now {calibrated.gamma:.6g}) -> {cfg.out_dir}/calibration.csv")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser, *, input_help: str, kappa_default=None):
    parser.add_argument("--input", required=True, help=input_help)
    parser.add_argument("--schema", required=True, help="schema definition file")
    parser.add_argument("--out", required=True, help="output directory for report files")
    parser.add_argument("--features", default=None,
                        help="comma-separated feature subset (default: all schema features)")
    parser.add_argument("--folds", type=int, default=DEFAULT_FOLDS, help="cross-validation folds")
    parser.add_argument("--seed", type=int, default=0, help="fold shuffle seed")
    parser.add_argument("--threads", type=int, default=1, help="worker thread cap")
    parser.add_argument("--min-exposure", dest="min_exposure", type=float,
                        default=DEFAULT_MIN_EXPOSURE_YEARS,
                        help="minimum policy lifetime in years kept by cleaning")
    parser.add_argument("--max-age", dest="max_age", type=float, default=DEFAULT_MAX_DRIVER_AGE,
                        help="maximum driver age kept by cleaning")
    if kappa_default is not None:
        parser.add_argument("--kappa", type=float, default=kappa_default,
                            help="kernel exponent")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claimrate",
        description="Kernel-weighted claim-rate prediction over policy portfolios.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic policy portfolio")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=None, help="record count (default 5000)")
    p.add_argument("--seed", type=int, default=None, help="generator seed (default 0)")
    p.add_argument("--synth-config", default=None,
                   help="JSON file overriding generator defaults (features, frequency, severity)")
    p.add_argument("--threads", type=int, default=1, help="worker thread cap")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit and persist encoding statistics")
    _add_common(p, input_help="training policy CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="cross-validated error curve over a kappa grid")
    _add_common(p, input_help="policy CSV to evaluate")
    p.add_argument("--kappa-grid", dest="kappa_grid", default=None,
                   help="grid as lo:hi:step (default 0:20:0.5)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize-kappa", help="evaluate a grid and persist the optimum")
    _add_common(p, input_help="policy CSV to evaluate")
    p.add_argument("--kappa-grid", dest="kappa_grid", default=None,
                   help="grid as lo:hi:step (default 0:20:0.5)")
    p.set_defaults(func=cmd_optimize_kappa)

    p = sub.add_parser("importance", help="rank features by single-feature error")
    _add_common(p, input_help="policy CSV to analyze", kappa_default=DEFAULT_IMPORTANCE_KAPPA)
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("select", help="greedy forward feature selection")
    _add_common(p, input_help="policy CSV to analyze", kappa_default=DEFAULT_IMPORTANCE_KAPPA)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("predict", help="predict claim rates for new policies")
    _add_common(p, input_help="policy CSV to predict", kappa_default=DEFAULT_IMPORTANCE_KAPPA)
    p.add_argument("--train", required=True, help="training policy CSV")
    p.add_argument("--model", default=None,
                   help="persisted target_stats.csv (skips refitting the encoding)")
    p.add_argument("--gamma", type=float, default=1.0, help="calibration scale")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="per-feature impact report for predictions")
    _add_common(p, input_help="policy CSV to explain", kappa_default=DEFAULT_IMPORTANCE_KAPPA)
    p.add_argument("--train", required=True, help="training policy CSV")
    p.add_argument("--model", default=None,
                   help="persisted target_stats.csv (skips refitting the encoding)")
    p.add_argument("--gamma", type=float, default=1.0, help="calibration scale")
    p.add_argument("--label", default="", help="training subset label for the report")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("calibrate", help="fit the scale aligning predicted and actual totals")
    _add_common(p, input_help="calibration holdout CSV", kappa_default=DEFAULT_IMPORTANCE_KAPPA)
    p.add_argument("--train", required=True, help="training policy CSV")
    p.add_argument("--gamma", type=float, default=1.0, help="scale already applied to the model")
    p.add_argument("--period", default="", help="label for the calibration period")
    p.set_defaults(func=cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, RowError, DegenerateTestSetError, FileNotFoundError,
            ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
