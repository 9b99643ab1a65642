"""Report artifacts: delimited outputs and the figures rendered beside them.

Every report command writes machine-readable CSV and a matching PNG figure.
Floats are serialized with full round-trip precision and files use LF line
endings, so identical inputs always produce byte-identical artifacts.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dataset import NUMERIC, Portfolio, Rejection
from .evaluation import Calibration, EvaluationReport
from .explain import ImpactReport
from .features import ImportanceTable, SelectionTrace
from .predictor import Prediction

_FIGSIZE = (8.0, 5.0)
_DPI = 150


def _fmt(x) -> str:
    return repr(float(x))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_rejections(path, rejections: list[Rejection]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["id", "reason"])
        for r in rejections:
            w.writerow([r.id, r.reason])


def write_portfolio(path, portfolio: Portfolio) -> None:
    """Emit a portfolio in the same CSV layout the loader consumes."""
    schema = portfolio.schema
    kinds = {f.name: f.kind for f in schema.features}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow([schema.id_column, *schema.feature_names,
                    schema.claims_column, schema.exposure_column])
        for r in portfolio.records:
            cells = [r.id]
            for name in schema.feature_names:
                v = r.values.get(name)
                if v is None:
                    cells.append("")
                elif kinds[name] == NUMERIC:
                    cells.append(_fmt(v))
                else:
                    cells.append(str(v))
            cells.append(_fmt(r.total_claims))
            cells.append(_fmt(r.exposure_years))
            w.writerow(cells)


def write_ground_truth(path, ids, expected_rates) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["id", "expected_rate"])
        for rid, rate in zip(ids, expected_rates):
            w.writerow([rid, _fmt(rate)])


def write_kappa_curve(path, report: EvaluationReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["kappa", "E_pooled", *[f"E_fold_{j}" for j in range(report.folds)]])
        for i, kappa in enumerate(report.grid):
            w.writerow([_fmt(kappa), _fmt(report.e_curve[i]),
                        *[_fmt(report.per_fold[j, i]) for j in range(report.folds)]])


def write_kappa_star(path, report: EvaluationReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["kappa_star", "e_at_star"])
        w.writerow([_fmt(report.kappa_star), _fmt(report.e_at_star)])


def write_importance(path, table: ImportanceTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["feature", "e_value", "kappa", "useful"])
        for row in table.rows:
            w.writerow([row.feature, _fmt(row.e_value), _fmt(row.kappa),
                        "true" if row.useful else "false"])


def write_selection_csv(path, trace: SelectionTrace) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["step", "feature", "e_before", "e_after", "kept"])
        for i, step in enumerate(trace.steps, start=1):
            w.writerow([i, step.feature, _fmt(step.e_before), _fmt(step.e_after),
                        "true" if step.kept else "false"])


def write_selection_text(path, trace: SelectionTrace) -> None:
    lines = [f"greedy forward selection at kappa={trace.kappa:g} "
             f"({trace.folds}-fold, seed {trace.seed})", ""]
    for i, step in enumerate(trace.steps, start=1):
        verdict = "kept" if step.kept else "rejected"
        lines.append(f"step {i}: + {step.feature:<12} "
                     f"E {step.e_before:.6f} -> {step.e_after:.6f}  {verdict}")
    lines.append("")
    selected = ", ".join(trace.selected) if trace.selected else "(none)"
    lines.append(f"selected features: {selected}")
    lines.append(f"final E: {trace.final_e:.6f}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_predictions(path, ids, predictions: list[Prediction]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["id", "predicted_claim_rate", "kappa", "gamma", "nearest_distance"])
        for rid, p in zip(ids, predictions):
            w.writerow([rid, _fmt(p.value), _fmt(p.kappa), _fmt(p.gamma),
                        _fmt(p.nearest_distance)])


def write_impacts(path, reports: list[tuple[str, ImpactReport]]) -> None:
    """One block per record: a row per feature impact plus the overall CLR row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["id", "feature", "value", "single_feature_prediction", "impact"])
        for rid, report in reports:
            for row in report.rows:
                value = "" if row.value is None else (
                    _fmt(row.value) if isinstance(row.value, float) else str(row.value))
                w.writerow([rid, row.feature, value,
                            _fmt(row.single_feature_prediction), _fmt(row.impact)])
            w.writerow([rid, "CLR", "", _fmt(report.predicted_rate), _fmt(report.overall_ratio)])


def write_calibration(path, calibration: Calibration) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["gamma", "period"])
        w.writerow([_fmt(calibration.gamma), calibration.period])


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def plot_kappa_curve(path, report: EvaluationReport) -> None:
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for j in range(report.folds):
        ax.plot(report.grid, report.per_fold[j], color="0.8", linewidth=0.8, zorder=1)
    ax.plot(report.grid, report.e_curve, color="tab:blue", linewidth=2.0,
            label="pooled", zorder=2)
    ax.axvline(report.kappa_star, color="tab:red", linestyle="--", linewidth=1.0,
               label=f"optimum kappa = {report.kappa_star:g}")
    ax.axhline(1.0, color="0.5", linestyle=":", linewidth=1.0)
    ax.set_xlabel("kappa")
    ax.set_ylabel("normalized error")
    ax.set_title("Cross-validated normalized error vs kernel exponent")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_importance(path, table: ImportanceTable) -> None:
    names = [row.feature for row in table.rows]
    values = [row.e_value for row in table.rows]
    colors = ["tab:blue" if row.useful else "tab:red" for row in table.rows]
    fig, ax = plt.subplots(figsize=(_FIGSIZE[0], max(2.5, 0.4 * len(names) + 1.5)))
    y = np.arange(len(names))
    ax.barh(y, values, color=colors)
    ax.axvline(1.0, color="0.3", linestyle="--", linewidth=1.0)
    ax.set_yticks(y, names)
    ax.invert_yaxis()
    ax.set_xlabel(f"normalized error at kappa = {table.kappa:g}")
    ax.set_title("Single-feature importance (lower is better)")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_selection(path, trace: SelectionTrace) -> None:
    labels = [f"+ {step.feature}" for step in trace.steps]
    values = [step.e_after for step in trace.steps]
    colors = ["tab:blue" if step.kept else "tab:brown" for step in trace.steps]
    fig, ax = plt.subplots(figsize=(_FIGSIZE[0], max(2.5, 0.4 * len(labels) + 1.5)))
    y = np.arange(len(labels))
    ax.barh(y, values, color=colors)
    ax.axvline(1.0, color="0.3", linestyle="--", linewidth=1.0)
    ax.set_yticks(y, labels)
    ax.invert_yaxis()
    ax.set_xlabel(f"normalized error at kappa = {trace.kappa:g}")
    ax.set_title("Greedy forward selection (brown bars were rejected)")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_impacts(path, report: ImpactReport, record_id: str = "") -> None:
    labels = [row.feature for row in report.rows] + ["CLR"]
    values = [row.impact for row in report.rows] + [report.overall_ratio]
    colors = ["tab:blue"] * len(report.rows) + ["tab:green"]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    x = np.arange(len(labels))
    ax.bar(x, values, color=colors)
    ax.axhline(1.0, color="tab:red", linewidth=1.0)
    ax.set_xticks(x, labels, rotation=45, ha="right")
    ax.set_ylabel("impact (ratio to mean claim rate)")
    title = "Per-feature contribution to prediction"
    if record_id:
        title += f" ({record_id})"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
