"""Target encoding of policy features into claim-rate space.

Every category value v of a feature f is mapped to C(f, v), the mean claim
rate of the training samples holding that value. Numeric features keep their
exact values as categories, so a 48-year-old and a 30-year-old are exactly
|C(age, 48) - C(age, 30)| apart. Distances between encoded policies are
Euclidean in these coordinates, normalized by the global training mean so the
metric is dimensionless.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, Feature, PolicyRecord, Portfolio


@dataclass(frozen=True)
class TargetStats:
    """Frozen per-category mean claim rates plus the global training mean.

    ``category_means[f]`` maps each training value of feature f to its mean
    claim rate. For numeric features ``numeric_grids[f]`` holds the sorted
    distinct values and ``numeric_means[f]`` the aligned means, which back
    linear interpolation for values never seen in training.
    """

    features: tuple[Feature, ...]
    cbar: float
    category_means: dict[str, dict]
    category_counts: dict[str, dict]
    numeric_grids: dict[str, np.ndarray]
    numeric_means: dict[str, np.ndarray]
    n_training: int

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def mean_for(self, feature: str, value) -> float:
        """C(f, v) for a value seen in training; KeyError otherwise."""
        return self.category_means[feature][value]


def fit_target_stats(training: Portfolio, features=None) -> TargetStats:
    """Fit category means and the global mean on a training portfolio.

    ``features`` selects a subset of the schema features (defaults to all).
    Means are exact group means; missing values are left out of the group
    tables but their records still count toward the global mean.
    """
    if len(training) == 0:
        raise ValueError("cannot fit target statistics on an empty training set")
    if features is None:
        feats = training.schema.features
    else:
        feats = tuple(training.schema.feature(name) for name in features)
    if not feats:
        raise ValueError("cannot fit target statistics with no features")

    rates = training.claim_rates()
    cbar = float(np.mean(rates))

    category_means: dict[str, dict] = {}
    category_counts: dict[str, dict] = {}
    numeric_grids: dict[str, np.ndarray] = {}
    numeric_means: dict[str, np.ndarray] = {}
    for f in feats:
        sums: dict = {}
        counts: dict = {}
        for record, rate in zip(training.records, rates):
            v = record.values.get(f.name)
            if v is None:
                continue
            sums[v] = sums.get(v, 0.0) + rate
            counts[v] = counts.get(v, 0) + 1
        means = {v: float(sums[v] / counts[v]) for v in sums}
        category_means[f.name] = means
        category_counts[f.name] = counts
        if f.kind == NUMERIC:
            grid = np.array(sorted(means), dtype=float)
            numeric_grids[f.name] = grid
            numeric_means[f.name] = np.array([means[v] for v in grid], dtype=float)

    return TargetStats(
        features=feats,
        cbar=cbar,
        category_means=category_means,
        category_counts=category_counts,
        numeric_grids=numeric_grids,
        numeric_means=numeric_means,
        n_training=len(training),
    )


def _coordinate(stats: TargetStats, feature: Feature, value) -> float:
    """Encoded coordinate for one feature value, total on any input.

    Seen values map to their category mean. Unseen categorical values (and
    missing values) fall back to the global mean; unseen numeric values are
    linearly interpolated between the two nearest training values, clamped
    at the observed range.
    """
    if value is None:
        return stats.cbar
    means = stats.category_means[feature.name]
    if feature.kind == CATEGORICAL:
        return means.get(value, stats.cbar)
    v = float(value)
    if v in means:
        return means[v]
    grid = stats.numeric_grids[feature.name]
    if grid.size == 0:
        return stats.cbar
    return float(np.interp(v, grid, stats.numeric_means[feature.name]))


def encode_value(stats: TargetStats, feature_name: str, value) -> float:
    """Encoded coordinate of a single feature value under fitted statistics."""
    for f in stats.features:
        if f.name == feature_name:
            return _coordinate(stats, f, value)
    raise KeyError(f"feature {feature_name!r} was not fitted")


def encode(record, stats: TargetStats) -> np.ndarray:
    """Encode a PolicyRecord (or a feature-name -> value mapping) into
    claim-rate coordinates, one per fitted feature.
    """
    values = record.values if isinstance(record, PolicyRecord) else record
    return np.array([_coordinate(stats, f, values.get(f.name)) for f in stats.features], dtype=float)


def encode_portfolio(portfolio: Portfolio, stats: TargetStats) -> np.ndarray:
    """Encode every record into an (n, n_features) coordinate matrix."""
    n = len(portfolio)
    out = np.empty((n, len(stats.features)), dtype=float)
    for j, f in enumerate(stats.features):
        col = out[:, j]
        for i, record in enumerate(portfolio.records):
            col[i] = _coordinate(stats, f, record.values.get(f.name))
    return np.ascontiguousarray(out)


def distance(a: np.ndarray, b: np.ndarray, cbar: float, normalize: bool = True) -> float:
    """Euclidean distance between two encoded vectors, divided by the global
    mean claim rate when ``normalize`` is on (the default), making it
    dimensionless. Raises on a non-positive global mean: a book with zero
    total claims carries no signal for this metric.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"encoded vectors differ in length: {a.shape} vs {b.shape}")
    d = float(np.sqrt(np.sum((a - b) ** 2)))
    if not normalize:
        return d
    if cbar <= 0:
        raise ValueError("global mean claim rate must be positive to normalize distances")
    return d / cbar


def write_target_stats(path, stats: TargetStats) -> None:
    """Persist fitted statistics as a flat CSV: a metadata line carrying the
    global mean and feature order, then one (feature, value, mean, count)
    row per category. Floats are written with full round-trip precision.
    """
    feature_tags = "|".join(f"{f.name}:{f.kind}" for f in stats.features)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"#cbar={stats.cbar!r},n={stats.n_training},features={feature_tags}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "value", "mean", "count"])
        for f in stats.features:
            means = stats.category_means[f.name]
            counts = stats.category_counts[f.name]
            if f.kind == NUMERIC:
                keys = sorted(means)
            else:
                keys = sorted(means, key=str)
            for v in keys:
                writer.writerow([f.name, repr(float(v)) if f.kind == NUMERIC else v,
                                 repr(float(means[v])), counts[v]])


def read_target_stats(path) -> TargetStats:
    """Load statistics written by :func:`write_target_stats`."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        meta_line = fh.readline().strip()
        if not meta_line.startswith("#"):
            raise ValueError(f"{path}: missing metadata line in statistics file")
        meta = {}
        for part in meta_line[1:].split(","):
            key, _, val = part.partition("=")
            meta[key] = val
        cbar = float(meta["cbar"])
        n_training = int(meta["n"])
        features = []
        for tag in meta["features"].split("|"):
            name, _, kind = tag.partition(":")
            features.append(Feature(name=name, kind=kind))

        reader = csv.reader(fh)
        header = next(reader)
        if header != ["feature", "value", "mean", "count"]:
            raise ValueError(f"{path}: unexpected statistics header {header}")
        kinds = {f.name: f.kind for f in features}
        category_means: dict[str, dict] = {f.name: {} for f in features}
        category_counts: dict[str, dict] = {f.name: {} for f in features}
        for row in reader:
            if not row:
                continue
            fname, raw_value, raw_mean, raw_count = row
            value = float(raw_value) if kinds[fname] == NUMERIC else raw_value
            category_means[fname][value] = float(raw_mean)
            category_counts[fname][value] = int(raw_count)

    numeric_grids = {}
    numeric_means = {}
    for f in features:
        if f.kind == NUMERIC:
            grid = np.array(sorted(category_means[f.name]), dtype=float)
            numeric_grids[f.name] = grid
            numeric_means[f.name] = np.array([category_means[f.name][v] for v in grid], dtype=float)

    return TargetStats(
        features=tuple(features),
        cbar=cbar,
        category_means=category_means,
        category_counts=category_counts,
        numeric_grids=numeric_grids,
        numeric_means=numeric_means,
        n_training=n_training,
    )
