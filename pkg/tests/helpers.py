"""Shared builders for the test suite."""

import numpy as np

from claimrate.dataset import Feature, FeatureSchema, PolicyRecord, Portfolio
from claimrate.encoder import TargetStats
from claimrate.predictor import KernelModel


def build_portfolio(rows, features, **schema_kwargs) -> Portfolio:
    """rows: iterable of (id, values_dict, total_claims, exposure_years);
    features: iterable of (name, kind)."""
    schema = FeatureSchema(features=tuple(Feature(name, kind) for name, kind in features),
                           **schema_kwargs)
    records = tuple(PolicyRecord(id=rid, values=dict(values), total_claims=total,
                                 exposure_years=exposure)
                    for rid, values, total, exposure in rows)
    return Portfolio(schema=schema, records=records)


def manual_stats(cbar: float, n_features: int = 1, n_training: int = 1) -> TargetStats:
    """A bare statistics object for models built from explicit coordinates."""
    feats = tuple(Feature(f"f{i}", "numeric") for i in range(n_features))
    return TargetStats(
        features=feats,
        cbar=cbar,
        category_means={f.name: {} for f in feats},
        category_counts={f.name: {} for f in feats},
        numeric_grids={f.name: np.array([]) for f in feats},
        numeric_means={f.name: np.array([]) for f in feats},
        n_training=n_training,
    )


def manual_model(coords, rates, cbar: float = 1.0, kappa: float = 0.0,
                 gamma: float = 1.0, normalize: bool = True) -> KernelModel:
    """Build a model straight from encoded coordinates and claim rates."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    rates = np.asarray(rates, dtype=float)
    stats = manual_stats(cbar, n_features=coords.shape[1], n_training=coords.shape[0])
    return KernelModel(stats=stats, train_coords=np.ascontiguousarray(coords),
                       train_rates=rates, kappa=kappa, gamma=gamma,
                       normalize_distance=normalize)


def write_csv(path, header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)
