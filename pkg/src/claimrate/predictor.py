"""Kernel-weighted claim-rate prediction.

A test policy's rate is the weighted average of all training claim rates,
each sample weighted by (1 + d)^(-kappa) where d is its encoded distance to
the test policy. kappa = 0 degenerates to the global training mean; as kappa
grows the average concentrates on the nearest samples, reaching plain
nearest-neighbor prediction in the limit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Portfolio
from .encoder import TargetStats, encode, encode_portfolio, fit_target_stats

_CHUNK_ROWS = 256


def kernel_weights(d: np.ndarray, kappa: float) -> np.ndarray:
    """(1 + d)^(-kappa) weights, rescaled so the largest weight is exactly 1.

    Computed in log space and shifted by the minimum distance before
    exponentiation, so large kappa underflows the far weights to zero
    instead of zeroing the whole numerator and denominator. Works on 1-D
    (one test point) or 2-D (test rows x training columns) inputs; the
    rescale leaves the weighted average unchanged.
    """
    log_terms = kappa * np.log1p(d)
    if log_terms.ndim == 1:
        shift = log_terms.min()
    else:
        shift = log_terms.min(axis=1, keepdims=True)
    return np.exp(shift - log_terms)


def squared_distance_matrix(test_coords: np.ndarray, train_coords: np.ndarray) -> np.ndarray:
    """Row-by-column squared Euclidean distances, accumulated feature by
    feature in declaration order so results are identical no matter how the
    rows are later chunked across workers.
    """
    m = test_coords.shape[0]
    n = train_coords.shape[0]
    d2 = np.zeros((m, n), dtype=float)
    for j in range(train_coords.shape[1]):
        diff = test_coords[:, j, None] - train_coords[None, :, j]
        d2 += diff * diff
    return d2


@dataclass(frozen=True)
class KernelModel:
    """A frozen predictor: fitted encoding statistics, the encoded training
    set with its claim rates, the kernel exponent, and a calibration scale
    applied multiplicatively to every prediction.
    """

    stats: TargetStats
    train_coords: np.ndarray
    train_rates: np.ndarray
    kappa: float
    gamma: float = 1.0
    normalize_distance: bool = True

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.train_coords.ndim != 2 or self.train_coords.shape[0] == 0:
            raise ValueError("training coordinates must be a non-empty (n, features) matrix")
        if self.train_rates.shape != (self.train_coords.shape[0],):
            raise ValueError("training rates must align with training coordinates")
        if self.normalize_distance and self.stats.cbar <= 0:
            raise ValueError(
                "global mean claim rate must be positive to normalize distances; "
                "an all-zero-claims book carries no signal for this model"
            )

    @classmethod
    def fit(cls, training: Portfolio, features=None, kappa: float = 0.0,
            gamma: float = 1.0, normalize_distance: bool = True) -> "KernelModel":
        """Fit encoding statistics on ``training`` and freeze the model."""
        stats = fit_target_stats(training, features)
        coords = encode_portfolio(training, stats)
        rates = training.claim_rates()
        return cls(stats=stats, train_coords=coords, train_rates=rates,
                   kappa=kappa, gamma=gamma, normalize_distance=normalize_distance)

    def with_kappa(self, kappa: float) -> "KernelModel":
        return replace(self, kappa=kappa)

    def with_gamma(self, gamma: float) -> "KernelModel":
        return replace(self, gamma=gamma)

    def distances(self, x: np.ndarray) -> np.ndarray:
        """Distances from one encoded test vector to every training sample."""
        x = np.asarray(x, dtype=float)
        d2 = squared_distance_matrix(x[None, :], self.train_coords)[0]
        d = np.sqrt(d2)
        if self.normalize_distance:
            d /= self.stats.cbar
        return d


@dataclass(frozen=True)
class Prediction:
    """One predicted claim rate plus the parameters that produced it."""

    value: float
    kappa: float
    gamma: float
    nearest_distance: float


def _predict_rows(model: KernelModel, test_coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw (pre-gamma) predictions and nearest distances for a block of rows."""
    d = np.sqrt(squared_distance_matrix(test_coords, model.train_coords))
    if model.normalize_distance:
        d /= model.stats.cbar
    w = kernel_weights(d, model.kappa)
    raw = np.sum(w * model.train_rates[None, :], axis=1) / np.sum(w, axis=1)
    return raw, d.min(axis=1)


def predict(x, model: KernelModel) -> Prediction:
    """Predict the claim rate for one encoded test vector."""
    x = np.asarray(x, dtype=float)
    raw, nearest = _predict_rows(model, x[None, :])
    return Prediction(value=model.gamma * float(raw[0]), kappa=model.kappa,
                      gamma=model.gamma, nearest_distance=float(nearest[0]))


def predict_record(record, model: KernelModel) -> Prediction:
    """Encode a policy record (or feature-value mapping) and predict it."""
    return predict(encode(record, model.stats), model)


def predict_batch(xs, model: KernelModel, threads: int = 1) -> list[Prediction]:
    """Elementwise :func:`predict` over many vectors, preserving order.

    Rows are processed in fixed chunks; with ``threads`` > 1 the chunks are
    farmed out to a thread pool. Each row's arithmetic is independent of the
    chunking, so results are bitwise identical at any worker count.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        return []
    if xs.ndim == 1:
        xs = xs[None, :]
    chunks = [xs[i:i + _CHUNK_ROWS] for i in range(0, xs.shape[0], _CHUNK_ROWS)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda block: _predict_rows(model, block), chunks))
    else:
        parts = [_predict_rows(model, block) for block in chunks]
    raw = np.concatenate([p[0] for p in parts])
    nearest = np.concatenate([p[1] for p in parts])
    return [Prediction(value=model.gamma * float(r), kappa=model.kappa,
                       gamma=model.gamma, nearest_distance=float(nd))
            for r, nd in zip(raw, nearest)]
