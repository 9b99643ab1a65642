"""Cross-validated evaluation of the kernel predictor.

The error metric is the mean absolute error of the predictions normalized by
the mean absolute error of the no-feature baseline (the training-fold mean
claim rate). A value of 1 means the features added nothing; the optimal
kernel exponent is the grid argmin of this pooled normalized error.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Portfolio, fold_split, split_folds
from .encoder import encode_portfolio, fit_target_stats
from .predictor import KernelModel, predict_batch

DEFAULT_FOLDS = 5
_CHUNK_ROWS = 256


def default_kappa_grid() -> np.ndarray:
    """kappa from 0 to 20 in steps of 0.5."""
    return np.arange(0.0, 20.25, 0.5)


class DegenerateTestSetError(ValueError):
    """Every actual claim rate equals the baseline mean, so the normalizing
    denominator is zero and the error ratio is undefined."""


def normalized_mae(preds, actuals, cbar: float) -> float:
    """Sum of |prediction - actual| divided by the same sum with the baseline
    mean ``cbar`` in place of the predictions."""
    preds = np.asarray(preds, dtype=float)
    actuals = np.asarray(actuals, dtype=float)
    if preds.shape != actuals.shape or preds.size == 0:
        raise ValueError("predictions and actuals must be equal-length and non-empty")
    denominator = float(np.sum(np.abs(cbar - actuals)))
    if denominator == 0.0:
        raise DegenerateTestSetError(
            "all actual claim rates equal the baseline mean; normalized error is undefined"
        )
    return float(np.sum(np.abs(preds - actuals))) / denominator


@dataclass(frozen=True)
class EvaluationReport:
    """Normalized error over a kappa grid: the pooled curve, the per-fold
    curves, and the optimum."""

    grid: np.ndarray
    e_curve: np.ndarray
    per_fold: np.ndarray
    kappa_star: float
    e_at_star: float
    folds: int
    seed: int


@dataclass(frozen=True)
class Calibration:
    """Multiplicative scale making total predicted claims match total actual
    claims over a calibration period."""

    gamma: float
    period: str = ""


class _FoldData:
    """Everything the error computation needs for one train/test split."""

    __slots__ = ("train_coords", "test_coords", "train_rates", "test_rates",
                 "cbar", "denominator", "index")

    def __init__(self, index, train_coords, test_coords, train_rates, test_rates, cbar):
        self.index = index
        self.train_coords = train_coords
        self.test_coords = test_coords
        self.train_rates = train_rates
        self.test_rates = test_rates
        self.cbar = cbar
        self.denominator = float(np.sum(np.abs(cbar - test_rates)))


class KFoldEngine:
    """Reusable k-fold machinery: fits encoding statistics per fold once and
    evaluates the normalized error of any feature subset at any kappa values
    against the same splits.
    """

    def __init__(self, portfolio: Portfolio, features=None, k: int = DEFAULT_FOLDS,
                 seed: int = 0, threads: int = 1, normalize_distance: bool = True):
        self.features = tuple(features) if features is not None else portfolio.schema.feature_names
        self.k = k
        self.seed = seed
        self.threads = threads
        self.normalize_distance = normalize_distance
        assignment = split_folds(portfolio, k, seed)
        self._column = {name: j for j, name in enumerate(self.features)}
        self.folds: list[_FoldData] = []
        for fold in range(k):
            train, test = fold_split(portfolio, assignment, fold)
            stats = fit_target_stats(train, self.features)
            fold_data = _FoldData(
                index=fold,
                train_coords=encode_portfolio(train, stats),
                test_coords=encode_portfolio(test, stats),
                train_rates=train.claim_rates(),
                test_rates=test.claim_rates(),
                cbar=stats.cbar,
            )
            if fold_data.denominator == 0.0:
                raise DegenerateTestSetError(
                    f"fold {fold}: all test claim rates equal the training mean; "
                    "normalized error is undefined"
                )
            self.folds.append(fold_data)

    def _predictions(self, fold: _FoldData, columns: list[int], kappas: np.ndarray) -> np.ndarray:
        """(n_kappas, n_test) prediction matrix for one fold, chunked by test
        rows. Row results are chunk-independent, so any thread schedule gives
        identical output."""
        test = fold.test_coords
        chunks = [(start, test[start:start + _CHUNK_ROWS]) for start in range(0, test.shape[0], _CHUNK_ROWS)]

        def eval_chunk(block: np.ndarray) -> np.ndarray:
            d2 = np.zeros((block.shape[0], fold.train_coords.shape[0]), dtype=float)
            for j in columns:
                diff = block[:, j, None] - fold.train_coords[None, :, j]
                d2 += diff * diff
            d = np.sqrt(d2)
            if self.normalize_distance:
                d /= fold.cbar
            log_terms = np.log1p(d)
            shift = log_terms.min(axis=1, keepdims=True)
            out = np.empty((len(kappas), block.shape[0]), dtype=float)
            for ki, kappa in enumerate(kappas):
                w = np.exp(kappa * (shift - log_terms))
                out[ki] = np.sum(w * fold.train_rates[None, :], axis=1) / np.sum(w, axis=1)
            return out

        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(lambda item: eval_chunk(item[1]), chunks))
        else:
            parts = [eval_chunk(block) for _, block in chunks]
        return np.concatenate(parts, axis=1)

    def curve(self, feature_subset, kappas) -> tuple[np.ndarray, np.ndarray]:
        """Pooled and per-fold normalized error of ``feature_subset`` at each
        kappa. Pooling sums numerators and denominators across folds before
        dividing."""
        kappas = np.asarray(kappas, dtype=float)
        columns = [self._column[name] for name in feature_subset]
        if not columns:
            raise ValueError("feature subset must be non-empty")
        numerators = np.zeros((self.k, len(kappas)), dtype=float)
        for fold in self.folds:
            preds = self._predictions(fold, columns, kappas)
            numerators[fold.index] = np.sum(np.abs(preds - fold.test_rates[None, :]), axis=1)
        denominators = np.array([fold.denominator for fold in self.folds])
        pooled = numerators.sum(axis=0) / denominators.sum()
        per_fold = numerators / denominators[:, None]
        return pooled, per_fold


def optimize_kappa(grid, e_curve) -> float:
    """Grid argmin of the pooled normalized error; ties go to the smaller
    kappa (the smoother model)."""
    grid = np.asarray(grid, dtype=float)
    e_curve = np.asarray(e_curve, dtype=float)
    if grid.shape != e_curve.shape or grid.size == 0:
        raise ValueError("grid and error curve must be equal-length and non-empty")
    return float(grid[int(np.argmin(e_curve))])


def evaluate_kappa_curve(portfolio: Portfolio, features=None, grid=None,
                         k: int = DEFAULT_FOLDS, seed: int = 0,
                         threads: int = 1, normalize_distance: bool = True) -> EvaluationReport:
    """Cross-validated normalized error over a kappa grid.

    Each fold fits encoding statistics on its training split, predicts every
    test record at every kappa in one distance pass (distances do not depend
    on kappa), and normalizes by the training-fold mean baseline. The pooled
    curve sums numerators and denominators across folds before dividing.
    """
    if grid is None:
        grid = default_kappa_grid()
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("kappa grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("kappa grid must be sorted strictly ascending")
    if grid[0] < 0:
        raise ValueError("kappa values must be >= 0")
    engine = KFoldEngine(portfolio, features=features, k=k, seed=seed,
                         threads=threads, normalize_distance=normalize_distance)
    pooled, per_fold = engine.curve(engine.features, grid)
    kappa_star = optimize_kappa(grid, pooled)
    return EvaluationReport(grid=grid, e_curve=pooled, per_fold=per_fold,
                            kappa_star=kappa_star, e_at_star=float(pooled.min()),
                            folds=k, seed=seed)


def calibrate(model: KernelModel, holdout: Portfolio, period: str = "",
              threads: int = 1) -> Calibration:
    """Scale factor aligning the model's total predicted claim rate with the
    actual total over a holdout portfolio.

    The factor is computed against the model's current predictions, so
    calibrating a freshly fitted model (gamma = 1) yields the plain
    actual-over-predicted ratio, and re-calibrating an already calibrated
    model on the same holdout yields 1.
    """
    if len(holdout) == 0:
        raise ValueError("calibration holdout is empty")
    coords = encode_portfolio(holdout, model.stats)
    predictions = predict_batch(coords, model, threads=threads)
    total_predicted = float(np.sum([p.value for p in predictions]))
    total_actual = float(np.sum(holdout.claim_rates()))
    if total_predicted <= 0:
        raise ValueError("total predicted claims is zero; cannot calibrate")
    if total_actual <= 0:
        raise ValueError("total actual claims is zero; calibration factor would not be positive")
    return Calibration(gamma=total_actual / total_predicted, period=period)


def apply_calibration(model: KernelModel, calibration: Calibration) -> KernelModel:
    """Fold the calibration factor into the model's prediction scale."""
    return model.with_gamma(model.gamma * calibration.gamma)
