"""Feature importance ranking and greedy forward selection.

A feature's importance is the cross-validated normalized error of the
predictor using that feature alone at a fixed kernel exponent; values below
1 mean the feature beats the no-feature baseline. Selection walks the
features in ascending-error order, keeping each candidate only if it
strictly lowers the pooled error of the running set.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import Portfolio
from .evaluation import DEFAULT_FOLDS, KFoldEngine

DEFAULT_IMPORTANCE_KAPPA = 10.0

# Strict-improvement guard against float jitter in the greedy loop.
MIN_IMPROVEMENT = 1e-12


@dataclass(frozen=True)
class ImportanceRow:
    feature: str
    e_value: float
    kappa: float

    @property
    def useful(self) -> bool:
        return self.e_value < 1.0


@dataclass(frozen=True)
class ImportanceTable:
    """Per-feature single-feature errors, sorted ascending (ties broken
    alphabetically so the ranking is deterministic)."""

    rows: tuple[ImportanceRow, ...]
    kappa: float
    folds: int
    seed: int

    def ranked_features(self) -> tuple[str, ...]:
        return tuple(row.feature for row in self.rows)


@dataclass(frozen=True)
class SelectionStep:
    feature: str
    e_before: float
    e_after: float
    kept: bool


@dataclass(frozen=True)
class SelectionTrace:
    """The greedy walk: one step per candidate, the surviving feature set,
    and the pooled error it achieves."""

    steps: tuple[SelectionStep, ...]
    selected: tuple[str, ...]
    final_e: float
    kappa: float
    folds: int
    seed: int


def feature_importance(portfolio: Portfolio, features=None,
                       kappa: float = DEFAULT_IMPORTANCE_KAPPA,
                       k: int = DEFAULT_FOLDS, seed: int = 0,
                       threads: int = 1) -> ImportanceTable:
    """Cross-validated single-feature normalized error for every feature."""
    engine = KFoldEngine(portfolio, features=features, k=k, seed=seed, threads=threads)
    rows = []
    for name in engine.features:
        pooled, _ = engine.curve([name], [kappa])
        rows.append(ImportanceRow(feature=name, e_value=float(pooled[0]), kappa=kappa))
    rows.sort(key=lambda row: (row.e_value, row.feature))
    return ImportanceTable(rows=tuple(rows), kappa=kappa, folds=k, seed=seed)


def greedy_select(portfolio: Portfolio, ranked: ImportanceTable,
                  kappa: float = DEFAULT_IMPORTANCE_KAPPA,
                  k: int = DEFAULT_FOLDS, seed: int = 0,
                  threads: int = 1) -> SelectionTrace:
    """Forward selection over the ranked candidates.

    Starting from the empty set (whose normalized error is 1 by
    construction: with no features the predictor is the fold-training
    mean), each candidate is added in ranking order and kept only if the
    pooled error strictly decreases. Every remaining candidate is scanned,
    so a feature rejected on its own merits never blocks later ones.
    """
    if not ranked.rows:
        raise ValueError("ranked importance table is empty")
    candidates = ranked.ranked_features()
    engine = KFoldEngine(portfolio, features=candidates, k=k, seed=seed, threads=threads)

    selected: list[str] = []
    e_current = 1.0
    steps = []
    for name in candidates:
        pooled, _ = engine.curve(selected + [name], [kappa])
        e_after = float(pooled[0])
        kept = e_after < e_current - MIN_IMPROVEMENT
        steps.append(SelectionStep(feature=name, e_before=e_current, e_after=e_after, kept=kept))
        if kept:
            selected.append(name)
            e_current = e_after
    return SelectionTrace(steps=tuple(steps), selected=tuple(selected),
                          final_e=e_current, kappa=kappa, folds=k, seed=seed)
