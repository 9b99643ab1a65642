"""Synthetic policy portfolios with planted, known feature effects.

Claims are drawn from a frequency-severity model: each record's expected
claim count per year is a base frequency times the product of its planted
per-category risk factors, claim counts are Poisson over the record's
exposure, and claim costs are lognormal. Monetary values are normalized so
claim rates land near 1. The generator also returns each record's true
expected rate, giving tests a noise-free channel to check recovery against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, Feature, FeatureSchema, PolicyRecord, Portfolio


@dataclass(frozen=True)
class SynthFeature:
    """One planted feature: a risk factor per category. Factors of 1.0
    everywhere make a pure noise feature. Numeric features spread their
    categories evenly over ``numeric_range``."""

    name: str
    factors: tuple[float, ...]
    kind: str = CATEGORICAL
    numeric_range: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not self.factors:
            raise ValueError(f"feature {self.name!r} declares no categories")
        if any(f <= 0 for f in self.factors):
            raise ValueError(f"feature {self.name!r}: risk factors must be positive")

    def category_values(self) -> tuple:
        if self.kind == NUMERIC:
            lo, hi = self.numeric_range
            if len(self.factors) == 1:
                return (float(lo),)
            return tuple(float(v) for v in np.linspace(lo, hi, len(self.factors)))
        return tuple(f"v{i}" for i in range(len(self.factors)))


def noise_feature(name: str, categories: int, kind: str = CATEGORICAL,
                  numeric_range: tuple[float, float] = (0.0, 1.0)) -> SynthFeature:
    return SynthFeature(name=name, factors=(1.0,) * categories, kind=kind,
                        numeric_range=numeric_range)


DEFAULT_FEATURES = (
    SynthFeature("SIG_A", factors=(1.0, 3.0)),
    SynthFeature("SIG_B", factors=(1.0, 1.5, 3.0)),
    noise_feature("NOISE_A", 3),
    noise_feature("NOISE_B", 4),
    noise_feature("NOISE_N", 5, kind=NUMERIC, numeric_range=(20.0, 60.0)),
)


@dataclass(frozen=True)
class SynthConfig:
    n: int = 5000
    seed: int = 0
    features: tuple[SynthFeature, ...] = DEFAULT_FEATURES
    base_frequency: float = 0.5
    severity_mean: float = 1.0
    severity_sigma: float = 0.75
    exposure_range: tuple[float, float] = (0.5, 5.0)
    third_party_share: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("record count must be >= 1")
        if self.base_frequency < 0:
            raise ValueError("base frequency must be >= 0")
        if self.severity_mean <= 0 or self.severity_sigma < 0:
            raise ValueError("severity parameters out of range")
        lo, hi = self.exposure_range
        if lo <= 0 or hi < lo:
            raise ValueError("exposure range must be positive and ordered")
        if not 0 <= self.third_party_share <= 1:
            raise ValueError("third-party share must be in [0, 1]")


def generate(cfg: SynthConfig) -> tuple[Portfolio, np.ndarray]:
    """Draw a synthetic portfolio; returns it with the per-record expected
    claim rate (frequency x mean severity, the noise-free ground truth).
    Deterministic for a fixed config.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n

    lo, hi = cfg.exposure_range
    exposure = rng.uniform(lo, hi, n)

    feature_values: dict[str, list] = {}
    frequency = np.full(n, cfg.base_frequency, dtype=float)
    for feat in cfg.features:
        idx = rng.integers(0, len(feat.factors), n)
        values = feat.category_values()
        feature_values[feat.name] = [values[i] for i in idx]
        frequency *= np.asarray(feat.factors, dtype=float)[idx]

    schema_features = [Feature(feat.name, feat.kind) for feat in cfg.features]
    if cfg.third_party_share > 0:
        toc = rng.random(n) < cfg.third_party_share
        feature_values["TOC"] = ["TP" if t else "CM" for t in toc]
        schema_features.append(Feature("TOC", CATEGORICAL))

    counts = rng.poisson(frequency * exposure)
    mu = math.log(cfg.severity_mean) - 0.5 * cfg.severity_sigma ** 2
    totals = np.zeros(n, dtype=float)
    for i, count in enumerate(counts):
        if count > 0:
            totals[i] = float(rng.lognormal(mu, cfg.severity_sigma, count).sum())

    schema = FeatureSchema(features=tuple(schema_features))
    records = tuple(
        PolicyRecord(
            id=f"P{i + 1:06d}",
            values={name: feature_values[name][i] for name in feature_values},
            total_claims=totals[i],
            exposure_years=float(exposure[i]),
        )
        for i in range(n)
    )
    expected_rate = frequency * cfg.severity_mean
    return Portfolio(schema=schema, records=records), expected_rate


def oracle_predict(x, training, cbar: float, kappa: float, normalize: bool = True) -> float:
    """Literal evaluation of the kernel-weighted average, kept deliberately
    naive (plain loops, direct powers, no underflow protection) as an
    independent check on the production predictor. Restrict kappa to modest
    values; extreme exponents are allowed to overflow here.
    """
    numerator = 0.0
    denominator = 0.0
    for coords, rate in training:
        d = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(x, coords)))
        if normalize:
            d /= cbar
        w = (1.0 + d) ** (-kappa)
        numerator += rate * w
        denominator += w
    return numerator / denominator
