import numpy as np
import pytest

from claimrate.dataset import NUMERIC
from claimrate.explain import explain, single_feature_prediction
from claimrate.predictor import KernelModel
from claimrate.synth import SynthConfig, SynthFeature, generate

# Every feature is binary with a real effect: category means are well
# separated (sharp large-kappa limit) and the one-feature prediction provably
# stays between the global mean and the category mean. With three or more
# categories the latter can fail: an off-category neighbor closer than the
# others drags the weighted mean outside the interval.
SEPARATED = SynthConfig(n=3000, seed=2, features=(
    SynthFeature("A", factors=(1.0, 3.0)),
    SynthFeature("B", factors=(1.0, 2.0)),
    SynthFeature("N", factors=(1.0, 2.5), kind=NUMERIC, numeric_range=(20.0, 50.0)),
))


@pytest.fixture(scope="module")
def model():
    portfolio, _ = generate(SEPARATED)
    fitted = KernelModel.fit(portfolio, kappa=8.0)
    # precondition for the sharp limit: distinct encoded category values
    for name in fitted.stats.feature_names:
        means = sorted(fitted.stats.category_means[name].values())
        gaps = np.diff(means) / fitted.stats.cbar
        assert gaps.min() > 0.05
    return fitted


def _all_category_pairs(model):
    for name in model.stats.feature_names:
        for value, mean in model.stats.category_means[name].items():
            yield name, value, mean


def test_kappa_zero_gives_global_mean_exactly(model):
    for name, value, _ in _all_category_pairs(model):
        assert single_feature_prediction(name, value, model, kappa=0.0) == model.stats.cbar


def test_huge_kappa_approaches_category_mean(model):
    for name, value, mean in _all_category_pairs(model):
        c_tilde = single_feature_prediction(name, value, model, kappa=500.0)
        assert abs(c_tilde - mean) < 1e-6


def test_betweenness_at_positive_kappa(model):
    for kappa in (0.5, 2.0, 8.0, 50.0):
        for name, value, mean in _all_category_pairs(model):
            c_tilde = single_feature_prediction(name, value, model, kappa=kappa)
            lo, hi = min(model.stats.cbar, mean), max(model.stats.cbar, mean)
            assert lo - 1e-9 <= c_tilde <= hi + 1e-9


def test_impacts_all_one_at_kappa_zero(model):
    record = {"A": "v0", "B": "v1", "N": 30.0}
    report = explain(record, model, kappa=0.0)
    for row in report.rows:
        assert row.impact == 1.0
    assert np.isclose(report.overall_ratio, 1.0, rtol=1e-12)


def test_planted_high_risk_category_stands_out():
    portfolio, _ = generate(SynthConfig(n=2000, seed=6))
    model = KernelModel.fit(portfolio, kappa=8.0)
    record = dict(portfolio.records[0].values)
    record["SIG_A"] = "v1"   # the factor-3 category
    report = explain(record, model)
    impacts = {row.feature: row.impact for row in report.rows}
    assert impacts["SIG_A"] > 1.0
    for noise in ("NOISE_A", "NOISE_B", "NOISE_N"):
        assert 0.9 < impacts[noise] < 1.1


def test_impacts_invariant_under_claim_rate_scaling(model):
    portfolio, _ = generate(SEPARATED)
    lam = 1000.0
    scaled_records = tuple(
        type(r)(id=r.id, values=r.values, total_claims=r.total_claims * lam,
                exposure_years=r.exposure_years)
        for r in portfolio.records)
    scaled = type(portfolio)(schema=portfolio.schema, records=scaled_records)
    scaled_model = KernelModel.fit(scaled, kappa=8.0)
    record = dict(portfolio.records[7].values)
    base = explain(record, model)
    rescaled = explain(record, scaled_model)
    for a, b in zip(base.rows, rescaled.rows):
        assert np.isclose(a.impact, b.impact, rtol=1e-9)


def test_report_is_pure_and_labeled(model):
    record = {"A": "v2", "B": "v0", "N": 50.0}
    a = explain(record, model, label="all-policies")
    b = explain(record, model, label="all-policies")
    assert a == b
    assert a.label == "all-policies"
    assert a.kappa == model.kappa
    assert len(a.rows) == len(model.stats.feature_names)
