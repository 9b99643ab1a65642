"""Acceptance suite: one test per release criterion.

Each test pins the tolerance it must meet and its runtime budget, and prints
one PASS line (visible under ``pytest -s``) when it clears. Criteria that
depend on sampled data use fixed seeds, so the whole suite is deterministic.
"""

import dataclasses
import hashlib
import math
import os
import time

import numpy as np

from claimrate.cli import main as cli_main
from claimrate.dataset import NUMERIC
from claimrate.encoder import encode_portfolio
from claimrate.evaluation import apply_calibration, calibrate, evaluate_kappa_curve
from claimrate.explain import single_feature_prediction
from claimrate.features import feature_importance, greedy_select
from claimrate.predictor import KernelModel, predict, predict_record
from claimrate.synth import SynthConfig, SynthFeature, generate, oracle_predict
from helpers import build_portfolio, manual_model

SIGNALS = {"SIG_A", "SIG_B"}
NOISE = {"NOISE_A", "NOISE_B", "NOISE_N"}


class _Budget:
    """Context manager asserting a test's wall-clock budget."""

    def __init__(self, seconds: float):
        self.limit = seconds
        self.elapsed = 0.0

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self._start
        if exc == (None, None, None):
            assert self.elapsed < self.limit, \
                f"runtime {self.elapsed:.1f}s exceeded budget {self.limit:.0f}s"
        return False


def _report(criterion: str, budget: _Budget):
    print(f"PASS: {criterion} ({budget.elapsed:.1f}s)")


def test_c01_kappa_zero_equals_training_mean():
    with _Budget(10) as budget:
        for seed in range(50):
            portfolio, _ = generate(SynthConfig(n=120, seed=seed))
            model = KernelModel.fit(portfolio, kappa=0.0)
            mean = float(np.mean(model.train_rates))
            for record in portfolio.records[:3]:
                value = predict_record(record, model).value
                assert abs(value - mean) <= 1e-12 * abs(mean)
    _report("criterion 1: kappa=0 prediction equals the training mean (rel 1e-12, "
            "50 random portfolios)", budget)


def test_c02_constant_rates_predict_the_constant():
    with _Budget(5) as budget:
        c = 3.5
        rows = [(f"r{i}", {"SEX": "m" if i % 2 else "f", "AGE": float(20 + 5 * i)},
                 c * e, e) for i, e in enumerate([1.0, 2.0, 4.0, 1.0, 2.0, 4.0, 8.0])]
        portfolio = build_portfolio(rows, [("SEX", "categorical"), ("AGE", "numeric")])
        assert np.all(portfolio.claim_rates() == c)
        for kappa in (0.0, 1.0, 8.0, 50.0):
            model = KernelModel.fit(portfolio, kappa=kappa)
            probe = {"SEX": "f", "AGE": 33.0}
            assert abs(predict_record(probe, model).value - c) <= 1e-12 * c
    _report("criterion 2: constant training rates are predicted exactly "
            "(rel 1e-12 at kappa in {0, 1, 8, 50})", budget)


def test_c03_large_kappa_limit():
    with _Budget(10) as budget:
        rng = np.random.default_rng(0)
        accepted = 0
        while accepted < 100:
            coords = rng.uniform(0.0, 10.0, size=30)
            rates = rng.uniform(0.0, 3.0, size=30)
            x = rng.uniform(0.0, 10.0)
            d = np.abs(coords - x)
            order = np.argsort(d)
            # distinct distances with a clear runner-up gap keep the
            # kappa=500 residual far below the tolerance
            if (1.0 + d[order[1]]) / (1.0 + d[order[0]]) < 1.04:
                continue
            accepted += 1
            model = manual_model(coords, rates, cbar=1.0, kappa=500.0)
            value = predict(np.array([x]), model).value
            assert abs(value - rates[order[0]]) < 1e-6

        # an exact tie: the limit averages the tied samples
        model = manual_model(np.array([3.0, 7.0, 30.0]), np.array([1.0, 3.0, 50.0]),
                             cbar=1.0, kappa=500.0)
        assert abs(predict(np.array([5.0]), model).value - 2.0) < 1e-6
        # coincident training points tie at distance zero
        model = manual_model(np.array([5.0, 5.0, 30.0]), np.array([1.0, 3.0, 50.0]),
                             cbar=1.0, kappa=500.0)
        assert abs(predict(np.array([5.0]), model).value - 2.0) < 1e-6
    _report("criterion 3: kappa=500 reaches the nearest neighbor (abs 1e-6, "
            "100 instances) and averages exact ties", budget)


def test_c04_unbiased_under_redrawn_rates():
    with _Budget(60) as budget:
        rng = np.random.default_rng(1)
        target_mean = 2.0
        model = manual_model(rng.normal(size=(100, 3)) * 0.5,
                             rng.exponential(target_mean, 100), cbar=1.0, kappa=8.0)
        x = rng.normal(size=3) * 0.5
        values = np.empty(10_000)
        for i in range(10_000):
            redrawn = dataclasses.replace(
                model, train_rates=rng.exponential(target_mean, 100))
            values[i] = predict(x, redrawn).value
        assert abs(values.mean() - target_mean) <= 0.02 * target_mean
    _report("criterion 4: mean prediction over 10,000 redrawn-rate draws within "
            "2% of the rate mean at kappa=8", budget)


def test_c05_oracle_equivalence():
    with _Budget(10) as budget:
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(2, 50))
            n_features = int(rng.integers(1, 5))
            coords = rng.normal(size=(n, n_features))
            rates = rng.exponential(2.0, n)
            cbar = float(rng.uniform(0.2, 5.0))
            kappa = float(rng.uniform(0.0, 50.0))
            x = rng.normal(size=n_features)
            model = manual_model(coords, rates, cbar=cbar, kappa=kappa)
            expected = oracle_predict(x, list(zip(coords, rates)), cbar=cbar, kappa=kappa)
            assert math.isclose(predict(x, model).value, expected, rel_tol=1e-10)
    _report("criterion 5: production predictor matches the naive oracle "
            "(rel 1e-10, 100 instances, kappa in [0, 50])", budget)


def test_c06_scale_invariance():
    with _Budget(10) as budget:
        lam = 1000.0
        portfolio, _ = generate(SynthConfig(n=300, seed=3))
        features = [(f.name, f.kind) for f in portfolio.schema.features]
        scaled = build_portfolio(
            [(r.id, r.values, r.total_claims * lam, r.exposure_years)
             for r in portfolio.records], features)
        m1 = KernelModel.fit(portfolio, kappa=8.0)
        m2 = KernelModel.fit(scaled, kappa=8.0)
        for record in portfolio.records[:50]:
            v1 = predict_record(record, m1).value
            v2 = predict_record(record, m2).value
            assert abs(v2 - lam * v1) <= 1e-9 * abs(lam * v1)
        c1 = encode_portfolio(portfolio, m1.stats)
        c2 = encode_portfolio(scaled, m2.stats)
        for i in range(0, 40):
            d1 = np.sqrt(np.sum((c1[i] - c1[i + 1:41]) ** 2, axis=1)) / m1.stats.cbar
            d2 = np.sqrt(np.sum((c2[i] - c2[i + 1:41]) ** 2, axis=1)) / m2.stats.cbar
            assert np.allclose(d1, d2, rtol=1e-12, atol=1e-12)
    _report("criterion 6: scaling all claims by 1000 scales predictions by 1000 "
            "(rel 1e-9) and leaves distances unchanged (1e-12)", budget)


def test_c07_baseline_error_is_one_at_kappa_zero():
    with _Budget(10) as budget:
        for seed in (4, 5):
            portfolio, _ = generate(SynthConfig(n=500, seed=seed))
            report = evaluate_kappa_curve(portfolio, grid=np.array([0.0, 1.0]),
                                          k=5, seed=seed)
            assert abs(report.e_curve[0] - 1.0) <= 1e-9
    _report("criterion 7: pooled cross-validated E(0) = 1 (abs 1e-9)", budget)


def test_c08_signal_recovery_across_seeds():
    with _Budget(600) as budget:
        kappa_stars, e_stars = [], []
        noise_ok = signal_ok = 0
        greedy_hits = 0
        for seed in range(20):
            portfolio, _ = generate(SynthConfig(n=5000, seed=seed))
            report = evaluate_kappa_curve(portfolio, k=5, seed=seed, threads=4)
            table = feature_importance(portfolio, k=5, seed=seed, threads=4)
            trace = greedy_select(portfolio, table, k=5, seed=seed, threads=4)
            kappa_stars.append(report.kappa_star)
            e_stars.append(report.e_at_star)
            values = {row.feature: row.e_value for row in table.rows}
            noise_ok += all(values[f] >= 0.98 for f in NOISE)
            signal_ok += all(values[f] <= 0.95 for f in SIGNALS)
            kept = set(trace.selected)
            greedy_hits += (SIGNALS <= kept) and len(NOISE - kept) >= 2
        assert np.median(kappa_stars) >= 1.0
        assert np.median(e_stars) <= 0.9
        assert noise_ok == 20, f"noise importance >= 0.98 held in only {noise_ok}/20 seeds"
        assert signal_ok == 20, f"signal importance <= 0.95 held in only {signal_ok}/20 seeds"
        assert greedy_hits >= 16, f"greedy recovered the plant in only {greedy_hits}/20 seeds"
    _report(f"criterion 8: planted-signal recovery across 20 seeds "
            f"(median kappa*={np.median(kappa_stars):g}, "
            f"median E*={np.median(e_stars):.3f}, greedy {greedy_hits}/20)", budget)


def test_c09_calibration_identity():
    with _Budget(10) as budget:
        train, _ = generate(SynthConfig(n=400, seed=6))
        holdout, _ = generate(SynthConfig(n=300, seed=7))
        model = KernelModel.fit(train, kappa=8.0)
        calibration = calibrate(model, holdout)
        calibrated = apply_calibration(model, calibration)
        coords = encode_portfolio(holdout, calibrated.stats)
        total_pred = float(np.sum([predict(x, calibrated).value for x in coords]))
        total_actual = float(np.sum(holdout.claim_rates()))
        assert abs(total_pred - total_actual) <= 1e-9 * total_actual
        recalibration = calibrate(calibrated, holdout)
        assert abs(recalibration.gamma - 1.0) <= 1e-9
    _report("criterion 9: calibrated totals match actual totals (rel 1e-9) and "
            "recalibration yields gamma=1 (abs 1e-9)", budget)


def test_c10_metric_axioms():
    with _Budget(5) as budget:
        from claimrate.encoder import distance
        rng = np.random.default_rng(8)
        for _ in range(1000):
            x, y, z = rng.normal(size=(3, 6)) * rng.uniform(0.1, 10.0)
            cbar = float(rng.uniform(0.1, 10.0))
            assert distance(x, x, cbar) == 0.0
            assert abs(distance(x, y, cbar) - distance(y, x, cbar)) <= 1e-12
            assert distance(x, z, cbar) <= distance(x, y, cbar) + distance(y, z, cbar) + 1e-12
    _report("criterion 10: metric axioms on 1,000 random triples (1e-12)", budget)


def test_c11_explanation_limits():
    with _Budget(10) as budget:
        # binary features keep every category mean well separated and make
        # the between-mean property exact rather than approximate
        cfg = SynthConfig(n=3000, seed=9, features=(
            SynthFeature("A", factors=(1.0, 3.0)),
            SynthFeature("B", factors=(1.0, 2.0)),
            SynthFeature("N", factors=(1.0, 2.5), kind=NUMERIC,
                         numeric_range=(20.0, 50.0)),
        ))
        portfolio, _ = generate(cfg)
        model = KernelModel.fit(portfolio, kappa=8.0)
        cbar = model.stats.cbar
        for name in model.stats.feature_names:
            means = sorted(model.stats.category_means[name].values())
            assert (np.diff(means) / cbar).min() > 0.05, "categories not separated"
            for value, mean in model.stats.category_means[name].items():
                assert single_feature_prediction(name, value, model, kappa=0.0) == cbar
                at_500 = single_feature_prediction(name, value, model, kappa=500.0)
                assert abs(at_500 - mean) < 1e-6
                at_8 = single_feature_prediction(name, value, model, kappa=8.0)
                lo, hi = min(cbar, mean), max(cbar, mean)
                assert lo - 1e-9 <= at_8 <= hi + 1e-9
    _report("criterion 11: one-feature predictions hit the global mean at kappa=0 "
            "(exact), the category mean at kappa=500 (1e-6), and stay between "
            "them at kappa=8", budget)


def _run_cli(*argv) -> None:
    assert cli_main(list(argv)) == 0


def _tree_hashes(root) -> dict:
    out = {}
    for name in sorted(os.listdir(root)):
        with open(os.path.join(root, name), "rb") as fh:
            out[name] = hashlib.sha256(fh.read()).hexdigest()
    return out


def test_c12_cli_determinism(tmp_path):
    with _Budget(120) as budget:
        data = tmp_path / "data"
        _run_cli("synth", "--out", str(data), "--n", "300", "--seed", "1")
        portfolio = str(data / "portfolio.csv")
        schema = str(data / "schema.txt")
        subset = tmp_path / "subset.csv"
        subset.write_text(
            "\n".join(open(portfolio).read().splitlines()[:3]) + "\n", encoding="utf-8")
        model_dir = tmp_path / "model"
        _run_cli("fit", "--input", portfolio, "--schema", schema, "--out", str(model_dir))

        commands = {
            "synth": ["synth", "--n", "300", "--seed", "1"],
            "fit": ["fit", "--input", portfolio, "--schema", schema],
            "evaluate": ["evaluate", "--input", portfolio, "--schema", schema,
                         "--kappa-grid", "0:5:1"],
            "optimize-kappa": ["optimize-kappa", "--input", portfolio, "--schema", schema,
                               "--kappa-grid", "0:5:1"],
            "importance": ["importance", "--input", portfolio, "--schema", schema],
            "select": ["select", "--input", portfolio, "--schema", schema],
            "predict": ["predict", "--train", portfolio, "--schema", schema,
                        "--input", portfolio, "--kappa", "8",
                        "--model", str(model_dir / "target_stats.csv")],
            "explain": ["explain", "--train", portfolio, "--schema", schema,
                        "--input", str(subset), "--kappa", "8"],
            "calibrate": ["calibrate", "--train", portfolio, "--schema", schema,
                          "--input", portfolio, "--kappa", "8"],
        }
        for name, argv in commands.items():
            runs = {}
            for threads in (1, 8):
                for attempt in (1, 2):
                    out = tmp_path / f"{name}-t{threads}-{attempt}"
                    _run_cli(*argv, "--out", str(out), "--threads", str(threads))
                    runs[(threads, attempt)] = _tree_hashes(out)
            assert runs[(1, 1)] == runs[(1, 2)], f"{name}: rerun differs at 1 thread"
            assert runs[(8, 1)] == runs[(8, 2)], f"{name}: rerun differs at 8 threads"
            assert runs[(1, 1)] == runs[(8, 1)], f"{name}: thread count changed output"
    _report("criterion 12: every CLI command is byte-identical across reruns "
            "at 1 and 8 worker threads", budget)
