"""Tests for metrics, the synthetic generator, and the backtest harness."""

from datetime import date

import numpy as np
import pytest

from conftest import arbitrage_free_gamma, synthetic_dataset
from curveshape import (
    SyntheticMarketConfig,
    XPathParams,
    backtest,
    build_regression_dataset,
    compute_metrics,
    constraints_for_weights,
    irls_fit,
    synthesize_market,
)
from curveshape.backtest import read_comparison_csv
from curveshape.exceptions import DataError

GAMMA4 = np.array([1.12, -1.6, 0.88, 1.4, 0.92, 0.9, 1.08, -0.7])
W4 = np.full(4, 0.25)


def metrics_oracle(actual, predicted):
    n, k = actual.shape
    abs_sum = sq_sum = 0.0
    row_ae, row_se = [], []
    for i in range(n):
        ra = rs = 0.0
        for j in range(k):
            e = actual[i][j] - predicted[i][j]
            abs_sum += abs(e)
            sq_sum += e * e
            ra += abs(e)
            rs += e * e
        row_ae.append(ra / k)
        row_se.append(rs / k)
    return (
        abs_sum / (n * k),
        float(np.median(row_ae)),
        sq_sum / (n * k),
        float(np.median(row_se)),
    )


class TestComputeMetrics:
    def test_exact_predictions(self, rng):
        a = rng.standard_normal((7, 3))
        m = compute_metrics(a, a)
        assert (m.mean_ae, m.med_ae, m.mean_se, m.med_se) == (0.0, 0.0, 0.0, 0.0)

    def test_hand_instance(self):
        actual = np.array([[1.0, 1.0], [3.0, 3.0]])
        predicted = np.zeros((2, 2))
        m = compute_metrics(actual, predicted)
        assert (m.mean_ae, m.med_ae, m.mean_se, m.med_se) == (2.0, 2.0, 5.0, 5.0)

    def test_matches_double_loop_oracle(self, rng):
        for _ in range(25):
            n, k = int(rng.integers(1, 12)), int(rng.integers(1, 6))
            a, p = rng.standard_normal((n, k)), rng.standard_normal((n, k))
            m = compute_metrics(a, p)
            oracle = metrics_oracle(a, p)
            np.testing.assert_allclose(
                [m.mean_ae, m.med_ae, m.mean_se, m.med_se], oracle, atol=1e-12
            )

    def test_permutation_invariance(self, rng):
        a, p = rng.standard_normal((9, 4)), rng.standard_normal((9, 4))
        rows = rng.permutation(9)
        cols = rng.permutation(4)
        base = compute_metrics(a, p)
        rowperm = compute_metrics(a[rows], p[rows])
        colperm = compute_metrics(a[:, cols], p[:, cols])
        assert base == rowperm
        assert base.mean_ae == pytest.approx(colperm.mean_ae, abs=1e-15)
        assert base.mean_se == pytest.approx(colperm.mean_se, abs=1e-15)

    def test_jensen(self, rng):
        for _ in range(10):
            a, p = rng.standard_normal((15, 3)), rng.standard_normal((15, 3))
            m = compute_metrics(a, p)
            assert m.mean_ae**2 <= m.mean_se + 1e-15

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            compute_metrics(np.ones((3, 2)), np.ones((2, 3)))


class TestSynthesizeMarket:
    def test_noise_free_is_exact(self):
        config = SyntheticMarketConfig(true_gamma=GAMMA4, weights=W4, n_dates=40, noise_scale=0.0, seed=9)
        market = synthesize_market(config)
        dataset, _ = build_regression_dataset(market.table)
        predicted = dataset.x[:, None] * GAMMA4[0::2] + GAMMA4[1::2]
        np.testing.assert_allclose(dataset.y, predicted, atol=1e-12)

    def test_determinism(self):
        config = SyntheticMarketConfig(
            true_gamma=GAMMA4, weights=W4, n_dates=50, seed=4,
            contamination_fraction=0.2, outlier_magnitude=9.0,
        )
        a = synthesize_market(config)
        b = synthesize_market(config)
        assert a.table.to_csv() == b.table.to_csv()
        assert a.contaminated_ids == b.contaminated_ids

    def test_contaminated_rows_downweighted(self):
        config = SyntheticMarketConfig(
            true_gamma=GAMMA4, weights=W4, n_dates=300, noise_scale=0.5,
            contamination_fraction=0.15, outlier_magnitude=8.0, seed=21,
        )
        market = synthesize_market(config)
        dataset, _ = build_regression_dataset(market.table)
        result = irls_fit(dataset, constraints_for_weights(W4))
        weight_by_id = dict(zip(result.case_ids, result.case_weights))
        bad = [weight_by_id[cid] for cid in market.contaminated_ids]
        good = [weight_by_id[cid] for cid in market.clean_ids]
        assert np.mean(bad) < np.mean(good)
        assert np.mean(bad) < 0.3

    def test_leverage_contamination(self):
        config = SyntheticMarketConfig(
            true_gamma=GAMMA4, weights=W4, n_dates=200, noise_scale=0.3,
            contamination_fraction=0.1, outlier_magnitude=3.0,
            contamination_type="leverage", seed=5,
        )
        market = synthesize_market(config)
        dataset, _ = build_regression_dataset(market.table)
        result = irls_fit(dataset, constraints_for_weights(W4))
        weight_by_id = dict(zip(result.case_ids, result.case_weights))
        assert np.mean([weight_by_id[c] for c in market.contaminated_ids]) < 0.1

    def test_invariants_enforced(self):
        with pytest.raises(DataError, match="non-arbitrage"):
            SyntheticMarketConfig(true_gamma=np.array([1.5, 0.0] * 4), weights=W4)
        with pytest.raises(DataError, match="fraction"):
            SyntheticMarketConfig(true_gamma=GAMMA4, weights=W4, contamination_fraction=0.6)


def _merged_train_test(seed=123, n_train=500, n_test=100, **contamination):
    n = n_train + n_test
    base = dict(
        true_gamma=GAMMA4,
        weights=W4,
        n_dates=n,
        start=date(2013, 1, 2),
        delivery_year=2014,
        noise_scale=0.5,
        seed=seed,
        x_path=XPathParams(level=50.0, seasonal_amplitude=12.0, period_days=365.0, noise=0.4),
    )
    dirty = synthesize_market(SyntheticMarketConfig(**base, **contamination))
    clean = synthesize_market(SyntheticMarketConfig(**base))
    dates = dirty.table.dates()
    train_range = (dates[0], dates[n_train - 1])
    test_range = (dates[n_train], dates[-1])
    merged = dirty.table.filter_dates(*train_range).merged_with(
        clean.table.filter_dates(*test_range)
    )
    return merged, clean, dirty, train_range, test_range


class TestBacktest:
    def test_classical_has_best_in_sample_mean_se_on_clean_data(self):
        merged, clean, _, train_range, test_range = _merged_train_test(seed=8, n_train=150, n_test=50)
        comp = backtest(merged, train_range, test_range, ["classical", "mcrm"], constraints_for_weights(W4))
        classical = comp.by_method("classical").in_sample.mean_se
        robust = comp.by_method("mcrm").in_sample.mean_se
        assert classical <= robust + 1e-6

    def test_contaminated_ordering(self):
        merged, clean, dirty, train_range, test_range = _merged_train_test(
            contamination_fraction=0.2,
            outlier_magnitude=10.0,
            contamination_sign="positive",
            contamination_column=0,
        )
        comp = backtest(merged, train_range, test_range, ["mcrm", "classical"], constraints_for_weights(W4))
        assert comp.by_method("mcrm").out_sample.med_se < comp.by_method("classical").out_sample.med_se

    def test_train_equals_test_on_noise_free_data(self):
        config = SyntheticMarketConfig(true_gamma=GAMMA4, weights=W4, n_dates=60, noise_scale=0.0, seed=2)
        market = synthesize_market(config)
        dates = market.table.dates()
        full = (dates[0], dates[-1])
        comp = backtest(market.table, full, full, ["mcrm", "classical"], constraints_for_weights(W4))
        for method in ("mcrm", "classical"):
            ev = comp.by_method(method)
            for report in (ev.in_sample, ev.out_sample):
                assert report.mean_se < 1e-18

    def test_empty_train_errors(self):
        config = SyntheticMarketConfig(true_gamma=GAMMA4, weights=W4, n_dates=30, seed=2)
        market = synthesize_market(config)
        with pytest.raises(DataError, match="empty train"):
            backtest(
                market.table,
                (date(2001, 1, 1), date(2001, 2, 1)),
                (date(2013, 1, 2), date(2013, 1, 20)),
                ["mcrm"],
                constraints_for_weights(W4),
            )

    def test_csv_roundtrip(self, tmp_path):
        merged, _, _, train_range, test_range = _merged_train_test(seed=31, n_train=80, n_test=40)
        comp = backtest(
            merged, train_range, test_range, ["mcrm", "classical", "ratio-average"],
            constraints_for_weights(W4),
        )
        out = tmp_path / "comparison.csv"
        comp.write_csv(out)
        parsed = read_comparison_csv(out)
        for ev in comp.evaluations:
            assert parsed[(ev.method, "in")] == ev.in_sample
            assert parsed[(ev.method, "out")] == ev.out_sample

    def test_reproducible(self):
        merged, _, _, tr, te = _merged_train_test(seed=55, n_train=90, n_test=30)
        a = backtest(merged, tr, te, ["mcrm"], constraints_for_weights(W4))
        b = backtest(merged, tr, te, ["mcrm"], constraints_for_weights(W4))
        assert a.to_csv() == b.to_csv()

    def test_unknown_method(self):
        merged, _, _, tr, te = _merged_train_test(seed=55, n_train=30, n_test=10)
        with pytest.raises(DataError, match="unknown method"):
            backtest(merged, tr, te, ["theil-sen"], constraints_for_weights(W4))

    def test_refit_option_matches_frozen_on_stationary_noise_free_data(self):
        config = SyntheticMarketConfig(true_gamma=GAMMA4, weights=W4, n_dates=40, noise_scale=0.0, seed=6)
        market = synthesize_market(config)
        dates = market.table.dates()
        tr, te = (dates[0], dates[29]), (dates[30], dates[-1])
        system = constraints_for_weights(W4)
        frozen = backtest(market.table, tr, te, ["classical"], system)
        refit = backtest(market.table, tr, te, ["classical"], system, refit_out_of_sample=True)
        assert frozen.by_method("classical").out_sample.mean_se < 1e-16
        assert refit.by_method("classical").out_sample.mean_se < 1e-16


def test_hourly_shaped_fit(rng):
    # a day-to-hour fit is just a K=24 instance of the same estimator
    gamma = arbitrage_free_gamma(rng, 24)
    ds = synthetic_dataset(rng, gamma, n=80, noise=0.3, null_space_noise=True, weights=np.full(24, 1 / 24))
    system = constraints_for_weights(np.full(24, 1 / 24))
    result = irls_fit(ds, system)
    assert result.arbitrage_gap_maxabs <= 1e-6
    assert np.max(np.abs(result.slopes - gamma[0::2])) < 0.2
