"""Tests for the robust scalar kernels."""

import numpy as np
import pytest

from curveshape.robust import (
    WeightFunctionSpec,
    bisquare_loss,
    bisquare_weight,
    hampel_weight,
    mad_scale,
    median,
    qn_scale,
)


def qn_bruteforce(values):
    """Independent pairwise enumeration with the same correction factors."""
    v = np.asarray(values, float)
    n = v.size
    diffs = sorted(abs(v[i] - v[j]) for i in range(n) for j in range(i + 1, n))
    h = n // 2 + 1
    k = h * (h - 1) // 2
    if n <= 9:
        corr = {2: 0.399, 3: 0.994, 4: 0.512, 5: 0.844, 6: 0.611, 7: 0.857, 8: 0.669, 9: 0.872}[n]
    elif n % 2 == 1:
        corr = n / (n + 1.4)
    else:
        corr = n / (n + 3.8)
    return 2.2219 * corr * diffs[k - 1]


class TestMedian:
    def test_odd(self):
        assert median([3, 1, 2]) == 2.0

    def test_even_midpoint(self):
        assert median([1, 2, 3, 4]) == 2.5

    def test_singleton(self):
        assert median([5]) == 5.0

    def test_empty(self):
        with pytest.raises(ValueError, match="empty sample"):
            median([])


class TestMadScale:
    def test_constant(self):
        assert mad_scale([7, 7, 7, 7]) == 0.0

    def test_known_value(self):
        # median 3, absolute deviations {2,1,0,1,2}, median 1, times 1.4826
        assert mad_scale([1, 2, 3, 4, 5]) == pytest.approx(1.4826, abs=1e-12)

    def test_homogeneity(self, rng):
        v = rng.standard_normal(31)
        assert mad_scale(2.0 * v) == pytest.approx(2.0 * mad_scale(v), rel=1e-12)

    def test_translation_and_scale_invariance(self, rng):
        for _ in range(20):
            v = rng.standard_normal(int(rng.integers(2, 40)))
            s, t = float(rng.uniform(-3, 3)), float(rng.uniform(-10, 10))
            if s == 0:
                continue
            assert mad_scale(s * v + t) == pytest.approx(abs(s) * mad_scale(v), rel=1e-12, abs=1e-300)

    def test_degenerate(self):
        with pytest.raises(ValueError, match="degenerate sample"):
            mad_scale([1.0])


class TestQnScale:
    def test_constant(self):
        assert qn_scale([4.2, 4.2, 4.2, 4.2]) == 0.0

    @pytest.mark.parametrize("n", [2, 3, 5, 9, 10, 17, 50, 101, 200])
    def test_matches_bruteforce(self, n, rng):
        for _ in range(5):
            v = rng.standard_normal(n) * rng.uniform(0.5, 4.0)
            assert qn_scale(v) == qn_bruteforce(v)

    def test_invariance(self, rng):
        for _ in range(20):
            v = rng.standard_normal(int(rng.integers(2, 60)))
            s, t = float(rng.uniform(0.1, 5)), float(rng.uniform(-20, 20))
            assert qn_scale(s * v + t) == pytest.approx(s * qn_scale(v), rel=1e-12, abs=1e-300)

    def test_normal_consistency(self):
        # desk-scale version of the large-sample consistency check
        values = []
        for seed in range(40):
            sample = np.random.default_rng(seed).standard_normal(2000)
            values.append(qn_scale(sample))
        assert abs(np.mean(values) - 1.0) < 0.05

    def test_degenerate(self):
        with pytest.raises(ValueError, match="degenerate sample"):
            qn_scale([3.0])


class TestHampelWeight:
    def test_flat_region(self):
        assert hampel_weight(0.0) == 1.0
        assert hampel_weight(1.6449) == 1.0

    def test_third_branch_value(self):
        expected = ((2.3263 - 2.0) / (2.3263 - 1.9600)) * (1.6449 / 2.0)
        assert hampel_weight(2.0) == pytest.approx(expected, abs=1e-12)
        assert hampel_weight(2.0) == pytest.approx(0.7326, abs=1e-3)

    def test_beyond_r(self):
        assert hampel_weight(3.0) == 0.0

    def test_continuity_at_cutoffs(self):
        spec = WeightFunctionSpec("hampel")
        for c in (spec.hampel_a, spec.hampel_b, spec.hampel_r):
            below = hampel_weight(c - 1e-9)
            above = hampel_weight(c + 1e-9)
            assert abs(below - above) < 1e-6

    def test_even_and_bounded(self, rng):
        x = rng.uniform(-6, 6, 200)
        w = hampel_weight(x)
        assert np.all((0.0 <= w) & (w <= 1.0))
        np.testing.assert_allclose(w, hampel_weight(-x), atol=1e-15)

    def test_custom_spec(self):
        spec = WeightFunctionSpec("hampel", hampel_a=1.0, hampel_b=2.0, hampel_r=4.0)
        assert hampel_weight(1.5, spec) == pytest.approx(1.0 / 1.5)
        assert hampel_weight(3.0, spec) == pytest.approx((4 - 3) / (4 - 2) * (1 / 3))


class TestBisquare:
    def test_loss_at_zero(self):
        assert bisquare_loss(0.0, 2.0) == 0.0

    def test_loss_plateau(self):
        k = 2.0
        assert bisquare_loss(k, k) == pytest.approx(k * k / 6.0)
        assert bisquare_loss(5.0, k) == k * k / 6.0
        assert bisquare_loss(-17.0, k) == k * k / 6.0

    def test_loss_known_value(self):
        # x = k/2, k = 2: (4/6)(1 - (1 - 0.25)^3)
        assert bisquare_loss(1.0, 2.0) == pytest.approx((4 / 6) * (1 - 0.75**3), abs=1e-12)

    def test_loss_even_nondecreasing(self, rng):
        k = 3.0
        x = np.sort(rng.uniform(0, 6, 100))
        losses = bisquare_loss(x, k)
        assert np.all(np.diff(losses) >= -1e-15)
        np.testing.assert_allclose(bisquare_loss(-x, k), losses, atol=1e-15)

    def test_weight_boundaries(self):
        assert bisquare_weight(0.0, 2.0) == 1.0
        assert bisquare_weight(2.0, 2.0) == 0.0
        assert bisquare_weight(2.5, 2.0) == 0.0

    def test_weight_is_rescaled_loss_derivative(self):
        # psi = d/dx loss, weight = psi / x, checked by central differences
        k = 4.685
        h = 1e-6
        for x in np.linspace(0.2, k - 0.2, 25):
            psi = (bisquare_loss(x + h, k) - bisquare_loss(x - h, k)) / (2 * h)
            assert x * bisquare_weight(x, k) == pytest.approx(psi, rel=1e-6)

    def test_bad_k(self):
        with pytest.raises(ValueError):
            bisquare_loss(1.0, 0.0)
        with pytest.raises(ValueError):
            bisquare_weight(1.0, -1.0)


class TestWeightFunctionSpec:
    def test_invalid_cutoffs(self):
        with pytest.raises(ValueError):
            WeightFunctionSpec("hampel", hampel_a=2.0, hampel_b=1.0)
        with pytest.raises(ValueError):
            WeightFunctionSpec("bisquare", bisquare_k=0.0)
        with pytest.raises(ValueError):
            WeightFunctionSpec("huber")

    def test_dispatch(self):
        assert WeightFunctionSpec("hampel").weight(0.0) == 1.0
        assert WeightFunctionSpec("bisquare").weight(0.0) == 1.0
        assert WeightFunctionSpec("bisquare", bisquare_k=2.0).weight(3.0) == 0.0
