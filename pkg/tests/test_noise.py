"""Tests for Brownian / regulated-Levy noise generation."""

import math

import numpy as np
import pytest

from sddesim.noise import (
    NoiseSpec,
    classify_noise,
    levy_moments,
    sample_brownian_increments,
    sample_jump_events,
    sample_jump_sizes,
    sample_noise_path,
)


class TestNoiseSpec:
    def test_invalid_parameters(self):
        with pytest.raises(ValueError, match="sigma"):
            NoiseSpec(sigma=-1.0)
        with pytest.raises(ValueError, match="lambda_n"):
            NoiseSpec(lambda_n=-0.1)
        with pytest.raises(ValueError, match="zeta"):
            NoiseSpec(zeta=-0.5)
        with pytest.raises(ValueError, match="jump_law"):
            NoiseSpec(jump_law="cauchy")

    def test_centered_flag_checked_against_law(self):
        # one-sided two-point law has mean zeta > 0
        with pytest.raises(ValueError, match="centered"):
            NoiseSpec(lambda_n=1.0, zeta=1.0, jump_law="two_point",
                      up_weight=1.0, centered=True)
        spec = NoiseSpec(lambda_n=1.0, zeta=1.0, jump_law="two_point", up_weight=1.0)
        assert spec.centered is False
        assert spec.jump_mean() == 1.0

    def test_analytic_moments(self):
        spec = NoiseSpec(lambda_n=2.0, zeta=0.5, jump_law="two_point")
        assert spec.jump_mean() == 0.0
        assert spec.jump_second_moment() == 0.25
        spec_u = NoiseSpec(lambda_n=1.0, zeta=0.6, jump_law="uniform")
        assert spec_u.jump_second_moment() == pytest.approx(0.36 / 3.0, abs=1e-15)
        # frozen from the high-precision erf oracle: E Z^2 for a std normal
        # conditioned on [-3, 3] is 0.97333692466254147659, scaled by (zeta/3)^2
        spec_g = NoiseSpec(lambda_n=1.0, zeta=0.9, jump_law="truncated_gaussian")
        assert spec_g.jump_second_moment() == pytest.approx(
            (0.9 / 3.0) ** 2 * 0.9733369246625415, rel=1e-13)

    def test_unit_ball_jump_mean(self):
        assert NoiseSpec(zeta=0.5, jump_law="uniform").unit_ball_jump_mean() == 0.0
        one_sided = NoiseSpec(lambda_n=1.0, zeta=0.7, jump_law="two_point", up_weight=1.0)
        assert one_sided.unit_ball_jump_mean() == 0.7
        # mass outside the unit ball does not contribute
        big = NoiseSpec(lambda_n=1.0, zeta=2.0, jump_law="two_point", up_weight=1.0)
        assert big.unit_ball_jump_mean() == 0.0


class TestBrownianIncrements:
    def test_empty(self):
        assert sample_brownian_increments(1, 1.0, 0).size == 0

    def test_invalid_dt(self):
        with pytest.raises(ValueError, match="dt"):
            sample_brownian_increments(1, 0.0, 10)

    def test_gaussian_statistics(self):
        # mean within 4/sqrt(n) of 0, variance within 5% of dt
        n = 10 ** 5
        inc = sample_brownian_increments(42, 1.0, n)
        assert abs(inc.mean()) < 4.0 / math.sqrt(n)
        assert abs(inc.var() - 1.0) < 0.05

    def test_determinism(self):
        a = sample_brownian_increments(7, 0.01, 1000)
        b = sample_brownian_increments(7, 0.01, 1000)
        assert np.array_equal(a, b)


class TestJumpEvents:
    def test_no_jumps(self):
        spec = NoiseSpec(lambda_n=0.0)
        assert sample_jump_events(3, spec, 10.0) == ()

    def test_invalid_horizon(self):
        with pytest.raises(ValueError, match="horizon"):
            sample_jump_events(3, NoiseSpec(lambda_n=1.0, zeta=1.0), 0.0)

    def test_poisson_count_statistics(self):
        # mean count over 10^3 repetitions within 3*sqrt(20/10^3) of 20
        spec = NoiseSpec(lambda_n=2.0, zeta=1.0, jump_law="uniform")
        reps = 1000
        counts = [len(sample_jump_events((11, k), spec, 10.0)) for k in range(reps)]
        assert abs(np.mean(counts) - 20.0) < 3.0 * math.sqrt(20.0 / reps)

    def test_sorted_and_inside_horizon(self):
        spec = NoiseSpec(lambda_n=5.0, zeta=0.3, jump_law="uniform")
        events = sample_jump_events(5, spec, 4.0)
        times = [ev.time for ev in events]
        assert times == sorted(times)
        assert all(0.0 < t <= 4.0 for t in times)

    @pytest.mark.parametrize("law", ["uniform", "two_point", "truncated_gaussian"])
    def test_jump_bound_p2_exact(self, law):
        # property (P2): |size| <= zeta with zero tolerance
        spec = NoiseSpec(lambda_n=20.0, zeta=0.5, jump_law=law)
        events = sample_jump_events(9, spec, 10.0)
        assert len(events) > 0
        assert all(abs(ev.size) <= 0.5 for ev in events)

    def test_jump_counts_exchangeable(self):
        # chi-square over disjoint equal-length intervals at alpha = 1e-3
        from scipy.stats import chi2
        spec = NoiseSpec(lambda_n=3.0, zeta=1.0)
        events = sample_jump_events(123, spec, 400.0)
        k = 20
        counts, _ = np.histogram([ev.time for ev in events],
                                 bins=np.linspace(0.0, 400.0, k + 1))
        expected = len(events) / k
        stat = ((counts - expected) ** 2 / expected).sum()
        assert stat < chi2.ppf(1.0 - 1e-3, k - 1)


class TestJumpSizes:
    def test_two_point_support(self):
        rng = np.random.default_rng(0)
        spec = NoiseSpec(lambda_n=1.0, zeta=0.4, jump_law="two_point")
        sizes = sample_jump_sizes(rng, spec, 500)
        assert set(np.unique(np.abs(sizes))) == {0.4}

    def test_truncated_gaussian_moments(self):
        rng = np.random.default_rng(1)
        spec = NoiseSpec(lambda_n=1.0, zeta=1.5, jump_law="truncated_gaussian")
        sizes = sample_jump_sizes(rng, spec, 200_000)
        assert np.abs(sizes).max() <= 1.5
        assert abs(sizes.mean()) < 0.005
        assert sizes.var() == pytest.approx(spec.jump_second_moment(), rel=0.02)


class TestLevyMoments:
    def test_pure_brownian(self):
        assert levy_moments(NoiseSpec(sigma=1.0, lambda_n=0.0), 3.0) == (0.0, 3.0, 3.0)

    def test_two_point_arithmetic(self):
        # lambda = sigma^2 + lambda_n E Z1^2 = 0 + 2*0.25
        spec = NoiseSpec(sigma=0.0, lambda_n=2.0, zeta=0.5, jump_law="two_point")
        assert levy_moments(spec, 1.0) == (0.0, 0.5, 0.5)

    def test_degenerate(self):
        assert levy_moments(NoiseSpec(sigma=0.0, lambda_n=0.0), 5.0) == (0.0, 0.0, 0.0)

    def test_non_martingale_mean(self):
        spec = NoiseSpec(sigma=0.0, lambda_n=2.0, zeta=0.5, jump_law="two_point",
                         up_weight=1.0)
        mean, var, qv = levy_moments(spec, 3.0)
        assert mean == pytest.approx(2.0 * 0.5 * 3.0)
        assert var == qv == pytest.approx(2.0 * 0.25 * 3.0)

    def test_empirical_variance_within_band(self):
        # over K paths, sample variance of L(t) within 3 SE of lambda*t
        spec = NoiseSpec(sigma=0.5, lambda_n=1.0, zeta=0.5, jump_law="uniform")
        for t in (0.5, 1.0, 5.0):
            n_steps = max(int(round(t / 0.05)), 1)
            vals = []
            for k in range(2000):
                p = sample_noise_path((77, k), spec, t / n_steps, n_steps)
                vals.append(p.cumulative_levy(spec.sigma)[-1])
            vals = np.asarray(vals)
            _, var, _ = levy_moments(spec, t)
            m2 = ((vals - vals.mean()) ** 2).mean()
            m4 = ((vals - vals.mean()) ** 4).mean()
            se = math.sqrt(max(m4 - m2 ** 2, 1e-30) / len(vals))
            assert abs(vals.var() - var) < 3.0 * se


class TestClassification:
    def test_pure_brownian_is_martingale(self):
        assert classify_noise(NoiseSpec(sigma=1.0, lambda_n=0.0)) == "HRegM"

    def test_centered_law(self):
        assert classify_noise(NoiseSpec(lambda_n=1.0, zeta=1.0, jump_law="uniform")) == "HRegM"

    def test_one_sided_law_not_martingale(self):
        spec = NoiseSpec(lambda_n=1.0, zeta=1.0, jump_law="two_point", up_weight=1.0)
        assert classify_noise(spec) == "HReg"


class TestNoiseCsv:
    def test_path_and_jump_export(self):
        import io

        from sddesim.noise import jumps_to_csv, path_to_csv

        spec = NoiseSpec(sigma=0.5, lambda_n=3.0, zeta=0.4, jump_law="uniform")
        p = sample_noise_path(17, spec, 0.1, 50)
        buf = io.StringIO()
        path_to_csv(p, spec.sigma, buf, header="hash=x")
        lines = buf.getvalue().splitlines()
        assert lines[0] == "# hash=x"
        assert lines[1] == "t,dW,cumulative_L"
        assert len(lines) == 2 + 51
        jbuf = io.StringIO()
        jumps_to_csv(p.jumps, jbuf)
        jlines = jbuf.getvalue().splitlines()
        assert jlines[0] == "time,size"
        assert len(jlines) == 1 + len(p.jumps)


class TestNoisePath:
    def test_bit_exact_reproducibility(self):
        spec = NoiseSpec(sigma=1.0, lambda_n=2.0, zeta=0.5, jump_law="uniform")
        a = sample_noise_path(99, spec, 0.01, 500)
        b = sample_noise_path(99, spec, 0.01, 500)
        assert np.array_equal(a.brownian_increments, b.brownian_increments)
        assert a.jumps == b.jumps

    def test_increment_variance_matches_dt(self):
        p = sample_noise_path(3, NoiseSpec(), 0.25, 40_000)
        assert p.brownian_increments.var() == pytest.approx(0.25, rel=0.03)

    def test_cumulative_levy_steps_at_jumps(self):
        spec = NoiseSpec(sigma=0.0, lambda_n=4.0, zeta=0.2, jump_law="two_point")
        p = sample_noise_path(21, spec, 0.1, 100)
        cum = p.cumulative_levy(spec.sigma)
        assert cum[-1] == pytest.approx(sum(ev.size for ev in p.jumps), abs=1e-12)
