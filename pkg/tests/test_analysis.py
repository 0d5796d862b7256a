"""Tests for steady states, characteristic roots and regime classification."""

import cmath
import math

import numpy as np
import pytest
import scipy.special

from sddesim.analysis import (
    characteristic_roots,
    classify_regime,
    global_periodic_condition,
    hopf_crossing_tau,
    hopf_threshold,
    lambert_w,
    residual,
    stability_report,
    steady_states,
)
from sddesim.models import MackeyGlass, Nicholson


class TestLambertW:
    def test_trivial_values(self):
        assert lambert_w(0, 0.0) == 0.0
        assert lambert_w(0, math.e) == pytest.approx(1.0, abs=1e-14)
        assert lambert_w(0, -1.0 / math.e) == pytest.approx(-1.0, abs=1e-7)

    def test_domain_errors(self):
        with pytest.raises(ValueError, match="-1/e"):
            lambert_w(0, -0.5)
        with pytest.raises(ValueError):
            lambert_w(-1, 0.5)
        with pytest.raises(ValueError):
            lambert_w(1, 0.0)

    def test_real_branches_return_floats(self):
        w = lambert_w(0, 2.5)
        assert isinstance(w, float)
        wm1 = lambert_w(-1, -0.2)
        assert isinstance(wm1, float)
        assert wm1 < -1.0  # branch -1 lives below -1

    def test_self_consistency_across_branches(self):
        # residual W e^W = z below 1e-12 on sampled domains
        rng = np.random.default_rng(2)
        for m in (-2, -1, 0, 1, 2):
            for _ in range(40):
                z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
                if abs(z) < 1e-2:
                    continue
                w = lambert_w(m, z)
                assert abs(w * cmath.exp(w) - z) < 1e-12 * max(1.0, abs(z))

    def test_against_scipy(self):
        rng = np.random.default_rng(3)
        for m in (-1, 0, 1):
            for _ in range(25):
                z = complex(rng.uniform(-5, 5), rng.uniform(-5, 5))
                if abs(z) < 0.05:
                    continue
                ours = lambert_w(m, z)
                ref = scipy.special.lambertw(z, k=m)
                assert ours == pytest.approx(complex(ref), abs=1e-10)


class TestCharacteristicRoots:
    def test_degenerate_no_feedback(self):
        roots = characteristic_roots(5.0, 10.0, 0.0, 1.0)
        assert roots == [complex(-5.0)]

    def test_unstable_zero_state(self):
        # frozen oracle: lambda_0 = W_0(10 e^5) - 5 = 0.582880271997432
        roots = characteristic_roots(5.0, 10.0, 1.0, 1.0)
        lam0 = roots[0]
        assert lam0.real == pytest.approx(0.5828802719974318, abs=1e-10)
        assert lam0.imag == 0.0
        assert residual(lam0, 5.0, 10.0, 1.0, 1.0) < 1e-10

    def test_stable_zero_state(self):
        # frozen oracle: W_0(5 e^10) - 10 = -0.6282607821567116
        roots = characteristic_roots(10.0, 5.0, 1.0, 1.0)
        assert roots[0].real == pytest.approx(-0.6282607821567116, abs=1e-10)

    def test_residuals_small_on_all_roots(self):
        roots = characteristic_roots(5.0, 10.0, 1.0, 1.0, n_roots=9)
        assert len(roots) == 9
        for lam in roots:
            assert residual(lam, 5.0, 10.0, 1.0, 1.0) < 1e-10
        res = [lam.real for lam in roots]
        assert res == sorted(res, reverse=True)

    def test_sign_coincides_with_theta_on_sweep(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            gamma = rng.uniform(0.2, 10.0)
            r = rng.uniform(0.2, 10.0)
            tau = rng.uniform(0.05, 3.0)
            theta = r - gamma  # f'(0) = 1
            if abs(theta) < 1e-6:
                continue
            lam0 = characteristic_roots(gamma, r, 1.0, tau)[0]
            assert math.copysign(1, lam0.real) == math.copysign(1, theta)

    def test_negative_coefficient_supported(self):
        # the x_* linearization has r f'(x_*) < 0
        roots = characteristic_roots(5.0, 10.0, -1.5, 1.0, n_roots=5)
        for lam in roots:
            assert residual(lam, 5.0, 10.0, -1.5, 1.0) < 1e-10
        assert roots[0].real > 0  # unstable at tau = 1 > tau_0


class TestSteadyStates:
    def test_figure1_states(self):
        states = steady_states(5.0, 10.0, MackeyGlass(p=8))
        assert states == pytest.approx([0.0, 1.0], abs=1e-12)

    def test_single_state_when_r_below_gamma(self):
        assert steady_states(10.0, 5.0, MackeyGlass(p=8)) == [0.0]

    def test_nicholson(self):
        states = steady_states(1.0, math.e, Nicholson(p=1.0))
        assert states == pytest.approx([0.0, 1.0], abs=1e-12)

    def test_monotone_family_positive_root(self):
        # gamma x (1 + x^2) = r with gamma=1, r=2 has the root x = 1
        states = steady_states(1.0, 2.0, MackeyGlass(p=2, q=0))
        assert states == pytest.approx([1.0], abs=1e-10)

    def test_residual_certificate(self):
        for g, r, f in [(5.0, 10.0, MackeyGlass(p=8)),
                        (1.0, 3.0, Nicholson(p=2.0)),
                        (2.0, 5.0, MackeyGlass(p=4, q=0))]:
            for x in steady_states(g, r, f):
                assert abs(-g * x + r * f.value(x)) < 1e-10


class TestHopfThreshold:
    def test_figure1_value(self):
        # frozen oracle: tau_0 = (10/(5 sqrt(800))) * arccos(-1/3)
        #              = 0.13510217177120799
        tau0 = hopf_threshold(5.0, 10.0, 8.0)
        assert tau0 == pytest.approx(0.13510217177120799, abs=1e-12)

    def test_regime_i_returns_absent(self):
        # gamma/r = 0.75 = (p-2)/p at p = 8 sits on the boundary
        assert hopf_threshold(7.5, 10.0, 8.0) is None
        assert hopf_threshold(8.0, 10.0, 8.0) is None

    def test_no_positive_equilibrium(self):
        assert hopf_threshold(10.0, 5.0, 8.0) is None

    def test_cross_validation_against_root_crossing(self):
        tau0 = hopf_threshold(5.0, 10.0, 8.0)
        tau_star = hopf_crossing_tau(5.0, 10.0, 8.0)
        assert abs(tau_star - tau0) < 1e-3

    def test_figure1_delay_is_supercritical(self):
        assert 1.0 > hopf_threshold(5.0, 10.0, 8.0)


class TestGlobalPeriodicCondition:
    def test_figure_parameters_fail_condition(self):
        for p in (4.0, 6.0, 8.0):
            assert global_periodic_condition(5.0, 10.0, p) is False

    def test_satisfied_case(self):
        assert global_periodic_condition(1.0, 1.0, 1.0) is True

    def test_small_r_limit(self):
        assert global_periodic_condition(1.0, 1e-9, 8.0) is True


class TestClassifyRegime:
    def test_figure1_unstable(self):
        assert classify_regime(5.0, 10.0, 8.0, 1.0) == "(ii)-unstable"

    def test_small_delay_stable(self):
        assert classify_regime(5.0, 10.0, 8.0, 0.05) == "(ii)-stable"

    def test_regime_i_for_small_p(self):
        assert classify_regime(5.0, 10.0, 2.0, 17.0) == "(i)"

    def test_no_positive_steady_state(self):
        assert classify_regime(10.0, 5.0, 8.0, 1.0) == "no-positive-steady-state"

    def test_boundary_reported(self):
        assert classify_regime(7.5, 10.0, 8.0, 1.0) == "boundary"
        tau0 = hopf_threshold(5.0, 10.0, 8.0)
        assert classify_regime(5.0, 10.0, 8.0, tau0) == "boundary"


class TestStabilityReport:
    def test_figure1_report(self):
        rep = stability_report(5.0, 10.0, MackeyGlass(p=8), 1.0)
        assert rep.x_star == pytest.approx(1.0, abs=1e-12)
        assert rep.theta == 5.0
        assert rep.lambda_0.real > 0
        assert rep.regime == "(ii)-unstable"
        assert rep.tau_0 == pytest.approx(0.13510217177120799, abs=1e-10)
        assert rep.global_periodic_condition is False
        assert any("regime" in line for line in rep.lines())

    def test_nicholson_report_has_no_mg_regime(self):
        rep = stability_report(1.0, math.e, Nicholson(p=1.0), 1.0)
        assert rep.regime is None
        assert rep.tau_0 is None
        assert rep.x_star == pytest.approx(1.0)
