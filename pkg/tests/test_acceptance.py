"""Acceptance suite: one test per numbered exit criterion.

Each criterion runs at its pinned tolerance and prints a PASS/FAIL line
(visible with `pytest -s`).  Expensive simulations are shared through the
module-scoped suite.  The same checks back the `sddesim verify` command.
"""

import pytest

from sddesim.verification import AcceptanceSuite


@pytest.fixture(scope="module")
def suite():
    return AcceptanceSuite(workers=1)


def _finish(result):
    print(result.line())
    assert result.passed, result.detail
    assert result.within_runtime, (
        f"criterion {result.criterion} took {result.seconds:.1f}s, "
        f"budget {result.runtime_limit}s")


def test_criterion_01_fixed_point_exactness(suite):
    _finish(suite.check_1_fixed_point())


def test_criterion_02_window_invariance(suite):
    _finish(suite.check_2_window_invariance())


def test_criterion_03_positivity(suite):
    _finish(suite.check_3_positivity())


def test_criterion_04_ultimate_mean_bound(suite):
    _finish(suite.check_4_ultimate_mean())


def test_criterion_05_ergodicity_indication(suite):
    _finish(suite.check_5_ergodicity())


def test_criterion_06_bounded_away_from_zero(suite):
    _finish(suite.check_6_support_away_from_zero())


def test_criterion_07_mc_reverse_sup_brownian(suite):
    _finish(suite.check_7_mc_reverse_brownian())


def test_criterion_08_mc_window_sup_brownian(suite):
    _finish(suite.check_8_mc_window_brownian())


def test_criterion_09_mc_levy_bounds(suite):
    _finish(suite.check_9_mc_levy())


def test_criterion_10_pathwise_estimates(suite):
    _finish(suite.check_10_pathwise())


def test_criterion_11_stability_analysis(suite):
    _finish(suite.check_11_stability())


def test_criterion_12_noise_moments(suite):
    _finish(suite.check_12_noise_moments())


def test_criterion_13_determinism_across_workers(suite):
    _finish(suite.check_13_determinism())
