import math

import numpy as np
import pytest

from hazrank import SurvivalDataset, breslow_baseline, conditional_cdf, cox_fit
from hazrank.baseline import nelson_aalen
from hazrank.diagnose import empirical_cdf
from hazrank.simulate import Bernoulli, SimSpec, WeibullPH, simulate


def _counting_nelson_aalen(u, at):
    # sum over events at or below ``at`` of (#events at that value) / (#at risk)
    total = 0.0
    for v in sorted(set(u)):
        if v <= at:
            total += sum(1 for x in u if x == v) / sum(1 for x in u if x >= v)
    return total


def test_three_records_at_zero_score():
    ds = SurvivalDataset(np.zeros((3, 1)), [1.0, 2.0, 3.0])
    base = breslow_baseline(ds, np.zeros(1))
    assert base.cumulative_hazard(1.0) == pytest.approx(1 / 3, abs=1e-15)
    assert base.cumulative_hazard.left_limit(1.0) == 0.0
    assert base.survival(1.5) == pytest.approx(0.716531310573789, abs=1e-12)


def test_reduces_to_nelson_aalen(rng):
    u = rng.integers(1, 30, size=200).astype(float)
    ds = SurvivalDataset(rng.normal(size=(200, 2)), u)
    base = breslow_baseline(ds, np.zeros(2))
    na = nelson_aalen(u)
    assert np.array_equal(base.cumulative_hazard.knots, na.knots)
    assert np.max(np.abs(base.cumulative_hazard.values - na.values)) <= 1e-14
    for at in (1.0, 7.0, 29.0):
        assert base.cumulative_hazard(at) == pytest.approx(_counting_nelson_aalen(list(u), at), abs=1e-13)


def test_constant_score_scales_inverse(rng):
    u = rng.exponential(size=50)
    X = np.ones((50, 1))
    c = math.exp(0.8)
    a = breslow_baseline(SurvivalDataset(X, u), [0.0]).cumulative_hazard.values
    b = breslow_baseline(SurvivalDataset(X, u), [0.8]).cumulative_hazard.values
    assert np.allclose(b, a / c, rtol=1e-13, atol=0)


def test_survival_is_exp_negative_hazard(rng):
    ds = SurvivalDataset(rng.normal(size=(80, 1)), rng.exponential(size=80))
    base = breslow_baseline(ds, [0.4])
    assert np.max(np.abs(base.survival.values - np.exp(-base.cumulative_hazard.values))) <= 1e-12
    assert np.all(np.diff(base.cumulative_hazard.values) >= 0)
    assert np.all(np.diff(base.survival.values) <= 0)


def test_conditional_cdf_score_zero_and_limit(rng):
    ds = SurvivalDataset(rng.normal(size=(60, 1)), rng.exponential(size=60))
    base = breslow_baseline(ds, [0.3])
    assert np.max(np.abs(conditional_cdf(base, 0.0).values - (1 - base.survival.values))) <= 1e-15
    assert conditional_cdf(base, 50.0).values[0] == pytest.approx(1.0, abs=1e-9)


def test_log_log_gap_is_constant(rng):
    ds = SurvivalDataset(rng.normal(size=(100, 1)), rng.exponential(size=100))
    base = breslow_baseline(ds, [0.5])
    a = np.log(-np.log1p(-conditional_cdf(base, 1.2).values[:-10]))
    b = np.log(-np.log1p(-conditional_cdf(base, -0.3).values[:-10]))
    assert np.allclose(a - b, 1.5, atol=1e-9)


def test_zero_score_close_to_ecdf(rng):
    u = rng.exponential(size=400)
    base = breslow_baseline(SurvivalDataset(np.zeros((400, 1)), u), [0.0])
    ecdf = empirical_cdf(u)
    gap = np.max(np.abs(1 - base.survival.values - ecdf(base.event_utilities)))
    assert gap <= 2 / math.sqrt(400)


def test_conditional_cdf_recovers_weibull():
    spec = SimSpec(5000, (1.0,), (Bernoulli(0.5),), WeibullPH(1.5), seed=11)
    data = simulate(spec)
    fit = cox_fit(data)
    base = breslow_baseline(data, fit.model)
    F = conditional_cdf(base, 0.0)
    truth = WeibullPH(1.5).cdf(F.knots)
    assert np.max(np.abs(F.values - truth)) <= 0.05
