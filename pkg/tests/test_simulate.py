import numpy as np
import pytest
from scipy import stats

from hazrank import SurvivalDataset, cox_fit, pl_fit
from hazrank.baseline import nelson_aalen
from hazrank.core import seeded_rng
from hazrank.diagnose import Verdict, crossing_detect, empirical_cdf
from hazrank.simulate import (
    Bernoulli,
    EdgeError,
    EqualQuantile,
    ExponentialPH,
    FixedEdges,
    Gaussian,
    LawMismatchError,
    LogNormal,
    Mixture,
    SimSpec,
    UniformBox,
    WeibullPH,
    draw_utilities,
    quantize_likert,
    sample_nonph,
    sample_ph,
    simulate,
    utilities_to_rankings,
)


def test_uniform_stream_mean():
    from hazrank.simulate import _open_uniform

    v = _open_uniform(seeded_rng(0), 100_000)
    assert 0.49 <= v.mean() <= 0.51
    assert v.min() > 0 and v.max() < 1


def test_exponential_mean():
    data = sample_ph(SimSpec(100_000, (0.0,), (Gaussian(),), ExponentialPH(1.0), seed=1))
    assert 0.99 <= data.utilities.mean() <= 1.01


def test_weibull_shape_one_is_exponential():
    a = draw_utilities(WeibullPH(1.0, 1.0), 10_000, seeded_rng(2))
    b = draw_utilities(ExponentialPH(1.0), 10_000, seeded_rng(3))
    assert stats.ks_2samp(a, b).statistic <= 0.02


def test_ph_sampler_rejects_nonph_law():
    with pytest.raises(LawMismatchError):
        sample_ph(SimSpec(10, (0.0,), (Gaussian(),), LogNormal()))
    with pytest.raises(LawMismatchError):
        sample_nonph(SimSpec(10, (0.0,), (Gaussian(),), WeibullPH(1.0)))


def test_determinism():
    spec = SimSpec(500, (1.0, -0.5), (Bernoulli(0.3), UniformBox(-1, 1)), WeibullPH(2.0), seed=9)
    assert simulate(spec) == simulate(spec)
    spec2 = SimSpec(500, (0.2,), (Bernoulli(0.5),), LogNormal(0, 1), seed=9, sigma_beta=(0.5,))
    assert simulate(spec2) == simulate(spec2)


def test_mixture_weights_validated():
    with pytest.raises(ValueError, match="weights"):
        Mixture(((0.5, LogNormal()), (0.6, LogNormal(1.0))))


def test_degenerate_mixture_matches_component():
    mix = Mixture(((1.0, LogNormal(0.2, 0.7)),))
    a = draw_utilities(mix, 10_000, seeded_rng(4))
    b = draw_utilities(LogNormal(0.2, 0.7), 10_000, seeded_rng(5))
    assert stats.ks_2samp(a, b).statistic <= 0.02


def test_lognormal_groups_cross():
    a = draw_utilities(LogNormal(0.0, 0.25), 10_000, seeded_rng(6))
    b = draw_utilities(LogNormal(0.1, 1.0), 10_000, seeded_rng(7))
    rep = crossing_detect(empirical_cdf(a), empirical_cdf(b))
    assert rep.dominance_verdict is Verdict.CROSSING and rep.crossing_count >= 1


def test_likert_equal_quantile():
    data = SurvivalDataset(np.zeros((1000, 1)), seeded_rng(8).exponential(size=1000) + 0.01)
    q = quantize_likert(data, 5, EqualQuantile())
    counts = np.bincount(q.utilities.astype(int))[1:]
    assert counts.tolist() == [200] * 5
    order = np.argsort(data.utilities)
    assert np.all(np.diff(q.utilities[order]) >= 0)
    with pytest.raises(EdgeError):
        quantize_likert(data, 1)


def test_likert_fixed_edges():
    data = SurvivalDataset(np.zeros((4, 1)), [0.5, 1.0, 1.5, 3.0])
    q = quantize_likert(data, 3, FixedEdges((1.0, 2.0)))
    assert q.utilities.tolist() == [1.0, 2.0, 2.0, 3.0]
    with pytest.raises(EdgeError):
        FixedEdges((2.0, 1.0))


def test_rankings_from_utilities():
    data = SurvivalDataset(np.arange(2.0).reshape(2, 1), [1.1, 3.2])
    ranked = utilities_to_rankings(data, 2, seed=0)
    inst = ranked.instances[0]
    assert inst.X[inst.order[0], 0] == 1.0
    data = SurvivalDataset(np.zeros((100, 1)), np.arange(1.0, 101.0))
    ranked = utilities_to_rankings(data, 2, seed=0)
    assert len(ranked) == 50 and ranked.dropped_groups == 0


def test_likert_ties_drop_groups():
    spec = SimSpec(400, (1.0,), (Bernoulli(0.5),), WeibullPH(1.5), seed=2, likert_levels=3)
    ranked = utilities_to_rankings(simulate(spec), 2, seed=2)
    assert ranked.dropped_groups > 0


def test_hazard_ratio_constant():
    spec = SimSpec(100_000, (0.7,), (Bernoulli(0.5),), WeibullPH(1.5), seed=3)
    data = sample_ph(spec)
    x = data.X[:, 0]
    h1, h0 = nelson_aalen(data.utilities[x == 1]), nelson_aalen(data.utilities[x == 0])
    grid = np.quantile(data.utilities, np.linspace(0.1, 0.9, 9))
    log_ratio = np.log(h1(grid) / h0(grid))
    assert np.std(log_ratio) <= 0.1
    assert abs(np.mean(log_ratio) - 0.7) <= 0.1


def test_cox_recovers_beta():
    spec = SimSpec(2000, (1.5,), (Gaussian(),), WeibullPH(1.5), seed=4)
    fit = cox_fit(simulate(spec))
    assert abs(fit.beta[0] - 1.5) <= 3 * fit.standard_errors[0]


def test_pl_on_rankings_recovers_reflected_beta():
    # a higher PH score means a larger hazard and so a smaller utility;
    # rankings put large utilities first, so PL sees -beta_true
    beta_true = (1.2, -0.4)
    spec = SimSpec(4000, beta_true, (Gaussian(), Gaussian()), WeibullPH(1.5), seed=5)
    fit = pl_fit(utilities_to_rankings(simulate(spec), 2, seed=5))
    assert np.array_equal(np.sign(fit.beta), -np.sign(beta_true))
    assert np.argmax(np.abs(fit.beta)) == np.argmax(np.abs(beta_true))
    assert np.all(np.abs(fit.beta + np.array(beta_true)) <= 3 * fit.standard_errors)
