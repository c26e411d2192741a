import math

import numpy as np
import pytest

from hazrank import (
    RankingInstance,
    SurvivalDataset,
    TieMethod,
    build_risk_sets,
    cox_fit,
    cox_grad_hessian,
    cox_partial_loglik,
    pl_log_likelihood,
    ranking_to_pseudotimes,
)
from hazrank.cox import cox_objective

from conftest import brute_cox_loglik, central_gradient, central_jacobian, rel_err


def test_three_distinct_zero_beta():
    ds = SurvivalDataset(np.array([[1.0], [2.0], [3.0]]), [1.0, 2.0, 3.0])
    ll = cox_partial_loglik(ds.X, [0.0], build_risk_sets(ds))
    assert ll == pytest.approx(-math.log(6), abs=1e-14)


def test_three_with_tie_breslow():
    ds = SurvivalDataset(np.zeros((3, 1)), [1.0, 1.0, 2.0])
    risk = build_risk_sets(ds)
    assert cox_partial_loglik(ds.X, [0.0], risk) == pytest.approx(-2 * math.log(3), abs=1e-14)
    # Efron: second tied event sees 3 - 1/2 * 2 = 2
    assert cox_partial_loglik(ds.X, [0.0], risk, "efron") == pytest.approx(-math.log(3) - math.log(2), abs=1e-14)


def test_risk_set_sizes():
    risk = build_risk_sets(np.array([3.0, 1.0, 2.0, 1.0]))
    assert risk.event_values.tolist() == [1.0, 2.0, 3.0]
    assert risk.event_sizes.tolist() == [2, 1, 1]
    assert risk.risk_sizes.tolist() == [4, 2, 1]
    assert sorted(risk.event_set(0).tolist()) == [1, 3]
    assert sorted(risk.risk_set(1).tolist()) == [0, 2]


@pytest.mark.parametrize("ties", ["breslow", "efron"])
def test_matches_brute_force(rng, ties):
    for _ in range(20):
        n, d = int(rng.integers(2, 25)), int(rng.integers(1, 4))
        X = rng.normal(size=(n, d))
        u = rng.integers(1, max(2, n // 2), size=n).astype(float)
        beta = rng.normal(size=d)
        ll = cox_partial_loglik(X, beta, build_risk_sets(u), ties)
        assert ll == pytest.approx(brute_cox_loglik(X, beta, list(u), ties), abs=1e-10)


@pytest.mark.parametrize("ties", ["breslow", "efron"])
def test_derivatives_match_fd(rng, ties):
    for _ in range(20):
        n, d = int(rng.integers(3, 20)), int(rng.integers(1, 4))
        X = rng.normal(size=(n, d))
        risk = build_risk_sets(rng.integers(1, 6, size=n).astype(float))
        beta = rng.normal(size=d)
        g, H = cox_grad_hessian(X, beta, risk, ties)
        fd_g = central_gradient(lambda b: cox_partial_loglik(X, b, risk, ties), beta)
        fd_H = central_jacobian(lambda b: cox_grad_hessian(X, b, risk, ties)[0], beta)
        assert rel_err(g, fd_g) <= 1e-7
        assert rel_err(H, fd_H) <= 1e-6


def test_invariant_to_monotone_transform(rng):
    X = rng.normal(size=(30, 2))
    u = rng.exponential(size=30)
    beta = np.array([0.3, -0.7])
    a = cox_partial_loglik(X, beta, build_risk_sets(u))
    b = cox_partial_loglik(X, beta, build_risk_sets(np.exp(3 * u) + 1))
    assert a == b


def test_breslow_equals_efron_without_ties(rng):
    X = rng.normal(size=(40, 2))
    u = rng.permutation(40) + 1.0
    risk = build_risk_sets(u)
    beta = rng.normal(size=2)
    assert cox_partial_loglik(X, beta, risk, "breslow") == pytest.approx(
        cox_partial_loglik(X, beta, risk, "efron"), abs=1e-12
    )


def test_pseudotime_identity(rng):
    for _ in range(20):
        n, d = int(rng.integers(2, 15)), int(rng.integers(1, 4))
        inst = RankingInstance(rng.normal(size=(n, d)), rng.permutation(n))
        beta = rng.normal(size=d)
        ds = ranking_to_pseudotimes(inst)
        cox = cox_partial_loglik(ds.X, beta, build_risk_sets(ds))
        assert abs(cox - pl_log_likelihood(inst.X @ beta, inst.order)) <= 1e-12


def test_fit_trace_monotone(rng):
    X = rng.normal(size=(200, 2))
    u = rng.exponential(size=200) * np.exp(-X @ np.array([1.0, -0.5]))
    fit = cox_fit(SurvivalDataset(X, u), ties=TieMethod.EFRON)
    assert fit.converged
    assert np.all(np.diff(fit.trace) >= 0)
    oracle = cox_objective(SurvivalDataset(X, u), "efron")
    assert np.max(np.abs(oracle(fit.beta)[1])) <= 1e-8


def test_unknown_tie_method():
    with pytest.raises(ValueError):
        TieMethod.coerce("exact")
