"""Plackett-Luce listwise likelihood, derivatives and maximum-likelihood fitting.

Every choice stage of a ranking is a softmax over the items not yet placed,
so the log-likelihood of one ranking is ``sum_i s[o_i] - logsumexp(s[o_i:])``
with ``o`` the observed order. The Bradley-Terry model is the ``n = 2`` case.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DimensionError,
    FitResult,
    NonFiniteError,
    RankingInstance,
    SizeError,
)
from .optimizer import FitConfig, newton_maximize, warn_if_separated

__all__ = [
    "RankingDataset",
    "pl_log_likelihood",
    "pl_score_gradient",
    "pl_grad_hessian",
    "pl_fit",
    "pl_enumerate",
    "MAX_ENUMERATE",
]

MAX_ENUMERATE = 8


@dataclass(frozen=True)
class RankingDataset:
    """A collection of rankings over a shared feature space.

    ``dropped_groups`` counts groups discarded while building the dataset
    (for example groups with tied utilities).
    """

    instances: tuple[RankingInstance, ...]
    dropped_groups: int = 0

    def __post_init__(self):
        instances = tuple(self.instances)
        if not instances:
            raise SizeError("a ranking dataset needs at least one instance")
        dims = {inst.covariates.d for inst in instances}
        if len(dims) != 1:
            raise DimensionError(f"instances have differing feature dimensions {sorted(dims)}")
        object.__setattr__(self, "instances", instances)

    @property
    def d(self) -> int:
        return self.instances[0].covariates.d

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.instances[0].covariates.feature_names

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)


def _check_scores(scores, order):
    s = np.asarray(scores, dtype=float).reshape(-1)
    o = np.asarray(order).reshape(-1)
    if s.size < 2:
        raise DimensionError(f"need at least 2 scores, got {s.size}")
    if o.size != s.size:
        raise DimensionError(f"order has length {o.size} but there are {s.size} scores")
    if not np.all(np.isfinite(s)):
        raise NonFiniteError("scores contain NaN or Inf")
    return s, o


def _suffix_logsumexp(s: np.ndarray) -> np.ndarray:
    """``out[..., i] = log sum_{j >= i} exp(s[..., j])`` along the last axis."""
    return np.logaddexp.accumulate(s[..., ::-1], axis=-1)[..., ::-1]


def pl_log_likelihood(scores, order) -> float:
    """Log-probability of observing ``order`` (most preferred first) given item scores."""
    s, o = _check_scores(scores, order)
    ranked = s[o]
    return float(np.sum(ranked - _suffix_logsumexp(ranked)))


def pl_score_gradient(scores, order) -> np.ndarray:
    """Gradient of :func:`pl_log_likelihood` with respect to the item scores.

    Item at position ``k`` of the order receives ``1 - sum_{i<=k} p_ik``
    where ``p_ik`` is its choice probability at stage ``i``. The inner sum is
    accumulated in log space so no stage denominator is ever formed directly.
    """
    s, o = _check_scores(scores, order)
    ranked = s[o]
    log_denoms = _suffix_logsumexp(ranked)
    stage_mass = np.exp(ranked + np.logaddexp.accumulate(-log_denoms))
    grad = np.empty_like(s)
    grad[o] = 1.0 - stage_mass
    return grad


def _batched_terms(Xo: np.ndarray, beta: np.ndarray):
    """Log-likelihood, gradient and Hessian for a batch of same-length rankings.

    ``Xo`` is ``(N, g, d)`` with items already in preference order. The
    softmax-weighted mean and covariance of every suffix are carried
    backwards one position at a time, merging item ``i`` into the summary
    of ``i+1..g`` with its stage probability ``p_i``.
    """
    N, g, d = Xo.shape
    s = Xo @ beta
    log_denoms = _suffix_logsumexp(s)
    loglik = float(np.sum(s - log_denoms))

    mean = Xo[:, g - 1, :].copy()
    cov = np.zeros((N, d, d))
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    for i in range(g - 2, -1, -1):
        p = np.exp(s[:, i] - log_denoms[:, i])[:, None]
        delta = Xo[:, i, :] - mean
        cov = (1.0 - p)[:, :, None] * cov + (p * (1.0 - p))[:, :, None] * (
            delta[:, :, None] * delta[:, None, :]
        )
        mean = mean + p * delta
        grad += np.sum(Xo[:, i, :] - mean, axis=0)
        hess -= np.sum(cov, axis=0)
    return loglik, grad, 0.5 * (hess + hess.T)


def pl_grad_hessian(X, beta, order):
    """Gradient and Hessian in ``beta`` of one ranking's log-likelihood under ``f(x) = <beta, x>``."""
    X = np.asarray(getattr(X, "matrix", X), dtype=float)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    order = np.asarray(order).reshape(-1)
    if X.ndim != 2 or X.shape[1] != beta.size:
        raise DimensionError(f"covariates of shape {X.shape} do not match beta of length {beta.size}")
    if order.size != X.shape[0]:
        raise DimensionError(f"order has length {order.size} for {X.shape[0]} items")
    _, grad, hess = _batched_terms(X[order][None, :, :], beta)
    return grad, hess


def _bucket_by_length(data: Sequence[RankingInstance]) -> list[np.ndarray]:
    groups: dict[int, list[np.ndarray]] = {}
    for inst in data:
        groups.setdefault(inst.n_items, []).append(inst.X[inst.order])
    return [np.stack(groups[g]) for g in sorted(groups)]


def pl_objective(data: Sequence[RankingInstance]):
    """Oracle ``beta -> (loglik, gradient, hessian)`` summed over all rankings."""
    buckets = _bucket_by_length(data)

    def oracle(beta):
        beta = np.asarray(beta, dtype=float)
        total, grad, hess = 0.0, np.zeros(beta.size), np.zeros((beta.size, beta.size))
        for Xo in buckets:
            ll, g, h = _batched_terms(Xo, beta)
            total += ll
            grad += g
            hess += h
        return total, grad, hess

    return oracle


def pl_fit(data: RankingDataset | Sequence[RankingInstance], config: FitConfig | None = None) -> FitResult:
    """Maximum-likelihood fit of a linear Plackett-Luce scorer.

    Non-convergence is reported through ``converged=False`` and a note in
    ``warnings``. Perfectly separable data additionally emits a
    :class:`~hazrank.core.SeparationWarning`.
    """
    config = config or FitConfig()
    if not isinstance(data, RankingDataset):
        data = RankingDataset(tuple(data))
    result = newton_maximize(pl_objective(data.instances), np.zeros(data.d), config)
    return warn_if_separated(result)


def pl_enumerate(scores) -> dict[tuple[int, ...], float]:
    """Probability of every ordering of ``len(scores) <= 8`` items.

    Straight product of stage softmaxes with no log-space tricks; meant as
    a test oracle for :func:`pl_log_likelihood`.
    """
    s = [float(v) for v in np.asarray(scores, dtype=float).reshape(-1)]
    n = len(s)
    if n > MAX_ENUMERATE:
        raise SizeError(f"enumeration is limited to {MAX_ENUMERATE} items, got {n}")
    if n < 1:
        raise SizeError("need at least one score")
    weights = [math.exp(v) for v in s]
    out = {}
    for perm in itertools.permutations(range(n)):
        prob = 1.0
        for i in range(n):
            prob *= weights[perm[i]] / math.fsum(weights[j] for j in perm[i:])
        out[perm] = prob
    return out
