"""Direct preference optimisation on a finite response set.

Scores are ``beta_temp * (log pi(y) - log pi_ref(y))``; fed to the
Plackett-Luce likelihood they give the listwise objective, and with two
responses the familiar pairwise ``-log sigmoid`` loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .core import DimensionError, FitResult, NonFiniteError
from .optimizer import FitConfig, newton_maximize, warn_if_separated
from .plackett_luce import pl_log_likelihood, pl_score_gradient

__all__ = [
    "PolicyLogProbs",
    "TabularPolicy",
    "dpo_scores",
    "dpo_pair_loss",
    "dpo_list_loss",
    "dpo_fit_tabular",
    "fit_dpo_offsets",
    "dpo_objective",
]


def _log_normalise(logits: np.ndarray) -> np.ndarray:
    return logits - special.logsumexp(logits)


@dataclass(frozen=True)
class TabularPolicy:
    """A categorical policy over ``m`` responses, parameterised by logits."""

    logits: np.ndarray

    def __post_init__(self):
        logits = np.array(self.logits, dtype=float).reshape(-1)
        if logits.size < 2:
            raise DimensionError("a policy needs at least two responses")
        if not np.all(np.isfinite(logits)):
            raise NonFiniteError("logits contain NaN or Inf")
        logits.setflags(write=False)
        object.__setattr__(self, "logits", logits)

    @classmethod
    def uniform(cls, m: int) -> "TabularPolicy":
        return cls(np.zeros(m))

    @property
    def m(self) -> int:
        return self.logits.size

    @property
    def log_probs(self) -> np.ndarray:
        return _log_normalise(self.logits)


@dataclass(frozen=True)
class PolicyLogProbs:
    """Log-probabilities of the same ``m`` candidates under a policy and its reference."""

    logp_policy: np.ndarray
    logp_ref: np.ndarray

    def __post_init__(self):
        pol = np.array(self.logp_policy, dtype=float).reshape(-1)
        ref = np.array(self.logp_ref, dtype=float).reshape(-1)
        if pol.shape != ref.shape:
            raise DimensionError(f"policy has {pol.size} candidates, reference has {ref.size}")
        for name, v in (("logp_policy", pol), ("logp_ref", ref)):
            if not np.all(np.isfinite(v)):
                raise NonFiniteError(f"{name} contains NaN or Inf")
            total = np.exp(special.logsumexp(v))
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"{name} is not a log-distribution: probabilities sum to {total!r}")
        object.__setattr__(self, "logp_policy", pol)
        object.__setattr__(self, "logp_ref", ref)

    @classmethod
    def from_policies(cls, policy: TabularPolicy, ref: TabularPolicy) -> "PolicyLogProbs":
        return cls(policy.log_probs, ref.log_probs)


def dpo_scores(lp: PolicyLogProbs, beta_temp: float = 1.0) -> np.ndarray:
    if not beta_temp > 0:
        raise ValueError(f"beta_temp must be positive, got {beta_temp}")
    return beta_temp * (lp.logp_policy - lp.logp_ref)


def dpo_pair_loss(lp: PolicyLogProbs, chosen: int, rejected: int, beta_temp: float = 1.0):
    """``-log sigmoid(score[chosen] - score[rejected])`` and its gradient in the policy logits.

    The policy logits are taken to be ``lp.logp_policy`` (any additive
    constant gives the same distribution). Normalisation cancels in the
    score difference, so only the two involved logits get gradient.
    """
    m = lp.logp_policy.size
    for idx in (chosen, rejected):
        if not -m <= idx < m:
            raise IndexError(f"response index {idx} out of range for {m} candidates")
    if chosen % m == rejected % m:
        raise IndexError("chosen and rejected must differ")
    s = dpo_scores(lp, beta_temp)
    margin = s[chosen] - s[rejected]
    loss = float(np.logaddexp(0.0, -margin))
    grad = np.zeros(m)
    coeff = -beta_temp * special.expit(-margin)
    grad[chosen] += coeff
    grad[rejected] -= coeff
    return loss, grad


def dpo_list_loss(lp: PolicyLogProbs, order: Sequence[int], beta_temp: float = 1.0):
    """Negative Plackett-Luce log-likelihood of ``order`` under DPO scores, with logit gradient."""
    s = dpo_scores(lp, beta_temp)
    loss = -pl_log_likelihood(s, order)
    grad_scores = np.zeros_like(s)
    order = np.asarray(order)
    # candidates outside the ranked list do not enter the likelihood
    grad_scores[order] = -pl_score_gradient(s[order], np.arange(order.size))
    return loss, beta_temp * grad_scores


def dpo_objective(prefs: Sequence[tuple[int, int]], m: int, beta_temp: float = 1.0):
    """Oracle ``theta -> (loglik, gradient, hessian)`` for ``(chosen, rejected)`` pairs.

    ``theta`` holds the offsets ``log pi - log pi_ref`` of responses
    ``1..m-1``; response 0's offset is pinned at zero since a common shift
    of all logits changes nothing.
    """
    if not beta_temp > 0:
        raise ValueError(f"beta_temp must be positive, got {beta_temp}")
    pairs = np.asarray(prefs, dtype=np.int64).reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise ValueError("need at least one preference pair")
    if pairs.min() < 0 or pairs.max() >= m:
        raise IndexError(f"preference indices must lie in [0, {m})")
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise IndexError("a pair cannot prefer a response over itself")

    # net win counts per ordered pair summarise the data exactly
    wins = np.zeros((m, m))
    np.add.at(wins, (pairs[:, 0], pairs[:, 1]), 1.0)
    ci, ri = np.nonzero(wins)
    counts = wins[ci, ri]

    def oracle(theta):
        offsets = beta_temp * np.concatenate(([0.0], np.asarray(theta, dtype=float)))
        margin = offsets[ci] - offsets[ri]
        value = -float(np.sum(counts * np.logaddexp(0.0, -margin)))
        resid = counts * special.expit(-margin) * beta_temp
        p = special.expit(margin)
        curv = counts * p * (1.0 - p) * beta_temp**2
        grad = np.zeros(m)
        np.add.at(grad, ci, resid)
        np.add.at(grad, ri, -resid)
        hess = np.zeros((m, m))
        np.add.at(hess, (ci, ci), -curv)
        np.add.at(hess, (ri, ri), -curv)
        np.add.at(hess, (ci, ri), curv)
        np.add.at(hess, (ri, ci), curv)
        return value, grad[1:], hess[1:, 1:]

    return oracle


def fit_dpo_offsets(
    prefs: Sequence[tuple[int, int]],
    m: int,
    beta_temp: float = 1.0,
    config: FitConfig | None = None,
) -> FitResult:
    """Maximise the pairwise DPO log-likelihood over log-ratio offsets (see :func:`dpo_objective`)."""
    oracle = dpo_objective(prefs, m, beta_temp)
    return warn_if_separated(newton_maximize(oracle, np.zeros(m - 1), config or FitConfig()))


def dpo_fit_tabular(
    prefs: Sequence[tuple[int, int]],
    ref: TabularPolicy,
    beta_temp: float = 1.0,
    config: FitConfig | None = None,
) -> TabularPolicy:
    """Fit a tabular policy to ``(chosen, rejected)`` pairs, starting from ``ref``."""
    result = fit_dpo_offsets(prefs, ref.m, beta_temp, config)
    return TabularPolicy(ref.log_probs + np.concatenate(([0.0], result.beta)))
