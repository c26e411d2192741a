"""Cox partial likelihood over utilities, and its bridge to ranking data.

Items "exit" in order of increasing utility. At each distinct utility the
items with exactly that value form the event set and every item whose
utility is at least that value is still at risk. The partial likelihood is
a product of softmax factors over these nested risk sets; with no ties it
has the same form as a Plackett-Luce likelihood, which is what
:func:`ranking_to_pseudotimes` exploits.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DimensionError, FitResult, RankingInstance, SurvivalDataset
from .optimizer import FitConfig, newton_maximize, warn_if_separated

__all__ = [
    "TieMethod",
    "RiskSetIndex",
    "build_risk_sets",
    "cox_partial_loglik",
    "cox_grad_hessian",
    "cox_objective",
    "cox_fit",
    "ranking_to_pseudotimes",
    "rankings_to_pseudotimes",
]


class TieMethod(enum.Enum):
    BRESLOW = "breslow"
    EFRON = "efron"

    @classmethod
    def coerce(cls, value) -> "TieMethod":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown tie method {value!r}; expected 'breslow' or 'efron'") from None


@dataclass(frozen=True)
class RiskSetIndex:
    """Sorted view of a dataset's risk sets.

    Attributes
    ----------
    order:
        Record indices sorted by utility ascending (stable).
    event_values:
        Distinct utilities, ascending.
    starts:
        ``starts[k]`` is the position in ``order`` where the ``k``-th event
        set begins. The risk set of event ``k`` is ``order[starts[k]:]`` and
        its event set is ``order[starts[k]:starts[k + 1]]``.
    """

    order: np.ndarray
    event_values: np.ndarray
    starts: np.ndarray

    @property
    def n(self) -> int:
        return self.order.size

    @property
    def event_sizes(self) -> np.ndarray:
        return np.diff(np.append(self.starts, self.n))

    @property
    def risk_sizes(self) -> np.ndarray:
        return self.n - self.starts

    def event_set(self, k: int) -> np.ndarray:
        stop = self.starts[k + 1] if k + 1 < self.starts.size else self.n
        return self.order[self.starts[k]:stop]

    def risk_set(self, k: int) -> np.ndarray:
        return self.order[self.starts[k]:]


def build_risk_sets(data: SurvivalDataset | np.ndarray) -> RiskSetIndex:
    u = np.asarray(getattr(data, "utilities", data), dtype=float).reshape(-1)
    order = np.argsort(u, kind="stable")
    sorted_u = u[order]
    new_value = np.ones(u.size, dtype=bool)
    new_value[1:] = sorted_u[1:] != sorted_u[:-1]
    starts = np.flatnonzero(new_value)
    return RiskSetIndex(order=order, event_values=sorted_u[starts], starts=starts)


def _check_dims(X, beta, risk):
    X = np.asarray(getattr(X, "matrix", X), dtype=float)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[1] != beta.size:
        raise DimensionError(f"covariates of shape {X.shape} do not match beta of length {beta.size}")
    if X.shape[0] != risk.n:
        raise DimensionError(f"{X.shape[0]} covariate rows for a risk index over {risk.n} records")
    return X, beta


def _tie_fractions(risk: RiskSetIndex, ties: TieMethod) -> tuple[np.ndarray, np.ndarray]:
    """Per-event-row group id and Efron fraction ``l / m`` (zero for Breslow)."""
    sizes = risk.event_sizes
    group = np.repeat(np.arange(sizes.size), sizes)
    if ties is TieMethod.BRESLOW:
        return group, np.zeros(risk.n)
    within = np.arange(risk.n) - np.repeat(risk.starts, sizes)
    return group, within / np.repeat(sizes, sizes)


def _loglik_sorted(s: np.ndarray, risk: RiskSetIndex, ties: TieMethod) -> float:
    log_risk = np.logaddexp.accumulate(s[::-1])[::-1][risk.starts]
    if ties is TieMethod.BRESLOW:
        return float(np.sum(s) - np.sum(risk.event_sizes * log_risk))
    group, frac = _tie_fractions(risk, ties)
    # share of the risk-set mass held by the tied events, per event set
    tied_share = np.add.reduceat(np.exp(s - log_risk[group]), risk.starts)
    return float(np.sum(s) - np.sum(log_risk[group] + np.log1p(-frac * tied_share[group])))


def cox_partial_loglik(X, beta, risk: RiskSetIndex, ties: TieMethod | str = TieMethod.BRESLOW) -> float:
    """Log partial likelihood of a linear score model.

    Breslow: every event in a tied set shares the full risk-set denominator.
    Efron: the ``l``-th of ``m`` tied events uses the risk-set sum minus
    ``l/m`` of the tied events' own mass.
    """
    ties = TieMethod.coerce(ties)
    X, beta = _check_dims(X, beta, risk)
    return _loglik_sorted(X[risk.order] @ beta, risk, ties)


def _terms_sorted(Xs: np.ndarray, beta: np.ndarray, risk: RiskSetIndex, ties: TieMethod):
    n, d = Xs.shape
    s = Xs @ beta
    loglik = _loglik_sorted(s, risk, ties)

    # global shift keeps the suffix sums in range; scores spread beyond ~700
    # would underflow and are rejected by beta_cap long before
    w = np.exp(s - np.max(s))
    wx = w[:, None] * Xs
    wxx = wx[:, :, None] * Xs[:, None, :]
    r0 = np.cumsum(w[::-1])[::-1][risk.starts]
    r1 = np.cumsum(wx[::-1], axis=0)[::-1][risk.starts]
    r2 = np.cumsum(wxx[::-1], axis=0)[::-1][risk.starts]

    group, frac = _tie_fractions(risk, ties)
    if ties is TieMethod.EFRON:
        t0 = np.add.reduceat(w, risk.starts)
        t1 = np.add.reduceat(wx, risk.starts, axis=0)
        t2 = np.add.reduceat(wxx, risk.starts, axis=0)
        den = r0[group] - frac * t0[group]
        num1 = r1[group] - frac[:, None] * t1[group]
        num2 = r2[group] - frac[:, None, None] * t2[group]
    else:
        den, num1, num2 = r0[group], r1[group], r2[group]

    mean = num1 / den[:, None]
    second = num2 / den[:, None, None]
    grad = np.sum(Xs, axis=0) - np.sum(mean, axis=0)
    hess = -np.sum(second - mean[:, :, None] * mean[:, None, :], axis=0)
    return loglik, grad, 0.5 * (hess + hess.T)


def cox_grad_hessian(X, beta, risk: RiskSetIndex, ties: TieMethod | str = TieMethod.BRESLOW):
    ties = TieMethod.coerce(ties)
    X, beta = _check_dims(X, beta, risk)
    _, grad, hess = _terms_sorted(X[risk.order], beta, risk, ties)
    return grad, hess


def _as_datasets(data) -> list[SurvivalDataset]:
    if isinstance(data, SurvivalDataset):
        return [data]
    data = list(data)
    if not data:
        raise ValueError("no datasets given")
    dims = {ds.d for ds in data}
    if len(dims) != 1:
        raise DimensionError(f"datasets have differing feature dimensions {sorted(dims)}")
    return data


def cox_objective(data, ties: TieMethod | str = TieMethod.BRESLOW):
    """Oracle ``beta -> (loglik, gradient, hessian)``.

    ``data`` is one dataset or a sequence of them; each keeps its own risk
    sets and the log partial likelihoods add.
    """
    ties = TieMethod.coerce(ties)
    parts = []
    for ds in _as_datasets(data):
        risk = build_risk_sets(ds)
        parts.append((ds.X[risk.order], risk))

    def oracle(beta):
        beta = np.asarray(beta, dtype=float)
        total, grad, hess = 0.0, np.zeros(beta.size), np.zeros((beta.size, beta.size))
        for Xs, risk in parts:
            ll, g, h = _terms_sorted(Xs, beta, risk, ties)
            total += ll
            grad += g
            hess += h
        return total, grad, hess

    return oracle


def cox_fit(
    data: SurvivalDataset | Sequence[SurvivalDataset],
    config: FitConfig | None = None,
    ties: TieMethod | str = TieMethod.BRESLOW,
) -> FitResult:
    """Newton fit of the log partial likelihood, started from ``beta = 0``.

    ``information`` of the result is the negative Hessian at the estimate.
    Passing a sequence of datasets fits them jointly with separate risk
    sets, which is how converted rankings are fitted.
    """
    config = config or FitConfig()
    datasets = _as_datasets(data)
    result = newton_maximize(cox_objective(datasets, ties), np.zeros(datasets[0].d), config)
    return warn_if_separated(result)


def ranking_to_pseudotimes(instance: RankingInstance) -> SurvivalDataset:
    """Give the item at ``order[k]`` the utility ``k + 1``.

    The most-preferred item gets the smallest pseudo-time and therefore the
    full risk set, so the first partial-likelihood factor matches the first
    Plackett-Luce stage, and so on down the list.
    """
    utilities = np.empty(instance.n_items)
    utilities[instance.order] = np.arange(1, instance.n_items + 1, dtype=float)
    return SurvivalDataset(instance.X, utilities, instance.covariates.feature_names)


def rankings_to_pseudotimes(instances) -> list[SurvivalDataset]:
    return [ranking_to_pseudotimes(inst) for inst in instances]
