"""Breslow baseline cumulative hazard and conditional utility CDFs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionError, NonFiniteError, ScoreModel, StepFunction, SurvivalDataset
from .cox import build_risk_sets

__all__ = ["BaselineEstimate", "breslow_baseline", "conditional_cdf", "nelson_aalen"]


@dataclass(frozen=True)
class BaselineEstimate:
    """Baseline curves at score zero.

    Both curves are right-continuous with knots at the distinct utilities,
    so ``cumulative_hazard(u)`` sums the increments of events at or below
    ``u``. The strict form (events below ``u`` only) is
    ``cumulative_hazard.left_limit(u)``. The instantaneous baseline hazard is
    not recovered pointwise; only its integral is.
    """

    cumulative_hazard: StepFunction
    survival: StepFunction
    event_utilities: np.ndarray


def _hazard_increments(utilities, scores) -> tuple[np.ndarray, np.ndarray]:
    risk = build_risk_sets(utilities)
    s = np.asarray(scores, dtype=float)[risk.order]
    if not np.all(np.isfinite(s)):
        raise NonFiniteError("fitted scores contain NaN or Inf")
    log_risk = np.logaddexp.accumulate(s[::-1])[::-1][risk.starts]
    # one 1/denominator summand per tied record
    return risk.event_values, risk.event_sizes * np.exp(-log_risk)


def breslow_baseline(data: SurvivalDataset, fitted: ScoreModel | np.ndarray) -> BaselineEstimate:
    """Baseline cumulative hazard ``sum_{u_i <= u} 1 / sum_{u_j >= u_i} exp(f(x_j))``.

    ``fitted`` is a :class:`ScoreModel` (or a bare coefficient vector).
    """
    model = fitted if isinstance(fitted, ScoreModel) else ScoreModel(fitted)
    if model.beta.size != data.d:
        raise DimensionError(f"model has d={model.beta.size}, data has d={data.d}")
    knots, increments = _hazard_increments(data.utilities, model.scores(data.X))
    cumhaz = np.cumsum(increments)
    n = data.n
    return BaselineEstimate(
        cumulative_hazard=StepFunction(knots, cumhaz, 0.0, sample_size=n),
        survival=StepFunction(knots, np.exp(-cumhaz), 1.0, sample_size=n),
        event_utilities=knots,
    )


def nelson_aalen(utilities) -> StepFunction:
    """Nelson-Aalen cumulative hazard, computed by counting."""
    u = np.sort(np.asarray(utilities, dtype=float))
    knots, counts = np.unique(u, return_counts=True)
    at_risk = u.size - np.searchsorted(u, knots, side="left")
    return StepFunction(knots, np.cumsum(counts / at_risk), 0.0, sample_size=u.size)


def conditional_cdf(base: BaselineEstimate, score: float) -> StepFunction:
    """``P(U <= u | score) = 1 - S0(u) ** exp(score)`` on the baseline knots."""
    score = float(score)
    if not np.isfinite(score):
        raise NonFiniteError(f"score {score} is not finite")
    cumhaz = base.cumulative_hazard.values
    with np.errstate(over="ignore"):
        values = -np.expm1(-np.exp(score) * cumhaz)
    return StepFunction(base.event_utilities, values, 0.0, sample_size=base.cumulative_hazard.sample_size)
