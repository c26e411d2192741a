"""Proportional-hazards diagnostics.

Two complementary checks: a nonparametric one that compares group CDFs for
stochastic dominance versus crossing, and a covariate-aware one that
correlates Schoenfeld residuals with event order. :func:`misestimation_probe`
measures what a violation does to a fitted Plackett-Luce preference.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from .core import DimensionError, EmptyError, FitResult, InsufficientDataError, StepFunction, SurvivalDataset, derived_seed
from .cox import build_risk_sets
from .optimizer import FitConfig
from .plackett_luce import pl_fit
from .simulate import SimSpec, simulate, utilities_to_rankings

__all__ = [
    "Verdict",
    "CrossingReport",
    "PHTestReport",
    "empirical_cdf",
    "crossing_detect",
    "schoenfeld_residuals",
    "ph_test",
    "ProbeReport",
    "misestimation_probe",
    "seed_sweep",
]

DEFAULT_EPSILON = 0.01
DEFAULT_MIN_N = 200
DEFAULT_Z_CRIT = 2.58
MIN_EVENTS = 20


class Verdict(enum.Enum):
    FIRST_DOMINATES = "FirstDominates"
    SECOND_DOMINATES = "SecondDominates"
    CROSSING = "Crossing"
    INDISTINGUISHABLE = "Indistinguishable"


@dataclass(frozen=True)
class CrossingReport:
    """Comparison of two CDFs on their merged knot grid.

    ``FIRST_DOMINATES`` means ``F1 >= F2`` everywhere (beyond epsilon
    somewhere); which group is "better" is left to the caller.
    """

    crossing_count: int
    crossing_locations: tuple[float, ...]
    max_signed_gap: float
    dominance_verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "crossing_count": self.crossing_count,
            "crossing_locations": list(self.crossing_locations),
            "max_signed_gap": self.max_signed_gap,
            "verdict": self.dominance_verdict.value,
        }


@dataclass(frozen=True)
class PHTestReport:
    feature_names: tuple[str, ...]
    correlation: np.ndarray
    z: np.ndarray
    violated: np.ndarray
    z_crit: float
    n_events: int

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "correlation": self.correlation.tolist(),
            "z": self.z.tolist(),
            "violated": [bool(v) for v in self.violated],
            "z_crit": self.z_crit,
            "n_events": self.n_events,
        }


def empirical_cdf(samples) -> StepFunction:
    """Right-continuous ECDF with knots at the distinct sample values."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    if x.size == 0:
        raise EmptyError("empirical CDF of an empty sample")
    knots = np.unique(x)
    values = np.searchsorted(x, knots, side="right") / x.size
    return StepFunction(knots, values, 0.0, sample_size=x.size)


def crossing_detect(
    F1: StepFunction,
    F2: StepFunction,
    epsilon: float = DEFAULT_EPSILON,
    min_n: int = DEFAULT_MIN_N,
) -> CrossingReport:
    """Classify ``D(u) = F1(u) - F2(u)`` as dominance, crossing or no difference.

    Only knots where ``|D| > epsilon`` carry a sign; a crossing is a sign
    flip between consecutive such knots, located at the first knot of the
    new sign.
    """
    for name, F in (("F1", F1), ("F2", F2)):
        if F.sample_size is not None and F.sample_size < min_n:
            raise InsufficientDataError(f"{name} is built from {F.sample_size} samples; need at least {min_n}")
    grid = np.union1d(F1.knots, F2.knots)
    gap = np.asarray(F1(grid)) - np.asarray(F2(grid))
    signif = np.abs(gap) > epsilon
    signs = np.sign(gap[signif])
    where = grid[signif]
    flips = np.flatnonzero(signs[1:] != signs[:-1]) + 1
    locations = tuple(float(u) for u in where[flips])
    peak = int(np.argmax(np.abs(gap))) if gap.size else 0
    max_gap = float(gap[peak]) if gap.size else 0.0

    if flips.size:
        verdict = Verdict.CROSSING
    elif not signs.size:
        verdict = Verdict.INDISTINGUISHABLE
    elif signs[0] > 0:
        verdict = Verdict.FIRST_DOMINATES
    else:
        verdict = Verdict.SECOND_DOMINATES
    return CrossingReport(int(flips.size), locations, max_gap, verdict)


def schoenfeld_residuals(data: SurvivalDataset, fit: FitResult | np.ndarray) -> np.ndarray:
    """Per-event residuals ``x_i - E_beta[x | risk set of i]``, in event order.

    Row ``k`` belongs to record ``build_risk_sets(data).order[k]``; tied
    events each get their own row against the shared risk set.
    """
    beta = np.asarray(getattr(fit, "beta", fit), dtype=float).reshape(-1)
    if beta.size != data.d:
        raise DimensionError(f"fit has d={beta.size}, data has d={data.d}")
    risk = build_risk_sets(data)
    Xs = data.X[risk.order]
    s = Xs @ beta
    w = np.exp(s - np.max(s))
    r0 = np.cumsum(w[::-1])[::-1][risk.starts]
    r1 = np.cumsum((w[:, None] * Xs)[::-1], axis=0)[::-1][risk.starts]
    means = r1 / r0[:, None]
    return Xs - np.repeat(means, risk.event_sizes, axis=0)


def ph_test(data: SurvivalDataset, fit: FitResult | np.ndarray, z_crit: float = DEFAULT_Z_CRIT) -> PHTestReport:
    """Correlate each feature's Schoenfeld residuals with the event rank.

    ``z = rho * sqrt(m - 2) / sqrt(1 - rho**2)`` over ``m`` events; a
    feature is flagged when ``|z| > z_crit``. Tied events share their
    average rank.
    """
    m = data.n
    if m < MIN_EVENTS:
        raise InsufficientDataError(f"{m} events; the PH test needs at least {MIN_EVENTS}")
    resid = schoenfeld_residuals(data, fit)
    ranks = stats.rankdata(np.sort(data.utilities))
    rc = ranks - ranks.mean()
    centred = resid - resid.mean(axis=0)
    denom = np.sqrt(np.sum(centred**2, axis=0) * np.sum(rc**2))
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(denom > 0, centred.T @ rc / denom, 0.0)
    rho = np.clip(rho, -1 + 1e-15, 1 - 1e-15)
    z = rho * np.sqrt(m - 2) / np.sqrt(1 - rho**2)
    return PHTestReport(data.feature_names, rho, z, np.abs(z) > z_crit, float(z_crit), m)


def seed_sweep(fn, seeds: Sequence[int], workers: int = 1) -> list:
    """Map ``fn`` over ``seeds``; results come back in seed order for any worker count."""
    seeds = list(seeds)
    if workers <= 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


@dataclass
class RegimeOutcome:
    seed: int
    pl_beta: float
    median_gap: float
    agrees: bool
    dropped_groups: int


@dataclass
class ProbeReport:
    """Agreement between the PL-fitted preference and median utility, per regime."""

    regimes: dict[str, list[RegimeOutcome]] = field(default_factory=dict)

    def agreement_count(self, regime: str) -> int:
        return sum(o.agrees for o in self.regimes[regime])

    def agreement_rate(self, regime: str) -> float:
        return self.agreement_count(regime) / len(self.regimes[regime])

    def to_dict(self) -> dict:
        return {
            name: {
                "agreement_rate": self.agreement_rate(name),
                "agreements": self.agreement_count(name),
                "runs": [vars(o) for o in outcomes],
            }
            for name, outcomes in self.regimes.items()
        }


def _probe_once(spec: SimSpec, seed: int, config: FitConfig) -> RegimeOutcome:
    data = simulate(replace(spec, seed=seed))
    driver = data.X[:, spec.driver]
    if not set(np.unique(driver)) <= {0.0, 1.0}:
        raise ValueError("misestimation_probe needs a binary driver feature")
    gap = float(np.median(data.utilities[driver == 1]) - np.median(data.utilities[driver == 0]))
    ranked = utilities_to_rankings(data, 2, derived_seed(seed, 1))
    fit = pl_fit(ranked, config)
    beta = float(fit.beta[spec.driver])
    return RegimeOutcome(seed, beta, gap, bool(np.sign(beta) == np.sign(gap)), ranked.dropped_groups)


def misestimation_probe(
    spec_pair: tuple[SimSpec, SimSpec],
    n: int,
    seeds: Sequence[int],
    config: FitConfig | None = None,
    names: tuple[str, str] = ("ph", "violating"),
    workers: int = 1,
) -> ProbeReport:
    """Fit PL to pairwise rankings from each regime and compare with median utility.

    For every seed the regime is simulated with ``n`` records, split into
    random pairs ranked by utility, and fitted; the sign of the driver
    coefficient is the PL preference direction. Ground truth is the sign of
    the difference in median utility between driver groups 1 and 0 in the
    same simulated sample.
    """
    import warnings as _warnings

    config = config or FitConfig()
    report = ProbeReport()
    # separation in a single replicate is expected noise here, not an error
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        for name, spec in zip(names, spec_pair):
            sized = replace(spec, n=n)
            report.regimes[name] = seed_sweep(lambda s, sp=sized: _probe_once(sp, s, config), seeds, workers)
    return report
