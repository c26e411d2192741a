"""Synthetic utility data under proportional and non-proportional hazards.

PH families are sampled by inverting the conditional survival function
``S(u | x) = S0(u) ** exp(<beta, x>)``. LogNormal and mixture laws are the
non-PH generators: a covariate shifts the log-utility location, can rescale
its spread, and (for mixtures) tilts the component probabilities, which is
what makes group CDFs cross.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import special

from .core import Covariates, DimensionError, HazrankError, RankingInstance, SizeError, SurvivalDataset, seeded_rng
from .plackett_luce import RankingDataset

__all__ = [
    "LawMismatchError",
    "EdgeError",
    "WeibullPH",
    "ExponentialPH",
    "LogNormal",
    "Mixture",
    "Bernoulli",
    "UniformBox",
    "Gaussian",
    "SimSpec",
    "EqualQuantile",
    "FixedEdges",
    "draw_utilities",
    "sample_covariates",
    "sample_ph",
    "sample_nonph",
    "simulate",
    "quantize_likert",
    "utilities_to_rankings",
]


class LawMismatchError(HazrankError, TypeError):
    pass


class EdgeError(HazrankError, ValueError):
    pass


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class WeibullPH:
    shape: float
    scale: float = 1.0

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("scale", self.scale)

    def inverse_cumhaz(self, h):
        return self.scale * np.power(h, 1.0 / self.shape)

    def cdf(self, u, score=0.0):
        return -np.expm1(-np.exp(score) * np.power(np.asarray(u, dtype=float) / self.scale, self.shape))


@dataclass(frozen=True)
class ExponentialPH:
    rate: float = 1.0

    def __post_init__(self):
        _positive("rate", self.rate)

    def inverse_cumhaz(self, h):
        return np.asarray(h, dtype=float) / self.rate

    def cdf(self, u, score=0.0):
        return -np.expm1(-np.exp(score) * self.rate * np.asarray(u, dtype=float))


@dataclass(frozen=True)
class LogNormal:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")
        _positive("sigma", self.sigma)

    def cdf(self, u, shift=0.0, sigma_factor=1.0):
        z = (np.log(np.asarray(u, dtype=float)) - self.mu - shift) / (self.sigma * sigma_factor)
        return special.ndtr(z)


@dataclass(frozen=True)
class Mixture:
    """Finite mixture; ``components`` is a sequence of ``(weight, law)`` pairs."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), law) for w, law in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        weights = np.array([w for w, _ in comps])
        if np.any(weights <= 0) or np.any(weights > 1):
            raise ValueError(f"mixture weights must lie in (0, 1], got {weights.tolist()}")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {math.fsum(weights)!r}")
        for _, law in comps:
            if not isinstance(law, (WeibullPH, ExponentialPH, LogNormal, Mixture)):
                raise LawMismatchError(f"unsupported mixture component {law!r}")
        object.__setattr__(self, "components", comps)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.components])

    def cdf(self, u, shift=0.0):
        u = np.asarray(u, dtype=float) * np.exp(-shift)
        return sum(w * law.cdf(u) for w, law in self.components)


UtilityLaw = Union[WeibullPH, ExponentialPH, LogNormal, Mixture]
PH_LAWS = (WeibullPH, ExponentialPH)


@dataclass(frozen=True)
class Bernoulli:
    p: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    def draw(self, rng, n):
        return (rng.random(n) < self.p).astype(float)


@dataclass(frozen=True)
class UniformBox:
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"UniformBox needs hi > lo, got [{self.lo}, {self.hi}]")

    def draw(self, rng, n):
        return self.lo + (self.hi - self.lo) * rng.random(n)


@dataclass(frozen=True)
class Gaussian:
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        _positive("sd", self.sd)

    def draw(self, rng, n):
        return self.mean + self.sd * rng.standard_normal(n)


CovariateSampler = Union[Bernoulli, UniformBox, Gaussian]


@dataclass(frozen=True)
class SimSpec:
    """Everything needed to reproduce one simulated dataset.

    ``sigma_beta`` multiplies a LogNormal's sigma by ``exp(<sigma_beta, x>)``.
    ``alt_weights`` are the mixture weights for a record whose ``driver``
    feature equals 1; probabilities interpolate linearly from ``weights`` at
    0, so the driver must lie in ``[0, 1]``.
    """

    n: int
    beta_true: tuple[float, ...]
    covariates: tuple[CovariateSampler, ...]
    law: UtilityLaw
    seed: int = 0
    likert_levels: int | None = None
    group_size: int | None = None
    sigma_beta: tuple[float, ...] | None = None
    driver: int = 0
    alt_weights: tuple[float, ...] | None = None
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "beta_true", tuple(float(b) for b in np.atleast_1d(self.beta_true)))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        d = len(self.beta_true)
        if self.n < 2:
            raise SizeError(f"n must be at least 2, got {self.n}")
        if len(self.covariates) != d:
            raise DimensionError(f"{len(self.covariates)} covariate samplers for {d} coefficients")
        if self.sigma_beta is not None:
            object.__setattr__(self, "sigma_beta", tuple(float(b) for b in self.sigma_beta))
            if len(self.sigma_beta) != d:
                raise DimensionError(f"sigma_beta has length {len(self.sigma_beta)}, expected {d}")
        if not 0 <= self.driver < d:
            raise DimensionError(f"driver index {self.driver} out of range for d={d}")
        if self.alt_weights is not None:
            if not isinstance(self.law, Mixture):
                raise LawMismatchError("alt_weights only apply to a Mixture law")
            alt = tuple(float(w) for w in self.alt_weights)
            if len(alt) != len(self.law.components):
                raise DimensionError(f"{len(alt)} alt_weights for {len(self.law.components)} components")
            if any(w <= 0 or w > 1 for w in alt) or abs(math.fsum(alt) - 1.0) > 1e-12:
                raise ValueError(f"alt_weights must lie in (0, 1] and sum to 1, got {list(alt)}")
            object.__setattr__(self, "alt_weights", alt)
        if self.likert_levels is not None and self.likert_levels < 2:
            raise EdgeError(f"likert_levels must be at least 2, got {self.likert_levels}")
        if self.group_size is not None and self.group_size < 2:
            raise SizeError(f"group_size must be at least 2, got {self.group_size}")

    @property
    def d(self) -> int:
        return len(self.beta_true)


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform draws on the open interval (0, 1): midpoints of a 2**53 grid."""
    return (rng.integers(0, 2**53, size=n, dtype=np.int64) + 0.5) / 2.0**53


def sample_covariates(spec: SimSpec, rng: np.random.Generator) -> np.ndarray:
    return np.column_stack([sampler.draw(rng, spec.n) for sampler in spec.covariates])


def draw_utilities(law, n: int, rng: np.random.Generator, score=0.0) -> np.ndarray:
    """Draw ``n`` utilities from ``law``; ``score`` is the PH log-hazard multiplier
    for PH families and a log-utility shift for the others."""
    score = np.broadcast_to(np.asarray(score, dtype=float), (n,))
    if isinstance(law, PH_LAWS):
        v = _open_uniform(rng, n)
        return law.inverse_cumhaz(-np.log(v) * np.exp(-score))
    if isinstance(law, LogNormal):
        return np.exp(law.mu + score + law.sigma * rng.standard_normal(n))
    if isinstance(law, Mixture):
        return _draw_mixture(law, np.broadcast_to(law.weights, (n, law.weights.size)), rng) * np.exp(score)
    raise LawMismatchError(f"unsupported law {law!r}")


def _draw_mixture(law: Mixture, probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = probs.shape[0]
    pick = rng.random(n)
    cum = np.cumsum(probs, axis=1)
    comp = np.minimum(np.sum(pick[:, None] >= cum, axis=1), len(law.components) - 1)
    out = np.empty(n)
    for k, (_, sub) in enumerate(law.components):
        idx = np.flatnonzero(comp == k)
        out[idx] = draw_utilities(sub, idx.size, rng)
    return out


def sample_ph(spec: SimSpec) -> SurvivalDataset:
    """Inverse-transform sample from a proportional-hazards family.

    With ``v ~ U(0, 1)`` the draw is ``u = S0^{-1}(v ** exp(-<beta, x>))``;
    for a Weibull that is ``scale * (-log(v) * exp(-<beta, x>)) ** (1/shape)``.
    """
    if not isinstance(spec.law, PH_LAWS):
        raise LawMismatchError(f"sample_ph needs WeibullPH or ExponentialPH, got {type(spec.law).__name__}")
    rng = seeded_rng(spec.seed)
    X = sample_covariates(spec, rng)
    u = draw_utilities(spec.law, spec.n, rng, X @ np.asarray(spec.beta_true))
    return SurvivalDataset(X, u, spec.feature_names)


def sample_nonph(spec: SimSpec) -> SurvivalDataset:
    """Sample from a LogNormal or Mixture law with covariate-dependent shape."""
    law = spec.law
    if not isinstance(law, (LogNormal, Mixture)):
        raise LawMismatchError(f"sample_nonph needs LogNormal or Mixture, got {type(law).__name__}")
    rng = seeded_rng(spec.seed)
    X = sample_covariates(spec, rng)
    shift = X @ np.asarray(spec.beta_true)
    if isinstance(law, LogNormal):
        sigma = law.sigma * np.exp(X @ np.asarray(spec.sigma_beta)) if spec.sigma_beta else law.sigma
        u = np.exp(law.mu + shift + sigma * rng.standard_normal(spec.n))
    else:
        base = law.weights
        if spec.alt_weights is None:
            probs = np.broadcast_to(base, (spec.n, base.size))
        else:
            t = X[:, spec.driver]
            if np.any((t < 0) | (t > 1)):
                raise ValueError("mixture driver feature must lie in [0, 1]")
            probs = (1.0 - t)[:, None] * base + t[:, None] * np.asarray(spec.alt_weights)
        u = _draw_mixture(law, probs, rng) * np.exp(shift)
    return SurvivalDataset(X, u, spec.feature_names)


def simulate(spec: SimSpec) -> SurvivalDataset:
    """Dispatch to the right sampler, then quantize if ``likert_levels`` is set."""
    data = sample_ph(spec) if isinstance(spec.law, PH_LAWS) else sample_nonph(spec)
    if spec.likert_levels is not None:
        data = quantize_likert(data, spec.likert_levels)
    return data


@dataclass(frozen=True)
class EqualQuantile:
    pass


@dataclass(frozen=True)
class FixedEdges:
    edges: tuple[float, ...]

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise EdgeError(f"edges must be strictly increasing, got {list(edges)}")
        object.__setattr__(self, "edges", edges)


def quantize_likert(
    data: SurvivalDataset, levels: int, scheme: EqualQuantile | FixedEdges | Sequence[float] | None = None
) -> SurvivalDataset:
    """Replace utilities by rating levels ``1..levels``.

    ``EqualQuantile`` puts ``n / levels`` records in each level (records with
    equal utility always share a level). ``FixedEdges`` needs
    ``levels - 1`` cut points; a utility equal to an edge goes to the upper level.
    """
    if levels < 2:
        raise EdgeError(f"a rating scale needs at least 2 levels, got {levels}")
    scheme = EqualQuantile() if scheme is None else scheme
    if not isinstance(scheme, (EqualQuantile, FixedEdges)):
        scheme = FixedEdges(tuple(scheme))
    u = data.utilities
    if isinstance(scheme, FixedEdges):
        if len(scheme.edges) != levels - 1:
            raise EdgeError(f"{levels} levels need {levels - 1} edges, got {len(scheme.edges)}")
        level = np.searchsorted(np.asarray(scheme.edges), u, side="right") + 1
    else:
        rank = np.searchsorted(np.sort(u), u, side="left")
        level = rank * levels // u.size + 1
    return SurvivalDataset(data.X, level.astype(float), data.feature_names)


def utilities_to_rankings(data: SurvivalDataset, group_size: int, seed: int) -> RankingDataset:
    """Randomly partition records into groups and rank each by utility, highest first.

    Groups containing tied utilities are dropped and counted in
    ``dropped_groups``; the ``n % group_size`` leftover records are not used.
    """
    g = int(group_size)
    if g < 2:
        raise SizeError(f"group_size must be at least 2, got {g}")
    if data.n < g:
        raise SizeError(f"{data.n} records cannot fill a group of {g}")
    rng = seeded_rng(seed)
    perm = rng.permutation(data.n)
    n_groups = data.n // g
    instances = []
    dropped = 0
    for idx in perm[: n_groups * g].reshape(n_groups, g):
        u = data.utilities[idx]
        if np.unique(u).size < g:
            dropped += 1
            continue
        order = np.argsort(-u, kind="stable")
        instances.append(RankingInstance(Covariates(data.X[idx], data.feature_names), order))
    if not instances:
        raise SizeError(f"all {n_groups} groups contained ties")
    return RankingDataset(tuple(instances), dropped_groups=dropped)
