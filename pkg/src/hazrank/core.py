"""Shared domain types, validation and seeded randomness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "HazrankError",
    "PermutationError",
    "DimensionError",
    "NonFiniteError",
    "SizeError",
    "InsufficientDataError",
    "EmptyError",
    "SeparationWarning",
    "Covariates",
    "RankingInstance",
    "UtilityRecord",
    "SurvivalDataset",
    "ScoreModel",
    "FitResult",
    "StepFunction",
    "validate_ranking_instance",
    "seeded_rng",
    "derived_seed",
]


class HazrankError(Exception):
    """Base class for all library errors."""


class PermutationError(HazrankError, ValueError):
    pass


class DimensionError(HazrankError, ValueError):
    pass


class NonFiniteError(HazrankError, ValueError):
    pass


class SizeError(HazrankError, ValueError):
    pass


class InsufficientDataError(HazrankError, ValueError):
    pass


class EmptyError(HazrankError, ValueError):
    pass


class SeparationWarning(UserWarning):
    """The likelihood keeps increasing along a direction: the MLE is at infinity."""


def _as_finite_matrix(values, what: str = "covariates") -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"{what} must be a 2-d array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{what} must have at least one row and one column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what} contain NaN or Inf")
    arr.setflags(write=False)
    return arr


def _default_names(d: int) -> tuple[str, ...]:
    return tuple(f"x{k}" for k in range(d))


@dataclass(frozen=True)
class Covariates:
    """An ``n_items x d`` matrix of item features."""

    matrix: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        mat = _as_finite_matrix(self.matrix)
        object.__setattr__(self, "matrix", mat)
        names = tuple(self.feature_names) or _default_names(mat.shape[1])
        if len(names) != mat.shape[1]:
            raise DimensionError(f"{len(names)} feature names for {mat.shape[1]} columns")
        object.__setattr__(self, "feature_names", names)

    @property
    def n_items(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class RankingInstance:
    """One annotated list. ``order[0]`` is the index of the most-preferred item."""

    covariates: Covariates
    order: np.ndarray

    def __post_init__(self):
        if not isinstance(self.covariates, Covariates):
            object.__setattr__(self, "covariates", Covariates(self.covariates))
        order = np.array(self.order)
        if order.ndim != 1:
            raise PermutationError("order must be one-dimensional")
        if order.size and not np.issubdtype(order.dtype, np.integer):
            if not np.all(np.equal(np.mod(order, 1), 0)):
                raise PermutationError("order must contain integer indices")
        order = order.astype(np.int64)
        order.setflags(write=False)
        object.__setattr__(self, "order", order)
        validate_ranking_instance(self)

    @property
    def n_items(self) -> int:
        return self.covariates.n_items

    @property
    def X(self) -> np.ndarray:
        return self.covariates.matrix


def validate_ranking_instance(instance: RankingInstance) -> None:
    """Raise if ``instance`` breaks any of its invariants, otherwise return None."""
    X = np.asarray(instance.covariates.matrix, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise DimensionError("covariates must be n_items x d with d >= 1")
    if not np.all(np.isfinite(X)):
        raise NonFiniteError("covariates contain NaN or Inf")
    n = X.shape[0]
    if n < 2:
        raise DimensionError(f"a ranking needs at least 2 items, got {n}")
    order = np.asarray(instance.order)
    if order.shape != (n,):
        raise DimensionError(f"order has length {order.size}, expected {n}")
    if order.min() < 0 or order.max() >= n or np.unique(order).size != n:
        raise PermutationError(f"order {order.tolist()} is not a permutation of range({n})")


@dataclass(frozen=True)
class UtilityRecord:
    covariate_row: np.ndarray
    utility: float

    def __post_init__(self):
        row = np.array(self.covariate_row, dtype=float).reshape(-1)
        if row.size < 1:
            raise DimensionError("covariate_row must be non-empty")
        if not np.all(np.isfinite(row)):
            raise NonFiniteError("covariate_row contains NaN or Inf")
        u = float(self.utility)
        if not np.isfinite(u):
            raise NonFiniteError(f"utility {u} is not finite")
        if u <= 0:
            raise ValueError(f"utility must be positive, got {u}")
        row.setflags(write=False)
        object.__setattr__(self, "covariate_row", row)
        object.__setattr__(self, "utility", u)


@dataclass(frozen=True)
class SurvivalDataset:
    """Pointwise utility observations stored column-wise.

    ``X`` is ``n x d`` and ``utilities`` has length ``n``. Use
    :meth:`from_records` to build one from :class:`UtilityRecord` objects.
    """

    X: np.ndarray
    utilities: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = _as_finite_matrix(self.X)
        u = np.array(self.utilities, dtype=float).reshape(-1)
        if u.shape[0] != X.shape[0]:
            raise DimensionError(f"{u.shape[0]} utilities for {X.shape[0]} covariate rows")
        if u.shape[0] < 2:
            raise SizeError("a survival dataset needs at least 2 records")
        if not np.all(np.isfinite(u)):
            raise NonFiniteError("utilities contain NaN or Inf")
        if np.any(u <= 0):
            bad = int(np.flatnonzero(u <= 0)[0])
            raise ValueError(f"utilities must be positive; record {bad} has {u[bad]}")
        u.setflags(write=False)
        names = tuple(self.feature_names) or _default_names(X.shape[1])
        if len(names) != X.shape[1]:
            raise DimensionError(f"{len(names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "utilities", u)
        object.__setattr__(self, "feature_names", names)

    @classmethod
    def from_records(cls, records: Iterable[UtilityRecord], feature_names: Sequence[str] = ()):
        records = list(records)
        dims = {r.covariate_row.size for r in records}
        if len(dims) > 1:
            raise DimensionError(f"records have differing feature dimensions {sorted(dims)}")
        X = np.vstack([r.covariate_row for r in records]) if records else np.empty((0, 1))
        return cls(X, [r.utility for r in records], tuple(feature_names))

    @property
    def records(self) -> list[UtilityRecord]:
        return [UtilityRecord(x, u) for x, u in zip(self.X, self.utilities)]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, SurvivalDataset):
            return NotImplemented
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.utilities, other.utilities)
        )

    __hash__ = None


@dataclass(frozen=True)
class ScoreModel:
    """Linear score ``f(x) = <beta, x>``."""

    beta: np.ndarray

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(beta)):
            raise NonFiniteError("beta contains NaN or Inf")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

    def scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.beta.size:
            raise DimensionError(f"covariates have d={X.shape[1]}, model has d={self.beta.size}")
        return X @ self.beta


@dataclass
class FitResult:
    model: ScoreModel
    log_likelihood: float
    gradient_norm: float
    iterations: int
    converged: bool
    information: np.ndarray
    warnings: list[str] = field(default_factory=list)
    trace: list[float] = field(default_factory=list)

    @property
    def beta(self) -> np.ndarray:
        return self.model.beta

    @property
    def standard_errors(self) -> np.ndarray:
        """Square roots of the diagonal of the inverse information matrix.

        Entries are NaN when the information matrix is singular.
        """
        try:
            cov = np.linalg.inv(self.information)
        except np.linalg.LinAlgError:
            return np.full(self.beta.shape, np.nan)
        diag = np.diag(cov)
        with np.errstate(invalid="ignore"):
            return np.where(diag > 0, np.sqrt(np.abs(diag)), np.nan)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant curve.

    ``f(u) = values[k]`` for the largest ``k`` with ``knots[k] <= u``, and
    ``value_before_first_knot`` for ``u < knots[0]``.
    """

    knots: np.ndarray
    values: np.ndarray
    value_before_first_knot: float = 0.0
    sample_size: int | None = None

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=float).reshape(-1)
        if knots.shape != values.shape:
            raise DimensionError(f"{knots.size} knots but {values.size} values")
        if knots.size > 1 and not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        knots.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "value_before_first_knot", float(self.value_before_first_knot))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.knots, u, side="right") - 1
        padded = np.concatenate(([self.value_before_first_knot], self.values))
        out = padded[idx + 1]
        return float(out) if out.ndim == 0 else out

    def left_limit(self, u):
        """Value just below ``u``: uses knots strictly less than ``u``."""
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.knots, u, side="left") - 1
        padded = np.concatenate(([self.value_before_first_knot], self.values))
        out = padded[idx + 1]
        return float(out) if out.ndim == 0 else out


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic PCG64 stream; the same seed yields the same draws on every platform."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def derived_seed(seed: int, *keys: int) -> int:
    """Mix ``seed`` with integer keys (e.g. a group or replicate index) into a new seed."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
