"""Newton maximizer with step-halving line search, shared by every fitter."""

from __future__ import annotations

from dataclasses import dataclass
import warnings
from typing import Callable, Tuple

import numpy as np

from .core import FitResult, HazrankError, NonFiniteError, ScoreModel, SeparationWarning

__all__ = [
    "FitConfig",
    "SingularHessianError",
    "newton_maximize",
    "newton_step",
    "warn_if_separated",
]

ObjectiveOracle = Callable[[np.ndarray], Tuple[float, np.ndarray, np.ndarray]]


class SingularHessianError(HazrankError, np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class FitConfig:
    tol: float = 1e-8
    max_iter: int = 100
    ridge_lambda: float = 0.0
    beta_cap: float = 30.0
    line_search_shrink: float = 0.5
    min_step: float = 1e-10

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 0:
            raise ValueError(f"max_iter must be a non-negative integer, got {self.max_iter}")
        if self.ridge_lambda < 0:
            raise ValueError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if not self.beta_cap > 0:
            raise ValueError(f"beta_cap must be positive, got {self.beta_cap}")
        if not 0 < self.line_search_shrink < 1:
            raise ValueError(f"line_search_shrink must lie in (0, 1), got {self.line_search_shrink}")
        if not self.min_step > 0:
            raise ValueError(f"min_step must be positive, got {self.min_step}")


# escalating diagonal loads tried when the Cholesky factorisation fails
_JITTERS = (1e-8, 1e-7, 1e-6)
_FLAT_ULPS = 64
_DIVERGING_STEP = 1e-3


def newton_step(gradient: np.ndarray, hessian: np.ndarray) -> np.ndarray:
    """Solve ``-hessian @ step = gradient`` by Cholesky, loading the diagonal if needed."""
    A = -np.asarray(hessian, dtype=float)
    A = 0.5 * (A + A.T)
    eye = np.eye(A.shape[0])
    for jitter in (0.0, *_JITTERS):
        try:
            L = np.linalg.cholesky(A + jitter * eye)
        except np.linalg.LinAlgError:
            continue
        y = np.linalg.solve(L, gradient)
        return np.linalg.solve(L.T, y)
    raise SingularHessianError("negative Hessian is not positive definite even after diagonal loading")


def _penalised(oracle: ObjectiveOracle, ridge: float):
    def evaluate(beta):
        value, grad, hess = oracle(beta)
        value = float(value)
        if not np.isfinite(value):
            raise NonFiniteError(f"objective returned {value} at beta={beta.tolist()}")
        grad = np.asarray(grad, dtype=float)
        hess = np.asarray(hess, dtype=float)
        if ridge:
            value_pen = value - ridge * float(beta @ beta)
            grad = grad - 2.0 * ridge * beta
            hess = hess - 2.0 * ridge * np.eye(beta.size)
        else:
            value_pen = value
        return value, value_pen, grad, hess

    return evaluate


def newton_maximize(oracle: ObjectiveOracle, init, config: FitConfig | None = None) -> FitResult:
    """Maximize ``oracle``'s value, minus ``ridge_lambda * ||beta||^2``.

    ``oracle(beta)`` returns ``(value, gradient, hessian)`` of the
    unpenalized objective. Each iteration solves the Newton system and halves
    the step until the penalized value increases; iteration stops once the
    gradient infinity-norm drops to ``config.tol``, after ``max_iter``
    iterations, when the step falls below ``min_step``, or when
    ``||beta||_inf`` exceeds ``beta_cap``.

    The returned ``log_likelihood`` is the unpenalized value, ``information``
    is the negative penalized Hessian, and ``trace`` holds the penalized
    objective after every accepted iteration (starting with the initial point).
    """
    config = config or FitConfig()
    beta = np.array(init, dtype=float).reshape(-1)
    if not np.all(np.isfinite(beta)):
        raise NonFiniteError("initial point contains NaN or Inf")
    evaluate = _penalised(oracle, config.ridge_lambda)

    value, value_pen, grad, hess = evaluate(beta)
    trace = [value_pen]
    notes: list[str] = []
    iterations = 0
    converged = False

    while True:
        gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
        if gnorm <= config.tol:
            converged = True
            break
        if iterations >= config.max_iter:
            notes.append(f"iteration cap {config.max_iter} reached with gradient norm {gnorm:.3e}")
            break
        if np.max(np.abs(beta)) > config.beta_cap:
            notes.append(
                f"separation: |beta|_inf = {np.max(np.abs(beta)):.3g} exceeds beta_cap {config.beta_cap}"
            )
            break
        step = newton_step(grad, hess)
        t = 1.0
        accepted = False
        while t >= config.min_step:
            candidate = beta + t * step
            try:
                c_value, c_pen, c_grad, c_hess = evaluate(candidate)
            except NonFiniteError:
                c_pen, c_grad = -np.inf, grad
            # near the optimum the ascent drops below float resolution of the
            # objective; there a smaller gradient is the better guide
            flat = abs(c_pen - value_pen) <= _FLAT_ULPS * np.spacing(max(1.0, abs(value_pen)))
            if c_pen > value_pen or (flat and np.max(np.abs(c_grad)) < gnorm):
                accepted = True
                break
            t *= config.line_search_shrink
        iterations += 1
        if not accepted:
            notes.append(
                f"line search stalled below min_step {config.min_step:g} with gradient norm {gnorm:.3e}"
            )
            break
        beta, value, value_pen, grad, hess = candidate, c_value, c_pen, c_grad, c_hess
        trace.append(value_pen)

    if converged and beta.size:
        # a gradient that vanished while the Newton step did not means the
        # likelihood is still rising along an unbounded direction
        try:
            last = newton_step(grad, hess)
        except SingularHessianError:
            last = np.zeros_like(beta)
        if np.max(np.abs(last)) > _DIVERGING_STEP:
            notes.append(
                f"separation: gradient vanished at |beta|_inf = {np.max(np.abs(beta)):.3g} "
                f"but the Newton step is still {np.max(np.abs(last)):.3g}; the estimate is diverging"
            )

    information = -hess
    information = 0.5 * (information + information.T)
    return FitResult(
        model=ScoreModel(beta),
        log_likelihood=value,
        gradient_norm=float(np.max(np.abs(grad))) if grad.size else 0.0,
        iterations=iterations,
        converged=converged,
        information=information,
        warnings=notes,
        trace=trace,
    )


def warn_if_separated(result: FitResult) -> FitResult:
    """Re-emit a recorded separation note as a :class:`SeparationWarning`."""
    notes = [w for w in result.warnings if w.startswith("separation")]
    if notes:
        warnings.warn(notes[-1], SeparationWarning, stacklevel=3)
    return result
