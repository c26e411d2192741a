"""Plackett-Luce rankings and Cox proportional hazards under one likelihood."""

from .core import (
    Covariates,
    DimensionError,
    EmptyError,
    FitResult,
    HazrankError,
    InsufficientDataError,
    NonFiniteError,
    PermutationError,
    RankingInstance,
    ScoreModel,
    SeparationWarning,
    SizeError,
    StepFunction,
    SurvivalDataset,
    UtilityRecord,
    seeded_rng,
    validate_ranking_instance,
)
from .optimizer import FitConfig, SingularHessianError, newton_maximize
from .plackett_luce import RankingDataset, pl_enumerate, pl_fit, pl_grad_hessian, pl_log_likelihood
from .cox import (
    RiskSetIndex,
    TieMethod,
    build_risk_sets,
    cox_fit,
    cox_grad_hessian,
    cox_partial_loglik,
    ranking_to_pseudotimes,
)
from .baseline import BaselineEstimate, breslow_baseline, conditional_cdf
from .dpo import PolicyLogProbs, TabularPolicy, dpo_fit_tabular, dpo_list_loss, dpo_pair_loss, dpo_scores
from .simulate import SimSpec, simulate, utilities_to_rankings
from .diagnose import crossing_detect, empirical_cdf, misestimation_probe, ph_test, schoenfeld_residuals

__version__ = "0.1.0"
