import numpy as np
import pytest

from hazrank import (
    Covariates,
    DimensionError,
    NonFiniteError,
    PermutationError,
    RankingInstance,
    ScoreModel,
    SizeError,
    StepFunction,
    SurvivalDataset,
    UtilityRecord,
    seeded_rng,
)
from hazrank.core import derived_seed


def test_ranking_instance_rejects_non_permutation():
    with pytest.raises(PermutationError):
        RankingInstance(np.zeros((3, 1)), [0, 0, 2])
    with pytest.raises(DimensionError):
        RankingInstance(np.zeros((3, 1)), [0, 1])
    with pytest.raises(DimensionError):
        RankingInstance(np.zeros((1, 1)), [0])


def test_ranking_instance_rejects_nonfinite():
    with pytest.raises(NonFiniteError):
        RankingInstance(np.array([[0.0], [np.nan]]), [0, 1])


def test_covariates_default_names():
    cov = Covariates(np.zeros((2, 3)))
    assert cov.feature_names == ("x0", "x1", "x2")
    with pytest.raises(DimensionError):
        Covariates(np.zeros((2, 3)), ("a",))


def test_utility_must_be_positive():
    with pytest.raises(ValueError):
        UtilityRecord([1.0], 0.0)
    with pytest.raises(ValueError):
        SurvivalDataset(np.zeros((2, 1)), [1.0, -2.0])
    with pytest.raises(SizeError):
        SurvivalDataset(np.zeros((1, 1)), [1.0])


def test_dataset_record_round_trip():
    ds = SurvivalDataset(np.arange(6.0).reshape(3, 2), [1.0, 2.0, 0.5])
    assert SurvivalDataset.from_records(ds.records) == ds


def test_score_model_dimension_check():
    with pytest.raises(DimensionError):
        ScoreModel([1.0, 2.0]).scores(np.zeros((3, 1)))


def test_step_function_right_continuous_and_left_limit():
    f = StepFunction([1.0, 2.0], [0.5, 1.0], 0.0)
    assert f(0.5) == 0.0
    assert f(1.0) == 0.5
    assert f.left_limit(1.0) == 0.0
    assert f(3.0) == 1.0
    with pytest.raises(ValueError):
        StepFunction([2.0, 1.0], [0.0, 0.0])


def test_seeded_rng_is_deterministic():
    assert np.array_equal(seeded_rng(5).random(10), seeded_rng(5).random(10))
    assert derived_seed(5, 1) == derived_seed(5, 1)
    assert derived_seed(5, 1) != derived_seed(5, 2)
