from dataclasses import replace

import numpy as np
import pytest

from semsurv._baseline import (
    BaselineHyperparameters,
    baseline_design_matrix,
    check_full_rank,
    coefficients_conditional,
    initial_baseline_state,
    run_chain_baseline,
    sigma2_conditional,
    survival_loglik_baseline,
)
from semsurv._config import McmcConfig
from semsurv._gibbs import initial_state
from semsurv._model import Dataset, ModelKind, survival_loglik_integrated
from semsurv.errors import InvalidArgumentError, ShapeError, SingularCovarianceError

from tests.conftest import make_dataset


def test_design_matrix(dataset: Dataset) -> None:
    """It should stack an intercept, the covariates and both platforms"""
    design, names = baseline_design_matrix(dataset)

    assert design.shape == (dataset.n, 1 + dataset.p + dataset.q1 + dataset.q2)
    assert np.all(design[:, 0] == 1.0)
    assert names[:3] == ("intercept", "x_1", "x_2")
    assert names[-1] == "u2_3"


def test_default_hyperparameters() -> None:
    """It should use zero means and variance 100 for every coefficient"""
    hyper = BaselineHyperparameters.default(2, 3, 1)

    assert hyper.dimension == 7
    assert np.all(hyper.coefficient_mean == 0.0)
    assert np.allclose(np.diag(hyper.prior_precision), 0.01)


def test_rank_deficiency_names_columns() -> None:
    """It should name the linearly dependent columns"""
    generator = np.random.default_rng(0)
    platform1 = generator.normal(size=(10, 2))
    data = Dataset(
        log_time=generator.normal(size=10),
        censor=np.ones(10),
        covariates=generator.normal(size=(10, 1)),
        platform1=platform1,
        platform2=platform1[:, :1] * 2.0,
    )
    design, names = baseline_design_matrix(data)

    with pytest.raises(SingularCovarianceError) as err:
        check_full_rank(design, names)
    assert err.value.columns == ("u2_1",)
    with pytest.raises(SingularCovarianceError):
        run_chain_baseline(data, None, McmcConfig(iterations=30, burn_in=10, thin=2))


def test_more_columns_than_subjects() -> None:
    """It should reject a design with more columns than subjects"""
    data = make_dataset(n=6, p=2, q1=3, q2=3, censored=0)

    with pytest.raises(SingularCovarianceError):
        run_chain_baseline(data, None, McmcConfig(iterations=30, burn_in=10, thin=2))


def test_coefficient_conditional_is_conjugate(dataset: Dataset) -> None:
    """It should combine the data and the sigma2-scaled prior"""
    hyper = BaselineHyperparameters.default(dataset.p, dataset.q1, dataset.q2)
    design, _ = baseline_design_matrix(dataset)
    state = replace(initial_baseline_state(dataset), sigma2=2.0)

    conditional = coefficients_conditional(state, design, hyper)
    expected = np.linalg.solve(design.T @ design + 0.01 * np.eye(design.shape[1]), design.T @ state.y_aug)

    assert np.allclose(conditional.mean, expected)
    assert conditional.scale == 2.0
    assert sigma2_conditional(state, design, hyper).shape == (dataset.n + design.shape[1]) / 2.0


def test_hyperparameter_shape_mismatch(dataset: Dataset) -> None:
    """It should reject priors of the wrong dimension"""
    with pytest.raises(ShapeError):
        run_chain_baseline(dataset, BaselineHyperparameters.default(1, 1, 1), McmcConfig(30, 10, 2))


def test_unknown_frozen_block(dataset: Dataset, short_config: McmcConfig) -> None:
    """It should reject unknown block names"""
    with pytest.raises(InvalidArgumentError):
        run_chain_baseline(dataset, None, short_config, frozen=("loadings",))


def test_run_chain_baseline(dataset: Dataset, short_config: McmcConfig) -> None:
    """It should store draws of every coefficient block and keep censored times above their bounds"""
    draws = run_chain_baseline(dataset, None, short_config)

    assert draws.model is ModelKind.BASELINE
    assert len(draws) == short_config.stored_per_chain
    assert draws["gamma1"].shape == (len(draws), dataset.q1)
    assert np.all(draws["y_aug"][:, dataset.censored] > dataset.log_time[dataset.censored])
    assert np.all(draws["sigma2"] > 0.0)


def test_run_chain_baseline_deterministic(dataset: Dataset, short_config: McmcConfig) -> None:
    """It should produce identical draws for identical seeds"""
    first = run_chain_baseline(dataset, None, short_config)
    second = run_chain_baseline(dataset, None, short_config)

    for name in first.parameters:
        assert np.array_equal(first[name], second[name])


def test_survival_loglik_agrees_with_integrated(dataset: Dataset) -> None:
    """It should match the integrated survival log-likelihood with phi_t = 0 and no platform terms"""
    integrated = replace(initial_state(dataset), alpha_t=0.3, beta_t=np.array([0.2, -0.1]), sigma_t2=1.7)
    baseline = replace(
        initial_baseline_state(dataset), alpha=0.3, beta=np.array([0.2, -0.1]), sigma2=1.7, y_aug=integrated.y_aug
    )

    assert survival_loglik_baseline(baseline, dataset) == pytest.approx(survival_loglik_integrated(integrated, dataset))


@pytest.mark.slow
def test_matches_conjugate_posterior() -> None:
    """It should reproduce the closed-form normal-inverse-gamma posterior without censoring"""
    generator = np.random.default_rng(4)
    n = 50
    covariates = generator.uniform(-1.0, 1.0, size=(n, 2))
    log_time = 1.0 + covariates @ np.array([0.5, -1.0]) + generator.normal(scale=0.7, size=n)
    data = Dataset(
        log_time=log_time,
        censor=np.ones(n),
        covariates=covariates,
        platform1=np.empty((n, 0)),
        platform2=np.empty((n, 0)),
    )
    hyper = BaselineHyperparameters(coefficient_mean=np.zeros(3), coefficient_variance=np.full(3, 4.0))
    draws = run_chain_baseline(data, hyper, McmcConfig(iterations=8000, burn_in=500, thin=1, seed=2))

    design = np.column_stack([np.ones(n), covariates])
    covariance = np.linalg.inv(design.T @ design + 0.25 * np.eye(3))
    mean = covariance @ (design.T @ log_time)
    scale = 0.5 * (log_time @ log_time - mean @ np.linalg.solve(covariance, mean))
    sigma_mean = scale / (n / 2.0 - 1.0)

    sampled = np.column_stack([draws["alpha"], draws["beta"]])
    assert np.allclose(np.mean(sampled, axis=0), mean, atol=0.02)
    assert np.allclose(np.var(sampled, axis=0), sigma_mean * np.diag(covariance), rtol=0.1)
    assert np.mean(draws["sigma2"]) == pytest.approx(sigma_mean, rel=0.03)
