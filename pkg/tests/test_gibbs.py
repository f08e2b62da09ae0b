from collections import Counter
from dataclasses import replace
from typing import List

import numpy as np
import pytest
from pytest_mock import MockerFixture
from scipy.special import logsumexp

from semsurv._chain import ProgressEvent
from semsurv._config import McmcConfig
from semsurv._gibbs import (
    SIGMA_FLOOR_HITS,
    beta_conditional,
    eta1_conditional,
    eta2_conditional,
    impute_censored,
    initial_state,
    run_chain,
    sigma_t2_conditional,
    slope_conditional,
    update_sigma_t2,
)
from semsurv._model import Dataset, Hyperparameters, IntegratedState, ModelKind
from semsurv._rng import RngStream
from semsurv.errors import IdentifiabilityError, InvalidArgumentError, InvalidParameterError, SamplerError

from tests.conftest import make_dataset


def tiny_dataset(log_time=(0.0, 0.0), covariates=None, platform1=((0.0,), (0.0,)), platform2=((0.0,), (0.0,))):
    return Dataset(
        log_time=np.array(log_time),
        censor=np.ones(len(log_time)),
        covariates=None if covariates is None else np.array(covariates),
        platform1=np.array(platform1),
        platform2=np.array(platform2),
    )


def batch_means_se(values: np.ndarray, batches: int = 20) -> float:
    means = np.array([np.mean(batch) for batch in np.array_split(values, batches)])
    return float(np.std(means, ddof=1) / np.sqrt(batches))


def test_eta1_conditional_example() -> None:
    """It should give N(1, 1/2) for one gene with unit loading and a residual of 2"""
    data = tiny_dataset(platform1=((2.0,), (2.0,)))
    hyper = Hyperparameters.default(0, 1, 1)
    state = replace(initial_state(data), phi_u1=np.array([1.0]))

    conditional = eta1_conditional(state, data, hyper)

    assert np.allclose(conditional.mean, [1.0, 1.0])
    assert conditional.variance == pytest.approx(0.5)


def test_eta1_conditional_includes_time_precision() -> None:
    """It should add phi_t^2 / sigma_t2 to the eta1 precision"""
    data = tiny_dataset(log_time=(1.0, -1.0))
    hyper = Hyperparameters.default(0, 1, 1)
    state = replace(initial_state(data), phi_t=1.0, sigma_t2=1.0)

    conditional = eta1_conditional(state, data, hyper)

    assert conditional.variance == pytest.approx(0.5)
    assert np.allclose(conditional.mean, [0.5, -0.5])


def test_eta1_conditional_reduces_to_prior() -> None:
    """It should reduce to N(eta2, sigma2_eta1) without loadings"""
    data = tiny_dataset(log_time=(1.0, 2.0), platform1=((3.0,), (4.0,)))
    hyper = Hyperparameters.default(0, 1, 1, eta1_variance=2.0)
    state = replace(initial_state(data), eta2=np.array([0.3, -0.7]))

    conditional = eta1_conditional(state, data, hyper)

    assert np.allclose(conditional.mean, [0.3, -0.7])
    assert conditional.variance == pytest.approx(2.0)


def test_eta2_conditional_example() -> None:
    """It should give N(1, 1/3) for one gene with unit loading and a residual of 3"""
    data = tiny_dataset(platform2=((3.0,), (3.0,)))
    hyper = Hyperparameters.default(0, 1, 1)
    state = replace(initial_state(data), phi_u2=np.array([1.0]))

    conditional = eta2_conditional(state, data, hyper)

    assert np.allclose(conditional.mean, [1.0, 1.0])
    assert conditional.variance == pytest.approx(1.0 / 3.0)


def test_beta_conditional_example() -> None:
    """It should give N(1, 1/2) when X'X = 1 and X'r = 2"""
    data = tiny_dataset(log_time=(2.0, 0.0), covariates=((1.0,), (0.0,)))
    hyper = Hyperparameters.default(1, 1, 1)

    conditional = beta_conditional(initial_state(data), data, hyper)

    assert np.allclose(conditional.mean, [1.0])
    assert np.allclose(conditional.covariance, [[0.5]])


def test_beta_conditional_without_information() -> None:
    """It should fall back to the prior scaled by sigma_t2 for a zero design matrix"""
    data = tiny_dataset(log_time=(2.0, 1.0), covariates=((0.0, 0.0), (0.0, 0.0)))
    hyper = replace(Hyperparameters.default(2, 1, 1, beta_variance=3.0), beta_t0=np.array([0.5, -0.5]))
    state = replace(initial_state(data), sigma_t2=2.0)

    conditional = beta_conditional(state, data, hyper)

    assert np.allclose(conditional.mean, [0.5, -0.5])
    assert np.allclose(conditional.covariance, 6.0 * np.eye(2))


def test_loading_slope_conditional_example() -> None:
    """It should give N(4/3, 1/3) for two subjects with eta1 = 1 and residuals of 2"""
    conditional = slope_conditional(
        block=np.array([[2.0], [2.0]]),
        eta=np.array([1.0, 1.0]),
        intercept=np.zeros(1),
        variance=np.ones(1),
        prior_mean=np.zeros(1),
        prior_variance=np.ones(1),
    )

    assert np.allclose(conditional.mean, [4.0 / 3.0])
    assert np.allclose(conditional.variance, [1.0 / 3.0])


def test_sigma_t2_conditional_example() -> None:
    """It should give IG(2.5, 2.5) for n=3, p=1, a residual sum of squares of 4 and a unit prior term"""
    data = Dataset(
        log_time=np.array([2.0, 0.0, 0.0]),
        censor=np.ones(3),
        covariates=np.zeros((3, 1)),
        platform1=np.zeros((3, 1)),
        platform2=np.zeros((3, 1)),
    )
    hyper = Hyperparameters.default(1, 1, 1)
    state = replace(initial_state(data), beta_t=np.array([1.0]))

    conditional = sigma_t2_conditional(state, data, hyper)
    stream = RngStream(4)
    draws = [update_sigma_t2(state, data, hyper, stream) for _ in range(50000)]

    assert (conditional.shape, conditional.scale) == (2.5, 2.5)
    assert np.mean(draws) == pytest.approx(2.5 / 1.5, rel=0.05)


def test_sigma_t2_scale_floor() -> None:
    """It should floor a zero scale and count the event"""
    data = Dataset(log_time=np.zeros(3), censor=np.ones(3), platform1=np.zeros((3, 1)), platform2=np.zeros((3, 1)))
    hyper = Hyperparameters.default(0, 1, 1)
    diagnostics: Counter = Counter()

    value = update_sigma_t2(initial_state(data), data, hyper, RngStream(0), diagnostics)

    assert value > 0.0
    assert diagnostics[SIGMA_FLOOR_HITS] == 1


def test_impute_censored_mean() -> None:
    """It should impute from N(0, 1) truncated at 0 with mean 0.79788"""
    n = 40000
    data = Dataset(log_time=np.zeros(n), censor=np.zeros(n), platform1=np.zeros((n, 1)), platform2=np.zeros((n, 1)))

    y_aug = impute_censored(initial_state(data), data, RngStream(8))

    assert np.all(y_aug > 0.0)
    assert np.mean(y_aug) == pytest.approx(0.79788, abs=0.01)


def test_impute_without_censoring() -> None:
    """It should leave y_aug untouched when nobody is censored"""
    data = make_dataset(censored=0)
    state = initial_state(data)

    assert np.array_equal(impute_censored(state, data, RngStream(0)), state.y_aug)


def test_run_chain_storage(dataset: Dataset, hyper: Hyperparameters) -> None:
    """It should store (iterations - burn_in) // thin draws with their survival log-likelihood"""
    draws = run_chain(dataset, hyper, McmcConfig(iterations=100, burn_in=50, thin=10, seed=1))

    assert draws.model is ModelKind.INTEGRATED
    assert len(draws) == 5
    assert draws["beta_t"].shape == (5, dataset.p)
    assert draws["eta1"].shape == (5, dataset.n)
    assert draws["phi_u2"].shape == (5, dataset.q2)
    assert np.all(np.isfinite(draws.loglik))
    assert draws.diagnostics == {SIGMA_FLOOR_HITS: 0}


def test_run_chain_sampler_failure(
    dataset: Dataset, hyper: Hyperparameters, short_config: McmcConfig, mocker: MockerFixture
) -> None:
    """It should report the chain and iteration where a conditional draw failed"""
    mocker.patch("semsurv._gibbs.sample_inverse_gamma", side_effect=InvalidParameterError("scale", float("nan")))

    with pytest.raises(SamplerError) as err:
        run_chain(dataset, hyper, short_config)
    assert (err.value.chain, err.value.iteration) == (0, 1)
    assert "scale=nan" in err.value.message
    assert isinstance(err.value, RuntimeError)


def test_run_chain_augmentation(dataset: Dataset, hyper: Hyperparameters, short_config: McmcConfig) -> None:
    """It should keep every stored censored log-time above its censoring time"""
    draws = run_chain(dataset, hyper, short_config)
    y_aug = draws["y_aug"]

    assert np.all(y_aug[:, dataset.censored] > dataset.log_time[dataset.censored])
    assert np.all(y_aug[:, dataset.events] == dataset.log_time[dataset.events])


def test_run_chain_deterministic(dataset: Dataset, hyper: Hyperparameters, short_config: McmcConfig) -> None:
    """It should produce identical draws for identical seeds"""
    first = run_chain(dataset, hyper, short_config)
    second = run_chain(dataset, hyper, short_config)
    other = run_chain(dataset, hyper, replace(short_config, seed=6))

    for name in first.parameters:
        assert np.array_equal(first[name], second[name])
    assert np.array_equal(first.loglik, second.loglik)
    assert not np.array_equal(first["sigma_t2"], other["sigma_t2"])


def test_run_chain_parallel_matches_sequential(dataset: Dataset, hyper: Hyperparameters) -> None:
    """It should give the same draws whether chains run sequentially or on worker threads"""
    config = McmcConfig(iterations=40, burn_in=10, thin=3, seed=9, chains=3)
    sequential = run_chain(dataset, hyper, config)
    parallel = run_chain(dataset, hyper, config, max_workers=3)

    assert len(parallel) == 30
    assert parallel.chain.tolist() == [0] * 10 + [1] * 10 + [2] * 10
    for name in sequential.parameters:
        assert np.array_equal(sequential[name], parallel[name])
    assert not np.array_equal(parallel["alpha_t"][:10], parallel["alpha_t"][10:20])


def test_run_chain_progress(dataset: Dataset, hyper: Hyperparameters) -> None:
    """It should emit a progress event every progress_every iterations"""
    events: List[ProgressEvent] = []
    config = McmcConfig(iterations=60, burn_in=10, thin=5, progress_every=20)

    run_chain(dataset, hyper, config, progress=events.append)

    assert [event.iteration for event in events] == [20, 40, 60]
    assert all(event.iterations == 60 and event.model is ModelKind.INTEGRATED for event in events)
    assert all(np.isfinite(event.survival_loglik) for event in events)


def test_run_chain_not_identifiable(short_config: McmcConfig) -> None:
    """It should refuse to sample a latent factor without indicators"""
    data = Dataset(log_time=np.zeros(3), censor=np.ones(3), platform1=np.zeros((3, 0)), platform2=np.ones((3, 2)))

    with pytest.raises(IdentifiabilityError) as err:
        run_chain(data, Hyperparameters.default(0, 0, 2), short_config)
    assert "eta1" in err.value.message


def test_run_chain_unknown_frozen_block(dataset: Dataset, hyper: Hyperparameters, short_config: McmcConfig) -> None:
    """It should reject unknown block names"""
    with pytest.raises(InvalidArgumentError):
        run_chain(dataset, hyper, short_config, frozen=("everything",))


def test_frozen_blocks_hold_values(dataset: Dataset, hyper: Hyperparameters, short_config: McmcConfig) -> None:
    """It should keep frozen blocks at their initial values"""
    initial = replace(initial_state(dataset), phi_t=0.4, alpha_u1=np.full(dataset.q1, 0.3))

    draws = run_chain(dataset, hyper, short_config, initial=initial, frozen=("phi_t", "loadings"))

    assert np.all(draws["phi_t"] == 0.4)
    assert np.all(draws["alpha_u1"] == 0.3)
    assert np.unique(draws["alpha_t"]).size > 1


@pytest.mark.slow
def test_regression_block_matches_conjugate_posterior() -> None:
    """It should reproduce the closed-form normal-inverse-gamma posterior with the latent part held fixed"""
    data = make_dataset(n=40, p=2, censored=0, seed=3)
    hyper = Hyperparameters.default(data.p, data.q1, data.q2, beta_variance=2.0, prior_variance=4.0)
    config = McmcConfig(iterations=21000, burn_in=1000, thin=1, seed=21)

    draws = run_chain(data, hyper, config, frozen=("eta1", "eta2", "phi_t", "loadings"))

    design = np.column_stack([np.ones(data.n), data.X])
    prior_precision = np.diag([1.0 / 4.0, 1.0 / 2.0, 1.0 / 2.0])
    covariance = np.linalg.inv(design.T @ design + prior_precision)
    mean = covariance @ (design.T @ data.log_time)
    scale = 0.5 * (data.log_time @ data.log_time - mean @ np.linalg.solve(covariance, mean))
    sigma_mean = scale / (data.n / 2.0 - 1.0)

    sampled = np.column_stack([draws["alpha_t"], draws["beta_t"]])
    for column in range(3):
        error = abs(np.mean(sampled[:, column]) - mean[column])
        assert error < 4.0 * batch_means_se(sampled[:, column]) + 1e-3
        assert np.var(sampled[:, column]) == pytest.approx(sigma_mean * covariance[column, column], rel=0.1)
    assert abs(np.mean(draws["sigma_t2"]) - sigma_mean) < 4.0 * batch_means_se(draws["sigma_t2"]) + 1e-3


def grid_moments(log_density: np.ndarray, first: np.ndarray, second: np.ndarray):
    weights = np.exp(log_density - logsumexp(log_density))
    mean_first = float(np.sum(weights * first))
    mean_second = float(np.sum(weights * second))
    var_first = float(np.sum(weights * (first - mean_first) ** 2))
    var_second = float(np.sum(weights * (second - mean_second) ** 2))
    return mean_first, mean_second, var_first, var_second


def normal_log(values, mean, variance):
    return -0.5 * (np.log(2.0 * np.pi * variance) + (values - mean) ** 2 / variance)


def oracle_state(data: Dataset) -> IntegratedState:
    return replace(
        initial_state(data),
        alpha_t=0.1,
        phi_t=0.8,
        sigma_t2=0.5,
        alpha_u1=np.array([0.2]),
        phi_u1=np.array([1.2]),
        alpha_u2=np.array([-0.1]),
        phi_u2=np.array([0.7]),
    )


@pytest.mark.slow
def test_latent_updates_match_grid_posterior() -> None:
    """It should sample (eta1, eta2) of one subject from the posterior found by grid integration"""
    data = tiny_dataset(log_time=(0.3, -0.2), platform1=((1.0,), (-0.5,)), platform2=((0.5,), (0.2,)))
    hyper = Hyperparameters.default(0, 1, 1, platform_variance=0.6)
    state = oracle_state(data)
    config = McmcConfig(iterations=30000, burn_in=1000, thin=1, seed=13)

    draws = run_chain(
        data, hyper, config, initial=state, frozen=("y_aug", "regression", "phi_t", "sigma_t2", "loadings")
    )

    axis = np.linspace(-6.0, 6.0, 400)
    eta1, eta2 = np.meshgrid(axis, axis, indexing="ij")
    log_density = (
        normal_log(0.3, state.alpha_t + eta1 * state.phi_t, state.sigma_t2)
        + normal_log(1.0, 0.2 + 1.2 * eta1, 0.6)
        + normal_log(0.5, -0.1 + 0.7 * eta2, 0.6)
        + normal_log(eta1, eta2, 1.0)
        + normal_log(eta2, 0.0, 1.0)
    )
    mean1, mean2, var1, var2 = grid_moments(log_density, eta1, eta2)

    sampled1 = draws["eta1"][:, 0]
    sampled2 = draws["eta2"][:, 0]
    assert abs(np.mean(sampled1) - mean1) < 4.0 * batch_means_se(sampled1)
    assert abs(np.mean(sampled2) - mean2) < 4.0 * batch_means_se(sampled2)
    assert np.var(sampled1) == pytest.approx(var1, rel=0.08)
    assert np.var(sampled2) == pytest.approx(var2, rel=0.08)


@pytest.mark.slow
def test_loading_updates_match_grid_posterior() -> None:
    """It should sample a gene's intercept and loading from the posterior found by grid integration"""
    data = tiny_dataset(log_time=(0.3, -0.2), platform1=((1.5,), (-0.4,)), platform2=((0.5,), (0.2,)))
    hyper = Hyperparameters.default(0, 1, 1, platform_variance=0.8)
    state = replace(oracle_state(data), eta1=np.array([1.0, -0.5]), eta2=np.array([0.4, 0.1]))
    config = McmcConfig(iterations=30000, burn_in=1000, thin=1, seed=17)

    draws = run_chain(data, hyper, config, initial=state, frozen=("y_aug", "eta1", "eta2", "regression", "phi_t"))

    axis = np.linspace(-6.0, 6.0, 400)
    intercept, slope = np.meshgrid(axis, axis, indexing="ij")
    log_density = (
        normal_log(1.5, intercept + 1.0 * slope, 0.8)
        + normal_log(-0.4, intercept - 0.5 * slope, 0.8)
        + normal_log(intercept, 0.0, 1.0)
        + normal_log(slope, 0.0, 1.0)
    )
    mean_intercept, mean_slope, var_intercept, var_slope = grid_moments(log_density, intercept, slope)

    sampled_intercept = draws["alpha_u1"][:, 0]
    sampled_slope = draws["phi_u1"][:, 0]
    assert abs(np.mean(sampled_intercept) - mean_intercept) < 4.0 * batch_means_se(sampled_intercept)
    assert abs(np.mean(sampled_slope) - mean_slope) < 4.0 * batch_means_se(sampled_slope)
    assert np.var(sampled_intercept) == pytest.approx(var_intercept, rel=0.08)
    assert np.var(sampled_slope) == pytest.approx(var_slope, rel=0.08)
