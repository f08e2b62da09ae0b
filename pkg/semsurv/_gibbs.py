"""Gibbs sampler for the integrated latent-variable AFT model.

Per subject i, with both latents one score per subject:

    y_aug[i] ~ N(alpha_t + x_i beta_t + eta1[i] phi_t, sigma_t2)
    U1[i, k] ~ N(alpha_u1[k] + eta1[i] phi_u1[k], sigma2_u1[k])
    U2[i, l] ~ N(alpha_u2[l] + eta2[i] phi_u2[l], sigma2_u2[l])
    eta1[i] ~ N(eta2[i], sigma2_eta1),  eta2[i] ~ N(0, sigma2_eta2)

beta_t and alpha_t have priors scaled by sigma_t2, which carries a 1/sigma_t2 prior; phi_t and the platform
loadings have plain normal priors. Every update has a `*_conditional` companion returning the exact full
conditional it draws from.
"""
import logging
from collections import Counter
from dataclasses import dataclass, replace
from typing import Collection, Optional, Tuple, Union

import numpy as np

from semsurv._chain import ProgressCallback, run_chains
from semsurv._config import McmcConfig
from semsurv._model import (
    Dataset,
    Hyperparameters,
    IntegratedState,
    ModelKind,
    PosteriorDraws,
    check_hyperparameters,
    check_identifiability,
    check_state,
    integrated_mean,
    survival_loglik_integrated,
)
from semsurv._rng import (
    RngStream,
    sample_inverse_gamma,
    sample_mvn_canonical,
    sample_normal,
    sample_truncated_normal_lower,
)
from semsurv.errors import IdentifiabilityError, InvalidArgumentError

logger = logging.getLogger(__name__)

SIGMA_SCALE_FLOOR = 1e-300
SIGMA_FLOOR_HITS = "sigma_floor_hits"
FROZEN_BLOCKS = ("y_aug", "eta1", "eta2", "regression", "phi_t", "sigma_t2", "loadings")

Real = Union[float, np.ndarray]


@dataclass(frozen=True)
class NormalConditional:
    mean: Real
    variance: Real


@dataclass(frozen=True)
class CanonicalConditional:
    """N(precision^-1 linear, scale * precision^-1)."""

    linear: np.ndarray
    precision: np.ndarray
    scale: float

    @property
    def mean(self) -> np.ndarray:
        return np.linalg.solve(self.precision, self.linear)

    @property
    def covariance(self) -> np.ndarray:
        return self.scale * np.linalg.inv(self.precision)


@dataclass(frozen=True)
class InverseGammaConditional:
    shape: float
    scale: float


def _from_precision(linear: Real, precision: Real) -> NormalConditional:
    return NormalConditional(mean=linear / precision, variance=1.0 / precision)


def initial_state(data: Dataset) -> IntegratedState:
    log_time = data.log_time
    spread = float(np.std(log_time))
    offset = 0.1 * spread if spread > 0 else 0.1
    return IntegratedState(
        alpha_t=0.0,
        beta_t=np.zeros(data.p),
        phi_t=0.0,
        sigma_t2=1.0,
        alpha_u1=np.zeros(data.q1),
        phi_u1=np.zeros(data.q1),
        alpha_u2=np.zeros(data.q2),
        phi_u2=np.zeros(data.q2),
        eta1=np.zeros(data.n),
        eta2=np.zeros(data.n),
        y_aug=np.where(data.censored, log_time + offset, log_time),
    )


def censored_conditional(state: IntegratedState, data: Dataset) -> NormalConditional:
    """Untruncated normal of the censored subjects' log-times; the draw is restricted to (log t*, inf)."""
    return NormalConditional(mean=integrated_mean(state, data)[data.censored], variance=state.sigma_t2)


def impute_censored(state: IntegratedState, data: Dataset, stream: RngStream) -> np.ndarray:
    y_aug = np.array(state.y_aug, dtype=float)
    if not np.any(data.censored):
        return y_aug

    conditional = censored_conditional(state, data)
    y_aug[data.censored] = sample_truncated_normal_lower(
        stream, conditional.mean, conditional.variance, data.log_time[data.censored]
    )
    return y_aug


def eta1_conditional(state: IntegratedState, data: Dataset, hyper: Hyperparameters) -> NormalConditional:
    weights = state.phi_u1 / hyper.sigma2_u1
    time_residual = state.y_aug - state.alpha_t - data.X @ state.beta_t
    precision = 1.0 / hyper.sigma2_eta1 + float(weights @ state.phi_u1) + state.phi_t**2 / state.sigma_t2
    linear = (
        state.eta2 / hyper.sigma2_eta1
        + (data.U1 - state.alpha_u1) @ weights
        + state.phi_t * time_residual / state.sigma_t2
    )
    return _from_precision(linear, precision)


def update_eta1(state: IntegratedState, data: Dataset, hyper: Hyperparameters, stream: RngStream) -> np.ndarray:
    conditional = eta1_conditional(state, data, hyper)
    return np.asarray(sample_normal(stream, conditional.mean, conditional.variance))


def eta2_conditional(state: IntegratedState, data: Dataset, hyper: Hyperparameters) -> NormalConditional:
    weights = state.phi_u2 / hyper.sigma2_u2
    precision = 1.0 / hyper.sigma2_eta1 + 1.0 / hyper.sigma2_eta2 + float(weights @ state.phi_u2)
    linear = state.eta1 / hyper.sigma2_eta1 + (data.U2 - state.alpha_u2) @ weights
    return _from_precision(linear, precision)


def update_eta2(state: IntegratedState, data: Dataset, hyper: Hyperparameters, stream: RngStream) -> np.ndarray:
    conditional = eta2_conditional(state, data, hyper)
    return np.asarray(sample_normal(stream, conditional.mean, conditional.variance))


def beta_conditional(state: IntegratedState, data: Dataset, hyper: Hyperparameters) -> CanonicalConditional:
    residual = state.y_aug - state.alpha_t - state.eta1 * state.phi_t
    return CanonicalConditional(
        linear=data.X.T @ residual + hyper.sigma_beta_inv @ hyper.beta_t0,
        precision=data.X.T @ data.X + hyper.sigma_beta_inv,
        scale=state.sigma_t2,
    )


def alpha_t_conditional(state: IntegratedState, data: Dataset, hyper: Hyperparameters) -> NormalConditional:
    residual = state.y_aug - data.X @ state.beta_t - state.eta1 * state.phi_t
    precision = data.n + 1.0 / hyper.sigma2_alpha_t
    mean = (float(np.sum(residual)) + hyper.alpha_t0 / hyper.sigma2_alpha_t) / precision
    return NormalConditional(mean=mean, variance=state.sigma_t2 / precision)


def phi_t_conditional(state: IntegratedState, data: Dataset, hyper: Hyperparameters) -> NormalConditional:
    # phi_t's prior is not scaled by sigma_t2, hence the sigma_t2 / sigma2_phi_t term
    residual = state.y_aug - state.alpha_t - data.X @ state.beta_t
    prior_weight = state.sigma_t2 / hyper.sigma2_phi_t
    precision = float(state.eta1 @ state.eta1) + prior_weight
    mean = (float(state.eta1 @ residual) + hyper.phi_t0 * prior_weight) / precision
    return NormalConditional(mean=mean, variance=state.sigma_t2 / precision)


def update_regression_block(
    state: IntegratedState,
    data: Dataset,
    hyper: Hyperparameters,
    stream: RngStream,
    frozen: Collection[str] = (),
) -> Tuple[np.ndarray, float, float]:
    """Sequential draws of beta_t, alpha_t then phi_t, each given the freshest values of the others."""
    if "regression" not in frozen:
        beta = beta_conditional(state, data, hyper)
        state = replace(state, beta_t=sample_mvn_canonical(stream, beta.linear, beta.precision, beta.scale))
        alpha = alpha_t_conditional(state, data, hyper)
        state = replace(state, alpha_t=float(sample_normal(stream, alpha.mean, alpha.variance)))

    if "phi_t" not in frozen:
        phi = phi_t_conditional(state, data, hyper)
        state = replace(state, phi_t=float(sample_normal(stream, phi.mean, phi.variance)))

    return state.beta_t, state.alpha_t, state.phi_t


def sigma_t2_conditional(state: IntegratedState, data: Dataset, hyper: Hyperparameters) -> InverseGammaConditional:
    residual = state.y_aug - integrated_mean(state, data)
    beta_offset = state.beta_t - hyper.beta_t0
    scale = 0.5 * (
        float(residual @ residual)
        + float(beta_offset @ hyper.sigma_beta_inv @ beta_offset)
        + (state.alpha_t - hyper.alpha_t0) ** 2 / hyper.sigma2_alpha_t
    )
    return InverseGammaConditional(shape=(data.n + data.p + 1) / 2.0, scale=scale)


def update_sigma_t2(
    state: IntegratedState,
    data: Dataset,
    hyper: Hyperparameters,
    stream: RngStream,
    diagnostics: Optional[Counter] = None,
) -> float:
    conditional = sigma_t2_conditional(state, data, hyper)
    scale = conditional.scale
    if not scale > SIGMA_SCALE_FLOOR:
        logger.warning("sigma_t2 scale %.3g floored at %.0e", scale, SIGMA_SCALE_FLOOR)
        scale = SIGMA_SCALE_FLOOR
        if diagnostics is not None:
            diagnostics[SIGMA_FLOOR_HITS] += 1
    return float(sample_inverse_gamma(stream, conditional.shape, scale))


def intercept_conditional(
    block: np.ndarray,
    eta: np.ndarray,
    slope: np.ndarray,
    variance: np.ndarray,
    prior_mean: np.ndarray,
    prior_variance: np.ndarray,
) -> NormalConditional:
    """Per-gene intercept conditional of U[:, k] = alpha_k + eta phi_k + e, variance known."""
    precision = block.shape[0] / variance + 1.0 / prior_variance
    linear = np.sum(block - np.outer(eta, slope), axis=0) / variance + prior_mean / prior_variance
    return _from_precision(linear, precision)


def slope_conditional(
    block: np.ndarray,
    eta: np.ndarray,
    intercept: np.ndarray,
    variance: np.ndarray,
    prior_mean: np.ndarray,
    prior_variance: np.ndarray,
) -> NormalConditional:
    precision = float(eta @ eta) / variance + 1.0 / prior_variance
    linear = eta @ (block - intercept) / variance + prior_mean / prior_variance
    return _from_precision(linear, precision)


def _update_platform(
    stream: RngStream,
    block: np.ndarray,
    eta: np.ndarray,
    intercept: np.ndarray,
    slope: np.ndarray,
    variance: np.ndarray,
    priors: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    intercept_mean, intercept_variance, slope_mean, slope_variance = priors
    conditional = intercept_conditional(block, eta, slope, variance, intercept_mean, intercept_variance)
    intercept = np.asarray(sample_normal(stream, conditional.mean, conditional.variance))
    conditional = slope_conditional(block, eta, intercept, variance, slope_mean, slope_variance)
    slope = np.asarray(sample_normal(stream, conditional.mean, conditional.variance))
    return intercept, slope


def update_platform_loadings(
    state: IntegratedState, data: Dataset, hyper: Hyperparameters, stream: RngStream
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    alpha_u1, phi_u1 = _update_platform(
        stream,
        data.U1,
        state.eta1,
        state.alpha_u1,
        state.phi_u1,
        hyper.sigma2_u1,
        (hyper.alpha_u1_mean, hyper.alpha_u1_var, hyper.phi_u1_mean, hyper.phi_u1_var),
    )
    alpha_u2, phi_u2 = _update_platform(
        stream,
        data.U2,
        state.eta2,
        state.alpha_u2,
        state.phi_u2,
        hyper.sigma2_u2,
        (hyper.alpha_u2_mean, hyper.alpha_u2_var, hyper.phi_u2_mean, hyper.phi_u2_var),
    )
    return alpha_u1, phi_u1, alpha_u2, phi_u2


def gibbs_step(
    state: IntegratedState,
    data: Dataset,
    hyper: Hyperparameters,
    stream: RngStream,
    diagnostics: Optional[Counter] = None,
    frozen: Collection[str] = (),
) -> IntegratedState:
    """One full scan: impute, eta1, eta2, regression block, sigma_t2, loadings."""
    if "y_aug" not in frozen:
        state = replace(state, y_aug=impute_censored(state, data, stream))
    if "eta1" not in frozen:
        state = replace(state, eta1=update_eta1(state, data, hyper, stream))
    if "eta2" not in frozen:
        state = replace(state, eta2=update_eta2(state, data, hyper, stream))
    beta_t, alpha_t, phi_t = update_regression_block(state, data, hyper, stream, frozen)
    state = replace(state, beta_t=beta_t, alpha_t=alpha_t, phi_t=phi_t)
    if "sigma_t2" not in frozen:
        state = replace(state, sigma_t2=update_sigma_t2(state, data, hyper, stream, diagnostics))
    if "loadings" not in frozen:
        alpha_u1, phi_u1, alpha_u2, phi_u2 = update_platform_loadings(state, data, hyper, stream)
        state = replace(state, alpha_u1=alpha_u1, phi_u1=phi_u1, alpha_u2=alpha_u2, phi_u2=phi_u2)
    return state


def run_chain(
    data: Dataset,
    hyper: Hyperparameters,
    config: McmcConfig,
    progress: Optional[ProgressCallback] = None,
    initial: Optional[IntegratedState] = None,
    frozen: Collection[str] = (),
    max_workers: int = 1,
) -> PosteriorDraws:
    check_hyperparameters(hyper, data)
    report = check_identifiability(data, hyper)
    if report.hard_failures:
        raise IdentifiabilityError(check.message for check in report.hard_failures)

    unknown = sorted(set(frozen) - set(FROZEN_BLOCKS))
    if unknown:
        raise InvalidArgumentError(f"Unknown frozen blocks {unknown}, expected a subset of {list(FROZEN_BLOCKS)}")

    if initial is None:
        initial = initial_state(data)
    check_state(initial, data)

    frozen = frozenset(frozen)
    if frozen:
        logger.info("Holding blocks %s at their initial values", sorted(frozen))

    return run_chains(
        ModelKind.INTEGRATED,
        data,
        config,
        initial,
        lambda state, stream, diagnostics: gibbs_step(state, data, hyper, stream, diagnostics, frozen),
        lambda state: survival_loglik_integrated(state, data),
        progress=progress,
        max_workers=max_workers,
        diagnostic_names=(SIGMA_FLOOR_HITS,),
    )
