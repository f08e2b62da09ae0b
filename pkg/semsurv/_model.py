import logging
from dataclasses import dataclass, field, fields
from enum import Enum
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import log_ndtr

from semsurv._config import McmcConfig
from semsurv.errors import (
    AugmentationInvariantError,
    InvalidDatasetError,
    InvalidHyperparameters,
    InvalidParameterError,
    ShapeError,
)

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


class ModelKind(str, Enum):
    INTEGRATED = "integrated"
    BASELINE = "baseline"


def _frozen_array(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float, copy=True)
    values.setflags(write=False)
    return values


def _as_matrix(values: Optional[np.ndarray], n: int) -> np.ndarray:
    if values is None:
        return np.empty((n, 0))
    matrix = np.asarray(values, dtype=float)
    if matrix.ndim == 1 and matrix.size == 0:
        return np.empty((n, 0))
    return matrix


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed survival data with the two omics blocks; log_time holds log(min(death, censoring) time)."""

    log_time: np.ndarray
    censor: np.ndarray
    covariates: Optional[np.ndarray] = None
    platform1: Optional[np.ndarray] = None
    platform2: Optional[np.ndarray] = None
    covariate_names: Tuple[str, ...] = ()
    platform1_names: Tuple[str, ...] = ()
    platform2_names: Tuple[str, ...] = ()
    subject_ids: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        log_time = np.asarray(self.log_time, dtype=float)
        n = log_time.shape[0] if log_time.ndim == 1 else 0
        covariates = _as_matrix(self.covariates, n)
        platform1 = _as_matrix(self.platform1, n)
        platform2 = _as_matrix(self.platform2, n)
        censor = np.asarray(self.censor)

        validate_dataset(log_time, censor, covariates, platform1, platform2)

        names = {
            "covariate_names": (self.covariate_names, covariates.shape[1], "x"),
            "platform1_names": (self.platform1_names, platform1.shape[1], "u1"),
            "platform2_names": (self.platform2_names, platform2.shape[1], "u2"),
            "subject_ids": (self.subject_ids, n, "s"),
        }
        errors = []
        for attribute, (given, expected, prefix) in names.items():
            resolved = tuple(str(name) for name in given) or tuple(f"{prefix}_{i + 1}" for i in range(expected))
            if len(resolved) != expected:
                errors += [f"{attribute} should have {expected} entries"]
            object.__setattr__(self, attribute, resolved)
        if len(set(self.subject_ids)) != len(self.subject_ids):
            errors += ["subject_ids should be unique"]
        if errors:
            raise InvalidDatasetError(errors)

        censor_int = np.array(censor, dtype=np.int8, copy=True)
        censor_int.setflags(write=False)
        object.__setattr__(self, "log_time", _frozen_array(log_time))
        object.__setattr__(self, "censor", censor_int)
        object.__setattr__(self, "covariates", _frozen_array(covariates))
        object.__setattr__(self, "platform1", _frozen_array(platform1))
        object.__setattr__(self, "platform2", _frozen_array(platform2))

    @property
    def n(self) -> int:
        return int(self.log_time.shape[0])

    @property
    def p(self) -> int:
        return int(self.covariates.shape[1])  # type: ignore[union-attr]

    @property
    def q1(self) -> int:
        return int(self.platform1.shape[1])  # type: ignore[union-attr]

    @property
    def q2(self) -> int:
        return int(self.platform2.shape[1])  # type: ignore[union-attr]

    @cached_property
    def events(self) -> np.ndarray:
        return self.censor == 1

    @cached_property
    def censored(self) -> np.ndarray:
        return self.censor == 0

    @property
    def X(self) -> np.ndarray:
        return self.covariates  # type: ignore[return-value]

    @property
    def U1(self) -> np.ndarray:
        return self.platform1  # type: ignore[return-value]

    @property
    def U2(self) -> np.ndarray:
        return self.platform2  # type: ignore[return-value]


def validate_dataset(
    log_time: np.ndarray,
    censor: np.ndarray,
    covariates: np.ndarray,
    platform1: np.ndarray,
    platform2: np.ndarray,
) -> None:
    errors: List[str] = []
    if log_time.ndim != 1:
        errors += ["log_time should be a vector"]
        raise InvalidDatasetError(errors)

    n = log_time.shape[0]
    if n < 2:
        errors += ["at least 2 subjects are required"]

    if not np.all(np.isfinite(log_time)):
        errors += ["log_time should be finite"]

    if censor.shape != (n,):
        errors += [f"censor should have shape ({n},)"]
    elif not np.all(np.isin(censor, (0, 1))):
        errors += ["censor entries should be 0 or 1"]

    for name, matrix in (("covariates", covariates), ("platform1", platform1), ("platform2", platform2)):
        if matrix.ndim != 2 or matrix.shape[0] != n:
            errors += [f"{name} should be a matrix with {n} rows"]
        elif not np.all(np.isfinite(matrix)):
            errors += [f"{name} should be finite"]

    if errors:
        raise InvalidDatasetError(errors)


def _vector(values: Union[float, Sequence[float], np.ndarray], size: int) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim == 0:
        array = np.full(size, float(array))
    return _frozen_array(array)


@dataclass(frozen=True, eq=False)
class Hyperparameters:
    """Prior means/variances and the fixed variances of the integrated model."""

    beta_t0: np.ndarray
    sigma_beta: np.ndarray
    alpha_t0: float
    sigma2_alpha_t: float
    phi_t0: float
    sigma2_phi_t: float
    alpha_u1_mean: np.ndarray
    alpha_u1_var: np.ndarray
    phi_u1_mean: np.ndarray
    phi_u1_var: np.ndarray
    alpha_u2_mean: np.ndarray
    alpha_u2_var: np.ndarray
    phi_u2_mean: np.ndarray
    phi_u2_var: np.ndarray
    sigma2_u1: np.ndarray
    sigma2_u2: np.ndarray
    sigma2_eta1: float = 1.0
    sigma2_eta2: float = 1.0

    def __post_init__(self) -> None:
        for item in fields(self):
            value = getattr(self, item.name)
            if isinstance(value, (np.ndarray, list, tuple)):
                object.__setattr__(self, item.name, _frozen_array(np.asarray(value, dtype=float)))
            else:
                object.__setattr__(self, item.name, float(value))
        validate_hyperparameters(self)

    @classmethod
    def default(
        cls,
        p: int,
        q1: int,
        q2: int,
        beta_variance: float = 1.0,
        prior_variance: float = 1.0,
        platform_variance: Union[float, Sequence[float]] = 1.0,
        eta1_variance: float = 1.0,
        eta2_variance: float = 1.0,
    ) -> "Hyperparameters":
        """Zero prior means, normal prior variances `prior_variance`, Sigma_beta = beta_variance * I."""
        return cls(
            beta_t0=np.zeros(p),
            sigma_beta=beta_variance * np.eye(p),
            alpha_t0=0.0,
            sigma2_alpha_t=prior_variance,
            phi_t0=0.0,
            sigma2_phi_t=prior_variance,
            alpha_u1_mean=np.zeros(q1),
            alpha_u1_var=_vector(prior_variance, q1),
            phi_u1_mean=np.zeros(q1),
            phi_u1_var=_vector(prior_variance, q1),
            alpha_u2_mean=np.zeros(q2),
            alpha_u2_var=_vector(prior_variance, q2),
            phi_u2_mean=np.zeros(q2),
            phi_u2_var=_vector(prior_variance, q2),
            sigma2_u1=_vector(platform_variance, q1),
            sigma2_u2=_vector(platform_variance, q2),
            sigma2_eta1=eta1_variance,
            sigma2_eta2=eta2_variance,
        )

    @property
    def p(self) -> int:
        return int(self.beta_t0.shape[0])

    @property
    def q1(self) -> int:
        return int(self.sigma2_u1.shape[0])

    @property
    def q2(self) -> int:
        return int(self.sigma2_u2.shape[0])

    @cached_property
    def sigma_beta_inv(self) -> np.ndarray:
        if self.p == 0:
            return np.empty((0, 0))
        return np.linalg.inv(self.sigma_beta)


def validate_hyperparameters(hyper: Hyperparameters) -> None:
    errors: List[str] = []
    p = hyper.beta_t0.shape[0] if hyper.beta_t0.ndim == 1 else -1
    if p < 0:
        errors += ["beta_t0 should be a vector"]
    elif hyper.sigma_beta.shape != (p, p):
        errors += [f"sigma_beta should be a {p}x{p} matrix"]
    elif p > 0 and (
        not np.allclose(hyper.sigma_beta, hyper.sigma_beta.T) or np.any(np.linalg.eigvalsh(hyper.sigma_beta) <= 0)
    ):
        errors += ["sigma_beta should be symmetric positive-definite"]

    for name in ("sigma2_alpha_t", "sigma2_phi_t", "sigma2_eta1", "sigma2_eta2"):
        value = getattr(hyper, name)
        if not (np.isfinite(value) and value > 0):
            errors += [f"{name} should be a positive number"]

    for block, means, variances in (
        ("u1", ("alpha_u1_mean", "phi_u1_mean"), ("alpha_u1_var", "phi_u1_var", "sigma2_u1")),
        ("u2", ("alpha_u2_mean", "phi_u2_mean"), ("alpha_u2_var", "phi_u2_var", "sigma2_u2")),
    ):
        size = getattr(hyper, f"sigma2_{block}").shape
        for name in means + variances:
            value = getattr(hyper, name)
            if value.shape != size:
                errors += [f"{name} should have shape {size}"]
            elif name in variances and not np.all(np.isfinite(value) & (value > 0)):
                errors += [f"{name} should be strictly positive"]
            elif not np.all(np.isfinite(value)):
                errors += [f"{name} should be finite"]

    if errors:
        raise InvalidHyperparameters(errors)


def check_hyperparameters(hyper: Hyperparameters, data: Dataset) -> None:
    for what, expected, actual in (("p", data.p, hyper.p), ("q1", data.q1, hyper.q1), ("q2", data.q2, hyper.q2)):
        if expected != actual:
            raise ShapeError(f"hyperparameters {what}", expected, actual)


@dataclass(frozen=True, eq=False)
class IntegratedState:
    alpha_t: float
    beta_t: np.ndarray
    phi_t: float
    sigma_t2: float
    alpha_u1: np.ndarray
    phi_u1: np.ndarray
    alpha_u2: np.ndarray
    phi_u2: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    y_aug: np.ndarray


@dataclass(frozen=True, eq=False)
class BaselineState:
    alpha: float
    beta: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    sigma2: float
    y_aug: np.ndarray


State = Union[IntegratedState, BaselineState]

STATE_TYPES: Dict[ModelKind, type] = {ModelKind.INTEGRATED: IntegratedState, ModelKind.BASELINE: BaselineState}


def check_augmentation(y_aug: np.ndarray, data: Dataset) -> None:
    if y_aug.shape != (data.n,):
        raise ShapeError("y_aug", (data.n,), y_aug.shape)
    below = np.flatnonzero(data.censored & ~(y_aug > data.log_time))
    if below.size:
        raise AugmentationInvariantError(below.tolist())
    if np.any(y_aug[data.events] != data.log_time[data.events]):
        raise AugmentationInvariantError(np.flatnonzero(data.events & (y_aug != data.log_time)).tolist())


def _check_dimensions(state: IntegratedState, data: Dataset) -> None:
    expected = {
        "beta_t": (data.p,),
        "alpha_u1": (data.q1,),
        "phi_u1": (data.q1,),
        "alpha_u2": (data.q2,),
        "phi_u2": (data.q2,),
        "eta1": (data.n,),
        "eta2": (data.n,),
        "y_aug": (data.n,),
    }
    for name, shape in expected.items():
        actual = np.shape(getattr(state, name))
        if actual != shape:
            raise ShapeError(name, shape, actual)


def check_state(state: IntegratedState, data: Dataset) -> None:
    _check_dimensions(state, data)
    if not (np.isfinite(state.sigma_t2) and state.sigma_t2 > 0):
        raise InvalidParameterError("sigma_t2", state.sigma_t2)
    check_augmentation(np.asarray(state.y_aug), data)


def normal_logpdf(values: np.ndarray, mean: np.ndarray, variance: Union[float, np.ndarray]) -> np.ndarray:
    return -0.5 * (LOG_2PI + np.log(variance) + (values - mean) ** 2 / variance)


def integrated_mean(state: IntegratedState, data: Dataset) -> np.ndarray:
    return state.alpha_t + data.X @ state.beta_t + state.eta1 * state.phi_t


def survival_loglik_integrated(state: IntegratedState, data: Dataset) -> float:
    """Normal log-density of the augmented log-times under the AFT equation."""
    _check_dimensions(state, data)
    return float(np.sum(normal_logpdf(state.y_aug, integrated_mean(state, data), state.sigma_t2)))


def platform_loglik(state: IntegratedState, data: Dataset, hyper: Hyperparameters) -> Tuple[float, float]:
    _check_dimensions(state, data)
    check_hyperparameters(hyper, data)
    mean1 = state.alpha_u1 + np.outer(state.eta1, state.phi_u1)
    mean2 = state.alpha_u2 + np.outer(state.eta2, state.phi_u2)
    return (
        float(np.sum(normal_logpdf(data.U1, mean1, hyper.sigma2_u1))),
        float(np.sum(normal_logpdf(data.U2, mean2, hyper.sigma2_u2))),
    )


def full_loglik_integrated(state: IntegratedState, data: Dataset, hyper: Hyperparameters) -> float:
    platform1, platform2 = platform_loglik(state, data, hyper)
    return survival_loglik_integrated(state, data) + platform1 + platform2


def survival_pointwise_loglik(mu: np.ndarray, sigma2: Union[float, np.ndarray], data: Dataset) -> np.ndarray:
    """Censoring-aware survival contributions: log density for events, log survival probability when censored.

    `mu` has shape (..., n) and `sigma2` the matching leading shape.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1] != data.n:
        raise ShapeError("linear predictor", data.n, mu.shape[-1])
    sd = np.expand_dims(np.sqrt(np.asarray(sigma2, dtype=float)), -1)
    standardized = (data.log_time - mu) / sd
    density = -0.5 * LOG_2PI - np.log(sd) - 0.5 * standardized**2
    return np.where(data.events, density, log_ndtr(-standardized))


@dataclass(frozen=True)
class IdentifiabilityCheck:
    condition: str
    latent: str
    passed: bool
    hard: bool
    message: str


@dataclass(frozen=True)
class IdentifiabilityReport:
    checks: Tuple[IdentifiabilityCheck, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def hard_failures(self) -> List[IdentifiabilityCheck]:
        return [check for check in self.checks if not check.passed and check.hard]

    @property
    def warnings(self) -> List[IdentifiabilityCheck]:
        return [check for check in self.checks if not check.passed and not check.hard]

    def failed(self, condition: str, latent: str) -> bool:
        return any(
            not check.passed for check in self.checks if check.condition == condition and check.latent == latent
        )


def check_identifiability(data: Dataset, hyper: Hyperparameters) -> IdentifiabilityReport:
    checks: List[IdentifiabilityCheck] = []
    for latent, indicators in (("eta1", data.q1), ("eta2", data.q2)):
        checks.append(
            IdentifiabilityCheck(
                condition="dedicated_indicators",
                latent=latent,
                passed=indicators >= 1,
                hard=True,
                message=f"{latent} has {indicators} indicators loading solely on it",
            )
        )
        checks.append(
            IdentifiabilityCheck(
                condition="indicator_count",
                latent=latent,
                passed=indicators >= 2,
                hard=False,
                message=f"{latent} has {indicators} observed indicators in total, at least 2 are needed",
            )
        )

    # eta1 <- eta2 with a proper prior on eta2 and no feedback path
    recursive = all(np.isfinite(value) and value > 0 for value in (hyper.sigma2_eta1, hyper.sigma2_eta2))
    checks.append(
        IdentifiabilityCheck(
            condition="recursive_structure",
            latent="structure",
            passed=recursive,
            hard=False,
            message="latent model is the recursive eta1 <- eta2 form",
        )
    )

    report = IdentifiabilityReport(checks=tuple(checks))
    for check in report.warnings + report.hard_failures:
        logger.warning("Identifiability condition %s failed for %s: %s", check.condition, check.latent, check.message)
    return report


@dataclass(frozen=True, eq=False)
class PosteriorDraws:
    """Thinned post-burn-in draws of every chain, stored column-wise with a leading draw axis."""

    model: ModelKind
    config: McmcConfig
    parameters: Mapping[str, np.ndarray]
    loglik: np.ndarray
    chain: np.ndarray
    diagnostics: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "model", ModelKind(self.model))
        size = int(np.shape(self.loglik)[0])
        for name, values in self.parameters.items():
            if np.shape(values)[0] != size:
                raise ShapeError(f"draws of {name}", size, np.shape(values)[0])
        if np.shape(self.chain) != (size,):
            raise ShapeError("chain index", (size,), np.shape(self.chain))

    def __len__(self) -> int:
        return int(np.shape(self.loglik)[0])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.parameters[name]

    @property
    def dimensions(self) -> Dict[str, int]:
        """Dataset dimensions (n, p, q1, q2) the draws were fitted on."""
        if self.model is ModelKind.INTEGRATED:
            names = ("y_aug", "beta_t", "phi_u1", "phi_u2")
        else:
            names = ("y_aug", "beta", "gamma1", "gamma2")
        return {key: int(np.shape(self.parameters[name])[1]) for key, name in zip(("n", "p", "q1", "q2"), names)}

    def state(self, index: int) -> State:
        state_type = STATE_TYPES[self.model]
        values = {}
        for item in fields(state_type):
            value = self.parameters[item.name][index]
            values[item.name] = float(value) if np.ndim(value) == 0 else np.array(value)
        return state_type(**values)

    def states(self) -> List[State]:
        return [self.state(index) for index in range(len(self))]

    def posterior_mean(self, name: str) -> np.ndarray:
        return np.mean(self.parameters[name], axis=0)

    def permuted(self, order: Sequence[int]) -> "PosteriorDraws":
        order_arr = np.asarray(order)
        return PosteriorDraws(
            model=self.model,
            config=self.config,
            parameters={name: values[order_arr] for name, values in self.parameters.items()},
            loglik=self.loglik[order_arr],
            chain=self.chain[order_arr],
            diagnostics=dict(self.diagnostics),
        )
