"""Log-normal AFT regression of log t on [1 | X | U1 | U2] with censored-time augmentation."""
import logging
from collections import Counter
from dataclasses import dataclass, fields, replace
from typing import Collection, List, Optional, Sequence, Tuple, Union

import numpy as np

from semsurv._chain import ProgressCallback, run_chains
from semsurv._config import McmcConfig
from semsurv._gibbs import SIGMA_FLOOR_HITS, SIGMA_SCALE_FLOOR, CanonicalConditional, InverseGammaConditional
from semsurv._model import BaselineState, Dataset, ModelKind, PosteriorDraws, check_augmentation, normal_logpdf
from semsurv._rng import RngStream, sample_inverse_gamma, sample_mvn_canonical, sample_truncated_normal_lower
from semsurv.errors import InvalidArgumentError, InvalidHyperparameters, ShapeError, SingularCovarianceError

logger = logging.getLogger(__name__)

FROZEN_BLOCKS = ("y_aug", "coefficients", "sigma2")
INTERCEPT = "intercept"


@dataclass(frozen=True, eq=False)
class BaselineHyperparameters:
    """Coefficients ~ N(coefficient_mean, sigma2 * diag(coefficient_variance)), p(sigma2) proportional to 1/sigma2."""

    coefficient_mean: np.ndarray
    coefficient_variance: np.ndarray

    def __post_init__(self) -> None:
        mean = np.array(self.coefficient_mean, dtype=float)
        variance = np.array(self.coefficient_variance, dtype=float)
        errors: List[str] = []
        if mean.ndim != 1:
            errors += ["coefficient_mean should be a vector"]
        elif variance.shape != mean.shape:
            errors += [f"coefficient_variance should have shape {mean.shape}"]
        elif not np.all(np.isfinite(mean)):
            errors += ["coefficient_mean should be finite"]
        elif not np.all(np.isfinite(variance) & (variance > 0)):
            errors += ["coefficient_variance should be strictly positive"]
        if errors:
            raise InvalidHyperparameters(errors)

        mean.setflags(write=False)
        variance.setflags(write=False)
        object.__setattr__(self, "coefficient_mean", mean)
        object.__setattr__(self, "coefficient_variance", variance)

    @classmethod
    def default(cls, p: int, q1: int, q2: int, variance: float = 100.0) -> "BaselineHyperparameters":
        dimension = 1 + p + q1 + q2
        return cls(coefficient_mean=np.zeros(dimension), coefficient_variance=np.full(dimension, variance))

    @property
    def dimension(self) -> int:
        return int(self.coefficient_mean.shape[0])

    @property
    def prior_precision(self) -> np.ndarray:
        return np.diag(1.0 / self.coefficient_variance)


def baseline_design_matrix(data: Dataset) -> Tuple[np.ndarray, Tuple[str, ...]]:
    design = np.column_stack([np.ones(data.n), data.X, data.U1, data.U2])
    names = (INTERCEPT,) + data.covariate_names + data.platform1_names + data.platform2_names
    return design, names


def check_full_rank(design: np.ndarray, names: Sequence[str]) -> None:
    dimension = design.shape[1]
    if np.linalg.matrix_rank(design) == dimension:
        return

    kept: List[int] = []
    offending: List[str] = []
    for column in range(dimension):
        if np.linalg.matrix_rank(design[:, kept + [column]]) > len(kept):
            kept.append(column)
        else:
            offending.append(names[column])
    raise SingularCovarianceError(dimension, offending)


def pack_coefficients(state: BaselineState) -> np.ndarray:
    return np.concatenate([[state.alpha], state.beta, state.gamma1, state.gamma2])


def unpack_coefficients(state: BaselineState, coefficients: np.ndarray, data: Dataset) -> BaselineState:
    split = np.cumsum([1, data.p, data.q1])
    alpha, beta, gamma1, gamma2 = np.split(coefficients, split)
    return replace(state, alpha=float(alpha[0]), beta=beta, gamma1=gamma1, gamma2=gamma2)


def baseline_mean(state: BaselineState, data: Dataset) -> np.ndarray:
    return state.alpha + data.X @ state.beta + data.U1 @ state.gamma1 + data.U2 @ state.gamma2


def survival_loglik_baseline(state: BaselineState, data: Dataset) -> float:
    for name, shape in (("beta", (data.p,)), ("gamma1", (data.q1,)), ("gamma2", (data.q2,)), ("y_aug", (data.n,))):
        if np.shape(getattr(state, name)) != shape:
            raise ShapeError(name, shape, np.shape(getattr(state, name)))
    return float(np.sum(normal_logpdf(state.y_aug, baseline_mean(state, data), state.sigma2)))


def initial_baseline_state(data: Dataset) -> BaselineState:
    spread = float(np.std(data.log_time))
    offset = 0.1 * spread if spread > 0 else 0.1
    return BaselineState(
        alpha=0.0,
        beta=np.zeros(data.p),
        gamma1=np.zeros(data.q1),
        gamma2=np.zeros(data.q2),
        sigma2=1.0,
        y_aug=np.where(data.censored, data.log_time + offset, data.log_time),
    )


def coefficients_conditional(
    state: BaselineState, design: np.ndarray, hyper: BaselineHyperparameters
) -> CanonicalConditional:
    precision = hyper.prior_precision
    return CanonicalConditional(
        linear=design.T @ state.y_aug + precision @ hyper.coefficient_mean,
        precision=design.T @ design + precision,
        scale=state.sigma2,
    )


def sigma2_conditional(
    state: BaselineState, design: np.ndarray, hyper: BaselineHyperparameters
) -> InverseGammaConditional:
    coefficients = pack_coefficients(state)
    residual = state.y_aug - design @ coefficients
    offset = coefficients - hyper.coefficient_mean
    scale = 0.5 * (float(residual @ residual) + float(offset @ hyper.prior_precision @ offset))
    return InverseGammaConditional(shape=(design.shape[0] + design.shape[1]) / 2.0, scale=scale)


def baseline_step(
    state: BaselineState,
    data: Dataset,
    design: np.ndarray,
    hyper: BaselineHyperparameters,
    stream: RngStream,
    diagnostics: Optional[Counter] = None,
    frozen: Collection[str] = (),
) -> BaselineState:
    if "y_aug" not in frozen and np.any(data.censored):
        y_aug = np.array(state.y_aug)
        y_aug[data.censored] = sample_truncated_normal_lower(
            stream, baseline_mean(state, data)[data.censored], state.sigma2, data.log_time[data.censored]
        )
        state = replace(state, y_aug=y_aug)

    if "coefficients" not in frozen:
        conditional = coefficients_conditional(state, design, hyper)
        coefficients = sample_mvn_canonical(stream, conditional.linear, conditional.precision, conditional.scale)
        state = unpack_coefficients(state, coefficients, data)

    if "sigma2" not in frozen:
        variance = sigma2_conditional(state, design, hyper)
        scale = variance.scale
        if not scale > SIGMA_SCALE_FLOOR:
            logger.warning("sigma2 scale %.3g floored at %.0e", scale, SIGMA_SCALE_FLOOR)
            scale = SIGMA_SCALE_FLOOR
            if diagnostics is not None:
                diagnostics[SIGMA_FLOOR_HITS] += 1
        state = replace(state, sigma2=float(sample_inverse_gamma(stream, variance.shape, scale)))
    return state


def _check_initial(state: BaselineState, data: Dataset) -> None:
    expected = {"beta": (data.p,), "gamma1": (data.q1,), "gamma2": (data.q2,), "y_aug": (data.n,)}
    for item in fields(state):
        shape = expected.get(item.name, ())
        if np.shape(getattr(state, item.name)) != shape:
            raise ShapeError(item.name, shape, np.shape(getattr(state, item.name)))
    check_augmentation(np.asarray(state.y_aug), data)


def run_chain_baseline(
    data: Dataset,
    hyper: Union[BaselineHyperparameters, None],
    config: McmcConfig,
    progress: Optional[ProgressCallback] = None,
    initial: Optional[BaselineState] = None,
    frozen: Collection[str] = (),
    max_workers: int = 1,
) -> PosteriorDraws:
    design, names = baseline_design_matrix(data)
    if hyper is None:
        hyper = BaselineHyperparameters.default(data.p, data.q1, data.q2)
    if hyper.dimension != design.shape[1]:
        raise ShapeError("baseline hyperparameters", design.shape[1], hyper.dimension)
    check_full_rank(design, names)

    unknown = sorted(set(frozen) - set(FROZEN_BLOCKS))
    if unknown:
        raise InvalidArgumentError(f"Unknown frozen blocks {unknown}, expected a subset of {list(FROZEN_BLOCKS)}")

    if initial is None:
        initial = initial_baseline_state(data)
    _check_initial(initial, data)

    frozen = frozenset(frozen)
    baseline_hyper = hyper
    return run_chains(
        ModelKind.BASELINE,
        data,
        config,
        initial,
        lambda state, stream, diagnostics: baseline_step(
            state, data, design, baseline_hyper, stream, diagnostics, frozen
        ),
        lambda state: survival_loglik_baseline(state, data),
        progress=progress,
        max_workers=max_workers,
        diagnostic_names=(SIGMA_FLOOR_HITS,),
    )
