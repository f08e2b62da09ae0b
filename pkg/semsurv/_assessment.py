"""Model comparison criteria and survival curves.

Every criterion uses the censoring-aware survival contribution of each subject: the normal density at the observed
log-time for events, the normal survival probability beyond log t* for censored subjects.
"""
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from lifelines import KaplanMeierFitter
from scipy.special import logsumexp, ndtr, ndtri

from semsurv._model import Dataset, Hyperparameters, ModelKind, PosteriorDraws, survival_pointwise_loglik
from semsurv.errors import (
    DiagnosticUnavailableError,
    DrawsMismatchError,
    InsufficientDrawsError,
    InvalidArgumentError,
    ReportMismatchError,
    ShapeError,
)

logger = logging.getLogger(__name__)

CREDIBLE_LEVEL = 0.95
MIN_RESIDUALS = 3


class DicResult(NamedTuple):
    dic: float
    p_d: float
    dbar: float
    d_at_mean: float


class LpmlResult(NamedTuple):
    lpml: float
    cpo: np.ndarray
    log_cpo: np.ndarray


class MseResult(NamedTuple):
    mse_fitted: Optional[float]
    mse_imputed: Optional[float]


def draw_means(draws: PosteriorDraws, data: Dataset) -> np.ndarray:
    """Linear predictor of every subject under every draw, shape (S, n)."""
    if draws.model is ModelKind.INTEGRATED:
        return (
            draws["alpha_t"][:, np.newaxis]
            + draws["beta_t"] @ data.X.T
            + draws["eta1"] * draws["phi_t"][:, np.newaxis]
        )
    return (
        draws["alpha"][:, np.newaxis]
        + draws["beta"] @ data.X.T
        + draws["gamma1"] @ data.U1.T
        + draws["gamma2"] @ data.U2.T
    )


def draw_variances(draws: PosteriorDraws) -> np.ndarray:
    return draws["sigma_t2"] if draws.model is ModelKind.INTEGRATED else draws["sigma2"]


def plug_in_mean(draws: PosteriorDraws, data: Dataset) -> Tuple[np.ndarray, float]:
    """Linear predictor and variance evaluated at the posterior means of the natural parameters."""
    if draws.model is ModelKind.INTEGRATED:
        mean = (
            float(draws.posterior_mean("alpha_t"))
            + data.X @ draws.posterior_mean("beta_t")
            + draws.posterior_mean("eta1") * float(draws.posterior_mean("phi_t"))
        )
    else:
        mean = (
            float(draws.posterior_mean("alpha"))
            + data.X @ draws.posterior_mean("beta")
            + data.U1 @ draws.posterior_mean("gamma1")
            + data.U2 @ draws.posterior_mean("gamma2")
        )
    return mean, float(np.mean(draw_variances(draws)))


def _check_dimensions(draws: PosteriorDraws, data: Dataset) -> None:
    subjects = np.shape(draws["y_aug"])[1]
    if subjects != data.n:
        raise ShapeError("subjects in draws", data.n, subjects)


def check_draws_match(draws: PosteriorDraws, data: Dataset) -> None:
    expected = {"n": data.n, "p": data.p, "q1": data.q1, "q2": data.q2}
    if draws.dimensions != expected:
        raise DrawsMismatchError(expected, draws.dimensions)


def pointwise_loglik(draws: PosteriorDraws, data: Dataset) -> np.ndarray:
    _check_dimensions(draws, data)
    return survival_pointwise_loglik(draw_means(draws, data), draw_variances(draws), data)


def dic_from_deviances(deviances: np.ndarray, d_at_mean: float) -> DicResult:
    dbar = float(np.mean(deviances))
    p_d = dbar - d_at_mean
    return DicResult(dic=d_at_mean + 2.0 * p_d, p_d=p_d, dbar=dbar, d_at_mean=d_at_mean)


def compute_dic(draws: PosteriorDraws, data: Dataset) -> DicResult:
    if len(draws) < 2:
        raise InsufficientDrawsError(2, len(draws))

    deviances = -2.0 * np.sum(pointwise_loglik(draws, data), axis=1)
    mean, variance = plug_in_mean(draws, data)
    d_at_mean = -2.0 * float(np.sum(survival_pointwise_loglik(mean, variance, data)))
    return dic_from_deviances(deviances, d_at_mean)


def cpo_from_pointwise_loglik(loglik: np.ndarray) -> np.ndarray:
    """Harmonic-mean estimate of log CPO_i from per-draw log contributions of shape (S, n)."""
    draws = loglik.shape[0]
    with np.errstate(over="ignore"):
        return np.log(draws) - logsumexp(-loglik, axis=0)


def compute_lpml(draws: PosteriorDraws, data: Dataset) -> LpmlResult:
    if len(draws) < 1:
        raise InsufficientDrawsError(1, len(draws))

    log_cpo = cpo_from_pointwise_loglik(pointwise_loglik(draws, data))
    cpo = np.exp(log_cpo)
    underflow = np.flatnonzero(cpo == 0.0)
    if underflow.size:
        logger.warning("CPO underflows to 0 for subjects %s", underflow.tolist())
    return LpmlResult(lpml=float(np.sum(log_cpo)), cpo=cpo, log_cpo=log_cpo)


def compute_mse(
    draws: PosteriorDraws, data: Dataset, truth_log_time: Optional[np.ndarray] = None
) -> MseResult:
    if len(draws) < 1:
        raise InsufficientDrawsError(1, len(draws))
    _check_dimensions(draws, data)

    mse_fitted = None
    if np.any(data.events):
        fitted = np.mean(draw_means(draws, data), axis=0)
        mse_fitted = float(np.mean((data.log_time[data.events] - fitted[data.events]) ** 2))

    mse_imputed = None
    if truth_log_time is not None:
        truth = np.asarray(truth_log_time, dtype=float)
        if truth.shape != (data.n,):
            raise ShapeError("true log-times", (data.n,), truth.shape)
        if np.any(data.censored):
            imputed = draws.posterior_mean("y_aug")
            mse_imputed = float(np.mean((imputed[data.censored] - truth[data.censored]) ** 2))
        else:
            mse_imputed = 0.0
    return MseResult(mse_fitted=mse_fitted, mse_imputed=mse_imputed)


@dataclass(frozen=True, eq=False)
class FitReport:
    model: ModelKind
    dic: float
    p_d: float
    dbar: float
    d_at_mean: float
    lpml: float
    cpo: np.ndarray
    mse_fitted: Optional[float]
    mse_imputed: Optional[float]
    draws: int
    dataset_hash: Optional[str] = None
    diagnostics: Mapping[str, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": ModelKind(self.model).value,
            "dic": self.dic,
            "p_d": self.p_d,
            "dbar": self.dbar,
            "d_at_mean": self.d_at_mean,
            "lpml": self.lpml,
            "cpo": [float(value) for value in self.cpo],
            "mse_fitted": self.mse_fitted,
            "mse_imputed": self.mse_imputed,
            "draws": self.draws,
            "dataset_hash": self.dataset_hash,
            "diagnostics": {name: int(count) for name, count in sorted(self.diagnostics.items())},
        }

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "FitReport":
        return cls(
            model=ModelKind(values["model"]),
            dic=float(values["dic"]),
            p_d=float(values["p_d"]),
            dbar=float(values["dbar"]),
            d_at_mean=float(values["d_at_mean"]),
            lpml=float(values["lpml"]),
            cpo=np.asarray(values["cpo"], dtype=float),
            mse_fitted=None if values.get("mse_fitted") is None else float(values["mse_fitted"]),
            mse_imputed=None if values.get("mse_imputed") is None else float(values["mse_imputed"]),
            draws=int(values["draws"]),
            dataset_hash=values.get("dataset_hash"),
            diagnostics=dict(values.get("diagnostics", {})),
        )


def assess(
    draws: PosteriorDraws,
    data: Dataset,
    truth_log_time: Optional[np.ndarray] = None,
    dataset_hash: Optional[str] = None,
) -> FitReport:
    dic = compute_dic(draws, data)
    lpml = compute_lpml(draws, data)
    mse = compute_mse(draws, data, truth_log_time)
    return FitReport(
        model=draws.model,
        dic=dic.dic,
        p_d=dic.p_d,
        dbar=dic.dbar,
        d_at_mean=dic.d_at_mean,
        lpml=lpml.lpml,
        cpo=lpml.cpo,
        mse_fitted=mse.mse_fitted,
        mse_imputed=mse.mse_imputed,
        draws=len(draws),
        dataset_hash=dataset_hash,
        diagnostics=dict(draws.diagnostics),
    )


class EtaMode(str, Enum):
    POSTERIOR = "posterior"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class SubjectRow:
    covariates: np.ndarray
    platform1: np.ndarray
    platform2: np.ndarray
    index: Optional[int] = None

    @classmethod
    def from_dataset(cls, data: Dataset, index: int) -> "SubjectRow":
        return cls(covariates=data.X[index], platform1=data.U1[index], platform2=data.U2[index], index=index)


@dataclass(frozen=True)
class SurvivalCurve:
    time: np.ndarray
    estimate: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def _check_time_grid(time_grid: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    grid = np.asarray(time_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidArgumentError("time grid should be a non-empty vector")
    if not np.all(np.isfinite(grid)) or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("time grid should be positive and strictly increasing")
    return grid


def _subject_draws(
    draws: PosteriorDraws, row: SubjectRow, eta_mode: EtaMode, hyper: Optional[Hyperparameters]
) -> Tuple[np.ndarray, np.ndarray]:
    if draws.model is ModelKind.BASELINE:
        mean = (
            draws["alpha"]
            + draws["beta"] @ row.covariates
            + draws["gamma1"] @ row.platform1
            + draws["gamma2"] @ row.platform2
        )
        return mean, draws["sigma2"]

    mean = draws["alpha_t"] + draws["beta_t"] @ row.covariates
    variance = draws["sigma_t2"]
    if EtaMode(eta_mode) is EtaMode.POSTERIOR:
        if row.index is None:
            raise InvalidArgumentError("posterior eta mode needs a subject from the fitted dataset")
        return mean + draws["eta1"][:, row.index] * draws["phi_t"], variance

    if hyper is None:
        raise InvalidArgumentError("marginal eta mode needs the hyperparameters of the fit")
    # eta1 = eta2 + e integrated out: N(0, sigma2_eta1 + sigma2_eta2)
    eta_variance = hyper.sigma2_eta1 + hyper.sigma2_eta2
    return mean, variance + draws["phi_t"] ** 2 * eta_variance


def survival_curve(
    draws: PosteriorDraws,
    row: SubjectRow,
    eta_mode: EtaMode,
    time_grid: Union[Sequence[float], np.ndarray],
    hyper: Optional[Hyperparameters] = None,
) -> SurvivalCurve:
    """Posterior mean of S(t) = 1 - Phi((log t - mu) / sigma) with a pointwise 95% credible band."""
    grid = _check_time_grid(time_grid)
    if len(draws) < 1:
        raise InsufficientDrawsError(1, len(draws))

    mean, variance = _subject_draws(draws, row, eta_mode, hyper)
    standardized = (np.log(grid)[np.newaxis, :] - mean[:, np.newaxis]) / np.sqrt(variance)[:, np.newaxis]
    survival = ndtr(-standardized)
    tail = (1.0 - CREDIBLE_LEVEL) / 2.0
    lower, upper = np.quantile(survival, [tail, 1.0 - tail], axis=0)
    return SurvivalCurve(time=grid, estimate=np.mean(survival, axis=0), lower=lower, upper=upper)


@dataclass(frozen=True)
class KaplanMeierCurve:
    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def evaluate(self, time: Union[float, np.ndarray]) -> np.ndarray:
        """Right-continuous step function; 1 before the first observed time."""
        index = np.searchsorted(self.times, np.asarray(time, dtype=float), side="right") - 1
        padded = np.concatenate([[1.0], self.survival])
        return padded[index + 1]


def kaplan_meier(data: Dataset) -> KaplanMeierCurve:
    """Product-limit estimate over the distinct observed times; censored subjects only leave the risk set."""
    fitter = KaplanMeierFitter().fit(np.exp(data.log_time), event_observed=data.events.astype(int))
    # lifelines prepends time 0 to its event table
    table = fitter.event_table.loc[fitter.event_table.index > 0]
    survival = fitter.survival_function_.loc[table.index].iloc[:, 0]
    return KaplanMeierCurve(
        times=table.index.to_numpy(dtype=float),
        survival=survival.to_numpy(dtype=float),
        at_risk=table["at_risk"].to_numpy(dtype=int),
        events=table["observed"].to_numpy(dtype=int),
    )


@dataclass(frozen=True)
class ResidualDiagnostics:
    subjects: np.ndarray
    residuals: np.ndarray
    sorted_residuals: np.ndarray
    theoretical_quantiles: np.ndarray


def residual_diagnostics(data: Dataset, fitted_means: np.ndarray, sigma_hat: float) -> ResidualDiagnostics:
    """Standardized residuals of the uncensored subjects with normal QQ quantiles Phi^-1((i - 1/2) / m)."""
    fitted = np.asarray(fitted_means, dtype=float)
    if fitted.shape != (data.n,):
        raise ShapeError("fitted means", (data.n,), fitted.shape)
    if not (np.isfinite(sigma_hat) and sigma_hat > 0):
        raise InvalidArgumentError(f"sigma_hat should be positive, got {sigma_hat}")

    subjects = np.flatnonzero(data.events)
    if subjects.size < MIN_RESIDUALS:
        raise DiagnosticUnavailableError(
            f"{subjects.size} uncensored subjects, at least {MIN_RESIDUALS} are needed for residual diagnostics"
        )

    residuals = (data.log_time[subjects] - fitted[subjects]) / sigma_hat
    positions = (np.arange(1, subjects.size + 1) - 0.5) / subjects.size
    return ResidualDiagnostics(
        subjects=subjects,
        residuals=residuals,
        sorted_residuals=np.sort(residuals),
        theoretical_quantiles=ndtri(positions),
    )


def fitted_summary(draws: PosteriorDraws, data: Dataset) -> Tuple[np.ndarray, float]:
    """Posterior mean linear predictor per subject and the posterior mean residual standard deviation."""
    return np.mean(draw_means(draws, data), axis=0), float(np.sqrt(np.mean(draw_variances(draws))))


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    model: ModelKind
    dic: float
    delta_dic: float
    lpml: float
    delta_lpml: float
    mse_fitted: Optional[float]
    mse_imputed: Optional[float]
    best_dic: bool
    best_lpml: bool


def _winners(values: np.ndarray, best: float) -> np.ndarray:
    flags = values == best
    if flags.sum() != 1:
        return np.zeros_like(flags)
    return flags


def compare_reports(reports: Mapping[str, FitReport]) -> List[ComparisonRow]:
    """Comparison rows sorted by label; a winner is flagged only when exactly one report attains the best value."""
    if len(reports) < 2:
        raise InvalidArgumentError(f"At least 2 reports are needed for a comparison, got {len(reports)}")
    hashes = {report.dataset_hash for report in reports.values() if report.dataset_hash is not None}
    if len(hashes) > 1:
        raise ReportMismatchError(hashes)

    labels = sorted(reports)
    dic = np.array([reports[label].dic for label in labels])
    lpml = np.array([reports[label].lpml for label in labels])
    best_dic = _winners(dic, float(np.min(dic)))
    best_lpml = _winners(lpml, float(np.max(lpml)))
    return [
        ComparisonRow(
            label=label,
            model=reports[label].model,
            dic=float(dic[position]),
            delta_dic=float(dic[position] - np.min(dic)),
            lpml=float(lpml[position]),
            delta_lpml=float(np.max(lpml) - lpml[position]),
            mse_fitted=reports[label].mse_fitted,
            mse_imputed=reports[label].mse_imputed,
            best_dic=bool(best_dic[position]),
            best_lpml=bool(best_lpml[position]),
        )
        for position, label in enumerate(labels)
    ]


def comparison_frame(rows: Sequence[ComparisonRow]) -> pd.DataFrame:
    frame = pd.DataFrame([asdict(row) for row in rows])
    frame["model"] = [ModelKind(model).value for model in frame["model"]]
    return frame
