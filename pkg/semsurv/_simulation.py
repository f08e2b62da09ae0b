"""Synthetic data under the integrated and the plain regression model, censoring calibration and replicate studies."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from semsurv._assessment import FitReport, assess
from semsurv._baseline import BaselineHyperparameters, run_chain_baseline
from semsurv._config import McmcConfig
from semsurv._gibbs import run_chain
from semsurv._hash import dataset_fingerprint
from semsurv._model import Dataset, Hyperparameters, ModelKind
from semsurv._rng import MAX_SEED, RngStream, derive_seed, sample_gamma
from semsurv.errors import InvalidArgumentError, InvalidScenarioError, InvalidStudyConfig

logger = logging.getLogger(__name__)

CALIBRATION_SAMPLES = 50000
CALIBRATION_TOLERANCE = 0.005
MAX_BISECTIONS = 200
SIMULATION_BETA_VARIANCE = 100.0

TRUTH_LANE = 0
SUBJECT_LANE = 1
CALIBRATION_LANE = 2
CENSORING_LANE = 3


class DataGenerator(str, Enum):
    INTEGRATED = "integrated"
    NONINTEGRATED = "nonintegrated"


def _variances(values: Union[float, Sequence[float]], size: int) -> Tuple[float, ...]:
    if isinstance(values, (int, float)):
        return tuple(float(values) for _ in range(size))
    resolved = tuple(float(value) for value in values)
    return resolved or tuple(1.0 for _ in range(size))


@dataclass(frozen=True)
class Scenario:
    """True-parameter recipe of one simulated dataset; the sigma fields are variances."""

    n: int = 100
    p: int = 2
    q1: int = 10
    q2: int = 10
    sigma_t2_true: float = 1.0
    sigma_u1_true: Union[float, Tuple[float, ...]] = 1.0
    sigma_u2_true: Union[float, Tuple[float, ...]] = 1.0
    sigma_eta1_true: float = 1.0
    sigma_eta2_true: float = 1.0
    phi_value: float = 1.0
    coef_low: float = -1.0
    coef_high: float = 1.0
    censor_target: float = 0.0
    generator: DataGenerator = DataGenerator.INTEGRATED
    seed: int = 0
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "sigma_u1_true", _variances(self.sigma_u1_true, self.q1))
        object.__setattr__(self, "sigma_u2_true", _variances(self.sigma_u2_true, self.q2))
        object.__setattr__(self, "generator", DataGenerator(self.generator))
        validate_scenario(self)

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values["generator"] = self.generator.value
        values["sigma_u1_true"] = list(self.sigma_u1_true)  # type: ignore[arg-type]
        values["sigma_u2_true"] = list(self.sigma_u2_true)  # type: ignore[arg-type]
        return values

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "Scenario":
        resolved = dict(values)
        for name in ("sigma_u1_true", "sigma_u2_true"):
            if isinstance(resolved.get(name), list):
                resolved[name] = tuple(resolved[name])
        return cls(**resolved)


def validate_scenario(scenario: Scenario) -> None:
    errors: List[str] = []
    for name in ("n", "q1", "q2"):
        if getattr(scenario, name) <= 0:
            errors += [f"{name} should be positive"]
    if scenario.n < 2:
        errors += ["n should be at least 2"]
    if scenario.p < 0:
        errors += ["p should be non-negative"]

    if len(scenario.sigma_u1_true) != scenario.q1:  # type: ignore[arg-type]
        errors += [f"sigma_u1_true should have {scenario.q1} entries"]
    if len(scenario.sigma_u2_true) != scenario.q2:  # type: ignore[arg-type]
        errors += [f"sigma_u2_true should have {scenario.q2} entries"]
    variances = [scenario.sigma_t2_true, scenario.sigma_eta1_true, scenario.sigma_eta2_true]
    variances += list(scenario.sigma_u1_true) + list(scenario.sigma_u2_true)  # type: ignore[arg-type]
    if not all(np.isfinite(value) and value > 0 for value in variances):
        errors += ["true variances should be positive"]

    if not scenario.coef_low < scenario.coef_high:
        errors += ["coef_low should be smaller than coef_high"]
    if not 0.0 <= scenario.censor_target < 1.0:
        errors += ["censor_target should be in [0, 1)"]
    if not 0 <= scenario.seed < MAX_SEED:
        errors += ["seed should be an unsigned 64-bit integer"]

    if errors:
        raise InvalidScenarioError(errors)


@dataclass(frozen=True)
class CensoringCalibration:
    """Censoring times c ~ Gamma(shape, scale); an infinite scale means no censoring."""

    shape: float
    scale: float
    target: float
    achieved: float
    iterations: int

    @property
    def is_disabled(self) -> bool:
        return not np.isfinite(self.scale)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "shape": self.shape,
            "scale": None if self.is_disabled else self.scale,
            "target": self.target,
            "achieved": self.achieved,
            "iterations": self.iterations,
        }


NO_CENSORING = CensoringCalibration(shape=1.0, scale=float("inf"), target=0.0, achieved=0.0, iterations=0)


@dataclass(frozen=True, eq=False)
class TrueParameters:
    generator: DataGenerator
    values: Mapping[str, Union[float, np.ndarray]]

    def __getitem__(self, name: str) -> Union[float, np.ndarray]:
        return self.values[name]


@dataclass(frozen=True, eq=False)
class SimulatedSubjects:
    covariates: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    platform1: np.ndarray
    platform2: np.ndarray
    log_time: np.ndarray


@dataclass(frozen=True, eq=False)
class GroundTruth:
    scenario: Scenario
    parameters: TrueParameters
    log_time: np.ndarray
    censoring_log_time: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    censoring: CensoringCalibration

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario.to_dict(),
            "censoring": self.censoring.to_dict(),
            "parameters": {
                name: np.asarray(value).tolist() for name, value in sorted(self.parameters.values.items())
            },
        }


def draw_true_parameters(scenario: Scenario, stream: RngStream) -> TrueParameters:
    """Intercepts and regression coefficients ~ U(coef_low, coef_high), every latent loading fixed at phi_value."""

    def uniform(size: Optional[int] = None) -> Union[float, np.ndarray]:
        values = stream.generator.uniform(scenario.coef_low, scenario.coef_high, size=size)
        return float(values) if size is None else np.asarray(values)

    values: Dict[str, Union[float, np.ndarray]] = {
        "alpha_u1": uniform(scenario.q1),
        "phi_u1": np.full(scenario.q1, scenario.phi_value),
        "alpha_u2": uniform(scenario.q2),
        "phi_u2": np.full(scenario.q2, scenario.phi_value),
    }
    if scenario.generator is DataGenerator.INTEGRATED:
        values.update(alpha_t=uniform(), beta_t=uniform(scenario.p), phi_t=scenario.phi_value)
    else:
        values.update(
            alpha=uniform(), beta=uniform(scenario.p), gamma1=uniform(scenario.q1), gamma2=uniform(scenario.q2)
        )
    return TrueParameters(generator=scenario.generator, values=values)


def simulate_subjects(scenario: Scenario, truth: TrueParameters, stream: RngStream, n: int) -> SimulatedSubjects:
    generator = stream.generator
    covariates = generator.standard_normal((n, scenario.p))
    eta2 = np.sqrt(scenario.sigma_eta2_true) * generator.standard_normal(n)
    eta1 = eta2 + np.sqrt(scenario.sigma_eta1_true) * generator.standard_normal(n)
    platform1 = (
        truth["alpha_u1"]
        + np.outer(eta1, truth["phi_u1"])
        + np.sqrt(np.asarray(scenario.sigma_u1_true)) * generator.standard_normal((n, scenario.q1))
    )
    platform2 = (
        truth["alpha_u2"]
        + np.outer(eta2, truth["phi_u2"])
        + np.sqrt(np.asarray(scenario.sigma_u2_true)) * generator.standard_normal((n, scenario.q2))
    )
    if truth.generator is DataGenerator.INTEGRATED:
        mean = truth["alpha_t"] + covariates @ truth["beta_t"] + eta1 * truth["phi_t"]
    else:
        mean = truth["alpha"] + covariates @ truth["beta"] + platform1 @ truth["gamma1"] + platform2 @ truth["gamma2"]
    log_time = mean + np.sqrt(scenario.sigma_t2_true) * generator.standard_normal(n)
    return SimulatedSubjects(covariates, eta1, eta2, platform1, platform2, np.asarray(log_time))


def achieved_censoring_rate(log_time: np.ndarray, log_exponential: np.ndarray, log_scale: float) -> float:
    """Fraction of subjects with c = scale * E below t, E the common Exp(1) draws."""
    return float(np.mean(log_scale + log_exponential < log_time))


def calibrate_censoring(
    scenario: Scenario,
    target: float,
    truth: Optional[TrueParameters] = None,
    samples: int = CALIBRATION_SAMPLES,
    tolerance: float = CALIBRATION_TOLERANCE,
) -> CensoringCalibration:
    """Gamma(1, scale) censoring whose Monte-Carlo censoring rate is within `tolerance` of `target`.

    Bisects log(scale) against `samples` subjects drawn from the same true parameters, reusing one set of
    Exp(1) draws so the achieved rate is monotone in the scale.
    """
    if not 0.0 <= target < 1.0:
        raise InvalidArgumentError(f"censoring target should be in [0, 1), got {target}")
    if target == 0.0:
        return NO_CENSORING

    stream = RngStream(scenario.seed)
    if truth is None:
        truth = draw_true_parameters(scenario, stream.spawn(TRUTH_LANE))
    calibration = stream.spawn(CALIBRATION_LANE)
    log_time = simulate_subjects(scenario, truth, calibration, samples).log_time
    log_exponential = np.log(calibration.generator.standard_exponential(samples))

    # every subject censored at `low`, none at `high`
    low = float(np.min(log_time) - np.max(log_exponential)) - 1.0
    high = float(np.max(log_time) - np.min(log_exponential)) + 1.0
    middle = 0.5 * (low + high)
    rate = achieved_censoring_rate(log_time, log_exponential, middle)
    iterations = 1
    while abs(rate - target) >= tolerance and iterations < MAX_BISECTIONS:
        if rate > target:
            low = middle
        else:
            high = middle
        middle = 0.5 * (low + high)
        rate = achieved_censoring_rate(log_time, log_exponential, middle)
        iterations += 1

    if abs(rate - target) >= tolerance:
        logger.warning("Censoring calibration stopped at rate %.4f for target %.4f", rate, target)
    logger.info("Calibrated censoring scale %.6g for target %.3f (rate %.4f)", np.exp(middle), target, rate)
    return CensoringCalibration(
        shape=1.0, scale=float(np.exp(middle)), target=target, achieved=rate, iterations=iterations
    )


def generate(scenario: Scenario) -> Tuple[Dataset, GroundTruth]:
    stream = RngStream(scenario.seed)
    truth = draw_true_parameters(scenario, stream.spawn(TRUTH_LANE))
    subjects = simulate_subjects(scenario, truth, stream.spawn(SUBJECT_LANE), scenario.n)
    censoring = calibrate_censoring(scenario, scenario.censor_target, truth)

    if censoring.is_disabled:
        censoring_log_time = np.full(scenario.n, np.inf)
    else:
        shape = np.full(scenario.n, censoring.shape)
        censoring_log_time = np.log(sample_gamma(stream.spawn(CENSORING_LANE), shape, censoring.scale))

    events = subjects.log_time <= censoring_log_time
    data = Dataset(
        log_time=np.where(events, subjects.log_time, censoring_log_time),
        censor=events.astype(int),
        covariates=subjects.covariates,
        platform1=subjects.platform1,
        platform2=subjects.platform2,
    )
    ground_truth = GroundTruth(
        scenario=scenario,
        parameters=truth,
        log_time=subjects.log_time,
        censoring_log_time=censoring_log_time,
        eta1=subjects.eta1,
        eta2=subjects.eta2,
        censoring=censoring,
    )
    return data, ground_truth


class StudyGroup(str, Enum):
    INTEGRATED = "integrated"
    REVERSE = "reverse"
    SENSITIVITY = "sensitivity"


@dataclass(frozen=True)
class StudyCell:
    label: str
    group: StudyGroup
    scenario: Scenario
    fitted_platform_variance: float = 1.0


@dataclass(frozen=True)
class StudyConfig:
    cells: Tuple[StudyCell, ...]
    replicates: int
    mcmc: McmcConfig
    root_seed: int = 0
    methods: Tuple[ModelKind, ...] = (ModelKind.INTEGRATED, ModelKind.BASELINE)
    max_workers: int = 1
    beta_variance: float = SIMULATION_BETA_VARIANCE

    def __post_init__(self) -> None:
        errors: List[str] = []
        if not self.cells:
            errors += ["at least one cell is required"]
        labels = [cell.label for cell in self.cells]
        if len(set(labels)) != len(labels):
            errors += ["cell labels should be unique"]
        if self.replicates <= 0:
            errors += ["replicates should be positive"]
        if not self.methods:
            errors += ["at least one method is required"]
        if self.max_workers <= 0:
            errors += ["max_workers should be positive"]
        if not 0 <= self.root_seed < MAX_SEED:
            errors += ["root_seed should be an unsigned 64-bit integer"]
        if errors:
            raise InvalidStudyConfig(errors)


@dataclass(frozen=True)
class ReplicateResult:
    cell: str
    group: StudyGroup
    replicate: int
    method: ModelKind
    seed: int
    censor_rate: float
    dic: Optional[float] = None
    p_d: Optional[float] = None
    lpml: Optional[float] = None
    mse_fitted: Optional[float] = None
    mse_imputed: Optional[float] = None
    error: Optional[str] = None

    @property
    def succeeded(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class StudyReport:
    config: StudyConfig
    rows: Tuple[ReplicateResult, ...]
    checks: Tuple["OrderingCheck", ...] = field(default=())

    @property
    def failures(self) -> List[ReplicateResult]:
        return [row for row in self.rows if not row.succeeded]

    def frame(self) -> pd.DataFrame:
        records = []
        for row in self.rows:
            record = asdict(row)
            record["group"] = row.group.value
            record["method"] = row.method.value
            records.append(record)
        frame = pd.DataFrame.from_records(records, columns=list(ReplicateResult.__dataclass_fields__))
        numeric = ["censor_rate", "dic", "p_d", "lpml", "mse_fitted", "mse_imputed"]
        frame[numeric] = frame[numeric].astype(float)
        return frame

    def aggregates(self) -> pd.DataFrame:
        """Mean criteria per (cell, method) over the successful replicates, in cell then method order."""
        frame = self.frame()
        frame["succeeded"] = frame["error"].isna()
        grouped = frame.groupby(["cell", "method"], sort=False)
        summary = grouped[["dic", "lpml", "mse_fitted", "mse_imputed", "censor_rate"]].mean()
        summary["replicates"] = grouped["succeeded"].sum().astype(int)
        summary["failed"] = grouped["succeeded"].apply(lambda values: int((~values).sum()))
        summary = summary.reset_index()
        cells = {cell.label: cell for cell in self.config.cells}
        summary["group"] = [cells[label].group.value for label in summary["cell"]]
        return summary

    def table(self) -> pd.DataFrame:
        """Per-cell layout: censoring target, method, DIC, LPML, MSE."""
        summary = self.aggregates()
        cells = {cell.label: cell for cell in self.config.cells}
        return pd.DataFrame(
            {
                "cell": summary["cell"],
                "group": summary["group"],
                "sigma_t2": [cells[label].scenario.sigma_t2_true for label in summary["cell"]],
                "sigma_u2": [cells[label].fitted_platform_variance for label in summary["cell"]],
                "censor_target": [cells[label].scenario.censor_target for label in summary["cell"]],
                "censor_rate": summary["censor_rate"],
                "method": summary["method"],
                "dic": summary["dic"],
                "lpml": summary["lpml"],
                "mse_fitted": summary["mse_fitted"],
                "mse_imputed": summary["mse_imputed"],
                "replicates": summary["replicates"],
                "failed": summary["failed"],
            }
        )


def _fit(
    method: ModelKind, data: Dataset, truth: GroundTruth, cell: StudyCell, config: StudyConfig, seed: int
) -> Tuple[Any, bool]:
    mcmc = replace(config.mcmc, seed=seed)
    try:
        if method is ModelKind.INTEGRATED:
            hyper = Hyperparameters.default(
                data.p,
                data.q1,
                data.q2,
                beta_variance=config.beta_variance,
                platform_variance=cell.fitted_platform_variance,
            )
            draws = run_chain(data, hyper, mcmc)
        else:
            baseline = BaselineHyperparameters.default(data.p, data.q1, data.q2, variance=config.beta_variance)
            draws = run_chain_baseline(data, baseline, mcmc)
        return assess(draws, data, truth.log_time, dataset_fingerprint(data)), True
    except Exception as err:
        return err, False


def run_replicate(cell_index: int, replicate: int, config: StudyConfig) -> List[ReplicateResult]:
    cell = config.cells[cell_index]
    scenario = replace(cell.scenario, seed=derive_seed(config.root_seed, cell_index, replicate, 0))
    try:
        data, truth = generate(scenario)
    except Exception as err:
        logger.warning("Replicate %d of %s failed to generate: %s", replicate, cell.label, err)
        return [
            ReplicateResult(cell.label, cell.group, replicate, method, scenario.seed, float("nan"), error=str(err))
            for method in config.methods
        ]

    censor_rate = float(np.mean(data.censored))
    results = []
    for position, method in enumerate(config.methods):
        seed = derive_seed(config.root_seed, cell_index, replicate, position + 1)
        value, is_successful = _fit(method, data, truth, cell, config, seed)
        if not is_successful:
            logger.warning("Replicate %d of %s failed for %s: %s", replicate, cell.label, method.value, value)
            results.append(
                ReplicateResult(cell.label, cell.group, replicate, method, seed, censor_rate, error=str(value))
            )
            continue

        report: FitReport = value
        results.append(
            ReplicateResult(
                cell=cell.label,
                group=cell.group,
                replicate=replicate,
                method=method,
                seed=seed,
                censor_rate=censor_rate,
                dic=report.dic,
                p_d=report.p_d,
                lpml=report.lpml,
                mse_fitted=report.mse_fitted,
                mse_imputed=report.mse_imputed,
            )
        )
    logger.info("Finished replicate %d of %s", replicate, cell.label)
    return results


def run_study(config: StudyConfig) -> StudyReport:
    tasks = [
        (cell_index, replicate) for cell_index in range(len(config.cells)) for replicate in range(config.replicates)
    ]
    logger.info("Running %d replicates over %d cells", len(tasks), len(config.cells))

    def run_task(task: Tuple[int, int]) -> List[ReplicateResult]:
        return run_replicate(task[0], task[1], config)

    if config.max_workers > 1:
        with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
            outcomes = list(pool.map(run_task, tasks))
    else:
        outcomes = [run_task(task) for task in tasks]

    rows = tuple(row for outcome in outcomes for row in outcome)
    report = StudyReport(config=config, rows=rows)
    failures = report.failures
    if failures:
        logger.warning("%d replicate fits failed", len(failures))
    return replace(report, checks=tuple(evaluate_orderings(report)))


@dataclass(frozen=True)
class OrderingCheck:
    name: str
    passed: bool
    detail: str


def _paired(frame: pd.DataFrame, cell: str, column: str) -> pd.DataFrame:
    selected = frame[(frame["cell"] == cell) & frame["error"].isna()]
    paired = selected.pivot(index="replicate", columns="method", values=column).dropna()
    if not {ModelKind.INTEGRATED.value, ModelKind.BASELINE.value} <= set(paired.columns):
        return paired.iloc[0:0]
    return paired


def _dic_gap(frame: pd.DataFrame, cell: str) -> Optional[float]:
    paired = _paired(frame, cell, "dic")
    if paired.empty:
        return None
    return float(np.mean(paired[ModelKind.BASELINE.value] - paired[ModelKind.INTEGRATED.value]))


def evaluate_orderings(report: StudyReport, replicate_share: float = 0.8) -> List[OrderingCheck]:
    """Model-ordering checks available for the groups present in the study."""
    frame = report.frame()
    cells = report.config.cells
    checks: List[OrderingCheck] = []
    both = {ModelKind.INTEGRATED, ModelKind.BASELINE} <= set(report.config.methods)

    integrated_cells = [cell for cell in cells if cell.group is StudyGroup.INTEGRATED]
    if both:
        for cell in integrated_cells:
            for column, better in (("dic", np.less), ("lpml", np.greater)):
                paired = _paired(frame, cell.label, column)
                if paired.empty:
                    continue
                integrated = paired[ModelKind.INTEGRATED.value].to_numpy()
                baseline = paired[ModelKind.BASELINE.value].to_numpy()
                share = float(np.mean(better(integrated, baseline)))
                passed = bool(better(np.mean(integrated), np.mean(baseline))) and share >= replicate_share
                checks.append(
                    OrderingCheck(
                        name=f"{column}_direction[{cell.label}]",
                        passed=passed,
                        detail=f"integrated {np.mean(integrated):.3f} vs baseline {np.mean(baseline):.3f}, "
                        f"integrated better in {share:.0%} of replicates",
                    )
                )

        for cell in (cell for cell in cells if cell.group is StudyGroup.REVERSE):
            reference = next(
                (
                    other
                    for other in integrated_cells
                    if other.scenario.censor_target == cell.scenario.censor_target
                    and other.scenario.sigma_t2_true == cell.scenario.sigma_t2_true
                ),
                None,
            )
            reverse_gap = _dic_gap(frame, cell.label)
            reference_gap = None if reference is None else _dic_gap(frame, reference.label)
            if reverse_gap is None or reference_gap is None:
                continue
            checks.append(
                OrderingCheck(
                    name=f"reverse_neutrality[{cell.label}]",
                    passed=abs(reverse_gap) <= 0.25 * abs(reference_gap),
                    detail=f"mean DIC gap {reverse_gap:.3f} against {reference_gap:.3f} on integrated data",
                )
            )

    for sigma_t2 in sorted({cell.scenario.sigma_t2_true for cell in integrated_cells}):
        censored = sorted(
            (
                cell
                for cell in integrated_cells
                if cell.scenario.sigma_t2_true == sigma_t2 and cell.scenario.censor_target > 0
            ),
            key=lambda cell: cell.scenario.censor_target,
        )
        means = [_mean_imputed(frame, cell.label) for cell in censored]
        if len(means) < 2 or any(value is None for value in means):
            continue
        checks.append(
            OrderingCheck(
                name=f"imputation_mse_monotone[sigma_t2={sigma_t2:g}]",
                passed=bool(np.all(np.diff(np.asarray(means, dtype=float)) > 0)),
                detail=", ".join(
                    f"{cell.scenario.censor_target:g}: {value:.4f}" for cell, value in zip(censored, means)
                ),
            )
        )

    sensitivity = [cell for cell in cells if cell.group is StudyGroup.SENSITIVITY]
    means = [_mean_imputed(frame, cell.label) for cell in sensitivity]
    if len(means) >= 2 and all(value is not None for value in means):
        values = np.asarray(means, dtype=float)
        spread = float(np.max(values) - np.min(values))
        checks.append(
            OrderingCheck(
                name="sensitivity_flatness",
                passed=spread <= 0.2 * float(np.mean(values)),
                detail=f"imputation MSE range {spread:.4f} around mean {np.mean(values):.4f}",
            )
        )
    return checks


def _mean_imputed(frame: pd.DataFrame, cell: str) -> Optional[float]:
    selected = frame[
        (frame["cell"] == cell) & (frame["method"] == ModelKind.INTEGRATED.value) & frame["error"].isna()
    ]["mse_imputed"].dropna()
    return None if selected.empty else float(selected.mean())


DESK_MCMC = McmcConfig(iterations=10000, burn_in=1000, thin=10, progress_every=1000)
FULL_MCMC = McmcConfig(iterations=100000, burn_in=2000, thin=100, progress_every=10000)
CENSOR_TARGETS = (0.0, 0.28, 0.37, 0.5)
SENSITIVITY_VARIANCES = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0)
SENSITIVITY_CENSOR_TARGET = 0.25


def _comparison_cells() -> Tuple[StudyCell, ...]:
    cells = [
        StudyCell(
            label=f"integrated-s{sigma_t2:g}-c{target:g}",
            group=StudyGroup.INTEGRATED,
            scenario=Scenario(sigma_t2_true=sigma_t2, censor_target=target),
        )
        for sigma_t2 in (1.0, 2.0)
        for target in CENSOR_TARGETS
    ]
    cells += [
        StudyCell(
            label=f"reverse-s1-c{target:g}",
            group=StudyGroup.REVERSE,
            scenario=Scenario(censor_target=target, generator=DataGenerator.NONINTEGRATED),
        )
        for target in CENSOR_TARGETS
    ]
    return tuple(cells)


def _sensitivity_cells() -> Tuple[StudyCell, ...]:
    return tuple(
        StudyCell(
            label=f"sensitivity-u{variance:g}",
            group=StudyGroup.SENSITIVITY,
            scenario=Scenario(sigma_u1_true=variance, sigma_u2_true=variance, censor_target=SENSITIVITY_CENSOR_TARGET),
            fitted_platform_variance=variance,
        )
        for variance in SENSITIVITY_VARIANCES
    )


@dataclass(frozen=True)
class StudyPreset:
    cells: Callable[[], Tuple[StudyCell, ...]]
    replicates: int
    mcmc: McmcConfig
    methods: Tuple[ModelKind, ...]


PRESETS: Dict[str, StudyPreset] = {
    "table1-desk": StudyPreset(_comparison_cells, 10, DESK_MCMC, (ModelKind.INTEGRATED, ModelKind.BASELINE)),
    "table2-desk": StudyPreset(_sensitivity_cells, 10, DESK_MCMC, (ModelKind.INTEGRATED,)),
    "table1-full": StudyPreset(_comparison_cells, 100, FULL_MCMC, (ModelKind.INTEGRATED, ModelKind.BASELINE)),
    "table2-full": StudyPreset(_sensitivity_cells, 100, FULL_MCMC, (ModelKind.INTEGRATED,)),
}


def preset_study(
    name: str,
    replicates: Optional[int] = None,
    root_seed: int = 0,
    max_workers: int = 1,
    mcmc: Optional[McmcConfig] = None,
) -> StudyConfig:
    if name not in PRESETS:
        raise InvalidArgumentError(f"Unknown study preset '{name}', expected one of {sorted(PRESETS)}")
    preset = PRESETS[name]
    return StudyConfig(
        cells=preset.cells(),
        replicates=preset.replicates if replicates is None else replicates,
        mcmc=preset.mcmc if mcmc is None else mcmc,
        root_seed=root_seed,
        methods=preset.methods,
        max_workers=max_workers,
    )
