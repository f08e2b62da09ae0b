"""Reading and writing datasets, draws and reports.

CSV dialect everywhere: comma separated, `.` decimal, mandatory header, UTF-8, LF line endings, floats written with
17 significant digits. JSON is written with sorted keys. Row numbers in errors count data rows from 1.
"""
import json
import logging
import re
from dataclasses import dataclass, fields
from io import StringIO
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from semsurv._assessment import FitReport, ResidualDiagnostics, SurvivalCurve
from semsurv._config import McmcConfig
from semsurv._model import STATE_TYPES, Dataset, ModelKind, PosteriorDraws
from semsurv._simulation import GroundTruth, StudyReport
from semsurv.errors import (
    AlignmentError,
    DatasetValidationError,
    DrawsCorruptedError,
    IncompatibleVersionError,
    InvalidArgumentError,
    ParseError,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DRAWS_FORMAT_VERSION = 1
FLOAT_FORMAT = "%.17g"
ID_COLUMN = "id"
TIME_COLUMN = "time"
STATUS_COLUMN = "status"
COVARIATE_PREFIX = "x_"
PLATFORM1_PREFIX = "u1_"
PLATFORM2_PREFIX = "u2_"

draws_header_re = re.compile(r"^# semsurv-draws format=(?P<format>\d+) model=(?P<model>[a-z]+) rows=(?P<rows>\d+)$")


@dataclass(frozen=True)
class DatasetFileSpec:
    """Either one combined CSV with a role-annotated header, or four CSVs joined on the `id` column."""

    combined: Optional[Path] = None
    survival: Optional[Path] = None
    covariates: Optional[Path] = None
    platform1: Optional[Path] = None
    platform2: Optional[Path] = None

    def __post_init__(self) -> None:
        separate = (self.survival, self.covariates, self.platform1, self.platform2)
        if self.combined is not None and any(path is not None for path in separate):
            raise InvalidArgumentError("Use either a combined dataset file or separate files, not both")
        if self.combined is None and any(path is None for path in separate):
            raise InvalidArgumentError("Separate dataset files need survival, covariates, platform1 and platform2")

    @classmethod
    def combined_file(cls, path: PathLike) -> "DatasetFileSpec":
        return cls(combined=Path(path))

    @classmethod
    def separate_files(
        cls, survival: PathLike, covariates: PathLike, platform1: PathLike, platform2: PathLike
    ) -> "DatasetFileSpec":
        return cls(
            survival=Path(survival), covariates=Path(covariates), platform1=Path(platform1), platform2=Path(platform2)
        )


def _read_table(path: PathLike) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    frame.columns = [column.strip() for column in frame.columns]
    if ID_COLUMN not in frame.columns:
        raise DatasetValidationError(0, f"'{path}' has no '{ID_COLUMN}' column")
    duplicated = frame[ID_COLUMN].duplicated()
    if duplicated.any():
        row = int(np.flatnonzero(duplicated.to_numpy())[0]) + 1
        raise DatasetValidationError(row, f"duplicate {ID_COLUMN} '{frame[ID_COLUMN].iloc[row - 1]}'")
    return frame


def _numeric(frame: pd.DataFrame, columns: Sequence[str]) -> np.ndarray:
    values = np.empty((len(frame), len(columns)))
    for position, column in enumerate(columns):
        raw = frame[column].str.strip()
        parsed = pd.to_numeric(raw, errors="coerce")
        invalid = np.flatnonzero(parsed.isna().to_numpy() | ~np.isfinite(parsed.to_numpy(dtype=float)))
        if invalid.size:
            row = int(invalid[0])
            raise ParseError(row + 1, column, frame[column].iloc[row])
        values[:, position] = parsed.to_numpy(dtype=float)
    return values


def _prefixed(frame: pd.DataFrame, prefix: str) -> List[str]:
    return [column for column in frame.columns if column.startswith(prefix)]


def _survival(frame: pd.DataFrame) -> Tuple[np.ndarray, np.ndarray]:
    for column in (TIME_COLUMN, STATUS_COLUMN):
        if column not in frame.columns:
            raise DatasetValidationError(0, f"missing '{column}' column")
    time, status = _numeric(frame, [TIME_COLUMN, STATUS_COLUMN]).T

    not_positive = np.flatnonzero(time <= 0)
    if not_positive.size:
        row = int(not_positive[0])
        raise DatasetValidationError(row + 1, f"time must be strictly positive, got {time[row]}")
    bad_status = np.flatnonzero(~np.isin(status, (0.0, 1.0)))
    if bad_status.size:
        raise DatasetValidationError(int(bad_status[0]) + 1, f"status must be 0 or 1, got {status[bad_status[0]]}")
    return np.log(time), status.astype(int)


def _align(reference: pd.DataFrame, other: pd.DataFrame) -> pd.DataFrame:
    reference_ids = set(reference[ID_COLUMN])
    other_ids = set(other[ID_COLUMN])
    if reference_ids != other_ids:
        raise AlignmentError(reference_ids ^ other_ids)
    return other.set_index(ID_COLUMN).loc[reference[ID_COLUMN]].reset_index()


def read_dataset(spec: DatasetFileSpec) -> Dataset:
    if spec.combined is not None:
        frame = _read_table(spec.combined)
        survival = covariates = platform1 = platform2 = frame
    else:
        survival = _read_table(spec.survival)  # type: ignore[arg-type]
        covariates = _align(survival, _read_table(spec.covariates))  # type: ignore[arg-type]
        platform1 = _align(survival, _read_table(spec.platform1))  # type: ignore[arg-type]
        platform2 = _align(survival, _read_table(spec.platform2))  # type: ignore[arg-type]

    log_time, censor = _survival(survival)
    covariate_names = _prefixed(covariates, COVARIATE_PREFIX)
    platform1_names = _prefixed(platform1, PLATFORM1_PREFIX)
    platform2_names = _prefixed(platform2, PLATFORM2_PREFIX)
    if spec.combined is not None:
        known = {ID_COLUMN, TIME_COLUMN, STATUS_COLUMN, *covariate_names, *platform1_names, *platform2_names}
        ignored = [column for column in survival.columns if column not in known]
        if ignored:
            logger.warning("Ignoring columns without a role prefix: %s", ignored)

    data = Dataset(
        log_time=log_time,
        censor=censor,
        covariates=_numeric(covariates, covariate_names),
        platform1=_numeric(platform1, platform1_names),
        platform2=_numeric(platform2, platform2_names),
        covariate_names=tuple(covariate_names),
        platform1_names=tuple(platform1_names),
        platform2_names=tuple(platform2_names),
        subject_ids=tuple(survival[ID_COLUMN]),
    )
    logger.info("Read dataset: n=%d, p=%d, q1=%d, q2=%d", data.n, data.p, data.q1, data.q2)
    return data


def _column_name(prefix: str, name: str) -> str:
    return name if name.startswith(prefix) else f"{prefix}{name}"


def write_frame(frame: pd.DataFrame, path: PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    logger.info("Wrote %s", path)


def write_json(payload: Mapping[str, Any], path: PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")
    logger.info("Wrote %s", path)


def read_json(path: PathLike) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def dataset_frame(data: Dataset) -> pd.DataFrame:
    columns: Dict[str, Any] = {
        ID_COLUMN: list(data.subject_ids),
        TIME_COLUMN: np.exp(data.log_time),
        STATUS_COLUMN: data.censor.astype(int),
    }
    for prefix, names, block in (
        (COVARIATE_PREFIX, data.covariate_names, data.X),
        (PLATFORM1_PREFIX, data.platform1_names, data.U1),
        (PLATFORM2_PREFIX, data.platform2_names, data.U2),
    ):
        for position, name in enumerate(names):
            columns[_column_name(prefix, name)] = block[:, position]
    return pd.DataFrame(columns)


def write_dataset(data: Dataset, path: PathLike) -> None:
    write_frame(dataset_frame(data), path)


def write_ground_truth(truth: GroundTruth, data: Dataset, path: PathLike) -> Path:
    """Per-subject truth as CSV at `path`, parameters and censoring calibration as JSON next to it."""
    frame = pd.DataFrame(
        {
            ID_COLUMN: list(data.subject_ids),
            "true_log_time": truth.log_time,
            "censoring_log_time": truth.censoring_log_time,
            "eta1": truth.eta1,
            "eta2": truth.eta2,
        }
    )
    write_frame(frame, path)
    sidecar = Path(path).with_suffix(".json")
    write_json(truth.to_dict(), sidecar)
    return sidecar


def read_true_log_time(path: PathLike, data: Dataset) -> np.ndarray:
    frame = _read_table(path)
    reference = pd.DataFrame({ID_COLUMN: list(data.subject_ids)})
    aligned = _align(reference, frame)
    return _numeric(aligned, ["true_log_time"])[:, 0]


def _draw_columns(name: str, shape: Tuple[int, ...]) -> List[str]:
    if not shape:
        return [name]
    return [f"{name}.{position}" for position in range(shape[0])]


def _draw_shapes(draws: PosteriorDraws) -> Dict[str, Tuple[int, ...]]:
    return {item.name: tuple(np.shape(draws[item.name])[1:]) for item in fields(STATE_TYPES[draws.model])}


def _sidecar_path(path: PathLike) -> Path:
    return Path(f"{path}.json")


def write_draws(draws: PosteriorDraws, path: PathLike) -> None:
    shapes = _draw_shapes(draws)
    chain = np.asarray(draws.chain, dtype=int)
    draw_index = np.zeros_like(chain)
    for value in np.unique(chain):
        members = chain == value
        draw_index[members] = np.arange(int(members.sum()))

    columns: Dict[str, Any] = {"chain": chain, "draw": draw_index}
    for name, shape in shapes.items():
        values = np.asarray(draws[name], dtype=float).reshape(len(draws), int(np.prod(shape)))
        for position, column in enumerate(_draw_columns(name, shape)):
            columns[column] = values[:, position]
    columns["loglik"] = np.asarray(draws.loglik, dtype=float)
    frame = pd.DataFrame(columns)

    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"# semsurv-draws format={DRAWS_FORMAT_VERSION} model={draws.model.value} rows={len(draws)}\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote %d draws to %s", len(draws), path)

    write_json(
        {
            "format_version": DRAWS_FORMAT_VERSION,
            "model": draws.model.value,
            "rows": len(draws),
            "dimensions": draws.dimensions,
            "shapes": {name: list(shape) for name, shape in shapes.items()},
            "config": draws.config.to_dict(),
            "diagnostics": {name: int(count) for name, count in draws.diagnostics.items()},
        },
        _sidecar_path(path),
    )


def read_draws(path: PathLike) -> PosteriorDraws:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        text = handle.read()
    header, _, body = text.partition("\n")
    match = draws_header_re.match(header)
    if match is None:
        found = re.search(r"format=(\S+)", header) if header.startswith("# semsurv-draws") else None
        if found is not None and found.group(1) != str(DRAWS_FORMAT_VERSION):
            raise IncompatibleVersionError(found.group(1), DRAWS_FORMAT_VERSION)
        raise DrawsCorruptedError(path, "missing or malformed header line")
    if int(match["format"]) != DRAWS_FORMAT_VERSION:
        raise IncompatibleVersionError(int(match["format"]), DRAWS_FORMAT_VERSION)
    if not body.endswith("\n"):
        raise DrawsCorruptedError(path, "file does not end with a complete row")
    try:
        frame = pd.read_csv(StringIO(body), float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as err:
        raise DrawsCorruptedError(path, str(err)) from err

    sidecar_path = _sidecar_path(path)
    if not sidecar_path.exists():
        raise DrawsCorruptedError(path, f"missing sidecar {sidecar_path}")
    sidecar = read_json(sidecar_path)
    if sidecar.get("format_version") != DRAWS_FORMAT_VERSION:
        raise IncompatibleVersionError(sidecar.get("format_version"), DRAWS_FORMAT_VERSION)

    model = ModelKind(match["model"])
    rows = int(match["rows"])
    if sidecar.get("model") != model.value or sidecar.get("rows") != rows:
        raise DrawsCorruptedError(path, "header does not match the sidecar")
    if len(frame) != rows:
        raise DrawsCorruptedError(path, f"expected {rows} rows, found {len(frame)}")

    try:
        shapes = {item.name: tuple(sidecar["shapes"][item.name]) for item in fields(STATE_TYPES[model])}
    except KeyError as err:
        raise DrawsCorruptedError(path, f"sidecar has no shape for {err}") from err
    expected = ["chain", "draw"] + [column for name, shape in shapes.items() for column in _draw_columns(name, shape)]
    expected += ["loglik"]
    if list(frame.columns) != expected:
        raise DrawsCorruptedError(path, "unexpected columns")
    if frame.isna().to_numpy().any():
        raise DrawsCorruptedError(path, "incomplete rows")

    parameters = {}
    for name, shape in shapes.items():
        values = frame[_draw_columns(name, shape)].to_numpy(dtype=float)
        parameters[name] = values.reshape((rows,) + shape)
    return PosteriorDraws(
        model=model,
        config=McmcConfig(**sidecar["config"]),
        parameters=parameters,
        loglik=frame["loglik"].to_numpy(dtype=float),
        chain=frame["chain"].to_numpy(dtype=int),
        diagnostics=dict(sidecar.get("diagnostics", {})),
    )


def write_fit_report(report: FitReport, path: PathLike) -> None:
    write_json(report.to_dict(), path)


def read_fit_report(path: PathLike) -> FitReport:
    return FitReport.from_dict(read_json(path))


def curves_frame(
    kaplan_meier_values: np.ndarray,
    curves: Mapping[str, SurvivalCurve],
    time_grid: np.ndarray,
) -> pd.DataFrame:
    columns: Dict[str, Any] = {"time": time_grid, "kaplan_meier": kaplan_meier_values}
    for name, curve in curves.items():
        columns[name] = curve.estimate
        columns[f"{name}_lower"] = curve.lower
        columns[f"{name}_upper"] = curve.upper
    return pd.DataFrame(columns)


def write_curves(frame: pd.DataFrame, path: PathLike) -> None:
    write_frame(frame, path)


def write_residuals(diagnostics: ResidualDiagnostics, data: Dataset, path: PathLike) -> None:
    order = np.argsort(diagnostics.residuals, kind="stable")
    frame = pd.DataFrame(
        {
            ID_COLUMN: [data.subject_ids[subject] for subject in diagnostics.subjects],
            "residual": diagnostics.residuals,
            "rank": np.argsort(order, kind="stable") + 1,
        }
    )
    frame["theoretical_quantile"] = diagnostics.theoretical_quantiles[frame["rank"].to_numpy() - 1]
    write_frame(frame, path)


def write_study_report(report: StudyReport, directory: PathLike) -> Dict[str, Path]:
    directory = Path(directory)
    paths = {"rows": directory / "rows.csv", "table": directory / "table.csv", "summary": directory / "summary.json"}
    write_frame(report.frame(), paths["rows"])
    write_frame(report.table(), paths["table"])
    config = report.config
    write_json(
        {
            "replicates": config.replicates,
            "root_seed": config.root_seed,
            "methods": [method.value for method in config.methods],
            "mcmc": config.mcmc.to_dict(),
            "cells": [
                {
                    "label": cell.label,
                    "group": cell.group.value,
                    "fitted_platform_variance": cell.fitted_platform_variance,
                    "scenario": cell.scenario.to_dict(),
                }
                for cell in config.cells
            ],
            "failed_fits": len(report.failures),
            "checks": [{"name": check.name, "passed": check.passed, "detail": check.detail} for check in report.checks],
        },
        paths["summary"],
    )
    return paths
