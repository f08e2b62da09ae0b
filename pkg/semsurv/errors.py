from typing import Any, Iterable, List, Mapping, Sequence


class SemSurvError(Exception):
    message: str

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


class SemSurvValueError(SemSurvError, ValueError):
    pass


class SemSurvTypeError(SemSurvError, TypeError):
    pass


class SemSurvRuntimeError(SemSurvError, RuntimeError):
    pass


class InvalidParameterError(SemSurvValueError):
    def __init__(self, name: str, value: Any) -> None:
        super().__init__(f"Invalid distribution parameter {name}={value!r}")
        self.name = name
        self.value = value


class SingularCovarianceError(SemSurvRuntimeError):
    def __init__(self, dimension: int, columns: Sequence[str] = ()) -> None:
        message = f"Covariance or precision matrix of dimension {dimension} is not positive-definite"
        if columns:
            message += f" - linearly dependent columns: {', '.join(columns)}"
        super().__init__(message)
        self.dimension = dimension
        self.columns = tuple(columns)


class ShapeError(SemSurvValueError):
    def __init__(self, what: str, expected: Any, actual: Any) -> None:
        super().__init__(f"Shape mismatch for {what}: expected {expected}, got {actual}")
        self.what = what
        self.expected = expected
        self.actual = actual


class _CollectedErrors(SemSurvValueError):
    label: str = "value"

    def __init__(self, errors: List[str]) -> None:
        super().__init__(f"Invalid {self.label} - {', '.join(errors)}")
        self.errors = list(errors)


class InvalidDatasetError(_CollectedErrors):
    label = "dataset"


class InvalidHyperparameters(_CollectedErrors):
    label = "hyperparameters"


class InvalidMcmcConfig(_CollectedErrors):
    label = "MCMC config"


class InvalidScenarioError(_CollectedErrors):
    label = "scenario"


class InvalidStudyConfig(_CollectedErrors):
    label = "study config"


class InvalidArgumentError(SemSurvValueError):
    pass


class IdentifiabilityError(SemSurvValueError):
    def __init__(self, failures: Iterable[str]) -> None:
        failures = list(failures)
        super().__init__(f"Model is not identifiable: {'; '.join(failures)}")
        self.failures = failures


class AugmentationInvariantError(SemSurvRuntimeError):
    def __init__(self, subjects: Iterable[int]) -> None:
        subjects = list(subjects)
        super().__init__(f"Augmented log-time not above the censoring time for subjects {subjects}")
        self.subjects = subjects


class InsufficientDrawsError(SemSurvValueError):
    def __init__(self, required: int, actual: int) -> None:
        super().__init__(f"At least {required} posterior draws are required, got {actual}")
        self.required = required
        self.actual = actual


class DiagnosticUnavailableError(SemSurvValueError):
    def __init__(self, reason: str) -> None:
        super().__init__(f"Diagnostic unavailable: {reason}")


class AlignmentError(SemSurvValueError):
    def __init__(self, missing_ids: Iterable[str]) -> None:
        missing_ids = sorted(str(subject_id) for subject_id in missing_ids)
        super().__init__(f"Subject identifiers do not align across files: {', '.join(missing_ids)}")
        self.missing_ids = missing_ids


class DatasetValidationError(SemSurvValueError):
    def __init__(self, row: int, reason: str) -> None:
        super().__init__(f"Invalid dataset row {row}: {reason}")
        self.row = row


class ParseError(SemSurvValueError):
    def __init__(self, row: int, column: str, value: Any) -> None:
        super().__init__(f"Unable to parse cell at row {row}, column '{column}': {value!r} is not numeric")
        self.row = row
        self.column = column
        self.value = value


class DrawsCorruptedError(SemSurvValueError):
    def __init__(self, path: Any, reason: str) -> None:
        super().__init__(f"Corrupted draws file '{path}': {reason}")
        self.path = path


class IncompatibleVersionError(SemSurvValueError):
    def __init__(self, found: Any, expected: Any) -> None:
        super().__init__(f"Incompatible draws format version {found!r}, expected {expected!r}")
        self.found = found
        self.expected = expected


class ConfigFileError(SemSurvValueError):
    def __init__(self, line_number: int, line: str, reason: str = "expected 'section.key = value'") -> None:
        super().__init__(f"Invalid config line {line_number} '{line.strip()}': {reason}")
        self.line_number = line_number


class DatasetMismatchError(SemSurvValueError):
    pass


class ReportMismatchError(DatasetMismatchError):
    def __init__(self, hashes: Iterable[str]) -> None:
        hashes = sorted(set(hashes))
        super().__init__(f"Reports were fitted on different datasets: {', '.join(hashes)}")
        self.hashes = hashes


class DrawsMismatchError(DatasetMismatchError):
    def __init__(self, expected: Mapping[str, int], actual: Mapping[str, int]) -> None:
        super().__init__(f"Draws were fitted on a dataset with dimensions {dict(actual)}, expected {dict(expected)}")
        self.expected = dict(expected)
        self.actual = dict(actual)


class SamplerError(SemSurvRuntimeError):
    def __init__(self, chain: int, iteration: int, reason: str) -> None:
        super().__init__(f"Chain {chain} failed at iteration {iteration}: {reason}")
        self.chain = chain
        self.iteration = iteration
