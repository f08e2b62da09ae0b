import hashlib
from typing import Callable, Iterable

import numpy as np

from semsurv._model import Dataset

UNIT_SEPARATOR = b"\x1f"
RECORD_SEPARATOR = b"\x1e"


def _update_array(update: Callable[[bytes], None], values: np.ndarray) -> None:
    contiguous = np.ascontiguousarray(values, dtype="<f8")
    update(repr(contiguous.shape).encode())
    update(contiguous.tobytes())
    update(RECORD_SEPARATOR)


def _update_names(update: Callable[[bytes], None], names: Iterable[str]) -> None:
    update(UNIT_SEPARATOR.join(name.encode() for name in names))
    update(RECORD_SEPARATOR)


def dataset_fingerprint(data: Dataset) -> str:
    """Stable sha256 over the values and column names of a dataset.

    Two fit reports can only be compared when they carry the same fingerprint.
    """
    digest = hashlib.sha256()
    for values in (data.log_time, data.censor, data.X, data.U1, data.U2):
        _update_array(digest.update, values)
    for names in (data.covariate_names, data.platform1_names, data.platform2_names, data.subject_ids):
        _update_names(digest.update, names)
    return digest.hexdigest()
