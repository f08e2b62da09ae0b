import re
from pathlib import Path
from typing import Dict, Union

from semsurv.errors import ConfigFileError

# section.key = value, both lower-case identifiers
setting_re = re.compile(
    r"^(?P<section>[a-z][a-z0-9_]*)\.(?P<key>[a-z][a-z0-9_]*)\s*=\s*(?P<value>[^#]*?)\s*(?:#.*)?$"
)
comment_re = re.compile(r"^\s*(?:#.*)?$")

StrBytesIntFloat = Union[str, bytes, int, float]


def get_numeric(value: StrBytesIntFloat, native_expected_type: str) -> Union[None, int, float]:
    if isinstance(value, bool):
        raise TypeError(f"invalid type; expected {native_expected_type}, got bool")
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, bytes):
        value = value.decode()
    try:
        return int(value)
    except ValueError:
        pass
    except TypeError as err:
        raise TypeError(f"invalid type; expected {native_expected_type}, string, bytes, int or float") from err
    try:
        return float(value)
    except ValueError:
        return None


def parse_config_text(text: str) -> Dict[str, str]:
    settings: Dict[str, str] = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        if comment_re.match(line):
            continue
        match = setting_re.match(line.strip())
        if match is None:
            raise ConfigFileError(line_number, line)
        settings[f"{match['section']}.{match['key']}"] = match["value"]
    return settings


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))
