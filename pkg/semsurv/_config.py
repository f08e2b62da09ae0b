import logging
import os
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Mapping, Optional

from semsurv.errors import ConfigFileError, InvalidMcmcConfig
from semsurv.utils._config_parse import get_numeric

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "SEMSURV_OUTPUT_DIR"
MIN_STORED_DRAWS = 10

DEFAULT_SETTINGS: Dict[str, Any] = {
    "mcmc.iterations": 100000,
    "mcmc.burn_in": 2000,
    "mcmc.thin": 100,
    "mcmc.seed": 0,
    "mcmc.chains": 1,
    "mcmc.progress_every": 1000,
    "mcmc.workers": 1,
    "prior.beta_variance": 1.0,
    "prior.variance": 1.0,
    "prior.platform_variance": 1.0,
    "prior.eta1_variance": 1.0,
    "prior.eta2_variance": 1.0,
    "prior.baseline_variance": 100.0,
    "study.preset": "table1-desk",
    "study.replicates": 10,
    "study.root_seed": 0,
    "study.workers": 1,
    "output.dir": ".",
}


def _is_integer(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 100000
    burn_in: int = 2000
    thin: int = 100
    seed: int = 0
    chains: int = 1
    progress_every: int = 1000

    def __post_init__(self) -> None:
        validate_mcmc_config(**asdict(self))

    @property
    def stored_per_chain(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    @property
    def total_draws(self) -> int:
        return self.chains * self.stored_per_chain

    def is_stored(self, iteration: int) -> bool:
        """Whether the zero-based iteration is kept after burn-in and thinning."""
        kept = iteration - self.burn_in + 1
        return kept > 0 and kept % self.thin == 0

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


def validate_mcmc_config(
    iterations: int,
    burn_in: int,
    thin: int,
    seed: int,
    chains: int,
    progress_every: int,
) -> None:
    errors: List[str] = []
    if not _is_integer(iterations) or iterations <= 0:
        errors += ["iterations should be a positive integer"]

    if not _is_integer(burn_in) or burn_in < 0:
        errors += ["burn_in should be a non-negative integer"]

    if not _is_integer(thin) or thin <= 0:
        errors += ["thin should be a positive integer"]

    if not _is_integer(seed) or not 0 <= seed < 2**64:
        errors += ["seed should be an unsigned 64-bit integer"]

    if not _is_integer(chains) or chains <= 0:
        errors += ["chains should be a positive integer"]

    if not _is_integer(progress_every) or progress_every <= 0:
        errors += ["progress_every should be a positive integer"]

    if not errors and burn_in >= iterations:
        errors += ["burn_in should be smaller than iterations"]

    if errors:
        raise InvalidMcmcConfig(errors)

    if (iterations - burn_in) // thin < MIN_STORED_DRAWS:
        logger.warning(
            "Only %d draws per chain are stored (iterations=%d, burn_in=%d, thin=%d)",
            (iterations - burn_in) // thin,
            iterations,
            burn_in,
            thin,
        )


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV) or str(DEFAULT_SETTINGS["output.dir"])


def _coerce(key: str, raw: Any, line_number: int = 0) -> Any:
    default = DEFAULT_SETTINGS[key]
    if isinstance(default, str):
        return str(raw)
    number = get_numeric(raw, type(default).__name__)
    if number is None or (isinstance(default, int) and not float(number).is_integer()):
        raise ConfigFileError(line_number, f"{key} = {raw}", reason=f"expected {type(default).__name__}")
    return int(number) if isinstance(default, int) else float(number)


def resolve_settings(
    file_values: Optional[Mapping[str, str]] = None, flag_values: Optional[Mapping[str, Any]] = None
) -> Dict[str, Any]:
    """Merge settings with precedence flags > config file > defaults."""
    settings = dict(DEFAULT_SETTINGS)
    settings["output.dir"] = default_output_dir()

    for key, raw in (file_values or {}).items():
        if key not in DEFAULT_SETTINGS:
            raise ConfigFileError(0, f"{key} = {raw}", reason="unknown setting")
        settings[key] = _coerce(key, raw)

    for key, value in (flag_values or {}).items():
        if value is None:
            continue
        if key not in DEFAULT_SETTINGS:
            raise ConfigFileError(0, f"{key} = {value}", reason="unknown setting")
        settings[key] = value
    return settings


def mcmc_config_from_settings(settings: Mapping[str, Any]) -> McmcConfig:
    return McmcConfig(
        iterations=settings["mcmc.iterations"],
        burn_in=settings["mcmc.burn_in"],
        thin=settings["mcmc.thin"],
        seed=settings["mcmc.seed"],
        chains=settings["mcmc.chains"],
        progress_every=settings["mcmc.progress_every"],
    )
