import numpy as np
import pytest

from semsurv._config import McmcConfig
from semsurv._model import Dataset, Hyperparameters
from semsurv._simulation import Scenario, generate


def make_dataset(n: int = 30, p: int = 2, q1: int = 3, q2: int = 3, censored: int = 5, seed: int = 0) -> Dataset:
    generator = np.random.default_rng(seed)
    eta2 = generator.normal(size=n)
    eta1 = eta2 + generator.normal(size=n)
    covariates = generator.uniform(-1.0, 1.0, size=(n, p))
    log_time = 0.5 + covariates @ np.linspace(0.5, -0.5, p) + 0.8 * eta1 + generator.normal(scale=0.5, size=n)
    censor = np.ones(n, dtype=int)
    censor[:censored] = 0
    return Dataset(
        log_time=log_time,
        censor=censor,
        covariates=covariates,
        platform1=0.2 + np.outer(eta1, np.linspace(0.5, 1.0, q1)) + generator.normal(size=(n, q1)),
        platform2=-0.2 + np.outer(eta2, np.linspace(1.0, 0.5, q2)) + generator.normal(size=(n, q2)),
    )


@pytest.fixture
def dataset() -> Dataset:
    return make_dataset()


@pytest.fixture
def hyper(dataset: Dataset) -> Hyperparameters:
    return Hyperparameters.default(dataset.p, dataset.q1, dataset.q2)


@pytest.fixture
def short_config() -> McmcConfig:
    return McmcConfig(iterations=60, burn_in=20, thin=2, seed=5)


@pytest.fixture
def simulated():
    return generate(Scenario(n=40, q1=4, q2=4, censor_target=0.3, seed=11))
