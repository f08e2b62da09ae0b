"""Chain driver shared by the integrated and baseline samplers.

A chain is strictly sequential; several chains run on a thread pool, each owning the stream
`RngStream.for_chain(config.seed, chain)`, and their stored draws are merged by chain index.
"""
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from semsurv._config import McmcConfig
from semsurv._model import Dataset, ModelKind, PosteriorDraws, State, check_augmentation
from semsurv._rng import RngStream
from semsurv.errors import InvalidParameterError, SamplerError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProgressEvent:
    model: ModelKind
    chain: int
    iteration: int
    iterations: int
    survival_loglik: float


# callbacks run on the worker thread of the chain that emitted the event
ProgressCallback = Callable[[ProgressEvent], None]
StepFunction = Callable[[State, RngStream, Counter], State]


class ChainRecorder:
    __config: McmcConfig
    __data: Dataset
    __draws: Dict[str, np.ndarray]
    __loglik: np.ndarray
    __position: int

    def __init__(self, config: McmcConfig, data: Dataset, shapes: Mapping[str, Tuple[int, ...]]) -> None:
        size = config.stored_per_chain
        self.__config = config
        self.__data = data
        self.__draws = {name: np.empty((size,) + tuple(shape)) for name, shape in shapes.items()}
        self.__loglik = np.empty(size)
        self.__position = 0

    def record(self, iteration: int, state: State, loglik: float) -> bool:
        if not self.__config.is_stored(iteration):
            return False

        check_augmentation(np.asarray(state.y_aug), self.__data)
        for name, values in self.__draws.items():
            values[self.__position] = getattr(state, name)
        self.__loglik[self.__position] = loglik
        self.__position += 1
        return True

    @property
    def stored(self) -> int:
        return self.__position

    def finish(self) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
        return self.__draws, self.__loglik


def state_shapes(state: State) -> Dict[str, Tuple[int, ...]]:
    return {item.name: np.shape(getattr(state, item.name)) for item in fields(state)}


def run_chains(
    model: ModelKind,
    data: Dataset,
    config: McmcConfig,
    initial: State,
    step: StepFunction,
    loglik: Callable[[State], float],
    progress: Optional[ProgressCallback] = None,
    max_workers: int = 1,
    diagnostic_names: Tuple[str, ...] = (),
) -> PosteriorDraws:
    shapes = state_shapes(initial)

    def run_single(chain: int) -> Tuple[Dict[str, np.ndarray], np.ndarray, Counter]:
        stream = RngStream.for_chain(config.seed, chain)
        recorder = ChainRecorder(config, data, shapes)
        diagnostics: Counter = Counter({name: 0 for name in diagnostic_names})
        state = initial
        logger.info("Starting %s chain %d: %d iterations", model.value, chain, config.iterations)

        for iteration in range(config.iterations):
            try:
                state = step(state, stream, diagnostics)
            except InvalidParameterError as err:
                raise SamplerError(chain, iteration + 1, err.message) from err
            report_progress = progress is not None and (iteration + 1) % config.progress_every == 0
            if not (config.is_stored(iteration) or report_progress):
                continue

            current = loglik(state)
            recorder.record(iteration, state, current)
            if report_progress:
                event = ProgressEvent(model, chain, iteration + 1, config.iterations, current)
                logger.debug(
                    "%s chain %d at %d/%d, loglik %.4f", model.value, chain, event.iteration, event.iterations, current
                )
                progress(event)  # type: ignore[misc]

        logger.info("Finished %s chain %d: %d draws stored", model.value, chain, recorder.stored)
        draws, values = recorder.finish()
        return draws, values, diagnostics

    if max_workers > 1 and config.chains > 1:
        with ThreadPoolExecutor(max_workers=min(max_workers, config.chains)) as pool:
            results = list(pool.map(run_single, range(config.chains)))
    else:
        results = [run_single(chain) for chain in range(config.chains)]

    return merge_chains(model, config, results)


def merge_chains(
    model: ModelKind, config: McmcConfig, results: List[Tuple[Dict[str, np.ndarray], np.ndarray, Counter]]
) -> PosteriorDraws:
    diagnostics: Counter = Counter()
    for _, _, chain_diagnostics in results:
        diagnostics.update(chain_diagnostics)

    names = list(results[0][0])
    return PosteriorDraws(
        model=model,
        config=config,
        parameters={name: np.concatenate([draws[name] for draws, _, _ in results]) for name in names},
        loglik=np.concatenate([values for _, values, _ in results]),
        chain=np.concatenate([np.full(values.shape[0], chain) for chain, (_, values, _) in enumerate(results)]),
        diagnostics=dict(diagnostics),
    )
