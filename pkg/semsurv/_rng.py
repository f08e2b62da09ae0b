"""Seeded random draws for the Gibbs samplers.

Every distribution is parameterised by variance (never precision) and by scale (never rate). All samplers accept
scalars or broadcastable arrays; a scalar input gives a float back.
"""
from typing import Tuple, Union

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, solve_triangular
from scipy.special import ndtr, ndtri

from semsurv.errors import InvalidParameterError, ShapeError, SingularCovarianceError

ArrayLike = Union[float, np.ndarray]

MAX_SEED = 2**64
# standardized truncation point above which the exponential-proposal sampler replaces inverse-CDF
TAIL_CUTOFF = 5.0


class RngStream:
    """Single-owner random stream.

    The Philox counter's two high words hold (lane, stream_index), so streams sharing a key occupy disjoint
    2**128-long blocks of the counter space.
    """

    __seed: int
    __stream_index: int
    __lane: int
    __generator: Generator

    def __init__(self, seed: int, stream_index: int = 0, lane: int = 0) -> None:
        for name, value in (("seed", seed), ("stream_index", stream_index), ("lane", lane)):
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or not 0 <= value < MAX_SEED:
                raise InvalidParameterError(name, value)
        self.__seed = int(seed)
        self.__stream_index = int(stream_index)
        self.__lane = int(lane)
        counter = (self.__lane << 128) | (self.__stream_index << 192)
        self.__generator = Generator(Philox(counter=counter, key=self.__seed))

    @classmethod
    def for_chain(cls, seed: int, chain: int) -> "RngStream":
        return cls(seed, stream_index=chain)

    @property
    def seed(self) -> int:
        return self.__seed

    @property
    def stream_index(self) -> int:
        return self.__stream_index

    @property
    def lane(self) -> int:
        return self.__lane

    @property
    def generator(self) -> Generator:
        return self.__generator

    def spawn(self, lane: int) -> "RngStream":
        return RngStream(self.__seed, stream_index=self.__stream_index, lane=lane)


def derive_seed(root_seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for (root_seed, keys)."""
    sequence = SeedSequence(int(root_seed), spawn_key=tuple(int(key) for key in keys))
    return int(sequence.generate_state(1, np.uint64)[0])


def _finish(values: np.ndarray) -> ArrayLike:
    if values.shape == ():
        return float(values)
    return values


def _check_finite(name: str, values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise InvalidParameterError(name, values[~np.isfinite(values)].flat[0])


def _check_positive(name: str, values: np.ndarray) -> None:
    invalid = ~(np.isfinite(values) & (values > 0))
    if np.any(invalid):
        raise InvalidParameterError(name, values[invalid].flat[0])


def _broadcast(*arrays: np.ndarray) -> Tuple[Tuple[int, ...], Tuple[np.ndarray, ...]]:
    shape = np.broadcast_shapes(*(array.shape for array in arrays))
    return shape, tuple(np.broadcast_to(array, shape).ravel() for array in arrays)


def sample_normal(stream: RngStream, mean: ArrayLike, variance: ArrayLike) -> ArrayLike:
    mean_arr = np.asarray(mean, dtype=float)
    variance_arr = np.asarray(variance, dtype=float)
    _check_finite("mean", mean_arr)
    _check_positive("variance", variance_arr)

    shape = np.broadcast_shapes(mean_arr.shape, variance_arr.shape)
    standard = np.asarray(stream.generator.standard_normal(shape))
    return _finish(mean_arr + np.sqrt(variance_arr) * standard)


def _exponential_tail(stream: RngStream, lower: np.ndarray) -> np.ndarray:
    # Robert's exponential-proposal rejection sampler for N(0, 1) restricted to (lower, inf), lower > 0
    rate = 0.5 * (lower + np.sqrt(lower * lower + 4.0))
    result = np.empty_like(lower)
    pending = np.arange(lower.size)
    while pending.size:
        candidate = lower[pending] + stream.generator.standard_exponential(pending.size) / rate[pending]
        accept = stream.generator.random(pending.size) <= np.exp(-0.5 * (candidate - rate[pending]) ** 2)
        result[pending[accept]] = candidate[accept]
        pending = pending[~accept]
    return result


def sample_truncated_normal_lower(
    stream: RngStream, mean: ArrayLike, variance: ArrayLike, lower: ArrayLike
) -> ArrayLike:
    mean_arr = np.asarray(mean, dtype=float)
    variance_arr = np.asarray(variance, dtype=float)
    lower_arr = np.asarray(lower, dtype=float)
    _check_finite("mean", mean_arr)
    _check_positive("variance", variance_arr)
    if np.any(np.isnan(lower_arr) | (lower_arr == np.inf)):
        raise InvalidParameterError("lower", lower_arr[np.isnan(lower_arr) | (lower_arr == np.inf)].flat[0])

    shape, (mean_flat, variance_flat, lower_flat) = _broadcast(mean_arr, variance_arr, lower_arr)
    sd = np.sqrt(variance_flat)
    standardized_lower = (lower_flat - mean_flat) / sd

    standard = np.empty(standardized_lower.shape)
    tail = standardized_lower > TAIL_CUTOFF
    body = ~tail
    if np.any(body):
        # inverse survival function on (0, 1], so the draw can never be +inf
        uniform = 1.0 - stream.generator.random(int(body.sum()))
        standard[body] = -ndtri(uniform * ndtr(-standardized_lower[body]))
    if np.any(tail):
        standard[tail] = _exponential_tail(stream, standardized_lower[tail])

    draws = mean_flat + sd * standard
    # strict support: rounding can land exactly on the bound
    draws = np.where(draws > lower_flat, draws, np.nextafter(lower_flat, np.inf))
    return _finish(draws.reshape(shape))


def sample_inverse_gamma(stream: RngStream, shape: ArrayLike, scale: ArrayLike) -> ArrayLike:
    shape_arr = np.asarray(shape, dtype=float)
    scale_arr = np.asarray(scale, dtype=float)
    _check_positive("shape", shape_arr)
    _check_positive("scale", scale_arr)

    size = np.broadcast_shapes(shape_arr.shape, scale_arr.shape)
    standard = np.asarray(stream.generator.standard_gamma(shape_arr, size=size))
    return _finish(scale_arr / standard)


def sample_gamma(stream: RngStream, shape: ArrayLike, scale: ArrayLike) -> ArrayLike:
    shape_arr = np.asarray(shape, dtype=float)
    scale_arr = np.asarray(scale, dtype=float)
    _check_positive("shape", shape_arr)
    _check_positive("scale", scale_arr)

    size = np.broadcast_shapes(shape_arr.shape, scale_arr.shape)
    return _finish(np.asarray(stream.generator.gamma(shape_arr, scale_arr, size=size)))


def sample_mvn(stream: RngStream, mean: np.ndarray, covariance: np.ndarray) -> np.ndarray:
    mean_arr = np.atleast_1d(np.asarray(mean, dtype=float))
    covariance_arr = np.atleast_2d(np.asarray(covariance, dtype=float))
    dimension = mean_arr.shape[0]
    if mean_arr.ndim != 1 or covariance_arr.shape != (dimension, dimension):
        raise ShapeError("covariance", (dimension, dimension), covariance_arr.shape)
    _check_finite("mean", mean_arr)
    if not np.all(np.isfinite(covariance_arr)) or not np.allclose(covariance_arr, covariance_arr.T):
        raise SingularCovarianceError(dimension)

    try:
        factor = cholesky(covariance_arr, lower=True)
    except LinAlgError as err:
        raise SingularCovarianceError(dimension) from err
    return mean_arr + factor @ stream.generator.standard_normal(dimension)


def sample_mvn_canonical(
    stream: RngStream, linear: np.ndarray, precision: np.ndarray, scale: float = 1.0
) -> np.ndarray:
    """Draw from N(precision^-1 linear, scale * precision^-1) through a Cholesky factor of the precision."""
    linear_arr = np.atleast_1d(np.asarray(linear, dtype=float))
    precision_arr = np.atleast_2d(np.asarray(precision, dtype=float))
    dimension = linear_arr.shape[0]
    if dimension == 0:
        return np.empty(0)
    if precision_arr.shape != (dimension, dimension):
        raise ShapeError("precision", (dimension, dimension), precision_arr.shape)
    _check_positive("scale", np.asarray(scale, dtype=float))

    try:
        factor = cho_factor(precision_arr, lower=False)
    except (LinAlgError, ValueError) as err:
        raise SingularCovarianceError(dimension) from err
    mean = cho_solve(factor, linear_arr)
    standard = stream.generator.standard_normal(dimension)
    return mean + np.sqrt(scale) * solve_triangular(factor[0], standard, lower=False)
