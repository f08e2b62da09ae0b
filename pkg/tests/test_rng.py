import time

import numpy as np
import pytest
from scipy import stats

from semsurv._rng import (
    TAIL_CUTOFF,
    RngStream,
    derive_seed,
    sample_gamma,
    sample_inverse_gamma,
    sample_mvn,
    sample_mvn_canonical,
    sample_normal,
    sample_truncated_normal_lower,
)
from semsurv.errors import InvalidParameterError, ShapeError, SingularCovarianceError

KS_LEVEL = 1e-3


def test_same_seed_same_draws() -> None:
    """It should reproduce draws bit for bit from the same seed and stream index"""
    first = RngStream(42, stream_index=3)
    second = RngStream(42, stream_index=3)

    assert np.array_equal(sample_normal(first, np.zeros(20), 1.0), sample_normal(second, np.zeros(20), 1.0))


def test_streams_are_distinct() -> None:
    """It should give different draws for different chains and lanes of the same seed"""
    base = sample_normal(RngStream.for_chain(42, 0), np.zeros(20), 1.0)
    other_chain = sample_normal(RngStream.for_chain(42, 1), np.zeros(20), 1.0)
    other_lane = sample_normal(RngStream(42).spawn(2), np.zeros(20), 1.0)

    assert not np.array_equal(base, other_chain)
    assert not np.array_equal(base, other_lane)


def test_spawn_keeps_seed_and_index() -> None:
    """It should keep the seed and stream index when spawning a lane"""
    stream = RngStream(7, stream_index=2).spawn(5)

    assert (stream.seed, stream.stream_index, stream.lane) == (7, 2, 5)


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True, "1"])
def test_invalid_seed(seed) -> None:
    """It should reject seeds outside the unsigned 64-bit range"""
    with pytest.raises(InvalidParameterError):
        RngStream(seed)


def test_derive_seed() -> None:
    """It should derive stable, distinct 64-bit child seeds"""
    assert derive_seed(0, 1, 2) == derive_seed(0, 1, 2)
    assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)
    assert derive_seed(0, 1, 2) != derive_seed(1, 1, 2)
    assert 0 <= derive_seed(123, 4) < 2**64


def test_scalar_inputs_return_floats() -> None:
    """It should return a float for scalar parameters"""
    stream = RngStream(1)

    assert isinstance(sample_normal(stream, 0.0, 1.0), float)
    assert isinstance(sample_truncated_normal_lower(stream, 0.0, 1.0, 0.0), float)
    assert isinstance(sample_inverse_gamma(stream, 2.0, 1.0), float)
    assert isinstance(sample_gamma(stream, 2.0, 1.0), float)


def test_normal_moments() -> None:
    """It should draw N(mean, variance) parameterised by variance"""
    draws = sample_normal(RngStream(3), np.full(200000, 1.0), 4.0)

    assert np.mean(draws) == pytest.approx(1.0, abs=0.02)
    assert np.var(draws) == pytest.approx(4.0, rel=0.02)


def test_normal_goodness_of_fit() -> None:
    """It should pass a Kolmogorov-Smirnov test against N(mean, variance)"""
    draws = sample_normal(RngStream(21), np.full(20000, -1.5), 0.36)

    assert stats.kstest(draws, stats.norm(loc=-1.5, scale=0.6).cdf).pvalue > KS_LEVEL


def test_truncated_normal_standard_mean() -> None:
    """It should have mean 2 * phi(0) = 0.79788 for N(0, 1) truncated to (0, inf)"""
    draws = sample_truncated_normal_lower(RngStream(5), np.zeros(200000), 1.0, 0.0)

    assert np.all(draws > 0.0)
    assert np.mean(draws) == pytest.approx(0.79788, abs=0.006)


@pytest.mark.parametrize("lower", [3.0, 6.0, 12.0, 40.0])
def test_truncated_normal_far_tail(lower: float) -> None:
    """It should stay strictly above the bound with the exact truncated mean deep in the tail"""
    draws = sample_truncated_normal_lower(RngStream(9), np.zeros(50000), 1.0, lower)
    expected = stats.truncnorm.mean(lower, np.inf)

    assert np.all(np.isfinite(draws))
    assert np.all(draws > lower)
    assert np.mean(draws) == pytest.approx(expected, abs=0.01)


def test_truncated_normal_lower_minus_infinity() -> None:
    """It should reduce to the untruncated normal for an infinite lower bound"""
    draws = sample_truncated_normal_lower(RngStream(2), np.zeros(100000), 1.0, -np.inf)

    assert np.mean(draws) == pytest.approx(0.0, abs=0.02)


@pytest.mark.parametrize(
    "mean,variance,lower",
    [(0.0, 1.0, 0.0), (1.0, 4.0, 0.5), (-2.0, 0.25, -2.5), (0.0, 1.0, TAIL_CUTOFF + 1.0), (3.0, 2.0, 14.0)],
)
def test_truncated_normal_goodness_of_fit(mean: float, variance: float, lower: float) -> None:
    """It should pass a Kolmogorov-Smirnov test against the truncated normal in the body and the tail"""
    sd = np.sqrt(variance)
    draws = sample_truncated_normal_lower(RngStream(23), np.full(20000, mean), variance, lower)
    reference = stats.truncnorm((lower - mean) / sd, np.inf, loc=mean, scale=sd)

    assert stats.kstest(draws, reference.cdf).pvalue > KS_LEVEL


def test_truncated_normal_far_tail_cost() -> None:
    """It should cost less than ten times the untruncated sampler at a standardized bound of 8"""
    means = np.zeros(200000)

    def best_time(draw) -> float:
        stream = RngStream(29)
        timings = []
        for _ in range(5):
            start = time.perf_counter()
            draw(stream)
            timings.append(time.perf_counter() - start)
        return min(timings)

    untruncated = best_time(lambda stream: sample_normal(stream, means, 1.0))
    truncated = best_time(lambda stream: sample_truncated_normal_lower(stream, means, 1.0, 8.0))

    assert truncated < 10.0 * untruncated


@pytest.mark.parametrize(
    "mean,variance,lower",
    [(np.nan, 1.0, 0.0), (0.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 1.0, np.nan), (0.0, 1.0, np.inf)],
)
def test_truncated_normal_invalid(mean: float, variance: float, lower: float) -> None:
    """It should reject non-finite means, non-positive variances and invalid bounds"""
    with pytest.raises(InvalidParameterError):
        sample_truncated_normal_lower(RngStream(0), mean, variance, lower)


def test_inverse_gamma_moments() -> None:
    """It should draw IG(shape, scale) with mean scale / (shape - 1)"""
    draws = sample_inverse_gamma(RngStream(11), np.full(200000, 2.5), 2.5)

    assert np.mean(draws) == pytest.approx(2.5 / 1.5, rel=0.03)


def test_gamma_moments() -> None:
    """It should draw Gamma(shape, scale) with mean shape * scale"""
    draws = sample_gamma(RngStream(12), np.full(100000, 3.0), 2.0)

    assert np.mean(draws) == pytest.approx(6.0, rel=0.02)


@pytest.mark.parametrize("shape,scale", [(0.5, 1.0), (2.5, 2.5), (10.0, 0.1)])
def test_gamma_goodness_of_fit(shape: float, scale: float) -> None:
    """It should pass Kolmogorov-Smirnov tests against Gamma and inverse-Gamma with the same shape and scale"""
    gamma = sample_gamma(RngStream(31), np.full(20000, shape), scale)
    inverse_gamma = sample_inverse_gamma(RngStream(37), np.full(20000, shape), scale)

    assert stats.kstest(gamma, stats.gamma(shape, scale=scale).cdf).pvalue > KS_LEVEL
    assert stats.kstest(inverse_gamma, stats.invgamma(shape, scale=scale).cdf).pvalue > KS_LEVEL


@pytest.mark.parametrize("shape,scale", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (1.0, np.inf)])
def test_inverse_gamma_invalid(shape: float, scale: float) -> None:
    """It should reject non-positive shape or scale"""
    with pytest.raises(InvalidParameterError):
        sample_inverse_gamma(RngStream(0), shape, scale)


def test_mvn_covariance() -> None:
    """It should reproduce the requested covariance"""
    covariance = np.array([[2.0, 0.6], [0.6, 1.0]])
    stream = RngStream(17)
    draws = np.array([sample_mvn(stream, np.array([1.0, -1.0]), covariance) for _ in range(40000)])

    assert np.allclose(np.mean(draws, axis=0), [1.0, -1.0], atol=0.03)
    assert np.allclose(np.cov(draws.T), covariance, atol=0.05)


def test_mvn_canonical_matches_moment_form() -> None:
    """It should draw N(P^-1 b, s P^-1) from the canonical parameters"""
    precision = np.array([[2.0, 0.5], [0.5, 1.0]])
    linear = np.array([1.0, 2.0])
    stream = RngStream(19)
    draws = np.array([sample_mvn_canonical(stream, linear, precision, 2.0) for _ in range(40000)])

    assert np.allclose(np.mean(draws, axis=0), np.linalg.solve(precision, linear), atol=0.03)
    assert np.allclose(np.cov(draws.T), 2.0 * np.linalg.inv(precision), atol=0.05)


def test_mvn_rejects_singular_covariance() -> None:
    """It should report a non positive-definite covariance or precision"""
    singular = np.array([[1.0, 1.0], [1.0, 1.0]])

    with pytest.raises(SingularCovarianceError):
        sample_mvn(RngStream(0), np.zeros(2), singular)
    with pytest.raises(SingularCovarianceError):
        sample_mvn_canonical(RngStream(0), np.zeros(2), singular)


def test_mvn_shape_mismatch() -> None:
    """It should reject mismatched mean and covariance shapes"""
    with pytest.raises(ShapeError):
        sample_mvn(RngStream(0), np.zeros(3), np.eye(2))


def test_mvn_canonical_empty() -> None:
    """It should return an empty vector for a zero-dimensional block"""
    assert sample_mvn_canonical(RngStream(0), np.empty(0), np.empty((0, 0))).shape == (0,)
