import math

import numpy as np
import pytest

from stratabc.exceptions import DimensionError, ParameterError
from stratabc.inference.kernels import (
    KernelConfig,
    gaussian_kernel,
    indicator_kernel,
    log_gaussian_kernel,
    log_indicator_kernel,
    scaled_distance,
)
from stratabc.inference.models import ScalingMatrix


def test_scaled_distance_is_zero_at_observed():
    s = np.array([1.0, -2.0])
    assert scaled_distance(s, s, ScalingMatrix.identity(2)) == 0.0


def test_scaled_distance_euclidean_with_identity():
    d = scaled_distance(np.array([3.0, 4.0]), np.zeros(2), ScalingMatrix.identity(2))
    assert d == pytest.approx(5.0)


def test_scaled_distance_diagonal_scaling():
    d = scaled_distance(np.array([2.0, 3.0]), np.zeros(2), ScalingMatrix(np.array([4.0, 1.0])))
    assert d == pytest.approx(math.sqrt(10.0))


def test_scaled_distance_batch_returns_one_value_per_row():
    s = np.array([[0.0, 0.0], [3.0, 4.0]])
    d = scaled_distance(np.zeros(2), s, ScalingMatrix.identity(2))
    np.testing.assert_allclose(d, [0.0, 5.0])


def test_scaled_distance_length_mismatch():
    with pytest.raises(DimensionError):
        scaled_distance(np.zeros(2), np.zeros(3), ScalingMatrix.identity(2))


def test_gaussian_kernel_peak():
    assert gaussian_kernel(np.array([0.3]), np.array([0.3]), ScalingMatrix.identity(1), 1.0) == pytest.approx(1.0)
    # peak is 1/δ^{n_s}
    assert gaussian_kernel(np.zeros(2), np.zeros(2), ScalingMatrix.identity(2), 0.5) == pytest.approx(4.0)


def test_gaussian_kernel_closed_form():
    k = gaussian_kernel(np.array([0.5]), np.array([0.0]), ScalingMatrix.identity(1), 0.5)
    assert k == pytest.approx(2.0 * math.exp(-0.5))


def test_log_gaussian_kernel_matches_log_of_value():
    s_star = np.array([0.2, -0.1])
    s = np.array([0.1, 0.3])
    sigma = ScalingMatrix(np.array([0.5, 2.0]))
    assert log_gaussian_kernel(s_star, s, sigma, 0.7) == pytest.approx(math.log(gaussian_kernel(s_star, s, sigma, 0.7)))


def test_log_gaussian_kernel_stays_finite_where_value_underflows():
    s_star, s = np.array([0.0]), np.array([1.0])
    sigma = ScalingMatrix.identity(1)
    assert gaussian_kernel(s_star, s, sigma, 1e-3) == 0.0
    assert log_gaussian_kernel(s_star, s, sigma, 1e-3) == pytest.approx(math.log(1e3) - 5e5)


@pytest.mark.parametrize("delta", [0.0, -1.0, float("inf"), float("nan")])
def test_kernels_reject_invalid_delta(delta):
    with pytest.raises(ParameterError):
        gaussian_kernel(np.zeros(1), np.zeros(1), ScalingMatrix.identity(1), delta)
    with pytest.raises(ParameterError):
        indicator_kernel(0.0, delta)


def test_indicator_kernel_is_strict_at_the_boundary():
    assert indicator_kernel(0.0, 1.0) == 1.0
    assert indicator_kernel(1.0, 1.0) == 0.0
    assert indicator_kernel(2.0, 1.0) == 0.0
    np.testing.assert_array_equal(indicator_kernel(np.array([0.5, 1.0, 1.5]), 1.0), [1.0, 0.0, 0.0])


def test_log_indicator_kernel_is_minus_infinity_outside():
    np.testing.assert_array_equal(log_indicator_kernel(np.array([0.1, 3.0]), 1.0), [0.0, -np.inf])


def test_indicator_kernel_rejects_negative_distances():
    with pytest.raises(ParameterError):
        indicator_kernel(-0.1, 1.0)


def test_kernel_config_maps_non_finite_summaries_to_infinite_distance():
    kernel = KernelConfig("gaussian", np.zeros(1), ScalingMatrix.identity(1), 1.0)
    d = kernel.distances(np.array([[0.0], [np.nan]]))
    assert d[0] == 0.0 and np.isinf(d[1])
    assert kernel.values(d)[1] == 0.0
    assert kernel.log_values(d)[1] == -np.inf


def test_kernel_config_with_delta_keeps_everything_else():
    sigma = ScalingMatrix(np.array([2.0]))
    kernel = KernelConfig("indicator", np.array([1.0]), sigma, 1.0).with_delta(0.25)
    assert kernel.delta == 0.25 and kernel.kind == "indicator" and kernel.sigma is sigma


def test_kernel_config_rejects_unknown_kind():
    with pytest.raises(ParameterError):
        KernelConfig("epanechnikov", np.zeros(1), ScalingMatrix.identity(1), 1.0)


def test_scaling_matrix_rejects_non_positive_entries():
    with pytest.raises(ParameterError):
        ScalingMatrix(np.array([1.0, 0.0]))
