import numpy as np
import pytest
from hypothesis import given, strategies as st

from semiflow_lab.cheb import barycentric_matrix, cgl_nodes, cgl_weights, clenshaw_curtis_weights, diff_matrix
from semiflow_lab.quadrature import composite_gauss, cumulative_weights, gauss_legendre, integral_weights


def test_cgl_nodes_are_increasing_and_hit_endpoints():
    x = cgl_nodes(9, 0.5, 1.0)
    assert x[0] == 0.5 and x[-1] == 1.0
    assert np.all(np.diff(x) > 0)


@given(st.integers(min_value=0, max_value=15))
def test_barycentric_reproduces_polynomials(deg):
    x = cgl_nodes(16, -1.0, 2.0)
    q = np.linspace(-1.0, 2.0, 37)
    m = barycentric_matrix(x, cgl_weights(16), q)
    assert np.allclose(m @ x ** deg, q ** deg, atol=1e-11 * 2.0 ** deg)


def test_barycentric_at_nodes_is_identity():
    x = cgl_nodes(12, 0.0, 1.0)
    assert np.array_equal(barycentric_matrix(x, cgl_weights(12), x), np.eye(12))


@pytest.mark.parametrize("k", range(0, 12))
def test_clenshaw_curtis_exact_for_low_degree(k):
    w = clenshaw_curtis_weights(12, 0.0, 2.0)
    x = cgl_nodes(12, 0.0, 2.0)
    assert w @ x ** k == pytest.approx(2.0 ** (k + 1) / (k + 1), rel=1e-13)


def test_diff_matrix_differentiates_sine():
    x = cgl_nodes(24, 0.0, 1.0)
    d = diff_matrix(x, cgl_weights(24))
    assert np.allclose(d @ np.sin(3 * x), 3 * np.cos(3 * x), atol=1e-9)


def test_gauss_legendre_on_unit_interval():
    x, w = gauss_legendre(8)
    assert w.sum() == pytest.approx(1.0)
    assert w @ x ** 15 == pytest.approx(1 / 16, rel=1e-14)


def test_composite_gauss_handles_empty_and_long_intervals():
    x, w = composite_gauss(1.0, 1.0)
    assert x.size == 0
    x, w = composite_gauss(0.0, 7.3)
    assert w @ np.cos(x) == pytest.approx(np.sin(7.3), abs=1e-13)


def test_cumulative_weights_integrate_exponential():
    h = 1 / 64
    u = np.arange(65) * h
    c = cumulative_weights(65, h, 6)
    assert np.allclose(c @ np.exp(u), np.exp(u) - 1, atol=1e-12)


def test_integral_weights_off_grid_upper_limit():
    h = 1 / 32
    u = np.arange(80) * h
    upper = np.array([0.3, 1.77, 2.0])
    w = integral_weights(80, h, upper, 6)
    assert np.allclose(w @ np.sin(u), 1 - np.cos(upper), atol=1e-11)
