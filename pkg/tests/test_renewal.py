import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, strategies as st

from conftest import masked_sup
from semiflow_lab.errors import PreconditionError, StripError
from semiflow_lab.renewal import (B_closed_form, FrequencyPoint, TildeObservable, U_closed_form,
                                  convolution_integral, windowed_direct)
from semiflow_lab.suspension import SuspensionObservable


def tilde(ops, f):
    return TildeObservable.from_function(ops.tgrid, f)


def test_strip_rule():
    assert FrequencyPoint(0.05, 3.0).in_strip
    FrequencyPoint(0.5, 0.0).require_defined()
    FrequencyPoint(-0.1, 0.0).require_defined()
    with pytest.raises(StripError):
        FrequencyPoint(-0.2, 1.0).require_defined()


def test_operators_refuse_left_of_strip(ops, v_ref):
    with pytest.raises(StripError):
        ops.assemble_L_hat(complex(-0.2, 1.0), v_ref)


def test_R_hat_at_zero_fixes_fibre_profiles(ops):
    v = tilde(ops, lambda y, u: np.sin(3 * u) + 0 * y)
    assert np.allclose(ops.apply_R_hat(0.0, v).values, v.values, atol=1e-13)


def test_R_hat_known_value(ops, roof):
    out = ops.apply_R_hat(0.1, tilde(ops, lambda y, u: np.ones_like(y + u)))
    oracle = 0.5 * (np.exp(-0.1 * roof(0.0)) + np.exp(-0.1 * roof(0.5)))
    assert np.allclose(out.values[0], oracle, atol=1e-14)


def test_U_hat_on_constants(ops):
    s = 0.7
    u1, u2 = ops.apply_U_hat(s, tilde(ops, lambda y, u: np.ones_like(y + u)), parts=True)
    u = ops.tgrid.u
    assert np.allclose(u1.values, (1 - np.exp(-s * u)) / s, atol=1e-12)
    assert np.allclose(u2.values[:, -1], 0.0, atol=1e-15)


def test_resolvent_matches_neumann_series(ops, rng):
    v = tilde(ops, lambda y, u: np.cos(2 * np.pi * y) * u + 1j * y * (1 - u))
    sol = ops.resolvent_apply(1.0, v)
    acc = v.values.copy()
    term = v.values.copy()
    for _ in range(200):
        term = ops.apply_R_hat(1.0, TildeObservable(ops.tgrid, term)).values
        acc += term
    assert sol.residual < 1e-12
    assert np.max(np.abs(sol.x.values - acc)) < 1e-8


def test_resolvent_rejects_mean_near_pole(ops):
    v = tilde(ops, lambda y, u: np.cos(2 * np.pi * u) + 0 * y)
    with pytest.raises(PreconditionError, match="mean zero"):
        ops.resolvent_apply(1e-4, v)


@pytest.mark.parametrize("angle", np.linspace(0, 2 * np.pi, 6, endpoint=False))
def test_resolvent_bounded_on_mean_zero_ring(ops, angle):
    s = 1e-2 * np.exp(1j * angle)
    v = tilde(ops, lambda y, u: np.cos(2 * np.pi * y) * (1 + u))
    x = ops.resolvent_apply(s, v).x
    assert np.max(np.abs(x.values)) < 10 * np.max(np.abs(v.values))


def test_resolvent_norm_grows_near_pole(ops):
    assert ops.resolvent_norm(0.01) > ops.resolvent_norm(1.0)


def test_A_hat_lifts_periodically(ops):
    s = 0.3 + 2j
    w = tilde(ops, lambda y, u: y + u ** 2)
    out = ops.apply_A_hat(s, w).values
    n = ops.tgrid.n
    assert np.allclose(out[:, n + n // 2], np.exp(-s) * w.values[:, n // 2])
    assert np.allclose(out[:, :n], w.values[:, :n])
    # |A(s)| <= e^{|a| [u]} on the grid
    assert np.max(np.abs(out)) <= np.exp(0.3 * 3) * np.max(np.abs(w.values))


def test_B_hat_at_zero(ops, grid):
    one = SuspensionObservable.constant(grid)
    out = ops.apply_B_hat(0.0, one).values
    # R0 phi = 2.5 for the doubling map with the cosine roof
    assert np.allclose(out, 2.5, atol=1e-12)


def test_G_hat_endpoints(ops, v_ref):
    s = 0.2 + 1j
    b = ops.apply_B_hat(s, v_ref).values
    g = ops.apply_G_hat(s, v_ref).values
    assert np.allclose(g[:, 0], b[:, 0])
    assert np.allclose(g[:, -1], 0.0)


def test_H_hat_on_constants(ops, grid):
    s = 0.4 - 3j
    out = ops.apply_H_hat(s, SuspensionObservable.constant(grid)).values
    u = ops.tgrid.u
    assert np.allclose(out, (1 - np.exp(-s * u)) / s, atol=1e-12)


def test_E_hat_against_adaptive_quadrature(ops, grid, v_ref):
    s = 0.3 + 2j
    out = ops.apply_E_hat(s, v_ref).values
    assert np.all(out[:, grid.u < 1] == 0)
    k = int(round(2.0 / grid.h))
    for i in (0, 37, 90):
        y = grid.y[i]

        def integrand(t, part):
            val = np.exp(-s * t) * v_ref.func(np.array(y), np.array(2.0 - t))
            return float(getattr(val, part))
        oracle = (scipy.integrate.quad(integrand, 0, 2, args=("real",), limit=200)[0]
                  + 1j * scipy.integrate.quad(integrand, 0, 2, args=("imag",), limit=200)[0])
        assert out[i, k] == pytest.approx(oracle, abs=1e-7)


@given(st.floats(0.05, 1.0), st.floats(-20, 20), st.complex_numbers(max_magnitude=3, allow_nan=False))
def test_L_hat_is_linear(ops, grid, v_ref, a, b, c):
    w = SuspensionObservable.from_function(grid, lambda y, u: np.cos(2 * np.pi * y) * np.sin(u) ** 2)
    s = complex(a, b)
    lhs = ops.assemble_L_hat(s, v_ref + w * c).values
    rhs = ops.assemble_L_hat(s, v_ref).values + c * ops.assemble_L_hat(s, w).values
    assert masked_sup(grid, lhs - rhs) <= 1e-10 * (1 + masked_sup(grid, rhs))


def test_L_hat_of_constant_is_one_over_s(ops, grid):
    s = 0.5 + 4j
    out = ops.assemble_L_hat(s, SuspensionObservable.constant(grid)).values
    assert masked_sup(grid, out - 1 / s) < 1e-12


def test_L_hat_on_the_strip(ops, v_ref):
    out = ops.assemble_L_hat(complex(-0.05, 7.0), v_ref).values
    assert np.all(np.isfinite(out))


def test_windowed_B_matches_closed_form(grid, v_ref):
    y = grid.y[::7]
    u = np.linspace(0, 1, 9, endpoint=False)  # the window is half-open at u = 1
    yy, uu = np.meshgrid(y, u, indexing="ij")
    for t in (0.8, 2.3, 4.1):
        direct = windowed_direct(grid, "B", v_ref.func, t)(yy, uu)
        closed = B_closed_form(grid, v_ref.func, t)(yy, uu)
        assert np.max(np.abs(direct - closed)) < 1e-10


def test_windowed_E_vanishes_after_max_roof(grid, v_ref):
    yy, uu = np.meshgrid(grid.y[::5], np.linspace(0, 3, 13), indexing="ij")
    assert np.all(windowed_direct(grid, "E", v_ref.func, 3.2)(yy, uu) == 0)


def test_windowed_U_matches_closed_form(grid):
    f = lambda y, u: np.cos(2 * np.pi * y) * u * (1 - u)
    yy, uu = np.meshgrid(grid.y[::9], np.linspace(0, 1, 11), indexing="ij")
    for t in (0.25, 0.6, 1.0):
        assert np.allclose(windowed_direct(grid, "U", f, t)(yy, uu), U_closed_form(f, t)(yy, uu), atol=1e-14)


def test_windowed_A_requires_lap_count(grid):
    with pytest.raises(ValueError):
        windowed_direct(grid, "A", lambda y, u: y, 1.0)


def test_convolution_integral_is_zero_at_time_zero(grid, v_ref):
    assert np.all(convolution_integral(grid, v_ref.func, 0.0, grid.y[:4], np.full(4, 0.5)) == 0)
