import numpy as np
import pytest

from conftest import masked_sup
from semiflow_lab.errors import PreconditionError
from semiflow_lab.laplace import (ContourSpec, _upper_hull, decay_fit, default_horizon, flow_derivative_check,
                                  ibp_representation, invert_laplace, laplace_of_Lt)
from semiflow_lab.renewal import RenewalOperators
from semiflow_lab.suspension import (ObservableSpec, SuspensionGrid, SuspensionObservable, build_test_observable,
                                     integral_mu_phi, random_smooth_observable)

T_GRID = np.arange(0.0, 41.0)


def test_transform_of_constant(grid):
    lap = laplace_of_Lt(SuspensionObservable.constant(grid), [0.5, 1 + 3j])
    for s, vals, tail in zip(lap.s_values, lap.values, lap.tail_bounds):
        assert masked_sup(grid, vals - 1 / s) < 1e-9
        assert tail <= 1e-10


def test_transform_needs_right_half_plane(grid):
    with pytest.raises(PreconditionError):
        laplace_of_Lt(SuspensionObservable.constant(grid), 0.0)


def test_default_horizon():
    t = default_horizon(0.5)
    assert np.exp(-0.5 * t) / 0.5 == pytest.approx(1e-10)
    assert default_horizon(1e-4) == 80.0


def test_assembled_transform_matches_time_quadrature(ops, v_ref):
    lap = laplace_of_Lt(v_ref, [0.5, 0.5 + 5j], t_max=40)
    g = v_ref.grid
    for s, ref in zip(lap.s_values, lap.values):
        hat = ops.assemble_L_hat(s, v_ref).values
        assert masked_sup(g, hat - ref) <= 1e-5 * masked_sup(g, ref)


def test_ibp_order_zero_is_assembly(ops, v_ref):
    s = 0.3 + 1j
    assert np.array_equal(ibp_representation(ops, v_ref, s, 0).values, ops.assemble_L_hat(s, v_ref).values)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_ibp_orders_agree_on_strip(ops, v_ref, m):
    s = -0.05 + 12j
    g = v_ref.grid
    ref = ibp_representation(ops, v_ref, s, 0).values
    assert masked_sup(g, ibp_representation(ops, v_ref, s, m).values - ref) < 1e-6 * masked_sup(g, ref)


def test_ibp_remainder_decays_in_frequency(ops, v_ref):
    # |s|^{-3} L(s) d^3 v falls at least like |b|^{-3} for large |b|
    g = v_ref.grid
    d3 = SuspensionObservable(g, v_ref.level(3))
    sizes = [masked_sup(g, ops.assemble_L_hat(complex(-0.05, b), d3).values) / b ** 3 for b in (20.0, 80.0)]
    slope = np.log(sizes[1] / sizes[0]) / np.log(4.0)
    assert slope < -2.5


def test_ibp_needs_good_support(ops, grid, rng):
    v = random_smooth_observable(grid, rng, good_support=False)
    with pytest.raises(PreconditionError, match="good support"):
        ibp_representation(ops, v, 1.0, 2)
    with pytest.raises(PreconditionError):
        ibp_representation(ops, v, 0.0, 0)


def test_contour_validation():
    with pytest.raises(PreconditionError, match="db"):
        ContourSpec(0.5, db=1.0)
    with pytest.raises(PreconditionError, match="b_max"):
        ContourSpec(0.5, b_max=10)
    assert ContourSpec(0.5).db == pytest.approx(np.pi / 20)
    assert ContourSpec(-0.05).db == pytest.approx(2 * np.pi / 200)
    b = ContourSpec(0.5, b_max=50).b_values
    assert b[0] == -b[-1] and abs(b).max() <= 50


def test_inversion_of_constant_is_exact(ops, grid):
    one = SuspensionObservable.constant(grid)
    res = invert_laplace(ops, one, [0.5, 5.0], ContourSpec(0.5, b_max=50))
    # L(s) 1 = 1/s up to fibre quadrature error, which grows like (b h)^6
    for r in res:
        assert masked_sup(grid, r.value.values - 1) < 2e-6


def test_negative_contour_needs_mean_zero(ops, grid):
    v = build_test_observable(grid, ObservableSpec(profile="one", mean_zero=False))
    with pytest.raises(PreconditionError, match="mean-zero"):
        invert_laplace(ops, v, 5.0, ContourSpec(-0.05, b_max=50))


def test_reference_decay(grid, v_ref):
    fit = decay_fit(v_ref, T_GRID, 0.0, 0.5)
    assert fit.decaying
    assert fit.rate > 0 and fit.quality >= 0.9
    assert fit.envelope_violation <= 0.05
    assert len(list(fit.rows())) == T_GRID.size
    assert all(n == max(a + b, c + d) for a, b, c, d, n in zip(fit.sup_part, fit.holder_part,
                                                            fit.deriv_sup_part, fit.deriv_holder_part,
                                                            fit.norms))


def test_nonzero_mean_is_a_floor(grid):
    v = build_test_observable(grid, ObservableSpec(profile="one", mean_zero=False))
    mean = abs(integral_mu_phi(v))
    fit = decay_fit(v, T_GRID, 0.0, 0.5, check_mean=False)
    assert not fit.decaying
    assert min(fit.sup_part) >= mean * (1 - 1e-9)
    with pytest.raises(PreconditionError, match="mean-zero"):
        decay_fit(v, T_GRID, 0.0, 0.5)


def test_constant_roof_does_not_decay(flat_grid):
    v = build_test_observable(flat_grid, ObservableSpec(profile="one", flow_profile="bump_derivative",
                                                        mean_zero=False))
    assert abs(integral_mu_phi(v)) < 1e-12
    fit = decay_fit(v, T_GRID, 0.0, 0.5)
    assert fit.plateau_ratio >= 0.5 * 1.0
    assert not fit.decaying


def test_decay_needs_derivative(grid):
    v = SuspensionObservable.from_function(grid, lambda y, u: np.cos(2 * np.pi * y) + 0 * u)
    with pytest.raises(PreconditionError):
        decay_fit(v, T_GRID, 0.0, 0.5)


def test_upper_hull():
    x = np.arange(5.0)
    y = np.array([0.0, -1.0, 0.5, -2.0, 0.0])
    assert list(_upper_hull(x, y)) == [0, 2, 4]


@pytest.mark.parametrize("t", [0.0, 5.0])
def test_flow_derivative_commutes(v_ref, t):
    res = flow_derivative_check(v_ref, t)
    assert res.status == "ok" and res.passed, res.to_dict()


def test_flow_derivative_commutes_on_refined_grid(grid):
    fine = grid.refined()
    v = build_test_observable(fine)
    res = flow_derivative_check(v, 5.0)
    assert res.passed
    assert res.tolerance == pytest.approx(10 * fine.h ** 2)


def test_flow_derivative_precondition(grid, rng):
    v = random_smooth_observable(grid, rng, good_support=False)
    res = flow_derivative_check(v, 2.0)
    assert res.status == "precondition unmet" and not res.passed
