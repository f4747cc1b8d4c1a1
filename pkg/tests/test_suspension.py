import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import masked_sup
from semiflow_lab.errors import PreconditionError, ValidationError
from semiflow_lab.roof import affine_roof
from semiflow_lab.suspension import (ObservableSpec, SuspensionGrid, SuspensionObservable, SuspensionPoint,
                                     apply_Lt_exact, apply_Lt_step, build_test_observable, correlation,
                                     flow_point, flow_points, integral_mu_phi, random_smooth_observable,
                                     require_valid_roof, sample_mu_phi, suspension_norm, validate_roof)


def test_flow_point_examples(model, roof):
    p, n = flow_point(model, roof, SuspensionPoint(0.25, 1.0), 0.5)
    assert (p, n) == (SuspensionPoint(0.25, 1.5), 0)
    # phi(0.25) = 2.5, so u = 3.0 wraps once to (F(0.25), 0.5)
    p, n = flow_point(model, roof, SuspensionPoint(0.25, 1.0), 2.0)
    assert n == 1
    assert p.y == pytest.approx(0.5) and p.u == pytest.approx(0.5)


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 2), st.floats(0, 5), st.floats(0, 5))
def test_flow_group_property(model, roof, y, u, s, t):
    y1, u1, _ = flow_points(model, roof, np.array([y]), np.array([u]), s)
    y2, u2, _ = flow_points(model, roof, y1, u1, t)
    y3, u3, _ = flow_points(model, roof, np.array([y]), np.array([u]), s + t)
    assert u2[0] == pytest.approx(u3[0], abs=1e-9)
    assert abs(y2[0] - y3[0]) % 1.0 == pytest.approx(0.0, abs=1e-8) or abs(abs(y2[0] - y3[0]) - 1) < 1e-8


def test_flow_rejects_negative_time(model, roof):
    with pytest.raises(ValueError):
        flow_points(model, roof, np.array([0.1]), np.array([0.1]), -1.0)


def test_roof_below_two_is_rejected(base):
    grid = SuspensionGrid(base, affine_roof(1.9, 1.0))
    rep = validate_roof(grid)
    assert not rep.passed
    assert rep.constants["inf_phi"] == pytest.approx(1.9)
    with pytest.raises(ValidationError, match="inf phi"):
        require_valid_roof(grid)


def test_reference_roof_is_valid(grid):
    rep = validate_roof(grid)
    assert rep.passed
    assert rep.constants["phi_bar"] == pytest.approx(2.5, abs=1e-14)


def test_measure_integrals(grid):
    assert integral_mu_phi(SuspensionObservable.constant(grid)) == pytest.approx(1.0, abs=1e-13)
    # (1/phi_bar) int phi^2/2 dy = (6.25 + 0.125) / 5
    v = SuspensionObservable.from_function(grid, lambda y, u: u + 0 * y)
    assert integral_mu_phi(v) == pytest.approx(1.275, abs=1e-12)


def test_transfer_fixes_constants(grid):
    one = SuspensionObservable.constant(grid)
    for t in (0.3, 2.0, 5.5):
        out = apply_Lt_step(one, t)
        assert masked_sup(grid, out.values - 1.0) < 1e-12


def test_step_matches_exact_enumeration(v_ref):
    exact = apply_Lt_exact(v_ref, 6.0, levels=0)
    step = apply_Lt_step(v_ref, 6.0, levels=0)
    scale = masked_sup(v_ref.grid, exact.values)
    assert masked_sup(v_ref.grid, exact.values - step.values) <= 1e-6 * max(scale, 1.0)


def test_exact_enumeration_refuses_long_times(v_ref):
    with pytest.raises(PreconditionError):
        apply_Lt_exact(v_ref, 20.0)


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 8.0))
def test_transfer_conserves_mass(grid, seed, t):
    v = random_smooth_observable(grid, np.random.default_rng(seed), order=0)
    out = apply_Lt_step(v, t)
    assert integral_mu_phi(out) == pytest.approx(integral_mu_phi(v), abs=1e-9 * (1 + abs(integral_mu_phi(v))))


def test_step_composition_is_consistent(v_ref):
    once = apply_Lt_step(v_ref, 3.0, levels=0)
    twice = apply_Lt_step(apply_Lt_step(v_ref, 1.0, levels=0), 2.0, levels=0)
    assert masked_sup(v_ref.grid, once.values - twice.values) < 1e-12


def test_sampler_reproduces_measure(grid):
    cloud = sample_mu_phi(grid, seed=3, n=200_000)
    assert cloud.y.size == 200_000
    assert np.all(cloud.u < grid.roof(cloud.y))
    # E[u] = 1.275 under mu^phi
    assert cloud.u.mean() == pytest.approx(1.275, abs=5 * cloud.u.std() / np.sqrt(cloud.u.size))
    assert cloud.acceptance_rate == pytest.approx(2.5 / 3.0, abs=0.01)


def test_sampler_is_deterministic(grid):
    a = sample_mu_phi(grid, seed=9, n=1000)
    b = sample_mu_phi(grid, seed=9, n=1000)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.u, b.u)


def test_reference_observable_is_mean_zero_with_margin(v_ref):
    assert abs(integral_mu_phi(v_ref)) < 1e-12
    assert v_ref.margin == 0.25
    g = v_ref.grid
    near = (g.u[None, :] < 0.25) | (g.u[None, :] > g.phi[:, None] - 0.25)
    assert np.max(np.abs(v_ref.values[near & g.mask])) < 1e-12


def test_stack_matches_finite_differences(v_ref):
    g = v_ref.grid
    fd = (v_ref.values[:, 2:] - v_ref.values[:, :-2]) / (2 * g.h)
    assert np.max(np.abs(fd - v_ref.stack[0][:, 1:-1])) < 1e-3 * np.max(np.abs(v_ref.stack[0]))


def test_bad_margin_is_rejected(grid):
    with pytest.raises(PreconditionError, match="margin"):
        build_test_observable(grid, ObservableSpec(margin=1.2))


def test_norm_requires_stack(grid):
    v = SuspensionObservable.from_function(grid, lambda y, u: y + u)
    with pytest.raises(PreconditionError):
        suspension_norm(v, 0.0, 0.5, m=1)


def test_weighted_norm_sup_part(grid):
    v = SuspensionObservable.from_function(grid, lambda y, u: np.ones_like(y + u))
    rep = suspension_norm(v, 0.2, 0.5)
    assert rep.sup_part[0] == pytest.approx(1.0)
    assert rep.holder_part[0] == 0.0


def test_correlation_methods_agree(grid, v_ref):
    w = build_test_observable(grid, ObservableSpec(profile="cos", mean_zero=False))
    quad = correlation(v_ref, w, 3.0)
    mc = correlation(v_ref, w, 3.0, method="monte-carlo", n=200_000, seed=1)
    assert abs(quad.value - mc.value) <= 5 * mc.stderr + 1e-3


def test_correlation_at_zero_is_integral(grid, v_ref):
    w = SuspensionObservable.constant(grid, 2.0)
    assert correlation(v_ref, w, 0.0).value == pytest.approx(0.0, abs=1e-12)
