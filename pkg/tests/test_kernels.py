import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from semiflow_lab import _kernels_py, kernels

try:
    from semiflow_lab import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@given(st.integers(min_value=0, max_value=5), st.floats(min_value=0.0, max_value=0.99))
def test_local_lagrange_reproduces_low_degree(deg, frac):
    h = 0.125
    u = np.arange(20) * h
    q = np.array([[frac * 19 * h]])
    out = _kernels_py.uniform_interp((u ** deg)[None, :], h, q, order=6)
    assert out[0, 0] == pytest.approx(q[0, 0] ** deg, abs=1e-12)


def test_interp_on_grid_points_is_exact():
    rng = np.random.default_rng(1)
    vals = rng.normal(size=(3, 30))
    q = np.tile(np.arange(30) * 0.1, (3, 1))
    assert np.allclose(_kernels_py.uniform_interp(vals, 0.1, q), vals, atol=1e-13)


def test_holder_pairs_of_linear_function():
    nodes = np.linspace(0.0, 1.0, 9)
    vals = nodes[:, None] * np.ones((1, 2))
    best, count = _kernels_py.holder_pairs_max(vals, nodes, 0.5, np.ones(2), np.ones((9, 2), bool))
    assert best == pytest.approx(1.0)
    assert count == 2 * 36


def test_holder_pairs_respects_mask():
    nodes = np.array([0.0, 0.1, 1.0])
    vals = np.array([[0.0], [0.0], [5.0]])
    mask = np.array([[True], [True], [False]])
    best, count = _kernels_py.holder_pairs_max(vals, nodes, 0.5, np.ones(1), mask)
    assert best == 0.0 and count == 1


@needs_compiled
@given(arrays(np.float64, (4, 25), elements=st.floats(-10, 10)),
       arrays(np.float64, (4, 7), elements=st.floats(0.0, 2.4)))
def test_compiled_interp_matches_reference(values, q):
    ref = _kernels_py.uniform_interp(values, 0.1, q)
    out = compiled.uniform_interp(values.astype(complex), 0.1, q, 6)
    assert np.allclose(out, ref, rtol=0, atol=1e-12)


@needs_compiled
@given(arrays(np.float64, (12, 5), elements=st.floats(-3, 3)), st.floats(0.05, 0.95))
def test_compiled_holder_matches_reference(values, eta):
    nodes = np.sort(np.random.default_rng(0).random(12)) + np.arange(12)
    weight = np.linspace(1.0, 0.5, 5)
    mask = np.ones((12, 5), dtype=bool)
    mask[3, 2] = False
    ref = _kernels_py.holder_pairs_max(values.astype(complex), nodes, eta, weight, mask)
    out = compiled.holder_pairs_max(values.astype(complex), nodes, eta, weight, mask)
    assert out[1] == ref[1]
    assert out[0] == pytest.approx(ref[0], rel=1e-12, abs=1e-15)


def test_fallback_can_be_forced():
    out = subprocess.run([sys.executable, "-c", "from semiflow_lab import kernels; print(kernels.BACKEND)"],
                         env={**os.environ, "SEMIFLOW_LAB_PURE": "1"},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
