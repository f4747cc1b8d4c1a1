"""Chebyshev-Gauss-Lobatto collocation helpers.

Nodes, barycentric interpolation matrices and Clenshaw-Curtis weights on an
arbitrary interval ``[lo, hi]``.
"""

from __future__ import annotations

import numpy as np


def cgl_nodes(n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """Return ``n`` Chebyshev-Gauss-Lobatto nodes on ``[lo, hi]`` in increasing order."""
    if n < 2:
        raise ValueError("need at least two Lobatto nodes")
    k = np.arange(n)
    x = -np.cos(np.pi * k / (n - 1))
    return lo + (hi - lo) * (x + 1.0) / 2.0


def cgl_weights(n: int) -> np.ndarray:
    """Barycentric weights for CGL nodes (scale invariant, so interval-free)."""
    w = np.ones(n)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    # nodes are increasing, i.e. x_k = -cos(pi k/(n-1)); this flips the sign
    # pattern relative to the decreasing convention but the ratio is unchanged
    return w


def barycentric_matrix(nodes: np.ndarray, weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix ``B`` with ``B @ f(nodes) = p(x)``, ``p`` the polynomial interpolant.

    Rows for points coinciding with a node reduce to the unit vector, so the
    interpolant reproduces nodal values exactly.
    """
    x = np.asarray(x, dtype=float)
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    hit = exact.any(axis=1)
    diff[exact] = 1.0
    terms = weights[None, :] / diff
    mat = terms / terms.sum(axis=1, keepdims=True)
    if hit.any():
        mat[hit] = exact[hit].astype(float)
    return mat


def clenshaw_curtis_weights(n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """Clenshaw-Curtis quadrature weights for the CGL nodes of :func:`cgl_nodes`."""
    m = n - 1
    theta = np.pi * np.arange(n) / m
    w = np.zeros(n)
    v = np.ones(n - 2)
    if m % 2 == 0:
        w[0] = w[-1] = 1.0 / (m * m - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
        v -= np.cos(m * theta[1:-1]) / (m * m - 1)
    else:
        w[0] = w[-1] = 1.0 / (m * m)
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / m
    return w * (hi - lo) / 2.0


def diff_matrix(nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Spectral differentiation matrix on arbitrary nodes."""
    d = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(d, 1.0)
    mat = (weights[None, :] / weights[:, None]) / d
    np.fill_diagonal(mat, 0.0)
    np.fill_diagonal(mat, -mat.sum(axis=1))
    return mat
