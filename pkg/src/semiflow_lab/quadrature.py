"""Quadrature on uniform grids ``u_k = k*h`` and Gauss-Legendre panels.

Integrals of grid data integrate the piecewise local Lagrange interpolant
(the same interpolant used for off-grid evaluation), panel by panel.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ._kernels_py import lagrange_weights, stencil_start

DEFAULT_ORDER = 6


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def composite_gauss(a: float, b: float, per_unit: int = 64, panel_points: int = 16):
    """Composite Gauss-Legendre rule on ``[a, b]`` with about ``per_unit`` nodes per unit length."""
    length = b - a
    if length <= 0:
        return np.zeros(0), np.zeros(0)
    panels = max(1, int(np.ceil(length * per_unit / panel_points)))
    x0, w0 = gauss_legendre(panel_points)
    edges = np.linspace(a, b, panels + 1)
    width = np.diff(edges)
    x = (edges[:-1, None] + width[:, None] * x0[None, :]).ravel()
    w = (width[:, None] * w0[None, :]).ravel()
    return x, w


def _partial_panel(k: np.ndarray, a: np.ndarray, b: np.ndarray, h: float,
                   n_points: int, order: int):
    """Stencil start and weights integrating the panel-``k`` interpolant over ``[a, b]``."""
    gx, gw = gauss_legendre(order // 2 + 1)
    centre = (k + 0.5) * h
    i0 = stencil_start(np.asarray(centre, dtype=float), h, n_points, order)
    q = a[:, None] + (b - a)[:, None] * gx[None, :]
    lw = lagrange_weights(q, h, np.broadcast_to(i0[:, None], q.shape), order)
    w = np.einsum("mg,mgk->mk", (b - a)[:, None] * gw[None, :], lw)
    return i0, w


@lru_cache(maxsize=32)
def _cumulative(n_points: int, h: float, order: int) -> np.ndarray:
    k = np.arange(n_points - 1)
    i0, w = _partial_panel(k, k * h, (k + 1) * h, h, n_points, order)
    panel = np.zeros((n_points - 1, n_points))
    rows = np.repeat(k, order)
    np.add.at(panel, (rows, (i0[:, None] + np.arange(order)).ravel()), w.ravel())
    cum = np.zeros((n_points, n_points))
    cum[1:] = np.cumsum(panel, axis=0)
    cum.setflags(write=False)
    return cum


def cumulative_weights(n_points: int, h: float, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Matrix ``C`` with ``(C @ f)[k] ~ int_0^{u_k} f``."""
    return _cumulative(int(n_points), float(h), int(order))


def integral_weights(n_points: int, h: float, upper, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Rows of weights for ``int_0^{b} f`` at each ``b`` in ``upper``; shape (len(upper), n_points)."""
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if upper.max() > (n_points - 1) * h + 1e-12:
        raise ValueError("upper limit beyond grid")
    cum = cumulative_weights(n_points, h, order)
    k = np.minimum(np.floor(upper / h).astype(np.int64), n_points - 2)
    out = cum[k].copy()
    i0, w = _partial_panel(k, k * h, upper, h, n_points, order)
    rows = np.repeat(np.arange(len(upper)), order)
    np.add.at(out, (rows, (i0[:, None] + np.arange(order)).ravel()), w.ravel())
    return out
