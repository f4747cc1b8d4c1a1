"""Pure-numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` mirrors them loop for loop.
"""

from __future__ import annotations

import numpy as np


def stencil_start(q: np.ndarray, h: float, n_points: int, order: int) -> np.ndarray:
    """Left index of the ``order``-point stencil centred on each position."""
    i0 = np.floor(q / h).astype(np.int64) - (order // 2 - 1)
    return np.clip(i0, 0, n_points - order)


def lagrange_weights(q: np.ndarray, h: float, i0: np.ndarray, order: int) -> np.ndarray:
    """Lagrange basis weights at ``q`` for the uniform stencil starting at ``i0``."""
    x = q / h - i0  # position in stencil units
    w = np.ones(q.shape + (order,))
    for k in range(order):
        for m in range(order):
            if m != k:
                w[..., k] *= (x - m) / (k - m)
    return w


def uniform_interp(values: np.ndarray, h: float, q: np.ndarray, order: int = 6) -> np.ndarray:
    """Row-wise local Lagrange interpolation on the uniform grid ``k*h``.

    ``values`` has shape (R, K); ``q`` has shape (R, M) and holds the query
    positions for each row. Returns an (R, M) array.
    """
    values = np.asarray(values)
    q = np.asarray(q, dtype=float)
    n_rows, n_points = values.shape
    i0 = stencil_start(q, h, n_points, order)
    w = lagrange_weights(q, h, i0, order)
    rows = np.arange(n_rows)[:, None, None]
    idx = i0[..., None] + np.arange(order)
    return np.einsum("rmk,rmk->rm", values[rows, idx], w)


def holder_pairs_max(values: np.ndarray, nodes: np.ndarray, eta: float,
                     col_weight: np.ndarray, mask: np.ndarray) -> tuple[float, int]:
    """Max over node pairs ``i < j`` and columns ``c`` of the weighted Hölder quotient.

    quotient = col_weight[c] * |v[i,c] - v[j,c]| / |y_i - y_j|**eta, counted
    only where both ``mask[i,c]`` and ``mask[j,c]`` hold. Returns the maximum
    and the number of admissible (pair, column) combinations.
    """
    n = len(nodes)
    iu, ju = np.triu_indices(n, k=1)
    dist = np.abs(nodes[iu] - nodes[ju]) ** eta
    best = 0.0
    count = 0
    chunk = max(1, 2_000_000 // max(values.shape[1], 1))
    for start in range(0, len(iu), chunk):
        a = iu[start:start + chunk]
        b = ju[start:start + chunk]
        ok = mask[a] & mask[b]
        q = np.abs(values[a] - values[b]) * col_weight[None, :] / dist[start:start + chunk, None]
        q = np.where(ok, q, 0.0)
        count += int(ok.sum())
        if q.size:
            best = max(best, float(q.max()))
    return best, count
