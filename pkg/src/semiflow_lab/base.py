"""Collocation of the base map: observables on ``Y``, Hölder norms, ``R0`` and its twist."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from . import cheb, kernels
from .errors import RangeError
from .models import MarkovModel
from .records import CheckRecord, ValidationReport
from .roof import RoofFunction

EXPONENT_BUDGET = 700.0


class BaseGrid:
    """Per-branch Chebyshev-Gauss-Lobatto collocation of ``Y``.

    Node ordering is branch-major, node-minor; every dense operator built on
    this grid uses the same ordering.
    """

    def __init__(self, model: MarkovModel, n: int = 64):
        self.model = model
        self.n = int(n)
        edges = model.edges
        self.nodes = np.stack([cheb.cgl_nodes(self.n, edges[j], edges[j + 1])
                               for j in range(model.branch_count)])
        self.bary = cheb.cgl_weights(self.n)
        cc = np.stack([cheb.clenshaw_curtis_weights(self.n, edges[j], edges[j + 1])
                       for j in range(model.branch_count)])
        self.quad = cc * model.density(self.nodes)

    @property
    def branch_count(self) -> int:
        return self.model.branch_count

    @property
    def size(self) -> int:
        return self.branch_count * self.n

    @cached_property
    def flat_nodes(self) -> np.ndarray:
        return self.nodes.ravel()

    @cached_property
    def preimage_points(self) -> np.ndarray:
        """``psi_j(y)`` for every branch ``j`` and flat node ``y``; shape (J, J*N)."""
        return self.model.preimages(self.flat_nodes)

    @cached_property
    def preimage_weights(self) -> np.ndarray:
        """``g(psi_j y)`` at flat nodes; shape (J, J*N)."""
        return self.model.weights(self.flat_nodes)

    @cached_property
    def preimage_interp(self) -> np.ndarray:
        """Barycentric rows evaluating branch ``j`` data at ``psi_j(y)``; shape (J, J*N, N)."""
        return np.stack([
            cheb.barycentric_matrix(self.nodes[j], self.bary, self.preimage_points[j])
            for j in range(self.branch_count)
        ])

    def interp_matrix(self, y) -> np.ndarray:
        """Dense matrix (len(y), J*N) evaluating the branchwise interpolant at ``y``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros((y.size, self.size))
        branch = self.model.branch_of(y)
        for j in np.unique(branch):
            rows = branch == j
            out[np.ix_(rows, np.arange(j * self.n, (j + 1) * self.n))] = \
                cheb.barycentric_matrix(self.nodes[j], self.bary, y[rows])
        return out

    def integrate(self, values) -> complex:
        """``int_Y v dmu`` for nodal values of shape (J, N, ...)."""
        values = np.asarray(values)
        return np.tensordot(self.quad, values, axes=([0, 1], [0, 1]))


@dataclass(eq=False)
class ObservableY:
    """Complex nodal values on a :class:`BaseGrid`, shape (J, N)."""

    grid: BaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(
            self.grid.branch_count, self.grid.n)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("observable values must be finite")

    @classmethod
    def from_function(cls, grid: BaseGrid, f: Callable) -> "ObservableY":
        return cls(grid, np.broadcast_to(f(grid.nodes), grid.nodes.shape))

    @classmethod
    def constant(cls, grid: BaseGrid, c: complex = 1.0) -> "ObservableY":
        return cls(grid, np.full(grid.nodes.shape, c, dtype=complex))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return (self.grid.interp_matrix(y.ravel()) @ self.flat).reshape(y.shape)

    def integral(self) -> complex:
        return complex(self.grid.integrate(self.values))

    def _new(self, values):
        return ObservableY(self.grid, values)

    def __add__(self, other):
        return self._new(self.values + _vals(other))

    def __sub__(self, other):
        return self._new(self.values - _vals(other))

    def __mul__(self, c):
        return self._new(self.values * _vals(c))

    __rmul__ = __mul__


def _vals(x):
    return x.values if isinstance(x, ObservableY) else x


@dataclass
class HolderNormReport:
    """Discrete Hölder norm; the seminorm is a lower bound of the true one."""

    sup_norm: float
    holder_seminorm: float
    eta: float
    pair_count: int

    @property
    def total(self) -> float:
        return self.sup_norm + self.holder_seminorm


@dataclass(eq=False)
class OperatorMatrix:
    """Dense collocation matrix of ``R0(e^{-s phi} .)`` acting on flat nodal values."""

    matrix: np.ndarray
    s: complex
    metadata: dict = field(default_factory=dict)

    def __matmul__(self, other):
        if isinstance(other, ObservableY):
            return ObservableY(other.grid, self.matrix @ other.flat)
        return self.matrix @ other


def _twist_factors(grid: BaseGrid, roof: RoofFunction, s: complex) -> np.ndarray:
    """``g(psi_j y) * exp(-s phi(psi_j y))`` at flat nodes, shape (J, J*N)."""
    phi = roof(grid.preimage_points)
    exponent = -np.real(s) * phi
    if exponent.max() > EXPONENT_BUDGET:
        raise RangeError(f"exp(-s*phi) overflows for s={s}: exponent {exponent.max():.1f}")
    return grid.preimage_weights * np.exp(-complex(s) * phi)


def apply_R0(grid: BaseGrid, v: ObservableY) -> ObservableY:
    """``(R0 v)(y) = sum_j g(psi_j y) v(psi_j y)``."""
    out = np.zeros(grid.size, dtype=complex)
    vals = v.values
    for j in range(grid.branch_count):
        out += grid.preimage_weights[j] * (grid.preimage_interp[j] @ vals[j])
    return ObservableY(grid, out)


def apply_twisted_R0(grid: BaseGrid, roof: RoofFunction, s: complex, v: ObservableY) -> ObservableY:
    """``R0(e^{-s phi} v)``; identical to :func:`apply_R0` at ``s = 0``."""
    if s == 0:
        return apply_R0(grid, v)
    factors = _twist_factors(grid, roof, s)
    out = np.zeros(grid.size, dtype=complex)
    for j in range(grid.branch_count):
        out += factors[j] * (grid.preimage_interp[j] @ v.values[j])
    return ObservableY(grid, out)


def assemble_twisted_matrix(grid: BaseGrid, roof: RoofFunction, s: complex) -> OperatorMatrix:
    n = grid.n
    factors = (grid.preimage_weights.astype(complex) if s == 0
               else _twist_factors(grid, roof, s))
    mat = np.zeros((grid.size, grid.size), dtype=complex)
    for j in range(grid.branch_count):
        mat[:, j * n:(j + 1) * n] = factors[j][:, None] * grid.preimage_interp[j]
    return OperatorMatrix(mat, complex(s), {"branch_count": grid.branch_count, "nodes_per_branch": n})


def holder_norm_Y(v: ObservableY, eta: float) -> HolderNormReport:
    """Sup norm plus the max same-branch node-pair Hölder quotient."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    grid = v.grid
    semi, pairs = 0.0, 0
    ones = np.ones(1)
    mask = np.ones((grid.n, 1), dtype=bool)
    for j in range(grid.branch_count):
        q, c = kernels.holder_pairs_max(v.values[j][:, None], grid.nodes[j], eta, ones, mask)
        semi = max(semi, q)
        pairs += c
    return HolderNormReport(float(np.abs(v.values).max()), float(semi), eta, pairs)


def mean_project_Y(v: ObservableY) -> ObservableY:
    """``v - int_Y v dmu``."""
    return v - v.integral()


def validate_gibbs_markov(grid: BaseGrid, tol: float = 1e-12) -> ValidationReport:
    """Check the full-branch Gibbs-Markov invariants at collocation nodes.

    Reports measured distortion constant ``C_gm``, empirical expansion and the
    partition-mass defect. The truncation tail is added to the tolerance of the
    partition-of-unity and mass checks.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    model = grid.model
    tail = model.truncation_tail_mass
    y = grid.flat_nodes
    g = grid.preimage_weights
    checks = []

    pou_defect = float(np.abs(g.sum(axis=0) - 1.0).max())
    checks.append(CheckRecord("partition_of_unity", pou_defect <= tol + tail,
                              pou_defect, tol + tail))

    mu = model.branch_measure
    c_sup = float((g / mu[:, None]).max())
    dy = np.abs(y[:, None] - y[None, :])
    off = dy > 0
    c_holder = 0.0
    ratio_max = 0.0
    for j in range(model.branch_count):
        dg = np.abs(g[j][:, None] - g[j][None, :])
        c_holder = max(c_holder, float((dg[off] / (mu[j] * dy[off] ** model.eta)).max()))
        pre = grid.preimage_points[j]
        dpre = np.abs(pre[:, None] - pre[None, :])
        ratio_max = max(ratio_max, float((dpre[off] / dy[off]).max()))
    c_gm = max(c_sup, c_holder)
    checks.append(CheckRecord("gm_constants_finite", bool(np.isfinite(c_gm)), c_gm, None))

    lam_emp = 1.0 / ratio_max
    # node differences lose ~1e-11 relative accuracy on short branches
    contraction_ok = ratio_max <= (1.0 + 1e-8) / model.expansion and lam_emp > 1.0
    checks.append(CheckRecord("inverse_branch_contraction", bool(contraction_ok),
                              ratio_max, 1.0 / model.expansion))

    mass_defect = float(abs(mu.sum() - 1.0))
    mass_ok = abs(mass_defect - tail) <= tol and tail <= model.tail_bound
    checks.append(CheckRecord("partition_mass", bool(mass_ok), mass_defect, tail + tol,
                              detail=f"truncation tail {tail:.3e}"))

    return ValidationReport(
        subject=f"model:{model.name}",
        checks=checks,
        constants={
            "C_gm": c_gm,
            "lambda_emp": lam_emp,
            "partition_of_unity_defect": pou_defect,
            "partition_mass_defect": mass_defect,
            "truncation_tail_mass": tail,
        },
    )
