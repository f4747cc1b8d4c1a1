"""Suspension ``Y^phi``: grids, observables, the semiflow and its transfer operator.

Observables live on a rectangle ``base nodes x [0, u_max]`` with uniform
step ``h``. Only points with ``u < phi(y)`` belong to the suspension; values
above the roof hold the natural continuation of whatever formula produced
them, which keeps the data smooth in ``y`` at fixed ``u`` so that barycentric
interpolation across a branch stays spectrally accurate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .base import BaseGrid
from .errors import PreconditionError, ValidationError
from .quadrature import DEFAULT_ORDER, integral_weights
from .records import CheckRecord, ValidationReport
from .roof import RoofFunction

U_PAD = 6


class SuspensionGrid:
    """Tensor grid of base collocation nodes and uniform fibre heights."""

    def __init__(self, base: BaseGrid, roof: RoofFunction, h: float = 1.0 / 128,
                 order: int = DEFAULT_ORDER, u_top: float | None = None):
        self.base = base
        self.roof = roof
        self.h = float(h)
        self.order = int(order)
        y = base.flat_nodes
        self.phi = roof(y)
        self.phi_pre = roof(base.preimage_points)
        sup = float(max(self.phi.max(), self.phi_pre.max()))
        self.phi_sup = sup if u_top is None else max(sup, float(u_top))
        self.n_u = int(np.ceil(self.phi_sup / self.h)) + U_PAD + 1
        self.u = np.arange(self.n_u) * self.h
        self.mask = self.u[None, :] < self.phi[:, None]
        self.phi_bar = float(np.real(base.integrate(self.phi.reshape(base.nodes.shape))))

    @property
    def model(self):
        return self.base.model

    @property
    def shape(self) -> tuple[int, int]:
        return (self.base.size, self.n_u)

    @cached_property
    def y(self) -> np.ndarray:
        return self.base.flat_nodes

    @cached_property
    def fiber_weights(self) -> np.ndarray:
        """Quadrature rows for ``int_0^{phi(y)} f(y, u) du``, shape (J*N, n_u)."""
        return integral_weights(self.n_u, self.h, self.phi, self.order)

    @cached_property
    def measure_weights(self) -> np.ndarray:
        """Weights ``W`` with ``sum(W * v) = int v dmu^phi``."""
        return self.base.quad.ravel()[:, None] * self.fiber_weights / self.phi_bar

    def sample(self, f: Callable) -> np.ndarray:
        yy, uu = np.meshgrid(self.y, self.u, indexing="ij")
        return np.array(np.broadcast_to(f(yy, uu), self.shape), dtype=complex)

    def refined(self, factor: int = 2) -> "SuspensionGrid":
        return SuspensionGrid(self.base, self.roof, self.h / factor, self.order)


@dataclass(eq=False)
class SuspensionObservable:
    """Grid values of an observable on ``Y^phi`` with optional ``d/du`` stack.

    ``stack[j-1]`` holds ``d^j v / du^j``. ``func`` and ``stack_funcs`` are exact
    vectorised callables when the observable is known in closed form; exact
    transfer operators evaluate through them instead of interpolating.
    """

    grid: SuspensionGrid
    values: np.ndarray
    stack: list = field(default_factory=list)
    delta: float = 0.0
    margin: float | None = None
    func: Callable | None = None
    stack_funcs: list = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid {self.grid.shape}")

    @classmethod
    def from_function(cls, grid: SuspensionGrid, f: Callable, derivs: Sequence[Callable] = (),
                      **kw) -> "SuspensionObservable":
        return cls(grid, grid.sample(f), [grid.sample(d) for d in derivs],
                   func=f, stack_funcs=list(derivs), **kw)

    @classmethod
    def constant(cls, grid: SuspensionGrid, c: complex = 1.0) -> "SuspensionObservable":
        return cls.from_function(grid, lambda y, u: np.full(np.broadcast(y, u).shape, c, dtype=complex),
                                 [lambda y, u: np.zeros(np.broadcast(y, u).shape, dtype=complex)])

    @property
    def order(self) -> int:
        return len(self.stack)

    def level(self, j: int) -> np.ndarray:
        return self.values if j == 0 else self.stack[j - 1]

    def level_func(self, j: int) -> Callable | None:
        if j == 0:
            return self.func
        return self.stack_funcs[j - 1] if j - 1 < len(self.stack_funcs) else None

    def derivative(self) -> "SuspensionObservable":
        """``d/du`` by shifting the stack (requires order >= 1)."""
        if not self.stack:
            raise PreconditionError("no derivative stack; use partial_u(numeric=True)")
        margin = self.margin
        return SuspensionObservable(self.grid, self.stack[0], list(self.stack[1:]), self.delta,
                                    margin, self.stack_funcs[0] if self.stack_funcs else None,
                                    list(self.stack_funcs[1:]), self.label + "'")

    def evaluate(self, y, u, level: int = 0, exact: bool = True) -> np.ndarray:
        """Values at arbitrary points; exact callable if known, else interpolation."""
        f = self.level_func(level)
        if exact and f is not None:
            return np.asarray(f(np.asarray(y, float), np.asarray(u, float)), dtype=complex)
        return interpolate(self.grid, self.level(level), y, u)

    def masked(self, j: int = 0) -> np.ndarray:
        return np.where(self.grid.mask, self.level(j), 0.0)

    def with_values(self, values, stack=None, **kw) -> "SuspensionObservable":
        return replace(self, values=values, stack=list(stack) if stack is not None else [],
                       func=None, stack_funcs=[], **kw)

    def _combine(self, other, op):
        if isinstance(other, SuspensionObservable):
            n = min(self.order, other.order)
            stack = [op(a, b) for a, b in zip(self.stack[:n], other.stack[:n])]
            return self.with_values(op(self.values, other.values), stack)
        return self.with_values(op(self.values, other), [op(s, 0 * other) for s in self.stack])

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return self.with_values(self.values * c, [s * c for s in self.stack])

    __rmul__ = __mul__


def interpolate(grid: SuspensionGrid, values: np.ndarray, y, u, chunk: int = 20000) -> np.ndarray:
    """Barycentric in ``y`` (within the branch of each point), local Lagrange in ``u``."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    y, u = np.broadcast_arrays(y, u)
    shape = y.shape
    y, u = y.ravel(), u.ravel()
    out = np.empty(y.size, dtype=complex)
    base = grid.base
    n = base.n
    per_branch = values.reshape(base.branch_count, n, grid.n_u)
    branch = base.model.branch_of(y)
    for j in np.unique(branch):
        idx = np.nonzero(branch == j)[0]
        for start in range(0, idx.size, chunk):
            sel = idx[start:start + chunk]
            # u-interpolate every node of branch j at each query height, then combine in y
            q = np.broadcast_to(u[sel][None, :], (n, sel.size))
            col = kernels.uniform_interp(per_branch[j], grid.h, np.ascontiguousarray(q), grid.order)
            from .cheb import barycentric_matrix
            bm = barycentric_matrix(base.nodes[j], base.bary, y[sel])
            out[sel] = np.einsum("mn,nm->m", bm, col)
    return out.reshape(shape)


# --------------------------------------------------------------------------
# roof validation and the flow itself


def validate_roof(grid: SuspensionGrid, tol: float = 1e-12) -> ValidationReport:
    """Report ``inf phi``, the Hölder constant w.r.t. ``d(Fy, Fy')``, tail sum and mean."""
    base = grid.base
    model = base.model
    roof = grid.roof
    y = base.nodes
    phi = roof(y)
    # include preimage points: they sample each branch more finely
    phi_all = np.concatenate([phi.ravel(), grid.phi_pre.ravel()])
    inf_phi = float(phi_all.min())
    checks = [CheckRecord("inf_phi_ge_2", inf_phi >= 2.0 - tol, inf_phi, 2.0)]

    const = 0.0
    for j in range(model.branch_count):
        fy = model.forward(y[j])
        d = np.abs(fy[:, None] - fy[None, :])
        off = d > 0
        dphi = np.abs(phi[j][:, None] - phi[j][None, :])
        if off.any():
            const = max(const, float((dphi[off] / d[off] ** model.eta).max()))
    checks.append(CheckRecord("holder_constant_finite", bool(np.isfinite(const)), const, None))

    branch_sup = np.abs(phi).max(axis=1)
    tail_sum = float(np.sum(model.branch_measure * np.exp(roof.tail_weight * branch_sup)))
    checks.append(CheckRecord("exponential_tail_finite", bool(np.isfinite(tail_sum)), tail_sum, None))
    report = ValidationReport(
        subject=f"roof:{roof.name}",
        checks=checks,
        constants={"inf_phi": inf_phi, "sup_phi": float(phi_all.max()), "holder_constant": const,
                   "tail_sum": tail_sum, "phi_bar": grid.phi_bar},
    )
    return report


def require_valid_roof(grid: SuspensionGrid) -> None:
    report = validate_roof(grid)
    if not report.passed:
        raise ValidationError(f"roof {grid.roof.name} invalid: inf phi = "
                              f"{report.constants['inf_phi']:.6g}", report)


@dataclass(frozen=True)
class SuspensionPoint:
    y: float
    u: float


def canonical(model, roof, y, u):
    """Resolve ``(y, phi(y)) ~ (Fy, 0)`` and larger heights; returns (y, u, laps)."""
    y = np.array(y, dtype=float, copy=True)
    u = np.array(u, dtype=float, copy=True)
    laps = np.zeros(y.shape, dtype=np.int64)
    while True:
        phi = roof(y)
        over = u >= phi
        if not over.any():
            return y, u, laps
        u[over] -= phi[over]
        y[over] = model.forward(y[over])
        laps[over] += 1


def flow_points(model, roof, y, u, t):
    """Vectorised ``F_t``: returns canonical images and lap numbers."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be nonnegative")
    return canonical(model, roof, y, np.asarray(u, dtype=float) + t)


def flow_point(model, roof, p: SuspensionPoint, t: float) -> tuple[SuspensionPoint, int]:
    y, u, n = flow_points(model, roof, np.array([p.y]), np.array([p.u]), t)
    return SuspensionPoint(float(y[0]), float(u[0])), int(n[0])


# --------------------------------------------------------------------------
# transfer operator, exact preimage enumeration


def lt_exact_terms(model, roof, y, u, t):
    """Enumerate the nonzero terms of the pointwise preimage formula for ``L_t``.

    Yields ``(index, y', weight, height)`` per lap number ``k``: point
    ``index`` receives ``weight * v(y', height)``. Branches are pruned once
    ``u - t + phi_k(y') >= 0`` since deeper preimages cannot satisfy the window.
    """
    y = np.ravel(np.asarray(y, dtype=float))
    u = np.ravel(np.asarray(u, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), y.shape).ravel()
    idx = np.arange(y.size)
    yk, gk, phik = y, np.ones(y.size), np.zeros(y.size)
    k = 0
    while idx.size:
        height = u[idx] - t[idx] + phik
        phi_here = roof(yk)
        win = (height >= 0) & (height < phi_here)
        if win.any():
            yield k, idx[win], yk[win], gk[win], height[win]
        live = height < 0
        if not live.any():
            return
        idx, yk, gk, phik = idx[live], yk[live], gk[live], phik[live]
        pre = model.preimages(yk)
        wts = model.weights(yk)
        phi_pre = roof(pre)
        nb = pre.shape[0]
        idx = np.tile(idx, nb)
        gk = (wts * gk[None, :]).ravel()
        phik = (phi_pre + phik[None, :]).ravel()
        yk = pre.ravel()
        k += 1


def lt_exact_eval(model, roof, f: Callable, y, u, t) -> np.ndarray:
    """``(L_t f)(y, u)`` for a vectorised callable ``f`` by preimage enumeration."""
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(y, u).shape
    yb, ub = np.broadcast_arrays(y, np.asarray(u, dtype=float))
    out = np.zeros(yb.size, dtype=complex)
    for _, idx, yp, g, height in lt_exact_terms(model, roof, yb, ub, t):
        np.add.at(out, idx, g * f(yp, height))
    return out.reshape(shape)


def lt_exact_callable(model, roof, f: Callable, t: float) -> Callable:
    return lambda y, u: lt_exact_eval(model, roof, f, y, u, t)


def max_lap_count(model, roof, y, u, t) -> int:
    """Largest ``k`` with a nonzero term at any of the points."""
    kmax = 0
    for k, *_ in lt_exact_terms(model, roof, y, u, t):
        kmax = max(kmax, k)
    return kmax


def apply_Lt_exact(v: SuspensionObservable, t: float, t_max_exact: float = 12.0,
                   levels: int | None = None) -> SuspensionObservable:
    """Pointwise ``L_t v`` on the grid by enumerating all preimages.

    Cost grows like ``J**(t/inf phi)``; refused beyond ``t_max_exact``.
    """
    if t > t_max_exact:
        raise PreconditionError(f"t={t} exceeds t_max_exact={t_max_exact}; use apply_Lt_step")
    grid = v.grid
    model, roof = grid.model, grid.roof
    yy, uu = np.meshgrid(grid.y, grid.u, indexing="ij")
    levels = v.order if levels is None else min(levels, v.order)
    outs = []
    funcs = []
    for j in range(levels + 1):
        f = v.level_func(j)
        if f is None:
            lvl = j
            f = lambda y, u, lvl=lvl: interpolate(grid, v.level(lvl), y, u)
        outs.append(lt_exact_eval(model, roof, f, yy, uu, t))
        funcs.append(lt_exact_callable(model, roof, f, t))
    return SuspensionObservable(grid, outs[0], outs[1:], v.delta, None, funcs[0], funcs[1:],
                                f"L_{t:g} {v.label}")


# --------------------------------------------------------------------------
# transfer operator, composition of single steps


def _shift(grid: SuspensionGrid, values: np.ndarray, s0: float) -> np.ndarray:
    """``values(y, u - s0)`` on the grid, columns with ``u < s0`` left undefined (zero)."""
    n_shift = s0 / grid.h
    k = int(round(n_shift))
    out = np.zeros_like(values)
    if abs(n_shift - k) < 1e-9:
        if k == 0:
            return values.copy()
        out[:, k:] = values[:, :-k]
        return out
    start = int(np.ceil(s0 / grid.h - 1e-12))
    q = np.broadcast_to(grid.u[start:] - s0, (values.shape[0], grid.n_u - start))
    out[:, start:] = kernels.uniform_interp(values, grid.h, np.ascontiguousarray(q), grid.order)
    return out


def _step(grid: SuspensionGrid, values: np.ndarray, s0: float) -> np.ndarray:
    """One step ``L_{s0}``, ``s0 <= 1 < inf phi``: shift plus one roof crossing."""
    base = grid.base
    n = base.n
    out = _shift(grid, values, s0)
    low = np.nonzero(grid.u < s0 - 1e-12)[0]
    if low.size == 0:
        return out
    per_branch = values.reshape(base.branch_count, n, grid.n_u)
    acc = np.zeros((base.size, low.size), dtype=complex)
    for j in range(base.branch_count):
        w = base.preimage_interp[j] @ per_branch[j]  # v(psi_j y, u) on the u-grid
        q = grid.u[low][None, :] - s0 + grid.phi_pre[j][:, None]
        acc += base.preimage_weights[j][:, None] * kernels.uniform_interp(
            w, grid.h, np.ascontiguousarray(q), grid.order)
    out[:, low] = acc
    return out


def step_sizes(t: float, step: float) -> list[float]:
    if not 0.0 < step <= 1.0:
        raise ValueError("step must lie in (0, 1]")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return []
    n = int(np.ceil(t / step - 1e-12))
    return [t / n] * n


def apply_Lt_step(v: SuspensionObservable, t: float, step: float = 1.0,
                  levels: int | None = None) -> SuspensionObservable:
    """``L_t v`` by composing ``ceil(t/step)`` single-crossing steps on the grid.

    The derivative stack (up to ``levels``) is propagated alongside, which is
    the commutation ``d/du L_t = L_t d/du`` valid on good support.
    """
    grid = v.grid
    levels = v.order if levels is None else min(levels, v.order)
    arrays = [v.level(j) for j in range(levels + 1)]
    for s0 in step_sizes(t, step):
        arrays = [_step(grid, a, s0) for a in arrays]
    return SuspensionObservable(grid, arrays[0], arrays[1:], v.delta, None, label=f"L_{t:g} {v.label}")


class StepPropagator:
    """Incremental ``L_t v`` along an increasing time grid (reuses previous state)."""

    def __init__(self, v: SuspensionObservable, step: float = 1.0, levels: int | None = None):
        self.grid = v.grid
        self.step = step
        levels = v.order if levels is None else min(levels, v.order)
        self.arrays = [v.level(j).copy() for j in range(levels + 1)]
        self.t = 0.0
        self.template = v

    def advance_to(self, t: float) -> SuspensionObservable:
        if t < self.t - 1e-12:
            raise ValueError("propagator only moves forward")
        for s0 in step_sizes(t - self.t, self.step) if t > self.t else []:
            self.arrays = [_step(self.grid, a, s0) for a in self.arrays]
        self.t = t
        return SuspensionObservable(self.grid, self.arrays[0].copy(),
                                    [a.copy() for a in self.arrays[1:]], self.template.delta)


# --------------------------------------------------------------------------
# norms, derivatives, integrals


@dataclass
class NormReportSuspension:
    sup_part: list
    holder_part: list
    delta: float
    eta: float

    @property
    def per_derivative(self) -> list:
        return [a + b for a, b in zip(self.sup_part, self.holder_part)]

    @property
    def total(self) -> float:
        return float(max(self.per_derivative))


def level_norm(grid: SuspensionGrid, values: np.ndarray, delta: float, eta: float) -> tuple[float, float]:
    """Weighted sup and Hölder parts over same-branch, same-height node pairs."""
    weight = np.exp(-delta * grid.u)
    mask = grid.mask
    sup = float((np.abs(np.where(mask, values, 0.0)) * weight[None, :]).max())
    base = grid.base
    n = base.n
    semi = 0.0
    for j in range(base.branch_count):
        rows = slice(j * n, (j + 1) * n)
        q, _ = kernels.holder_pairs_max(values[rows], base.nodes[j], eta, weight,
                                        np.ascontiguousarray(mask[rows]))
        semi = max(semi, q)
    return sup, float(semi)


def suspension_norm(v: SuspensionObservable, delta: float, eta: float, m: int = 0) -> NormReportSuspension:
    """Discrete ``||v||_{delta, eta, m}`` (lower-bound estimator)."""
    if m > v.order:
        raise PreconditionError(f"derivative stack has order {v.order} < m={m}")
    sups, semis = [], []
    for j in range(m + 1):
        a, b = level_norm(v.grid, v.level(j), delta, eta)
        sups.append(a)
        semis.append(b)
    return NormReportSuspension(sups, semis, delta, eta)


def fd_derivative(grid: SuspensionGrid, values: np.ndarray, order: int = 4) -> np.ndarray:
    """Finite-difference ``d/du`` along fibres; one-sided stencils at grid ends."""
    h = grid.h
    d = np.zeros_like(values)
    if order == 2:
        d[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2 * h)
        d[:, 0] = (-3 * values[:, 0] + 4 * values[:, 1] - values[:, 2]) / (2 * h)
        d[:, -1] = (3 * values[:, -1] - 4 * values[:, -2] + values[:, -3]) / (2 * h)
        return d
    if order != 4:
        raise ValueError("order must be 2 or 4")
    d[:, 2:-2] = (values[:, :-4] - 8 * values[:, 1:-3] + 8 * values[:, 3:-1] - values[:, 4:]) / (12 * h)
    fwd = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    for i in (0, 1):
        d[:, i] = values[:, i:i + 5] @ fwd
        d[:, -1 - i] = -(values[:, ::-1][:, i:i + 5] @ fwd)
    return d


def partial_u(v: SuspensionObservable, numeric: bool = False, fd_order: int = 4) -> SuspensionObservable:
    """``d/du v``: shifts the stack, or differentiates numerically."""
    if v.stack and not numeric:
        return v.derivative()
    margin = None if v.margin is None else max(v.margin - 2 * v.grid.h, 0.0)
    return SuspensionObservable(v.grid, fd_derivative(v.grid, v.values, fd_order), [], v.delta,
                                margin, label=v.label + "'")


def integral_mu_phi(v: SuspensionObservable | np.ndarray, grid: SuspensionGrid | None = None) -> complex:
    """``(1/phi_bar) int_Y int_0^{phi(y)} v du dmu``."""
    if isinstance(v, SuspensionObservable):
        grid, values = v.grid, v.values
    else:
        values = v
    return complex(np.sum(grid.measure_weights * values))


# --------------------------------------------------------------------------
# sampling and correlations


@dataclass
class PointCloud:
    """Samples of ``mu^phi``: arrays of base points and heights."""

    y: np.ndarray
    u: np.ndarray
    proposed: int

    @property
    def acceptance_rate(self) -> float:
        return self.y.size / self.proposed

    def points(self) -> list[SuspensionPoint]:
        return [SuspensionPoint(float(a), float(b)) for a, b in zip(self.y, self.u)]


def sample_mu_phi(grid: SuspensionGrid, seed: int, n: int, batch: int = 1 << 18) -> PointCloud:
    """Rejection sampler: ``y ~ mu`` (Lebesgue on builtin models), ``u ~ U[0, sup phi]``."""
    model = grid.model
    y0, y1 = model.domain
    if not np.allclose(model.density(np.linspace(y0, y1, 7, endpoint=False)), 1.0):
        raise PreconditionError("sampler needs a model with Lebesgue invariant measure")
    rng = np.random.default_rng(seed)
    top = grid.phi_sup
    ys, us, proposed, have = [], [], 0, 0
    while have < n:
        y = rng.uniform(y0, y1, batch)
        u = rng.uniform(0.0, top, batch)
        ok = u < grid.roof(y)
        proposed += batch
        ys.append(y[ok])
        us.append(u[ok])
        have += int(ok.sum())
    y = np.concatenate(ys)
    u = np.concatenate(us)
    # count proposals up to the n-th acceptance so the rate is exact
    last = n
    extra = have - last
    return PointCloud(y[:n], u[:n], proposed - int(round(extra * top / grid.phi_bar)))


@dataclass
class CorrelationResult:
    value: complex
    stderr: float
    method: str
    n: int = 0


def correlation(v: SuspensionObservable, w: SuspensionObservable, t: float, method: str = "quadrature",
                n: int = 10**6, seed: int = 0, step: float = 1.0) -> CorrelationResult:
    """``rho(t) = int v * (w o F_t) dmu^phi``."""
    grid = v.grid
    if method in ("quadrature", "quadrature-via-Lt"):
        lv = apply_Lt_step(v, t, step, levels=0) if t > 0 else v
        return CorrelationResult(integral_mu_phi(lv.values * w.values, grid), 0.0, "quadrature")
    if method != "monte-carlo":
        raise ValueError(f"unknown method {method!r}")
    cloud = sample_mu_phi(grid, seed, n)
    y1, u1, _ = flow_points(grid.model, grid.roof, cloud.y, cloud.u, t)
    prod = v.evaluate(cloud.y, cloud.u) * w.evaluate(y1, u1)
    stderr = float(np.sqrt(np.var(prod.real) + np.var(prod.imag)) / np.sqrt(n))
    return CorrelationResult(complex(prod.mean()), stderr, "monte-carlo", n)


# --------------------------------------------------------------------------
# test observables


def _sin_power_terms(p: int):
    """Cosine expansion of ``sin(x)^(2p)`` as (frequency, coefficient) pairs."""
    from math import comb

    terms = [(0, comb(2 * p, p) / 4.0 ** p)]
    for k in range(1, p + 1):
        terms.append((2 * k, 2 * (-1) ** k * comb(2 * p, p - k) / 4.0 ** p))
    return terms


def bump(r: float, top: float, p: int = 3) -> list[Callable]:
    """``sin(pi (u-r)/(top-r))**(2p)`` on ``[r, top]`` and its derivatives up to order ``2p-1``.

    Returns callables ``[b, b', b'', ...]`` of length ``2p``.
    """
    omega = np.pi / (top - r)
    terms = _sin_power_terms(p)

    def make(j):
        def f(u):
            u = np.asarray(u, dtype=float)
            inside = (u >= r) & (u <= top)
            th = omega * (u - r)
            acc = np.zeros(u.shape)
            for freq, c in terms:
                if freq == 0:
                    if j == 0:
                        acc = acc + c
                    continue
                acc = acc + c * (freq * omega) ** j * np.cos(freq * th + j * np.pi / 2)
            return np.where(inside, acc, 0.0)
        return f

    return [make(j) for j in range(2 * p)]


PROFILES: dict[str, Callable] = {
    "one": lambda y: np.ones_like(y),
    "cos": lambda y: np.cos(2 * np.pi * y),
    "sin": lambda y: np.sin(2 * np.pi * y),
    "mixed": lambda y: np.cos(2 * np.pi * y) + 0.5 * np.sin(4 * np.pi * y) + 0.25 * y,
}

FLOW_PROFILES = ("bump", "bump_phase", "bump_derivative")


@dataclass
class ObservableSpec:
    """Recipe for a good-support test observable ``bump(u) * profile(y)``.

    ``flow_profile``: ``bump`` (plain), ``bump_phase`` (times ``exp(i pi u)``),
    ``bump_derivative`` (the ``u``-derivative of the bump; mean zero by itself).
    """

    margin: float = 0.25
    profile: str = "mixed"
    flow_profile: str = "bump"
    order: int = 4
    mean_zero: bool = True
    smoothness: int = 4
    amplitude: float = 1.0


def _product_rule(a_derivs, b_derivs, j):
    from math import comb

    return lambda u: sum(comb(j, i) * a_derivs[i](u) * b_derivs[j - i](u) for i in range(j + 1))


def build_test_observable(grid: SuspensionGrid, spec: ObservableSpec | None = None) -> SuspensionObservable:
    """Good-support observable with an analytic ``d/du`` stack of order ``spec.order``.

    The mean-zero option removes the ``mu``-mean of the base profile, which
    keeps the support margin intact (subtracting a constant would not).
    """
    spec = spec or ObservableSpec()
    if not 0.0 < spec.margin < 1.0:
        raise PreconditionError("margin r must lie in (0, 1)")
    if spec.profile not in PROFILES:
        raise ValueError(f"unknown profile {spec.profile!r}")
    top = 2.0 - spec.margin
    extra = 1 if spec.flow_profile == "bump_derivative" else 0
    p = max(spec.smoothness, (spec.order + extra + 2) // 2)
    b = bump(spec.margin, top, p)
    if spec.flow_profile == "bump":
        flow = b[:spec.order + 1]
    elif spec.flow_profile == "bump_derivative":
        flow = b[1:spec.order + 2]
    elif spec.flow_profile == "bump_phase":
        ph = [lambda u, j=j: (1j * np.pi) ** j * np.exp(1j * np.pi * np.asarray(u, float))
              for j in range(spec.order + 1)]
        flow = [_product_rule(b, ph, j) for j in range(spec.order + 1)]
    else:
        raise ValueError(f"unknown flow profile {spec.flow_profile!r}")

    prof = PROFILES[spec.profile]
    shift = 0.0
    if spec.mean_zero:
        from .quadrature import composite_gauss

        x, w = composite_gauss(0.0, 2.0, 256)
        if abs(w @ flow[0](x)) > 1e-13:
            shift = complex(grid.base.integrate(prof(grid.base.nodes)))

    def base_fn(y):
        return spec.amplitude * (prof(np.asarray(y, float)) - shift)

    funcs = [lambda y, u, f=f: base_fn(y) * f(u) for f in flow]
    v = SuspensionObservable.from_function(grid, funcs[0], funcs[1:], delta=0.0, margin=spec.margin,
                                           label=f"{spec.profile}*{spec.flow_profile}")
    if spec.mean_zero:
        mean = integral_mu_phi(v)
        if abs(mean) > 1e-12:
            raise PreconditionError(f"mean-zero projection failed ({abs(mean):.2e})")
    return v


def random_smooth_observable(grid: SuspensionGrid, rng: np.random.Generator, margin: float = 0.2,
                             order: int = 2, good_support: bool = True) -> SuspensionObservable:
    """Random trigonometric profile in ``y`` times a random mixture of bumps in ``u``.

    With ``good_support=False`` the ``u``-profile is a smooth polynomial over
    the whole fibre instead (no margin).
    """
    cy = rng.normal(size=4) + 1j * rng.normal(size=4)
    cu = rng.normal(size=3)

    def prof(y):
        y = np.asarray(y, float)
        return (cy[0] + cy[1] * np.cos(2 * np.pi * y) + cy[2] * np.sin(2 * np.pi * y)
                + cy[3] * np.cos(4 * np.pi * y))

    if good_support:
        p = max(3, (order + 3) // 2)
        pieces = [bump(margin, 2.0 - margin, p), bump(margin, 1.0, p), bump(1.0, 2.0 - margin, p)]

        def flow_j(j):
            return lambda u: sum(c * b[j](u) for c, b in zip(cu, pieces))
    else:
        def flow_j(j):
            coeffs = np.polynomial.polynomial.polyder([1.0, cu[0], cu[1] / 2, cu[2] / 6], j)
            return lambda u: np.polynomial.polynomial.polyval(np.asarray(u, float), coeffs)

    funcs = [lambda y, u, j=j: prof(y) * flow_j(j)(u) for j in range(order + 1)]
    return SuspensionObservable.from_function(grid, funcs[0], funcs[1:],
                                              margin=margin if good_support else None, label="random")
