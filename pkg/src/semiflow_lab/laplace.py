"""Time/frequency passage for the semiflow transfer operator.

Laplace transforms of ``L_t v`` by time quadrature of step-composed
propagation, Bromwich inversion of the assembled ``L(s) v``, the
integration-by-parts representation, decay-rate fitting and the
flow-derivative commutation check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .quadrature import integral_weights
from .renewal import RenewalOperators
from .suspension import (SuspensionGrid, SuspensionObservable, StepPropagator, fd_derivative,
                         integral_mu_phi, level_norm)

MEAN_ZERO_TOL = 1e-10


# ----------------------------------------------------------------------------
# forward transform


@dataclass
class LaplaceSamples:
    """``int_0^T e^{-st} L_t v dt`` for several ``s`` from one propagation."""

    s_values: list
    values: list
    t_max: float
    dt: float
    sup_norm: float
    tail_bounds: list

    def observable(self, grid: SuspensionGrid, i: int = 0) -> SuspensionObservable:
        return SuspensionObservable(grid, self.values[i], label=f"laplace({self.s_values[i]:g})")


def default_horizon(a: float, target: float = 1e-10, cap: float = 80.0) -> float:
    """Smallest ``T`` with ``e^{-aT} / a <= target`` (capped)."""
    return float(min(cap, np.log(1.0 / (a * target)) / a))


def laplace_of_Lt(v: SuspensionObservable, s, t_max: float | None = None, dt: float = 1.0 / 32,
                  window: slice | None = None) -> LaplaceSamples:
    """Composite quadrature of ``e^{-st} L_t v`` on a uniform ``t``-grid.

    ``s`` may be a scalar or a sequence; all share one propagation. The
    ``t``-rule is the same order-6 uniform-grid rule used along fibres.
    ``window`` restricts the stored ``u``-columns (e.g. to ``Y~``).
    The tail bound is ``e^{-Re(s) T} sup_t ||L_t v||_inf / Re(s)``.
    """
    s_values = [complex(x) for x in np.atleast_1d(s)]
    a_min = min(x.real for x in s_values)
    if a_min <= 0:
        raise PreconditionError("time-domain Laplace transform needs Re(s) > 0")
    if t_max is None:
        n = int(np.ceil(default_horizon(a_min) / dt - 1e-9))
    else:
        n = int(round(float(t_max) / dt))
    t_max = n * dt
    grid = v.grid
    weights = integral_weights(n + 1, dt, np.array([t_max]), grid.order)[0]
    cols = slice(None) if window is None else window
    prop = StepPropagator(v, step=dt, levels=0)
    first = v.values[:, cols]
    acc = [weights[0] * first.astype(complex) for _ in s_values]
    sup = float(np.abs(np.where(grid.mask, v.values, 0)).max())
    for k in range(1, n + 1):
        cur = prop.advance_to(k * dt).values
        sup = max(sup, float(np.abs(np.where(grid.mask, cur, 0)).max()))
        cur = cur[:, cols]
        for i, x in enumerate(s_values):
            acc[i] += (weights[k] * np.exp(-x * k * dt)) * cur
    tails = [float(np.exp(-x.real * t_max) * sup / x.real) for x in s_values]
    return LaplaceSamples(s_values, acc, t_max, dt, sup, tails)


# ----------------------------------------------------------------------------
# integration by parts and inversion


def _require_good_support(v: SuspensionObservable, m: int):
    if v.margin is None or v.margin <= 0:
        raise PreconditionError("v needs good support (a positive margin)")
    if v.order < m:
        raise PreconditionError(f"derivative stack has order {v.order} < m={m}")


def ibp_representation(ops: RenewalOperators, v: SuspensionObservable, s, m: int) -> SuspensionObservable:
    """``sum_{j<m} (-1)^j s^{-(j+1)} d^j v + (-1)^m s^{-m} L(s) d^m v``.

    Flow derivatives coincide with ``d/du`` on good support; ``m = 0`` is
    ``L(s) v`` itself.
    """
    s = complex(s)
    if s == 0:
        raise PreconditionError("s = 0 is not allowed")
    if m > 0:
        _require_good_support(v, m)
    grid = v.grid
    out = np.zeros(grid.shape, dtype=complex)
    for j in range(m):
        out += (-1) ** j * s ** (-(j + 1)) * v.level(j)
    dm = SuspensionObservable(grid, v.level(m))
    out += (-1) ** m * s ** (-m) * ops.assemble_L_hat(s, dm).values
    return SuspensionObservable(grid, out, label=f"ibp(m={m})")


@dataclass
class ContourSpec:
    """Vertical line ``Re s = a`` sampled at ``b = k db`` for ``|b| <= b_max``.

    The trapezoid rule in ``b`` aliases ``t`` with period ``2 pi / db``; the
    image at ``t + period`` is weighted by ``e^{-a period}``. For ``a < 0``
    this grows, so the default step there also keeps the period at least
    ``alias_period`` (the images then sit where ``L_t v`` has decayed).
    """

    a: float
    b_max: float = 200.0
    db: float | None = None
    t_max: float = 5.0
    alias_period: float = 200.0

    def __post_init__(self):
        limit = np.pi / (4 * self.t_max)
        if self.db is None:
            self.db = limit if self.a > 0 else min(limit, 2 * np.pi / self.alias_period)
        if self.db > limit * (1 + 1e-12):
            raise PreconditionError(f"db = {self.db} exceeds pi/(4 t_max) = {limit}")
        if self.b_max < 50:
            raise PreconditionError("b_max must be at least 50")

    @property
    def b_values(self) -> np.ndarray:
        k = int(np.floor(self.b_max / self.db + 1e-9))
        return np.arange(-k, k + 1) * self.db

    def to_dict(self) -> dict:
        return {"a": self.a, "b_max": self.b_max, "db": self.db, "t_max": self.t_max}


@dataclass
class InversionResult:
    value: SuspensionObservable
    contour: ContourSpec
    truncation_estimate: float
    envelope_slope: float | None
    samples: int
    extra: dict = field(default_factory=dict)


def invert_laplace(ops: RenewalOperators, v: SuspensionObservable, t, contour: ContourSpec,
                   m: int = 3) -> InversionResult | list[InversionResult]:
    """Trapezoid rule for ``(1/2pi) int e^{st} F(s) db`` along ``Re s = a``.

    ``F = L(s) v`` for ``a > 0``. For ``a < 0`` the integrand is the
    integration-by-parts form of order ``m``, which needs mean-zero ``v``
    with good support; its remainder ``s^{-m} L(s) d^m v`` gives the
    envelope slope reported. The slowly decaying ``v / s`` is subtracted
    and its exact line integral (``v`` for ``a > 0``, zero for ``a < 0``,
    ``t > 0``) added back. Real ``v`` uses conjugate symmetry. ``t`` may be
    a sequence of times sharing the same samples.
    """
    a = contour.a
    if a < 0:
        _require_good_support(v, m)
        mean = abs(integral_mu_phi(v))
        if mean > MEAN_ZERO_TOL:
            raise PreconditionError(f"contour a < 0 needs mean-zero v (|mean| = {mean:.2e})")
    times = np.atleast_1d(np.asarray(t, dtype=float))
    grid = v.grid
    b = contour.b_values
    real_input = bool(np.all(v.values.imag == 0))
    if real_input:
        b = b[b >= 0]
    w = np.full(b.size, contour.db)
    if real_input:
        w[b == 0] *= 0.5  # b = 0 counted once after doubling the real part
        w[-1] *= 0.5
    else:
        w[0] *= 0.5
        w[-1] *= 0.5
    acc = np.zeros((times.size,) + grid.shape, dtype=complex)
    envelope = []
    dm = SuspensionObservable(grid, v.level(m)) if a < 0 else None
    for bk, wk in zip(b, w):
        s = complex(a, bk)
        if a < 0:
            rem = ops.assemble_L_hat(s, dm).values * ((-1) ** m * s ** (-m))
            f = rem.copy()
            for j in range(1, m):
                f += (-1) ** j * s ** (-(j + 1)) * v.level(j)
            envelope.append((abs(s), float(np.abs(np.where(grid.mask, rem, 0)).max())))
        else:
            f = ops.assemble_L_hat(s, v).values
        f = f - v.values / s
        acc += (wk * np.exp(s * times))[:, None, None] * f[None]
    acc /= 2 * np.pi
    if real_input:
        acc = 2 * acc.real + 0j
    if a > 0:
        acc += np.where(times > 0, 1.0, 0.5)[:, None, None] * v.values[None]
    slope = None
    if envelope:
        e = np.array([p for p in envelope if p[0] >= 10 and p[1] > 0])
        if len(e) >= 2:
            slope = float(np.polyfit(np.log(e[:, 0]), np.log(e[:, 1]), 1)[0])
    dsup = float(np.abs(np.where(grid.mask, v.level(1) if v.order else v.values, 0)).max())
    results = []
    for i, ti in enumerate(times):
        trunc = float(np.exp(a * ti) * dsup / (np.pi * contour.b_max ** 2 * max(ti, 1e-12)))
        results.append(InversionResult(SuspensionObservable(grid, acc[i], label=f"inverse(t={ti:g})"),
                                       contour, trunc, slope, int(b.size)))
    return results if np.ndim(t) else results[0]


# ----------------------------------------------------------------------------
# decay


DECAY_COLUMNS = ("t", "sup_part", "holder_part", "deriv_sup_part", "deriv_holder_part", "total_norm")
FLOOR = 1e-13


@dataclass
class DecayFitResult:
    t: list
    sup_part: list
    holder_part: list
    deriv_sup_part: list
    deriv_holder_part: list
    norms: list
    rate: float
    prefactor: float
    quality: float
    window: tuple
    window_shortened: bool
    plateau_ratio: float
    tail_rate: float
    envelope_rate: float
    envelope_prefactor: float
    envelope_violation: float
    mean_level: float
    correlation: list | None = None

    @property
    def decaying(self) -> bool:
        """Mean zero, positive well-fitted rate persisting into the second half of the window.

        A nonzero mean is a floor: ``sup |L_t v| >= |int v dmu^phi|`` for all ``t``.
        """
        return (self.mean_level <= MEAN_ZERO_TOL and self.rate > 0 and self.quality >= 0.9
                and self.tail_rate > 0.5 * self.rate)

    def rows(self):
        return zip(self.t, self.sup_part, self.holder_part, self.deriv_sup_part,
                   self.deriv_holder_part, self.norms)

    def summary(self) -> dict:
        return {"rate": self.rate, "prefactor": self.prefactor, "quality": self.quality,
                "window": list(self.window), "window_shortened": self.window_shortened,
                "plateau_ratio": self.plateau_ratio, "tail_rate": self.tail_rate,
                "envelope_rate": self.envelope_rate, "envelope_prefactor": self.envelope_prefactor,
                "envelope_violation": self.envelope_violation, "mean_level": self.mean_level,
                "decaying": self.decaying}


def decay_series(v: SuspensionObservable, t_grid, delta: float, eta: float, step: float = 1.0,
                 w: SuspensionObservable | None = None):
    """Norm parts of ``L_t v`` and ``L_t dv`` (and optionally ``int L_t v . w``) along ``t_grid``."""
    if v.order < 1:
        raise PreconditionError("decay norm needs a derivative stack of order >= 1")
    grid = v.grid
    prop = StepPropagator(v, step=step, levels=1)
    rows, corr = [], []
    for t in t_grid:
        lv = prop.advance_to(float(t))
        s0, h0 = level_norm(grid, lv.level(0), delta, eta)
        s1, h1 = level_norm(grid, lv.level(1), delta, eta)
        rows.append((float(t), s0, h0, s1, h1, max(s0 + h0, s1 + h1)))
        if w is not None:
            corr.append(abs(np.sum(grid.measure_weights * lv.level(0) * w.values)))
    return rows, (corr if w is not None else None)


def _upper_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the upper convex hull of points sorted by ``x``."""
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]) >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull)


def decay_fit(v: SuspensionObservable, t_grid, delta: float, eta: float, window=(5.0, 40.0),
              step: float = 1.0, w: SuspensionObservable | None = None,
              check_mean: bool = True) -> DecayFitResult:
    """Least-squares fit of ``log N_t = log C - eps t`` on ``window``.

    The window is cut where ``N_t`` falls below the arithmetic floor.
    ``plateau_ratio`` is ``N`` at the window end over ``N`` at its start and
    ``tail_rate`` the rate fitted on the second half of the window. The upper
    envelope is the least-squares line through the upper hull of ``log N``;
    ``envelope_violation`` is the largest relative excess of ``N`` over it.
    """
    mean_level = float(abs(integral_mu_phi(v)))
    if check_mean and mean_level > MEAN_ZERO_TOL:
        raise PreconditionError("decay fit expects a mean-zero observable")
    rows, corr = decay_series(v, t_grid, delta, eta, step, w)
    arr = np.array(rows)
    t, norms = arr[:, 0], arr[:, 5]
    sel = (t >= window[0]) & (t <= window[1])
    shortened = False
    under = sel & (norms < FLOOR)
    if under.any():
        first = t[under].min()
        sel &= t < first
        shortened = True
    tt, nn = t[sel], norms[sel]
    if tt.size < 3:
        raise PreconditionError("fit window has fewer than 3 usable points")
    logn = np.log(nn)
    slope, intercept = np.polyfit(tt, logn, 1)
    fitted = intercept + slope * tt
    ss_res = float(np.sum((logn - fitted) ** 2))
    ss_tot = float(np.sum((logn - logn.mean()) ** 2))
    quality = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    hull = _upper_hull(tt, logn)
    env_slope, env_icpt = np.polyfit(tt[hull], logn[hull], 1) if hull.size >= 2 else (slope, intercept)
    violation = float(np.max(nn / np.exp(env_icpt + env_slope * tt)) - 1.0)
    half = tt >= 0.5 * (tt[0] + tt[-1])
    tail_rate = float(-np.polyfit(tt[half], logn[half], 1)[0]) if half.sum() >= 2 else float(-slope)
    return DecayFitResult(
        t=t.tolist(), sup_part=arr[:, 1].tolist(), holder_part=arr[:, 2].tolist(),
        deriv_sup_part=arr[:, 3].tolist(), deriv_holder_part=arr[:, 4].tolist(), norms=norms.tolist(),
        rate=float(-slope), prefactor=float(np.exp(intercept)), quality=quality,
        window=(float(tt[0]), float(tt[-1])), window_shortened=shortened,
        plateau_ratio=float(nn[-1] / nn[0]), tail_rate=tail_rate, envelope_rate=float(-env_slope),
        envelope_prefactor=float(np.exp(env_icpt)), envelope_violation=violation, mean_level=mean_level,
        correlation=None if corr is None else [float(c) for c in corr])


# ----------------------------------------------------------------------------
# commutation of the flow derivative


@dataclass
class CommutationResult:
    status: str
    residual: float | None
    tolerance: float
    t: float

    @property
    def passed(self) -> bool:
        return self.status == "ok" and self.residual <= self.tolerance

    def to_dict(self) -> dict:
        return {"status": self.status, "residual": self.residual, "tolerance": self.tolerance,
                "t": self.t, "pass": self.passed}


def flow_derivative_check(v: SuspensionObservable, t: float, step: float = 1.0, fd_order: int = 4,
                          tol_factor: float = 10.0) -> CommutationResult:
    """Grid-sup of ``d/du (L_t v) - L_t (dv/du)`` away from fibre endpoints.

    The left derivative is a centred finite difference of the propagated grid;
    points within the stencil half-width of ``u = 0`` or ``u = phi`` are skipped.
    """
    grid = v.grid
    tol = tol_factor * grid.h ** 2
    if v.margin is None or v.margin <= 0 or v.order < 1:
        return CommutationResult("precondition unmet", None, tol, float(t))
    prop = StepPropagator(v, step=step, levels=1)
    lv = prop.advance_to(float(t))
    lhs = fd_derivative(grid, lv.level(0), order=fd_order)
    half = fd_order // 2
    inner = ((grid.u[None, :] >= half * grid.h)
             & (grid.u[None, :] + half * grid.h < grid.phi[:, None]))
    res = float(np.abs(np.where(inner, lhs - lv.level(1), 0)).max())
    return CommutationResult("ok", res, tol, float(t))
