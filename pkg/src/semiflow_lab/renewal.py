"""Laplace-domain operators of the renewal decomposition and their time-domain twins.

Frequency side (grid operators)::

    T(s) = U(s) (I - R(s))^{-1}
    L(s) = A(s) T(s) B(s) + A(s) G(s) + A(s) H(s) + E(s)

``R(s)`` acts slice by slice in ``u`` through the twisted base matrix, so one
LU factorisation per frequency serves every slice. Fibre integrals use the
uniform-grid quadrature of :mod:`semiflow_lab.quadrature`.

Time side: windowed transfer operators evaluated pointwise from exact
preimage enumeration (used only as oracles).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .base import assemble_twisted_matrix
from .errors import PreconditionError, SingularityError, StripError
from .quadrature import cumulative_weights, gauss_legendre
from .suspension import (SuspensionGrid, SuspensionObservable, lt_exact_eval, lt_exact_terms)

NEAR_POLE = 1e-3


class TildeGrid:
    """``Y~ = Y x [0, 1]`` on base nodes and the fibre step of a suspension grid."""

    def __init__(self, sgrid: SuspensionGrid):
        n = round(1.0 / sgrid.h)
        if abs(n * sgrid.h - 1.0) > 1e-12:
            raise ValueError("fibre step must divide 1")
        self.sgrid = sgrid
        self.base = sgrid.base
        self.n = n
        self.h = sgrid.h
        self.u = np.arange(n + 1) * self.h
        self.order = sgrid.order

    @property
    def shape(self):
        return (self.base.size, self.n + 1)

    @property
    def cumulative(self) -> np.ndarray:
        return cumulative_weights(self.n + 1, self.h, self.order)

    def sample(self, f: Callable) -> np.ndarray:
        yy, uu = np.meshgrid(self.base.flat_nodes, self.u, indexing="ij")
        return np.array(np.broadcast_to(f(yy, uu), self.shape), dtype=complex)

    def integrate(self, values: np.ndarray) -> complex:
        """``int_{Y~} v dmu~`` (``mu x Leb[0,1]``)."""
        fib = self.cumulative[-1] @ values.T
        return complex(self.base.quad.ravel() @ fib)

    def slice_means(self, values: np.ndarray) -> np.ndarray:
        return self.base.quad.ravel() @ values


@dataclass(eq=False)
class TildeObservable:
    grid: TildeGrid
    values: np.ndarray
    func: Callable | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError("shape mismatch")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @classmethod
    def from_function(cls, grid: TildeGrid, f: Callable) -> "TildeObservable":
        return cls(grid, grid.sample(f), f)

    def __add__(self, other):
        return TildeObservable(self.grid, self.values + _v(other))

    def __sub__(self, other):
        return TildeObservable(self.grid, self.values - _v(other))

    def __mul__(self, c):
        return TildeObservable(self.grid, self.values * c)

    __rmul__ = __mul__


def _v(x):
    return x.values if isinstance(x, (TildeObservable, SuspensionObservable)) else x


@dataclass(frozen=True)
class FrequencyPoint:
    """``s = a + ib`` with the strip half-width it is checked against."""

    a: float
    b: float
    eps: float = 0.1

    @property
    def s(self) -> complex:
        return complex(self.a, self.b)

    @property
    def in_strip(self) -> bool:
        return abs(self.a) <= self.eps

    def require_defined(self):
        """Hat operators are defined for ``a > 0`` and on the strip ``|a| <= eps``."""
        if self.a < -self.eps - 1e-15:
            raise StripError(f"Re s = {self.a} left of the strip |a| <= {self.eps}")

    @classmethod
    def of(cls, s, eps: float = 0.1) -> "FrequencyPoint":
        if isinstance(s, FrequencyPoint):
            return s
        s = complex(s)
        return cls(s.real, s.imag, eps)


@dataclass
class ResolventSolution:
    x: TildeObservable
    residual: float


class RenewalOperators:
    """All hat operators on one suspension grid, with an LU cache keyed by ``s``."""

    def __init__(self, sgrid: SuspensionGrid, eps: float = 0.1, cache_size: int = 8):
        self.sgrid = sgrid
        self.tgrid = TildeGrid(sgrid)
        self.base = sgrid.base
        self.roof = sgrid.roof
        self.eps = eps
        self._lu: dict[complex, tuple] = {}
        self._cache_size = cache_size

    # -- helpers ---------------------------------------------------------

    def freq(self, s) -> FrequencyPoint:
        fp = FrequencyPoint.of(s, self.eps)
        fp.require_defined()
        return fp

    def matrix(self, s) -> np.ndarray:
        return assemble_twisted_matrix(self.base, self.roof, complex(s)).matrix

    def _factor(self, s: complex):
        if s not in self._lu:
            m = self.matrix(s)
            a = np.eye(m.shape[0]) - m
            if len(self._lu) >= self._cache_size:
                self._lu.pop(next(iter(self._lu)))
            self._lu[s] = (a, scipy.linalg.lu_factor(a, check_finite=False))
        return self._lu[s]

    def tilde(self, values) -> TildeObservable:
        return TildeObservable(self.tgrid, values)

    def suspension(self, values, label="") -> SuspensionObservable:
        return SuspensionObservable(self.sgrid, values, label=label)

    # -- operators on Y~ -------------------------------------------------

    def apply_R_hat(self, s, v: TildeObservable) -> TildeObservable:
        """``R(s)`` slice by slice: ``(R(s)v)(., u) = R0(s) v(., u)``."""
        s = self.freq(s).s
        return self.tilde(self.matrix(s) @ v.values)

    def resolvent_apply(self, s, v: TildeObservable, tol: float = 1e-8) -> ResolventSolution:
        """Solve ``(I - R(s)) x = v`` per slice; near ``s = 0`` slices must be mean zero."""
        s = self.freq(s).s
        if abs(s) < NEAR_POLE:
            means = np.abs(self.tgrid.slice_means(v.values)).max()
            if means > 1e-10:
                raise PreconditionError(
                    f"|s| = {abs(s):.1e} < {NEAR_POLE}: slices of v must have mean zero "
                    f"(max |slice mean| = {means:.2e})")
        a, lu = self._factor(s)
        x = scipy.linalg.lu_solve(lu, v.values, check_finite=False)
        scale = max(np.abs(v.values).max(), 1e-300)
        residual = float(np.abs(a @ x - v.values).max() / scale)
        if not np.isfinite(residual) or residual > tol:
            raise SingularityError(f"resolvent residual {residual:.2e} at s={s}")
        return ResolventSolution(self.tilde(x), residual)

    def _cum_exp(self, s: complex, values: np.ndarray) -> np.ndarray:
        """``int_0^u e^{s tau} f(., tau) dtau`` at every grid ``u`` of ``Y~``."""
        u = self.tgrid.u
        return (values * np.exp(s * u)[None, :]) @ self.tgrid.cumulative.T

    def apply_U_hat(self, s, v: TildeObservable, parts: bool = False):
        """``U(s) = U1(s) + U2(s)``.

        ``U1 v = int_0^u e^{-st} v(y, u-t) dt`` and
        ``U2 v = sum_j g(y_j) int_u^1 e^{s(t-u-phi(y_j))} v(y_j, t) dt``.
        """
        s = self.freq(s).s
        u = self.tgrid.u
        cum = self._cum_exp(s, v.values)
        decay = np.exp(-s * u)[None, :]
        u1 = decay * cum
        upper = cum[:, -1:] - cum  # int_u^1 e^{s tau} v d tau
        u2 = decay * (self.matrix(s) @ upper)
        if parts:
            return self.tilde(u1), self.tilde(u2)
        return self.tilde(u1 + u2)

    def apply_T_hat(self, s, v: TildeObservable) -> TildeObservable:
        """Renewal equation ``T(s) = U(s) (I - R(s))^{-1}``."""
        x = self.resolvent_apply(s, v).x
        return self.apply_U_hat(s, x)

    # -- operators between Y^phi and Y~ -------------------------------------

    def apply_A_hat(self, s, w: TildeObservable) -> SuspensionObservable:
        """``(A(s) w)(y, u) = e^{-s[u]} w(y, u - [u])`` on the suspension grid."""
        s = self.freq(s).s
        k = np.arange(self.sgrid.n_u)
        floor = k // self.tgrid.n
        frac = k % self.tgrid.n
        return self.suspension(np.exp(-s * floor)[None, :] * w.values[:, frac], "A")

    def fiber_transform(self, s: complex, v: SuspensionObservable) -> np.ndarray:
        """``I_s(y) = int_0^{phi(y)} e^{s t} v(y, t) dt`` at base nodes."""
        weights = self.sgrid.fiber_weights
        return np.sum(weights * v.values * np.exp(s * self.sgrid.u)[None, :], axis=1)

    def apply_B_hat(self, s, v: SuspensionObservable) -> TildeObservable:
        """``B(s) v = R~ V(s)`` with ``V(s)(y,u) = int_0^{phi} e^{-s(phi + u - t)} v(y,t) dt``.

        Since ``V(s)(y, u) = e^{-su} e^{-s phi(y)} I_s(y)``, this is
        ``e^{-su}`` times the twisted base operator applied to ``I_s``.
        """
        s = self.freq(s).s
        col = self.matrix(s) @ self.fiber_transform(s, v)
        return self.tilde(col[:, None] * np.exp(-s * self.tgrid.u)[None, :])

    def apply_G_hat(self, s, v: SuspensionObservable) -> TildeObservable:
        b = self.apply_B_hat(s, v)
        return self.tilde((1.0 - self.tgrid.u)[None, :] * b.values)

    def apply_H_hat(self, s, v: SuspensionObservable) -> TildeObservable:
        """``(H(s) v)(y, u) = int_0^u e^{-st} v(y, u - t) dt`` for ``u`` in ``[0, 1]``."""
        s = self.freq(s).s
        n1 = self.tgrid.n + 1
        cum = self._cum_exp(s, v.values[:, :n1])
        return self.tilde(np.exp(-s * self.tgrid.u)[None, :] * cum)

    def apply_E_hat(self, s, v: SuspensionObservable) -> SuspensionObservable:
        """``(E(s) v)(y, u) = int_0^{[u]} e^{-st} v(y, u - t) dt`` (zero for ``u < 1``)."""
        s = self.freq(s).s
        g = self.sgrid
        cum_w = cumulative_weights(g.n_u, g.h, g.order)
        cum = (v.values * np.exp(s * g.u)[None, :]) @ cum_w.T
        k = np.arange(g.n_u)
        lower = k % self.tgrid.n
        out = np.exp(-s * g.u)[None, :] * (cum - cum[:, lower])
        return self.suspension(out, "E")

    def assemble_L_hat(self, s, v: SuspensionObservable, terms: bool = False):
        """``L(s) v = A T B v + A G v + A H v + E v``."""
        fp = self.freq(s)
        s = fp.s
        bv = self.apply_B_hat(s, v)
        tb = self.apply_T_hat(s, bv)
        gv = self.tgrid_values_G(bv)
        hv = self.apply_H_hat(s, v)
        inner = self.tilde(tb.values + gv + hv.values)
        out = self.apply_A_hat(s, inner).values + self.apply_E_hat(s, v).values
        result = self.suspension(out, f"Lhat({s:g})")
        if terms:
            return result, {"TB": tb, "G": self.tilde(gv), "H": hv}
        return result

    def tgrid_values_G(self, bv: TildeObservable) -> np.ndarray:
        return (1.0 - self.tgrid.u)[None, :] * bv.values

    # -- norms ---------------------------------------------------------

    def resolvent_norm(self, s) -> float:
        """Sup-norm (max row sum) of the discretised ``(I - R0(s))^{-1}``."""
        a, lu = self._factor(self.freq(s).s)
        inv = scipy.linalg.lu_solve(lu, np.eye(a.shape[0]), check_finite=False)
        return float(np.abs(inv).sum(axis=1).max())


# ----------------------------------------------------------------------------
# windowed transfer operators, pointwise from exact preimage enumeration


def _on_tilde(f):
    return lambda y, u: np.where((u >= 0) & (u <= 1), f(y, u), 0.0)


def windowed_direct(sgrid: SuspensionGrid, kind: str, v: Callable, t: float, n: int | None = None) -> Callable:
    """Pointwise callable for the windowed operator ``kind`` at time ``t``.

    kinds: ``T``, ``U`` (inputs on ``Y~``), ``B``, ``G``, ``H``, ``E`` (inputs on
    ``Y^phi``), ``A`` (input on ``Y~``, uses ``n``). Outputs of ``T, U, B, G, H``
    are meant to be read on ``Y~``.
    """
    model, roof = sgrid.model, sgrid.roof

    def L(f, tt):
        return lambda y, u: lt_exact_eval(model, roof, f, y, u, tt)

    if kind == "T":
        return _on_tilde(L(_on_tilde(v), t))
    if kind == "U":
        f = _on_tilde(lambda y, u: np.where(roof(y) > t, v(y, u), 0.0))
        return _on_tilde(L(f, t))
    if kind == "B":
        f = lambda y, u: np.where((roof(y) - t <= u) & (u < roof(y) - t + 1), v(y, u), 0.0)
        return _on_tilde(L(f, t))
    if kind == "G":
        w = lambda y, u: (roof(y) - u - t + 1) * v(y, u)
        return windowed_direct(sgrid, "B", w, t)
    if kind == "H":
        f = lambda y, u: np.where(u < roof(y) - t, v(y, u), 0.0)
        return _on_tilde(L(f, t))
    if kind == "E":
        lt = L(v, t)
        top = np.floor(t) + 1
        return lambda y, u: np.where((u >= top) & (u <= roof(y)), lt(y, u), 0.0)
    if kind == "A":
        if n is None:
            raise ValueError("kind A needs n")
        ln = L(_on_tilde(v), n)
        return lambda y, u: np.where((u >= n) & (u < n + 1), ln(y, u), 0.0)
    raise ValueError(f"unknown kind {kind!r}")


def B_closed_form(sgrid: SuspensionGrid, v: Callable, t) -> Callable:
    """``B_t v = R~ v_t``, ``v_t(y,u) = 1{0 < u + phi(y) - t < phi(y)} v(y, u + phi(y) - t)``.

    ``t`` may be an array broadcasting against the evaluation points.
    """
    model, roof = sgrid.model, sgrid.roof

    def f(y, u):
        y = np.asarray(y, float)
        u = np.asarray(u, float)
        tt = np.broadcast_to(np.asarray(t, float), np.broadcast(y, u).shape)
        out = np.zeros(np.broadcast(y, u).shape, dtype=complex)
        pre = model.preimages(y)
        wts = model.weights(y)
        for j in range(pre.shape[0]):
            z = pre[j]
            phi = roof(z)
            h = u + phi - tt
            ok = (h > 0) & (h < phi)
            out = out + np.where(ok, wts[j] * v(z, np.where(ok, h, 0.0)), 0.0)
        return out

    return f


def U_closed_form(v: Callable, t: float) -> Callable:
    """``(U_t v)(y,u) = v(y, u - t) 1_{[t,1]}(u)`` for ``t <= 1``."""
    if t > 1:
        raise ValueError("closed form holds for t <= 1")
    return lambda y, u: np.where((u >= t) & (u <= 1), v(y, u - t), 0.0)


def convolution_integral(sgrid: SuspensionGrid, v: Callable, t: float, y, u,
                         per_unit: int = 64) -> np.ndarray:
    """``int_0^t (T_{t-tau} B_tau v)(y, u) dtau`` on ``Y~`` by Gauss-Legendre in ``tau``.

    The preimage paths of ``L_{t-tau}`` are enumerated once; on each path the
    window ``0 <= u - (t - tau) + phi_k(y') <= 1`` is an interval in ``tau``
    of length at most 1, which receives its own ``per_unit``-point rule.
    """
    model, roof = sgrid.model, sgrid.roof
    y = np.ravel(np.asarray(y, float))
    u = np.ravel(np.asarray(u, float))
    out = np.zeros(y.size, dtype=complex)
    x0, w0 = gauss_legendre(per_unit)
    idx = np.arange(y.size)
    yk, gk, phik = y.copy(), np.ones(y.size), np.zeros(y.size)
    while idx.size:
        lo = np.maximum(0.0, t - u[idx] - phik)
        hi = np.minimum(t, t - u[idx] - phik + 1.0)
        hit = lo < hi
        if hit.any():
            span = (hi - lo)[hit]
            tau = lo[hit][:, None] + span[:, None] * x0[None, :]
            sigma = u[idx[hit]][:, None] - (t - tau) + phik[hit][:, None]
            yy = np.broadcast_to(yk[hit][:, None], tau.shape)
            vals = B_closed_form(sgrid, v, tau)(yy, sigma)
            np.add.at(out, idx[hit], gk[hit] * span * (vals @ w0))
        live = phik <= t - u[idx] + 1.0
        if not live.any():
            break
        idx, yk, gk, phik = idx[live], yk[live], gk[live], phik[live]
        pre = model.preimages(yk)
        wts = model.weights(yk)
        nb = pre.shape[0]
        idx = np.tile(idx, nb)
        gk = (wts * gk[None, :]).ravel()
        phik = (roof(pre) + phik[None, :]).ravel()
        yk = pre.ravel()
    return out
