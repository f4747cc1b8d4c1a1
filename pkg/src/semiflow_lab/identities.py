"""Operator identities of the renewal decomposition, each side computed independently.

``L=AT`` and ``convolution`` compare pointwise exact preimage sums;
``renewal`` compares the resolvent form of ``T(s)`` with a time-domain
Laplace quadrature; ``B0-integral`` and ``ibp`` are frequency-side checks.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import PreconditionError
from .laplace import ibp_representation, laplace_of_Lt
from .records import IdentityReport
from .renewal import RenewalOperators, TildeObservable, convolution_integral, windowed_direct
from .suspension import SuspensionObservable, integral_mu_phi, lt_exact_eval

IDENTITIES = ("L=AT", "convolution", "renewal", "B0-integral", "BG", "ibp")

DEFAULT_TOL = {"L=AT": 1e-8, "convolution": 1e-3, "renewal": 1e-3, "B0-integral": 1e-8,
               "BG": 1e-12, "ibp": 1e-4}


def _sup(x) -> float:
    return float(np.max(np.abs(x))) if np.size(x) else 0.0


def _exact_callable(v: SuspensionObservable) -> Callable:
    if v.func is None:
        raise PreconditionError("identity needs an observable with a closed-form callable")
    return v.func


def random_tilde_function(rng: np.random.Generator) -> Callable:
    """Random smooth ``v~(y, u)`` vanishing to fourth order at ``u = 0`` and ``u = 1``."""
    cy = rng.normal(size=(3, 2)) @ np.array([1.0, 1j])
    cu = rng.normal(size=3)

    def f(y, u):
        y = np.asarray(y, float)
        u = np.clip(np.asarray(u, float), 0.0, 1.0)
        prof = cy[0] + cy[1] * np.cos(2 * np.pi * y) + cy[2] * np.sin(4 * np.pi * y)
        shape = np.sin(np.pi * u) ** 4 * (cu[0] + cu[1] * u + cu[2] * u ** 2)
        return prof * shape

    return f


def check_l_at(ops: RenewalOperators, v: SuspensionObservable, t: float, tol: float) -> IdentityReport:
    """``L_t = sum_{j <= [t]} A_j 1_Y~ L_{t-j} + E_t`` on every grid point under the roof."""
    g = ops.sgrid
    f = _exact_callable(v)
    yy, uu = np.meshgrid(g.y, g.u, indexing="ij")
    y, u = yy[g.mask], uu[g.mask]
    lhs = lt_exact_eval(g.model, g.roof, f, y, u, t)
    rhs = windowed_direct(g, "E", f, t)(y, u)
    for j in range(int(np.floor(t)) + 1):
        inner = lambda a, b, tt=t - j: np.where((b >= 0) & (b <= 1), lt_exact_eval(g.model, g.roof, f, a, b, tt), 0.0)
        rhs = rhs + windowed_direct(g, "A", inner, t, n=j)(y, u)
    return IdentityReport("L=AT", {"t": t, "points": int(y.size)}, _sup(lhs - rhs), tol, _sup(lhs))


def check_convolution(ops: RenewalOperators, v: SuspensionObservable, t: float, tol: float,
                      per_unit: int = 64) -> IdentityReport:
    """``1_Y~ L_t = int_0^t T_{t-tau} B_tau dtau + G_t + H_t`` on the ``Y~`` grid."""
    g = ops.sgrid
    f = _exact_callable(v)
    yy, uu = np.meshgrid(g.y, ops.tgrid.u, indexing="ij")
    y, u = yy.ravel(), uu.ravel()
    lhs = lt_exact_eval(g.model, g.roof, f, y, u, t)
    rhs = (convolution_integral(g, f, t, y, u, per_unit)
           + windowed_direct(g, "G", f, t)(y, u) + windowed_direct(g, "H", f, t)(y, u))
    return IdentityReport("convolution", {"t": t, "tau_per_unit": per_unit}, _sup(lhs - rhs), tol, _sup(lhs))


def check_renewal(ops: RenewalOperators, vt: Callable, s_values, tol: float,
                  dt: float = 1.0 / 32) -> list[IdentityReport]:
    """Relative residual of ``U(s)(I - R(s))^{-1} v~`` against ``int e^{-st} T_t v~ dt``."""
    g = ops.sgrid
    n1 = ops.tgrid.n + 1
    tilde = TildeObservable.from_function(ops.tgrid, vt)
    embedded = SuspensionObservable(g, g.sample(lambda y, u: np.where(u <= 1, vt(y, u), 0.0)))
    lap = laplace_of_Lt(embedded, list(s_values), dt=dt, window=slice(0, n1))
    out = []
    for s, ref, tail in zip(lap.s_values, lap.values, lap.tail_bounds):
        th = ops.apply_T_hat(s, tilde).values
        scale = _sup(ref)
        params = {"s": [s.real, s.imag], "t_max": lap.t_max, "dt": dt, "tail_bound": tail}
        out.append(IdentityReport("renewal", params, _sup(th - ref) / scale, tol, scale))
    return out


def check_b0_integral(ops: RenewalOperators, v: SuspensionObservable, tol: float) -> IdentityReport:
    """``int_Y~ B(0) v dmu~ = phi_bar int v dmu^phi``."""
    left = ops.tgrid.integrate(ops.apply_B_hat(0.0, v).values)
    right = ops.sgrid.phi_bar * integral_mu_phi(v)
    return IdentityReport("B0-integral", {"left": [left.real, left.imag], "right": [right.real, right.imag]},
                          abs(left - right), tol, abs(right))


def check_bg(ops: RenewalOperators, v: SuspensionObservable, s, tol: float) -> IdentityReport:
    """``G(s) v = (1 - u) B(s) v``."""
    s = complex(s)
    gv = ops.apply_G_hat(s, v).values
    bv = ops.apply_B_hat(s, v).values
    res = _sup(gv - (1.0 - ops.tgrid.u)[None, :] * bv)
    return IdentityReport("BG", {"s": [s.real, s.imag]}, res, tol, _sup(bv))


def check_ibp(ops: RenewalOperators, v: SuspensionObservable, s, m: int, tol: float) -> IdentityReport:
    """Integration-by-parts form of ``L(s) v`` against the direct assembly."""
    s = complex(s)
    g = ops.sgrid
    rhs = ibp_representation(ops, v, s, m).values
    lhs = ops.assemble_L_hat(s, v).values
    res = _sup(np.where(g.mask, lhs - rhs, 0))
    return IdentityReport("ibp", {"s": [s.real, s.imag], "m": m}, res, tol, _sup(np.where(g.mask, lhs, 0)))


def verify_identity(ops: RenewalOperators, which: str, v, t=None, s=None, tol: float | None = None,
                    m: int = 3):
    """Dispatch to the identity ``which``; returns one report (a list for ``renewal``)."""
    if which not in IDENTITIES:
        raise ValueError(f"unknown identity {which!r}; expected one of {IDENTITIES}")
    tol = DEFAULT_TOL[which] if tol is None else tol
    if which == "L=AT":
        return check_l_at(ops, v, t, tol)
    if which == "convolution":
        return check_convolution(ops, v, t, tol)
    if which == "renewal":
        return check_renewal(ops, v, np.atleast_1d(s), tol)
    if which == "B0-integral":
        return check_b0_integral(ops, v, tol)
    if which == "BG":
        return check_bg(ops, v, s, tol)
    return check_ibp(ops, v, s, m, tol)
