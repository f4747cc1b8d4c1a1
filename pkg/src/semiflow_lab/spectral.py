"""Leading eigenvalue of the twisted base operator and an empirical Dolgopyat probe."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import BaseGrid, ObservableY, assemble_twisted_matrix, holder_norm_Y, mean_project_Y
from .errors import PreconditionError, SingularityError
from .roof import RoofFunction

__all__ = ["EigenResult", "leading_eigenvalue", "eigenvalue_slope_at_zero", "DolgopyatProbeResult",
           "dolgopyat_probe", "mean_project_Y", "probe_samples"]

EIGEN_WINDOW = 0.5


@dataclass
class EigenResult:
    eigenvalue: complex
    eigenfunction: ObservableY
    residual: float
    iterations: int

    def to_dict(self) -> dict:
        return {"eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag],
                "residual": self.residual, "iterations": self.iterations}


def leading_eigenvalue(grid: BaseGrid, roof: RoofFunction, s: complex = 0.0, tol: float = 1e-12,
                       max_iter: int = 500, window: float = EIGEN_WINDOW) -> EigenResult:
    """Power iteration on the discretised ``R0(s)`` from the all-ones vector.

    The eigenfunction is scaled to sup norm 1 with a positive value at the
    first node; the eigenvalue is the Rayleigh quotient.
    """
    s = complex(s)
    if abs(s) > window:
        raise PreconditionError(f"|s| = {abs(s):.3g} outside the power-iteration window {window}")
    mat = assemble_twisted_matrix(grid, roof, s).matrix
    x = np.ones(grid.size, dtype=complex)
    lam, res = 0j, np.inf
    for it in range(1, max_iter + 1):
        y = mat @ x
        lam = np.vdot(x, y) / np.vdot(x, x)
        res = float(np.abs(y - lam * x).max() / np.abs(x).max())
        x = y / np.abs(y).max()
        if res <= tol:
            break
    else:
        raise SingularityError(f"power iteration did not converge in {max_iter} steps (residual {res:.2e})")
    x = x * (np.abs(x[0]) / x[0]) if x[0] != 0 else x
    x = x / np.abs(x).max()
    return EigenResult(complex(lam), ObservableY(grid, x), res, it)


def eigenvalue_slope_at_zero(grid: BaseGrid, roof: RoofFunction, h: float = 1e-4) -> float:
    """Central difference ``(lambda(h) - lambda(-h)) / 2h``; must be negative."""
    lp = leading_eigenvalue(grid, roof, h).eigenvalue
    lm = leading_eigenvalue(grid, roof, -h).eigenvalue
    c = float(((lp - lm) / (2 * h)).real)
    if not c < 0:
        raise SingularityError(f"eigenvalue slope {c} is not negative")
    return c


# ----------------------------------------------------------------------------


@dataclass
class DolgopyatProbeResult:
    """Lower-bound estimates of ``||R0(a+ib)^n||_eta`` over sampled inputs.

    ``ratios[b]`` holds the maximum ratio for ``n = 0 .. n_max``.
    """

    a: float
    b_values: list
    ratios: dict
    gamma: dict
    onset: dict
    n_burn: int
    m0_emp: float
    A_emp: float
    D_emp: float | None
    sample_count: int
    seed: int
    lower_bound: bool = True
    notes: list = field(default_factory=list)

    @property
    def gamma_emp(self) -> float:
        return max(self.gamma.values())

    @property
    def passed(self) -> bool:
        return all(g < 1 for b, g in self.gamma.items() if b != 0)

    def rows(self):
        for b in self.b_values:
            for n, r in enumerate(self.ratios[b]):
                yield b, n, r

    def summary(self) -> dict:
        return {
            "a": self.a, "b_values": list(self.b_values),
            "gamma_per_b": {repr(float(b)): g for b, g in self.gamma.items()},
            "onset_per_b": {repr(float(b)): n for b, n in self.onset.items()},
            "gamma_emp": self.gamma_emp, "m0_emp": self.m0_emp, "A_emp": self.A_emp,
            "D_emp": self.D_emp, "n_burn": self.n_burn, "sample_count": self.sample_count,
            "seed": self.seed, "lower_bound": self.lower_bound, "pass": self.passed,
        }


def probe_samples(grid: BaseGrid, roof: RoofFunction, b: float, count: int,
                  rng: np.random.Generator) -> list[ObservableY]:
    """Random trigonometric samples, half of them aligned with ``e^{i b phi}``."""
    y = grid.nodes
    phi = roof(y)
    out = []
    for k in range(count):
        modes = np.arange(4)
        c = rng.normal(size=(4, 2)) @ np.array([1.0, 1j])
        f = sum(c[m] * np.exp(2j * np.pi * m * y) for m in modes)
        if k % 2:
            f = f * np.exp(1j * b * phi)
        out.append(ObservableY(grid, f))
    out.append(ObservableY(grid, np.ones_like(y)))
    return out


def _fit_rate(ratios: np.ndarray, n_burn: int) -> float:
    n = np.arange(ratios.size)
    sel = (n >= n_burn) & (ratios > 1e-300)
    if sel.sum() < 2:
        return 0.0
    slope = np.polyfit(n[sel], np.log(ratios[sel]), 1)[0]
    return float(np.exp(slope))


def dolgopyat_probe(grid: BaseGrid, roof: RoofFunction, a: float, b_list, n_max: int = 30,
                    sample_count: int = 16, seed: int = 0, eta: float | None = None,
                    n_burn: int = 5, eps: float = 0.1, mean_zero: bool = False) -> DolgopyatProbeResult:
    """Maximal norm ratios ``||R0(s)^n v||_eta / ||v||_eta`` along ``n`` for each ``b``.

    Per ``b`` the geometric rate ``gamma`` is the least-squares slope of the
    log ratios for ``n >= n_burn``. ``m0`` comes from the growth in ``b`` of
    the prefactor ``max_n ratio_n / gamma^n``; ``A`` is the largest observed
    ``onset / log b`` where onset is the first ``n`` with ratio below 1.
    """
    if abs(a) > eps:
        raise PreconditionError(f"|a| = {abs(a)} exceeds the strip half-width {eps}")
    eta = grid.model.eta if eta is None else eta
    b_list = [float(b) for b in b_list]
    ratios, gamma, onset, pref = {}, {}, {}, {}
    for i, b in enumerate(b_list):
        if b != 0 and abs(b) < 1:
            raise PreconditionError("probed |b| must be 0 or at least 1")
        rng = np.random.default_rng([seed, i])
        mat = assemble_twisted_matrix(grid, roof, complex(a, b)).matrix
        best = np.zeros(n_max + 1)
        for v in probe_samples(grid, roof, b, sample_count, rng):
            if mean_zero:
                v = mean_project_Y(v)
            x = v.flat.copy()
            norm0 = holder_norm_Y(v, eta).total
            if norm0 == 0:
                continue
            for n in range(n_max + 1):
                if n:
                    x = mat @ x
                r = holder_norm_Y(ObservableY(grid, x), eta).total / norm0
                best[n] = max(best[n], r)
        ratios[b] = best.tolist()
        g = _fit_rate(best, n_burn)
        gamma[b] = g
        below = np.nonzero(best[1:] < 1.0)[0]
        onset[b] = int(below[0] + 1) if below.size else n_max + 1
        pref[b] = float(np.max(best / np.maximum(g, 1e-300) ** np.arange(n_max + 1))) if g > 0 else np.inf
    big = [b for b in b_list if abs(b) >= 2 and np.isfinite(pref[b])]
    m0 = 0.0
    if len(big) >= 2:
        m0 = float(np.polyfit(np.log(np.abs(big)), np.log([pref[b] for b in big]), 1)[0])
    A = max((onset[b] / np.log(abs(b)) for b in big), default=0.0)
    passing = [abs(b) for b in b_list if b != 0 and gamma[b] < 1]
    D = min(passing) if passing else None
    return DolgopyatProbeResult(a, b_list, ratios, gamma, onset, n_burn, m0, float(A), D,
                                sample_count, seed)
