"""``semiflow-lab`` command line: run scenario pipelines and write reports.

Exit codes: 0 all checks pass, 1 some check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from pathlib import Path

import numpy as np

from . import config as config_mod
from .base import validate_gibbs_markov
from .errors import ConfigError, SemiflowError
from .identities import (check_b0_integral, check_bg, check_convolution, check_ibp, check_l_at,
                         check_renewal, random_tilde_function)
from .laplace import (DECAY_COLUMNS, ContourSpec, decay_fit, flow_derivative_check, invert_laplace,
                      laplace_of_Lt)
from .renewal import RenewalOperators
from .report import RunReport, check_entry, emit_report, from_record, write_csv, write_json
from .spectral import dolgopyat_probe, eigenvalue_slope_at_zero, leading_eigenvalue
from .suspension import (ObservableSpec, SuspensionObservable, apply_Lt_step, build_test_observable,
                         correlation, random_smooth_observable, suspension_norm, validate_roof)

COMMANDS = ("validate", "spectrum", "probe-dolgopyat", "identities", "transform", "invert", "decay",
            "correlation")
JOBS_ENV = "SEMIFLOW_LAB_JOBS"


class Context:
    """Shared, read-only objects built once per run."""

    def __init__(self, scenario: config_mod.Scenario, out_dir: Path):
        self.scenario = scenario
        self.out = out_dir
        self.model, self.base, self.roof, self.grid = scenario.build()
        self.num = scenario.numerics

    def ops(self) -> RenewalOperators:
        return RenewalOperators(self.grid, self.num["eps"])

    @cached_property
    def observable(self) -> SuspensionObservable:
        return build_test_observable(self.grid, self.scenario.observable_spec())

    def rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng([self.scenario.seed, stream])


def _sup(x) -> float:
    return float(np.max(np.abs(x)))


def _masked_sup(ctx: Context, x) -> float:
    return float(np.max(np.abs(np.where(ctx.grid.mask, x, 0))))


# ----------------------------------------------------------------------------
# commands; each returns a partial RunReport


def cmd_validate(ctx: Context) -> RunReport:
    rep = RunReport("validate", {})
    gm = validate_gibbs_markov(ctx.base, tol=1e-12)
    rf = validate_roof(ctx.grid)
    rep.checks += [from_record("gibbs_markov.", c) for c in gm.checks]
    rep.checks += [from_record("roof.", c) for c in rf.checks]
    rep.constants.update({f"gibbs_markov.{k}": v for k, v in gm.constants.items()})
    rep.constants.update({f"roof.{k}": v for k, v in rf.constants.items()})
    return rep


def cmd_spectrum(ctx: Context) -> RunReport:
    rep = RunReport("spectrum", {})
    e0 = leading_eigenvalue(ctx.base, ctx.roof, 0.0)
    rep.checks.append(check_entry("lambda_at_zero", abs(e0.eigenvalue - 1) <= 1e-10,
                                  abs(e0.eigenvalue - 1), 1e-10, {"iterations": e0.iterations}))
    flat = np.abs(e0.eigenfunction.flat - e0.eigenfunction.flat[0]).max()
    rep.checks.append(check_entry("eigenfunction_constant", flat <= 1e-8, float(flat), 1e-8))
    c = eigenvalue_slope_at_zero(ctx.base, ctx.roof, ctx.scenario["spectrum"]["slope_h"])
    phi_bar = ctx.grid.phi_bar
    rep.checks.append(check_entry("slope_negative", c < 0, c, 0.0))
    rep.checks.append(check_entry("slope_equals_minus_mean_roof", abs(c + phi_bar) <= 1e-3,
                                  abs(c + phi_bar), 1e-3, {"phi_bar": phi_bar}))
    ops = ctx.ops()
    bs = np.geomspace(1.0, 200.0, 12)
    norms = [ops.resolvent_norm(1j * b) for b in bs]
    m1 = float(np.polyfit(np.log(bs), np.log(norms), 1)[0])
    rep.checks.append(check_entry("resolvent_growth_exponent", m1 <= 6.0, m1, 6.0))
    path = write_csv(ctx.out / "resolvent.csv", ("b", "resolvent_norm"), zip(bs, norms))
    rep.artifacts.append(path.name)
    lam = leading_eigenvalue(ctx.base, ctx.roof, 0.01).eigenvalue
    rep.constants.update({"lambda_0": e0.eigenvalue, "lambda_0.01": lam, "c_emp": c, "phi_bar": phi_bar,
                          "m1_emp": m1})
    return rep


def cmd_probe(ctx: Context) -> RunReport:
    rep = RunReport("probe-dolgopyat", {})
    cfg = ctx.scenario["probe"]
    res = dolgopyat_probe(ctx.base, ctx.roof, cfg["a"], cfg["b"], n_max=cfg["n_max"],
                          sample_count=cfg["samples"], seed=ctx.scenario.seed, n_burn=cfg["n_burn"],
                          eps=ctx.num["eps"])
    for b in res.b_values:
        rep.checks.append(check_entry(f"gamma_below_one[b={b:g}]", res.gamma[b] < 1, res.gamma[b], 1.0,
                                      {"b": b, "a": cfg["a"], "onset": res.onset[b]}))
    rep.artifacts.append(write_csv(ctx.out / "probe.csv", ("b", "n", "max_ratio"), res.rows()).name)
    rep.artifacts.append(write_json(ctx.out / "probe.json", res.summary()).name)
    rep.constants.update({"gamma_emp": res.gamma_emp, "m0_emp": res.m0_emp, "A_emp": res.A_emp,
                          "D_emp": res.D_emp, "probe_is_lower_bound": True})
    return rep


def cmd_identities(ctx: Context) -> RunReport:
    rep = RunReport("identities", {})
    cfg = ctx.scenario["identities"]
    ops = ctx.ops()
    v = ctx.observable
    for t in cfg["l_at_times"]:
        rep.checks.append(from_record("", check_l_at(ops, v, t, 1e-8)))
    for t in cfg["convolution_times"]:
        rep.checks.append(from_record("", check_convolution(ops, v, t, 1e-3, ctx.num["tau_per_unit"])))
    s_vals = [complex(a, b) for a, b in cfg["renewal_s"]]
    rng = ctx.rng(1)
    worst = {}
    for _ in range(cfg["renewal_count"]):
        for r in check_renewal(ops, random_tilde_function(rng), s_vals, 1e-3, ctx.num["laplace_dt"]):
            key = tuple(r.parameters["s"])
            if key not in worst or r.residual > worst[key].residual:
                worst[key] = r
    rep.checks += [from_record("", r) for r in worst.values()]
    rng = ctx.rng(2)
    b0 = [check_b0_integral(ops, random_smooth_observable(ctx.grid, rng, good_support=bool(i % 2)), 1e-8)
          for i in range(cfg["random_count"])]
    b0.append(check_b0_integral(ops, SuspensionObservable.constant(ctx.grid), 1e-8))
    rep.checks.append(from_record("", max(b0, key=lambda r: r.residual)))
    rep.checks.append(from_record("", check_bg(ops, v, complex(0.05, 3.0), 1e-12)))
    s = complex(*cfg["ibp_s"])
    rep.checks.append(from_record("", check_ibp(ops, v, s, cfg["ibp_m"], 1e-4)))
    return rep


def cmd_transform(ctx: Context) -> RunReport:
    rep = RunReport("transform", {})
    cfg = ctx.scenario["transform"]
    ops = ctx.ops()
    v = ctx.observable
    s_vals = [complex(a, b) for a, b in cfg["s"]]
    lap = laplace_of_Lt(v, s_vals, t_max=cfg["t_max"], dt=ctx.num["laplace_dt"])
    for s, ref, tail in zip(s_vals, lap.values, lap.tail_bounds):
        lh = ops.assemble_L_hat(s, v).values
        err = _masked_sup(ctx, lh - ref) / _masked_sup(ctx, ref)
        rep.checks.append(check_entry("assembly_vs_time_quadrature", err <= 1e-3, err, 1e-3,
                                      {"s": [s.real, s.imag], "t_max": lap.t_max, "tail_bound": tail}))
    one = SuspensionObservable.constant(ctx.grid)
    s = s_vals[0]
    lap1 = laplace_of_Lt(one, [s], t_max=cfg["t_max"], dt=ctx.num["laplace_dt"])
    err = _masked_sup(ctx, lap1.values[0] - 1 / s)
    rep.checks.append(check_entry("transform_of_constant", err <= 1e-6, err, 1e-6, {"s": [s.real, s.imag]}))
    err = _masked_sup(ctx, ops.assemble_L_hat(s, one).values - 1 / s)
    rep.checks.append(check_entry("assembly_of_constant", err <= 1e-6, err, 1e-6, {"s": [s.real, s.imag]}))
    return rep


def cmd_invert(ctx: Context) -> RunReport:
    rep = RunReport("invert", {})
    cfg = ctx.scenario["invert"]
    ops = ctx.ops()
    v = ctx.observable
    times = list(cfg["t"])
    contour = ContourSpec(cfg["a"], cfg["b_max"], cfg["db"], t_max=max(times))
    results = invert_laplace(ops, v, times, contour)
    for t, res in zip(times, results):
        direct = apply_Lt_step(v, t, levels=0)
        err = _masked_sup(ctx, res.value.values - direct.values)
        rep.checks.append(check_entry("round_trip", err <= 1e-2, err, 1e-2,
                                      {"t": t, **contour.to_dict(), "truncation_estimate": res.truncation_estimate}))
    if cfg["shifted_a"] is not None:
        a = float(cfg["shifted_a"])
        shifted = ContourSpec(a, cfg["b_max"], None, t_max=max(times))
        results = invert_laplace(ops, v, times, shifted)
        for t, res in zip(times, results):
            n_inv = suspension_norm(res.value, ctx.num["delta"], ctx.num["eta"]).total
            n_dir = suspension_norm(apply_Lt_step(v, t, levels=0), ctx.num["delta"], ctx.num["eta"]).total
            ratio = n_inv / n_dir
            rep.checks.append(check_entry("shifted_contour_norm_ratio", 1 / 3 <= ratio <= 3, ratio, 3.0,
                                          {"t": t, **shifted.to_dict(),
                                           "envelope_slope": res.envelope_slope}))
    return rep


def cmd_decay(ctx: Context) -> RunReport:
    rep = RunReport("decay", {})
    cfg = ctx.scenario["decay"]
    v = ctx.observable
    w = build_test_observable(ctx.grid, ObservableSpec(profile=ctx.scenario["correlation"]["w_profile"],
                                                       mean_zero=False, order=1))
    t_grid = np.arange(cfg["t_start"], cfg["t_stop"] + 0.5 * cfg["t_step"], cfg["t_step"])
    fit = decay_fit(v, t_grid, ctx.num["delta"], ctx.num["eta"], tuple(cfg["window"]), cfg["step"], w)
    rep.artifacts.append(write_csv(ctx.out / "decay.csv", DECAY_COLUMNS, fit.rows()).name)
    rep.artifacts.append(write_csv(ctx.out / "decay_correlation.csv", ("t", "abs_correlation"),
                                   zip(fit.t, fit.correlation)).name)
    rep.artifacts.append(write_json(ctx.out / "decay_fit.json", fit.summary()).name)
    rep.checks.append(check_entry("decay_rate_positive", fit.rate > 0, fit.rate, 0.0, {"window": fit.window}))
    rep.checks.append(check_entry("decay_fit_quality", fit.quality >= 0.9, fit.quality, 0.9))
    rep.checks.append(check_entry("decay_persists", fit.decaying, fit.tail_rate, 0.5 * fit.rate,
                                  {"plateau_ratio": fit.plateau_ratio, "mean_level": fit.mean_level}))
    com = flow_derivative_check(v, cfg["commutation_t"], cfg["step"])
    rep.checks.append(check_entry("flow_derivative_commutation", com.passed, com.residual, com.tolerance,
                                  {"t": com.t, "status": com.status}))
    rep.constants.update({"eps_hat": fit.rate, "C_hat": fit.prefactor, "fit_quality": fit.quality})
    return rep


def cmd_correlation(ctx: Context) -> RunReport:
    rep = RunReport("correlation", {})
    cfg = ctx.scenario["correlation"]
    v = ctx.observable
    w = build_test_observable(ctx.grid, ObservableSpec(profile=cfg["w_profile"], mean_zero=False, order=1))
    rows = []
    for i, t in enumerate(cfg["t"]):
        q = correlation(v, w, t, "quadrature")
        mc = correlation(v, w, t, "monte-carlo", n=cfg["samples"], seed=ctx.scenario.seed + i)
        gap = abs(q.value - mc.value)
        bound = 5 * mc.stderr + 1e-3
        rep.checks.append(check_entry("quadrature_vs_monte_carlo", gap <= bound, gap, bound, {"t": t}))
        rows.append((t, q.value.real, q.value.imag, mc.value.real, mc.value.imag, mc.stderr))
    rep.artifacts.append(write_csv(ctx.out / "correlation.csv",
                                   ("t", "quadrature_re", "quadrature_im", "monte_carlo_re",
                                    "monte_carlo_im", "monte_carlo_stderr"), rows).name)
    return rep


HANDLERS = {
    "validate": cmd_validate, "spectrum": cmd_spectrum, "probe-dolgopyat": cmd_probe,
    "identities": cmd_identities, "transform": cmd_transform, "invert": cmd_invert,
    "decay": cmd_decay, "correlation": cmd_correlation,
}


def _run_one(ctx: Context, name: str) -> RunReport:
    start = time.perf_counter()
    try:
        rep = HANDLERS[name](ctx)
    except SemiflowError as exc:
        rep = RunReport(name, {}, [check_entry(f"{name}.error", False, detail=f"{type(exc).__name__}: {exc}")])
    rep.timings[name] = time.perf_counter() - start
    return rep


def resolve_jobs(jobs: int | None) -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(JOBS_ENV, f"expected an integer, got {env!r}") from None
    return max(1, jobs or 1)


def run_scenario(config_path, command: str, output_dir, seed: int | None = None,
                 jobs: int | None = None) -> RunReport:
    """Run ``command`` (or ``all``) for the scenario and write the report files."""
    if command != "all" and command not in HANDLERS:
        raise ConfigError("command", f"unknown command {command!r}")
    scenario = config_mod.load(config_path).with_seed(seed)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(scenario, out)
    names = list(COMMANDS) if command == "all" else [command]
    n_jobs = resolve_jobs(jobs)
    if n_jobs > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda n: _run_one(ctx, n), names))
    else:
        parts = [_run_one(ctx, n) for n in names]
    report = RunReport(command, scenario.echo())
    for part in parts:
        report.merge(part)
    emit_report(report, out, "json")
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semiflow-lab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS + ("all",))
    p.add_argument("--config", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed (u64)")
    p.add_argument("--jobs", type=int, default=None, help=f"worker count (env {JOBS_ENV} overrides)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = run_scenario(args.config, args.command, args.out, args.seed, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for c in report.checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']}")
    print(f"overall: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
