"""Implementations of the registered checks."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from fractions import Fraction
from typing import Any

import numpy as np
from scipy import integrate

from kolmogorov_lab.approx.scheme import ApproximationScheme, verify_approx
from kolmogorov_lab.bounds.envelope import envelope_exponents
from kolmogorov_lab.bounds.rhs import general_bound_rhs, main_bounded_rhs
from kolmogorov_lab.bounds.tails import fit_tail_decay, verify_envelope_domination
from kolmogorov_lab.bounds.weights import WeightSystem, localized_constants, weight_constants
from kolmogorov_lab.checks.context import ScenarioContext
from kolmogorov_lab.checks.registry import CheckResult, get_check
from kolmogorov_lab.config.logging import check_scope, get_logger
from kolmogorov_lab.density.compare import compare_densities
from kolmogorov_lab.density.field import DensityField
from kolmogorov_lab.density.fokker_planck import lyapunov_box_radius
from kolmogorov_lab.density.gamma import gamma_functional
from kolmogorov_lab.density.oracles import ou_gamma_raw
from kolmogorov_lab.errors import CertificationError, InputError
from kolmogorov_lab.io.paths import moments_relative_path, rate_relative_path, trace_relative_path
from kolmogorov_lab.io.writer import table_plot_script
from kolmogorov_lab.lyapunov.derive import derive_time_dependent
from kolmogorov_lab.lyapunov.certify import verify_lyapunov
from kolmogorov_lab.lyapunov.functions import RateFunction, TimeDependentLyapunov
from kolmogorov_lab.operators.hypotheses import check_hypotheses
from kolmogorov_lab.regularity.bootstrap import bootstrap_exponents
from kolmogorov_lab.regularity.moser import moser_sequence, moser_threshold
from kolmogorov_lab.sde.moments import moment_curve, verify_moment_bound

CheckFn = Callable[[ScenarioContext], CheckResult]

_EXACT_TOL = 1e-12
_MONOTONE_SLACK = 1e-10
_QUAD_TOL = 1e-8


def _result(check_id: str, passed: bool, failures: Sequence[str], detail: dict[str, Any]) -> CheckResult:
    return CheckResult(check_id=check_id, passed=passed, messages=list(failures) or ["ok"], detail=detail)


def check_hypotheses_grid(ctx: ScenarioContext) -> CheckResult:
    report = check_hypotheses(ctx.field, ctx.params, ctx.probe_grid)
    failed = [f"{c.condition_id} violated by {c.worst_violation:.3g}" for c in report.conditions if not c.passed]
    return _result("hypotheses_hyp51", report.passed, failed, report.to_dict())


def check_static_lyapunov(ctx: ScenarioContext) -> CheckResult:
    check_id = "lyapunov_static_lemma52"
    try:
        static = ctx.static
    except CertificationError as exc:
        return _result(check_id, False, [str(exc)], {})
    params = ctx.params
    failures = []
    if not static.delta * params.beta * params.Lambda < params.kappa:
        failures.append("delta beta Lambda >= kappa")
    if not np.isfinite(static.M):
        failures.append("generator bound M is not finite")
    radii = static.r_cert * np.array([1.0, 2.0, 4.0])
    if not np.all(np.diff(static.profile.value_r(radii)) > 0):
        failures.append("upsilon does not grow beyond R_cert")
    return _result(check_id, not failures, failures, static.to_dict())


def check_lyapunov_certification(ctx: ScenarioContext) -> CheckResult:
    W, static, grid = ctx.lyapunov, ctx.static, ctx.probe_grid
    cert = verify_lyapunov(W, ctx.field, grid)
    pts = grid.points()
    dominated = W.dominated_by(static, grid.times, pts)
    at_horizon = bool(np.all(W.log_value(W.horizon, pts) == 0.0))
    ctx.writer.write_csv(rate_relative_path(W.label), W.h.samples())
    failures = []
    if not cert.passed:
        failures.append(f"{cert.violation_count} violations, worst margin {cert.worst_margin:.3g}")
    if not dominated:
        failures.append("W exceeds V at some probe")
    if not at_horizon:
        failures.append("W(t, x) != 1")
    detail = {
        "certification": cert.to_dict(),
        "W": W.to_dict(),
        "dominated_by_V": dominated,
        "W_at_horizon_is_one": at_horizon,
    }
    return _result("lyapunov_certification_def26", not failures, failures, detail)


def _alg_quadrature(h: RateFunction) -> float:
    """``int_0^t C (t-s)^e ds`` by algebraic-weight Gauss quadrature."""
    if h.constant == 0.0:
        return 0.0
    value, _ = integrate.quad(
        lambda s: h.constant, 0.0, h.horizon, weight="alg", wvar=(0.0, h.exponent)
    )
    return float(value)


def check_rate_integrability(ctx: ScenarioContext) -> CheckResult:
    spec = ctx.lyap_spec
    W = ctx.lyapunov
    horizon = W.horizon
    total = W.h.integrate(0.0, horizon)
    half = spec.grid.s_step / 2.0
    fine = derive_time_dependent(
        ctx.static,
        ctx.field,
        ctx.params,
        horizon,
        spec.eps_frac,
        spec.alpha,
        ctx.probe_grid.with_times(spec.grid.times(half)),
        label="W_half_step",
    )
    total_fine = fine.h.integrate(0.0, horizon)
    scale = max(abs(total), abs(total_fine))
    change = 0.0 if scale == 0.0 else abs(total_fine - total) / scale
    tol = ctx.scenario.verification.tolerances.quad_rel
    exponent = W.analytic_exponent
    failures = []
    if not (np.isfinite(total) and np.isfinite(total_fine)):
        failures.append("integral of h diverges")
    elif change > tol:
        failures.append(f"integral changes by {change:.3%} under mesh halving (tolerance {tol:.1%})")
    if not exponent > -1.0:
        failures.append(f"analytic exponent {exponent:g} is not integrable")
    detail: dict[str, Any] = {
        "integral": total,
        "integral_half_step": total_fine,
        "relative_change": change,
        "analytic_exponent": exponent,
        "h": W.h.to_dict(),
    }
    if W.h_analytic is not None and exponent > -1.0:
        closed = W.h_analytic.integrate(0.0, horizon)
        quad = _alg_quadrature(W.h_analytic)
        detail["analytic"] = {"closed_form": closed, "quadrature": quad}
        if abs(quad - closed) > _QUAD_TOL * max(1.0, abs(closed)):
            failures.append(f"quadrature {quad:.12g} disagrees with the antiderivative {closed:.12g}")
    return _result("rate_integrability", not failures, failures, detail)


def check_moment_bound(ctx: ScenarioContext) -> CheckResult:
    sim = ctx.scenario.simulation
    W, static = ctx.lyapunov, ctx.static
    curve = moment_curve(
        ctx.field,
        [W],
        ctx.starts,
        ctx.horizon,
        ctx.x0,
        sim.n_paths,
        ctx.seed,
        dt=sim.dt,
        scheme=sim.scheme,
        static=static,
        threads=ctx.threads,
    )
    report = verify_moment_bound(curve, W, V=static, M=static.M)
    columns = curve.to_columns()
    ctx.writer.write_csv(moments_relative_path(), columns)
    ctx.writer.write_plot_script(
        "moments",
        table_plot_script(moments_relative_path(), list(columns), "s", ["zeta_hat"], title="E W(s, X_t)"),
    )
    explosions = int(sum(curve.explosions))
    failures = [f"{e.kind} bound exceeded at s={e.s:g}" for e in report.entries if e.status == "fail"]
    if explosions:
        failures.append(f"inconclusive: {explosions} exploded paths")
    detail = {"bound": report.to_dict(), "curve": curve.to_dict()}
    return _result("moment_bound_prop27", not failures, failures, detail)


def _comparison_result(
    check_id: str, first: DensityField, second: DensityField, metric: str, tol: float, extra_failures: list[str]
) -> CheckResult:
    cmp = compare_densities(first, second)
    value = getattr(cmp, metric)
    failures = list(extra_failures)
    if value > tol:
        failures.append(f"{metric} distance {value:.3g} exceeds {tol:g}")
    detail = {"metric": metric, "tolerance": tol, "comparison": cmp.to_dict()}
    return _result(check_id, not failures, failures, detail)


def check_fd_oracle(ctx: ScenarioContext) -> CheckResult:
    fd = ctx.fd_density
    oracle = ctx.oracle_on(fd.grid)
    tol = ctx.scenario.verification.tolerances.fd_sup
    result = _comparison_result("fd_vs_closed_form", fd, oracle, "sup", tol, [])
    result.detail["mass"] = fd.mass().tolist()
    if fd.leakage is not None:
        result.detail["leakage"] = np.asarray(fd.leakage).tolist()
    return result


def check_kde_oracle(ctx: ScenarioContext) -> CheckResult:
    kde = ctx.kde_density
    existing = ctx.densities.get("oracle")
    grid_name = "oracle" if existing is None or existing.grid.same_as(kde.grid) else "oracle_kde"
    oracle = ctx.oracle_on(kde.grid, grid_name)
    explosions = int(sum(ens.explosions for ens in ctx.ensembles))
    extra = [f"{explosions} exploded paths"] if explosions else []
    tol = ctx.scenario.verification.tolerances.kde_l1
    result = _comparison_result("kde_vs_closed_form", kde, oracle, "l1", tol, extra)
    result.detail["ensembles"] = [ens.diagnostics() for ens in ctx.ensembles]
    return result


def check_kde_fd(ctx: ScenarioContext) -> CheckResult:
    tol = ctx.scenario.verification.tolerances.kde_fd_l1
    return _comparison_result("kde_vs_fd", ctx.kde_density, ctx.fd_density, "l1", tol, [])


def _tail_beta(ctx: ScenarioContext) -> float:
    beta = ctx.scenario.verification.tail_beta
    return float(beta) if beta is not None else ctx.envelope.beta


def check_tail_decay(ctx: ScenarioContext) -> CheckResult:
    fd = ctx.fd_density
    env = ctx.envelope
    beta = _tail_beta(ctx)
    tol = ctx.scenario.verification.tolerances.tail_rel
    half_width = min(min(abs(lo), abs(hi)) for lo, hi in ctx.scenario.density.box)
    failures = []
    fits = []
    for i in np.argsort(fd.gaps):
        gap = float(fd.gaps[i])
        fit = fit_tail_decay(fd.values[i], fd.grid, beta)
        required = env.delta0 * gap**env.alpha
        ok = fit.delta_hat >= (1.0 - tol) * required
        if not ok:
            failures.append(f"gap {gap:g}: delta_hat {fit.delta_hat:.4g} < {(1.0 - tol) * required:.4g}")
        radius = lyapunov_box_radius(env.delta0, env.alpha, beta, gap)
        row = ctx.tail_row(gap)
        row.update(
            {
                "delta_hat": fit.delta_hat,
                "delta_required": required,
                "fit_residual": fit.residual,
                "r0": fit.r0,
                "n_points": fit.n_points,
                "tail_status": "pass" if ok else "fail",
            }
        )
        fits.append(
            {
                "gap": gap,
                **fit.to_dict(),
                "delta_required": required,
                "box_radius_level30": radius,
                "box_reaches_level30": half_width >= radius,
                "status": "pass" if ok else "fail",
            }
        )
    detail = {"beta": beta, "delta0": env.delta0, "alpha": env.alpha, "tolerance": tol, "fits": fits}
    return _result("tail_decay_thm53", not failures, failures, detail)


def check_envelope_domination(ctx: ScenarioContext) -> CheckResult:
    factor = ctx.scenario.verification.tolerances.domination_factor
    report = verify_envelope_domination(ctx.fd_density, ctx.envelope, factor=factor)
    for entry in report.entries:
        row = ctx.tail_row(entry.gap)
        row["domination_factor"] = entry.factor
        row["domination_status"] = "pass" if entry.passed else "fail"
    failures = [f"gap {e.gap:g}: ratio {e.factor:.4g} > {factor:g}" for e in report.entries if not e.passed]
    return _result("envelope_domination_thm53", report.passed, failures, report.to_dict())


def _approx_starts(ctx: ScenarioContext) -> list[float]:
    lo, hi = ctx.approx_spec.window
    starts = [float(s) for s in ctx.starts if lo - 1e-12 <= s <= hi + 1e-12]
    if not starts:
        raise InputError(f"no simulation start time inside the approximation window [{lo:g}, {hi:g}]")
    return starts


def check_approx_convergence(ctx: ScenarioContext) -> CheckResult:
    spec = ctx.approx_spec
    density_spec = ctx.scenario.density
    tol = ctx.scenario.verification.tolerances.approx_sup
    starts = _approx_starts(ctx)
    base = ctx.fd_density
    region = spec.region or density_spec.box
    half_width = max(max(abs(lo), abs(hi)) for lo, hi in density_spec.box)
    pts = ctx.probe_grid.points()
    eta = ctx.field.eta
    rows = []
    for n in ctx.approx_levels:
        scheme = ApproximationScheme(n, ctx.field, ctx.lyapunov)
        approx_field = scheme.as_field()
        dens = ctx.family_density(starts, approx_field)
        ctx.densities[f"fd_n{n}"] = dens
        cmp = compare_densities(dens, base, region)
        inner = min(scheme.shell_radii(s)[0] for s in starts)
        ell = min(float(np.min(np.linalg.eigvalsh(approx_field.q(float(s), pts))[:, 0])) for s in ctx.probe_grid.times)
        rows.append(
            {
                "n": n,
                "sup": cmp.sup,
                "l1": cmp.l1,
                "shell_inner_radius": inner,
                "shell_outside_box": bool(inner > half_width),
                "ellipticity_margin": (ell - eta) / eta,
            }
        )
    failures = []
    for prev, cur in zip(rows, rows[1:]):
        if cur["sup"] > prev["sup"] + _MONOTONE_SLACK:
            failures.append(f"sup distance grows from n={prev['n']} to n={cur['n']}")
    outside = [row for row in rows if row["shell_outside_box"]]
    if outside and outside[-1]["sup"] > tol:
        failures.append(f"n={outside[-1]['n']}: sup distance {outside[-1]['sup']:.3g} exceeds {tol:g}")
    for row in rows:
        if row["ellipticity_margin"] < -_EXACT_TOL:
            failures.append(f"n={row['n']}: Q_n loses ellipticity")
    detail = {"starts": starts, "region": [list(side) for side in region], "tolerance": tol, "levels": rows}
    return _result("approx_convergence_prop29", not failures, failures, detail)


def check_approx_properties(ctx: ScenarioContext) -> CheckResult:
    reports = [
        verify_approx(ApproximationScheme(n, ctx.field, ctx.lyapunov), ctx.static, ctx.probe_grid)
        for n in ctx.approx_levels
    ]
    failures = [
        f"n={rep.n}: {check.check_id} failed (margin {check.margin:.3g})"
        for rep in reports
        for check in rep.checks
        if not check.passed
    ]
    detail = {"levels": {str(rep.n): rep.to_dict() for rep in reports}}
    return _result("approx_lemma28", not failures, failures, detail)


def _reference_values() -> list[tuple[str, float, float]]:
    trace = bootstrap_exponents(1, 2, 1.2, 2.18)
    threshold = moser_threshold(1.0, 1.0)
    moser = moser_sequence(1.0, 1.0, 1.0, 10)
    e1, e2 = envelope_exponents(3.0, 0.0, 2.5, 4.0)
    localized = localized_constants([1.0] * 8, 1.0)
    window = (0.1, 0.2, 0.5, 0.5 + 1.0 / 6.0)
    ones = WeightSystem.from_constants([1.0] * 8, 4.0, window)
    rhs = general_bound_rhs(ones, 1.0, 1.0, 1.0, 1.0)
    return [
        ("bootstrap.r2", float(1 / trace.inverse_r[1]), 12 / 7),
        ("bootstrap.r3", float(1 / trace.inverse_r[2]), 24 / 11),
        ("bootstrap.limit_inverse_r", float(trace.limit_inverse), float(Fraction(1, 3))),
        ("moser.l_bar", threshold.level, 4.0),
        ("moser.y0_star", threshold.y0_star, 1.0),
        ("moser.y1", moser.y[1], 0.25),
        ("moser.y2", moser.y[2], 0.0625),
        ("moser.y3", moser.y[3], 0.015625),
        ("envelope.e1", e1, -6.5),
        ("envelope.e2", e2, -5.5),
        ("localized.c2", localized[0], 2.0),
        ("localized.c3", localized[1], 2.0),
        ("localized.c5", localized[2], 5.0),
        ("general_rhs.all_ones", rhs.total, 332367.0),
    ]


def check_exponent_calculators(ctx: ScenarioContext) -> CheckResult:
    entries = []
    failures = []
    for name, got, want in _reference_values():
        ok = abs(got - want) <= _EXACT_TOL * max(1.0, abs(want))
        entries.append({"name": name, "value": got, "expected": want, "status": "pass" if ok else "fail"})
        if not ok:
            failures.append(f"{name}: {got!r} != {want!r}")
    detail: dict[str, Any] = {"reference": entries}
    reg = ctx.scenario.verification.regularity
    if reg.bootstrap is not None:
        b = reg.bootstrap
        trace = bootstrap_exponents(b.d, b.k, b.r1, b.target_r)
        ctx.writer.write_csv(trace_relative_path("bootstrap"), trace.to_columns())
        detail["bootstrap"] = trace.to_dict()
    if reg.moser is not None:
        m = reg.moser
        moser = moser_sequence(m.nu_d, m.alpha_m, m.y0, m.n_max)
        ctx.writer.write_csv(trace_relative_path("moser"), moser.to_columns())
        detail["moser"] = moser.to_dict()
    return _result("exponent_calculators", not failures, failures, detail)


def check_gamma(ctx: ScenarioContext) -> CheckResult:
    spec = ctx.scenario.verification.gamma
    a, b = spec.window
    if not b < ctx.horizon:
        raise InputError(f"gamma window end {b:g} must lie below t = {ctx.horizon:g}")
    nodes = np.linspace(a, b, spec.nodes)
    density = ctx.family_density(nodes)
    value = gamma_functional(density, ctx.field, spec.k, (a, b))
    failures = []
    detail: dict[str, Any] = {"gamma": value.to_dict(), "nodes": int(nodes.size)}
    if not np.isfinite(value.raw):
        failures.append("Gamma is infinite")
    op = ctx.scenario.operator
    if op.family == "ou" and spec.k == 2:
        reference = float(np.sqrt(ou_gamma_raw(op.theta, op.q, ctx.x0, ctx.horizon, a, b, 2)))
        tol = ctx.scenario.verification.tolerances.gamma_abs
        detail["closed_form"] = reference
        if abs(value.value - reference) > tol:
            failures.append(f"Gamma {value.value:.6g} differs from the Gaussian value {reference:.6g} by more than {tol:g}")
    return _result("gamma_integrability", not failures, failures, detail)


def _zeta_moments(ctx: ScenarioContext, ws: WeightSystem) -> dict[str, float]:
    """``sup zeta1`` and the window integrals of ``zeta1``, ``zeta2`` from finite-difference densities."""
    static = ctx.static
    a0, b0 = ws.a0, ws.b0
    nodes = np.linspace(a0, b0, ctx.scenario.verification.gamma.nodes)
    density = ctx.family_density(nodes)
    pts = density.grid.points()
    weights = [
        TimeDependentLyapunov(
            profile=static.profile,
            epsilon=eps,
            alpha=ws.alpha,
            horizon=ws.horizon,
            delta=static.delta,
            h=RateFunction.zero(ws.horizon),
            m=ctx.params.m,
            label=f"W{i + 1}",
        )
        for i, eps in enumerate(ws.epsilons[1:])
    ]
    zeta = np.empty((2, nodes.size))
    for j, s in enumerate(nodes):
        rho = density.values[j].reshape(-1)
        for i, w in enumerate(weights):
            with np.errstate(over="ignore"):
                integrand = np.exp(w.log_value(float(s), pts)) * rho
            zeta[i, j] = float(density.grid.integrate(integrand.reshape(density.grid.shape)))
    return {
        "sup_zeta1": float(np.max(zeta[0])),
        "int_zeta1": float(integrate.trapezoid(zeta[0], nodes)),
        "int_zeta2": float(integrate.trapezoid(zeta[1], nodes)),
    }


def check_weight_constants(ctx: ScenarioContext) -> CheckResult:
    spec = ctx.lyap_spec
    wspec = spec.weights
    static = ctx.static
    epsilons = tuple(frac * static.delta for frac in wspec.eps_fracs)
    window = wspec.window or ctx.default_window()
    ws = weight_constants(
        ctx.field, ctx.params, static, epsilons, spec.alpha, wspec.k, window, ctx.probe_grid, horizon=ctx.horizon
    )
    failures = [f"{cid} is not finite" for cid, value in ws.constants.items() if not np.isfinite(value)]
    if not ws.ordering_holds:
        failures.append("w <= W1 <= W2 fails at some probe")
    if not np.isfinite(ws.c0):
        failures.append("W2 is not dominated by a power of V")
    localized = localized_constants(ws.constants, ctx.field.eta)
    detail: dict[str, Any] = {
        "weights": ws.to_dict(),
        "localized": {"c2": localized[0], "c3": localized[1], "c5": localized[2]},
    }
    if ctx.scenario.density.uses_fd and not failures:
        zetas = _zeta_moments(ctx, ws)
        general = general_bound_rhs(ws, zetas["sup_zeta1"], zetas["int_zeta1"], zetas["int_zeta2"], wspec.C)
        bounded = main_bounded_rhs(ws, zetas["sup_zeta1"], zetas["int_zeta1"], zetas["int_zeta2"], wspec.C)
        detail["moments"] = zetas
        detail["rhs"] = {"general": general.to_dict(), "bounded": bounded.to_dict()}
        if not np.isfinite(general.total):
            failures.append("weighted density bound is not finite")
    return _result("weight_constants_hyp41", not failures, failures, detail)


CHECK_RUNNERS: dict[str, CheckFn] = {
    "hypotheses_hyp51": check_hypotheses_grid,
    "lyapunov_static_lemma52": check_static_lyapunov,
    "lyapunov_certification_def26": check_lyapunov_certification,
    "rate_integrability": check_rate_integrability,
    "moment_bound_prop27": check_moment_bound,
    "fd_vs_closed_form": check_fd_oracle,
    "kde_vs_closed_form": check_kde_oracle,
    "kde_vs_fd": check_kde_fd,
    "tail_decay_thm53": check_tail_decay,
    "envelope_domination_thm53": check_envelope_domination,
    "approx_convergence_prop29": check_approx_convergence,
    "approx_lemma28": check_approx_properties,
    "exponent_calculators": check_exponent_calculators,
    "gamma_integrability": check_gamma,
    "weight_constants_hyp41": check_weight_constants,
}


def run_checks(ctx: ScenarioContext, check_ids: Sequence[str]) -> list[CheckResult]:
    """Run the requested checks once each, in alphabetical id order."""
    logger = get_logger(__name__)
    ordered = sorted(set(check_ids))
    results = []
    for check_id in ordered:
        get_check(check_id)
        with check_scope(check_id):
            result = CHECK_RUNNERS[check_id](ctx)
        logger.info(
            "check_complete",
            extra={"check": check_id, "status": "pass" if result.passed else "fail", "messages": result.messages},
        )
        results.append(result)
    return results
