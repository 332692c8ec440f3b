"""Construction of the static and time-dependent Lyapunov functions."""

from __future__ import annotations

from typing import Any

import numpy as np

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.errors import CertificationError, ParameterDomainError
from kolmogorov_lab.lyapunov.functions import (
    RadialExponential,
    RateFunction,
    StaticLyapunov,
    TimeDependentLyapunov,
)
from kolmogorov_lab.lyapunov.generator import generator_ratio
from kolmogorov_lab.lyapunov.profile import smooth_radial_power
from kolmogorov_lab.operators.grid import ShellGrid
from kolmogorov_lab.operators.model import CoefficientField, GrowthParams

SAFETY_FACTOR = 1.05


def _check_fraction(name: str, value: float) -> None:
    if not 0.0 < value < 1.0:
        raise ParameterDomainError(f"{name} must lie strictly between 0 and 1, got {value}")


def field_bracket(
    field: CoefficientField, fn: RadialExponential, t: float, x: np.ndarray, *, reference: bool = False
) -> np.ndarray:
    """Bracket ``B`` with ``A V = rate beta |x|^(beta-2) V B`` for ``|x| >= 1``."""
    beta = fn.profile.beta
    r2 = np.sum(x * x, axis=-1)
    r = np.sqrt(r2)
    f = field.f(t, x)
    if reference:
        trace = field.eta * field.d * np.ones_like(r)
        qxx = field.eta * r2
    else:
        q = field.q(t, x)
        trace = np.trace(q, axis1=-2, axis2=-1)
        qxx = np.einsum("...i,...ij,...j->...", x, q, x)
    return (
        trace
        + (beta - 2.0) * qxx / r2
        + fn.rate * beta * r**beta * qxx / r2
        + np.sum(f * x, axis=-1)
    )


def hypothesis_bracket(params: GrowthParams, d: int, delta: float, r: float) -> float:
    """Worst case of :func:`field_bracket` allowed by the growth constants."""
    beta = params.beta
    growth = params.Lambda * (1.0 + r**params.m)
    return float(
        (d + max(beta - 2.0, 0.0)) * growth
        + delta * beta * r**beta * growth
        - params.kappa * r ** (params.p + 1.0)
    )


def _certify_tail(
    field: CoefficientField,
    fn: RadialExponential,
    grid: ShellGrid,
    params: GrowthParams,
    r_cert: float,
) -> dict[str, Any]:
    logger = get_logger(__name__)
    radii = (r_cert, 2.0 * r_cert)
    record: dict[str, Any] = {"radii": list(radii)}
    for reference in (False, True):
        key = "reference" if reference else "generator"
        worst = []
        for radius in radii:
            pts = radius * grid.directions
            worst.append(
                max(float(np.max(field_bracket(field, fn, float(t), pts, reference=reference))) for t in grid.times)
            )
        record[key] = worst
        if not (worst[0] < 0.0 and worst[1] < worst[0]):
            logger.warning(
                "tail_certification_failed",
                extra={"bracket": worst, "radii": list(radii), "reference": reference},
            )
            raise CertificationError(
                f"tail bracket is not negative and decreasing at R={r_cert:g} and 2R "
                f"(values {worst[0]:.6g}, {worst[1]:.6g}); increase the certification radius"
            )
    record["hypothesis_bracket"] = [hypothesis_bracket(params, field.d, fn.rate, r) for r in radii]
    return record


def derive_static(
    field: CoefficientField,
    params: GrowthParams,
    delta_frac: float,
    grid: ShellGrid,
    *,
    r_cert: float | None = None,
) -> StaticLyapunov:
    """``V = exp(delta upsilon)`` with ``delta = delta_frac * kappa / (beta Lambda)``.

    ``M`` is the grid maximum of ``A(t) V`` and of ``eta Delta V + F . grad V``;
    beyond the grid the sign of ``A V`` is certified at ``R_cert`` and ``2 R_cert``.
    """
    logger = get_logger(__name__)
    _check_fraction("delta_frac", delta_frac)
    profile = smooth_radial_power(params.beta)
    delta = delta_frac * params.kappa / (params.beta * params.Lambda)
    fn = RadialExponential(profile, delta)
    pts = grid.points()
    log_v = fn.log_value(pts)

    best = {False: (-np.inf, 0.0, []), True: (-np.inf, 0.0, [])}
    for t in grid.times:
        for reference in (False, True):
            ratio = generator_ratio(field, fn, float(t), pts, reference=reference)
            # only positive values can set the maximum; compare in log space
            with np.errstate(divide="ignore"):
                log_pos = np.where(ratio > 0, np.log(np.where(ratio > 0, ratio, 1.0)) + log_v, -np.inf)
            idx = int(np.argmax(log_pos))
            if log_pos[idx] > best[reference][0]:
                best[reference] = (float(log_pos[idx]), float(t), pts[idx].tolist())

    def _to_value(log_m: float) -> float:
        return 0.0 if log_m == -np.inf else float(np.exp(log_m))

    M_gen = _to_value(best[False][0])
    M_ref = _to_value(best[True][0])
    M = max(M_gen, M_ref)
    if not np.isfinite(M):
        raise CertificationError("grid maximum of A V overflows; shrink the grid radius or delta")

    radius = max(1.0, grid.r_max if r_cert is None else r_cert)
    tail = _certify_tail(field, fn, grid, params, radius)
    static = StaticLyapunov(
        profile=profile,
        delta=delta,
        M=M,
        r_cert=radius,
        M_reference=M_ref,
        argmax={
            "generator": {"t": best[False][1], "x": best[False][2]},
            "reference": {"t": best[True][1], "x": best[True][2]},
        },
        tail=tail,
    )
    logger.info(
        "static_lyapunov_derived",
        extra={"delta": delta, "M": M, "R_cert": radius, "beta": params.beta},
    )
    return static


def slice_rate(
    W: TimeDependentLyapunov,
    field: CoefficientField,
    s: float,
    pts: np.ndarray,
    *,
    diffusion: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise ``-(d_s W - A W) / W`` and its ``eta Delta + F . grad`` analogue."""
    fn = W.at(s)
    ds = W.ds_ratio(s, pts)
    gen = generator_ratio(field, fn, s, pts, diffusion=diffusion)
    ref = generator_ratio(field, fn, s, pts, reference=True)
    return gen - ds, ref - ds


def derive_time_dependent(
    static: StaticLyapunov,
    field: CoefficientField,
    params: GrowthParams,
    horizon: float,
    eps_frac: float | None,
    alpha: float,
    grid: ShellGrid,
    *,
    epsilon: float | None = None,
    label: str = "W",
    safety: float = SAFETY_FACTOR,
) -> TimeDependentLyapunov:
    """``W(s, x) = exp(epsilon (t-s)^alpha upsilon(x))`` with its empirical rate.

    The rate is piecewise constant on cells centred at the grid's time slices,
    equal to ``safety`` times the slice supremum; after the last slice it follows
    ``C (t-s)^e`` with the analytic exponent ``e``, anchored at that slice.
    """
    logger = get_logger(__name__)
    threshold = params.alpha_threshold
    if not alpha > threshold:
        raise ParameterDomainError(
            f"alpha must exceed (p+1-m)/(p-1) = {threshold:g}, got {alpha:g}"
        )
    if not 0.0 < horizon <= 1.0:
        raise ParameterDomainError(f"horizon must lie in (0, 1], got {horizon}")
    if epsilon is None:
        if eps_frac is None:
            raise ParameterDomainError("either eps_frac or epsilon is required")
        _check_fraction("eps_frac", eps_frac)
        epsilon = eps_frac * static.delta
    if not 0.0 < epsilon < static.delta:
        raise ParameterDomainError(f"epsilon must lie in (0, delta={static.delta:g}), got {epsilon:g}")

    draft = TimeDependentLyapunov(
        profile=static.profile,
        epsilon=epsilon,
        alpha=alpha,
        horizon=horizon,
        delta=static.delta,
        h=RateFunction.zero(horizon),
        m=params.m,
        label=label,
    )
    exponent = draft.analytic_exponent
    slices = np.unique(grid.times[(grid.times >= 0.0) & (grid.times < horizon)])
    if slices.size == 0:
        raise ParameterDomainError("grid has no time slice inside [0, horizon)")
    pts = grid.points()
    sup = np.empty(slices.size)
    for i, s in enumerate(slices):
        gen, ref = slice_rate(draft, field, float(s), pts)
        sup[i] = max(0.0, float(np.max(gen)), float(np.max(ref)))

    values = safety * sup
    edges = np.empty(slices.size + 1)
    edges[0] = min(0.0, float(slices[0]))
    edges[1:-1] = 0.5 * (slices[:-1] + slices[1:])
    edges[-1] = 0.5 * (slices[-1] + horizon)
    last_gap = horizon - float(slices[-1])
    if exponent < 0:
        tail_constant = values[-1] / last_gap**exponent
        tail_exponent = exponent
    else:
        tail_constant = values[-1]
        tail_exponent = 0.0
    h = RateFunction(
        kind="empirical",
        horizon=horizon,
        edges=edges,
        values=values,
        constant=float(tail_constant),
        exponent=float(tail_exponent),
    )

    gaps = horizon - slices
    fitted = float(np.max(values / gaps**exponent))
    h_analytic = RateFunction.analytic(fitted, exponent, horizon)
    W = TimeDependentLyapunov(
        profile=static.profile,
        epsilon=epsilon,
        alpha=alpha,
        horizon=horizon,
        delta=static.delta,
        h=h,
        h_analytic=h_analytic,
        m=params.m,
        label=label,
    )
    logger.info(
        "time_dependent_lyapunov_derived",
        extra={
            "label": label,
            "epsilon": epsilon,
            "alpha": alpha,
            "slices": int(slices.size),
            "h_integral": h.integrate(0.0, horizon),
            "analytic_exponent": exponent,
        },
    )
    return W
