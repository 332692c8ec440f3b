"""Truncation of unbounded diffusion coefficients.

``Q_n = phi_n Q + (1 - phi_n) eta I`` with ``phi_n(s, x) = phi(W1(s, x) / n)``;
``A_n`` keeps the drift of ``A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.approx.cutoff import CutoffProfile, make_cutoff
from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.errors import ParameterDomainError
from kolmogorov_lab.lyapunov.certify import verify_lyapunov
from kolmogorov_lab.lyapunov.functions import StaticLyapunov, TimeDependentLyapunov
from kolmogorov_lab.lyapunov.generator import generator_ratio
from kolmogorov_lab.operators.grid import ShellGrid
from kolmogorov_lab.operators.model import CoefficientField, diffusion_jacobian

_LOG_THREE = float(np.log(3.0))


@dataclass(frozen=True, slots=True)
class ApproximationScheme:
    n: int
    base: CoefficientField
    w1: TimeDependentLyapunov
    cutoff: CutoffProfile = field(default_factory=make_cutoff)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterDomainError(f"truncation level must be a positive integer, got {self.n}")

    def _scaled(self, s: float, x: np.ndarray) -> np.ndarray:
        """``W1(s, x) / n`` capped at 3 so it never overflows."""
        log_ratio = self.w1.log_value(s, x) - np.log(self.n)
        return np.exp(np.minimum(log_ratio, _LOG_THREE))

    def phi_n(self, s: float, x: np.ndarray) -> np.ndarray:
        return self.cutoff(self._scaled(s, np.asarray(x, dtype=float)))

    def shell_radii(self, s: float) -> tuple[float, float]:
        """Radii where ``W1(s, .)`` crosses ``n`` and ``2n`` (outer profile)."""
        rate = self.w1.rate(s)
        if rate == 0.0:
            return (np.inf, np.inf)
        beta = self.w1.profile.beta
        inner = max(np.log(self.n) / rate, 0.0) ** (1.0 / beta)
        outer = max(np.log(2.0 * self.n) / rate, 0.0) ** (1.0 / beta)
        return (float(max(inner, 0.0)), float(outer))

    def as_field(self) -> CoefficientField:
        base = self.base
        eta = base.eta
        d = base.d
        eye = np.eye(d)

        def diffusion(t: float, x: np.ndarray) -> np.ndarray:
            return approx_coefficients(self, t, x)

        def diffusion_grad(t: float, x: np.ndarray) -> np.ndarray:
            pts = np.asarray(x, dtype=float)
            u = self._scaled(t, pts)
            phi = self.cutoff(u)
            # (1/n) phi'(W1/n) d_k W1 = u phi'(u) rate d_k upsilon
            dphi = self.cutoff.slope_product(u)[..., None] * self.w1.rate(t) * self.w1.profile.gradient(pts)
            q = base.q(t, pts)
            jac = diffusion_jacobian(base, t, pts)
            return phi[..., None, None, None] * jac + (q - eta * eye)[..., :, :, None] * dphi[..., None, None, :]

        return CoefficientField(
            d=d,
            diffusion=diffusion,
            drift=base.drift,
            eta=eta,
            diffusion_grad=diffusion_grad,
            name=f"{base.name}_n{self.n}",
            autonomous=False,
            params=base.params,
        )


def approx_coefficients(scheme: ApproximationScheme, s: float, x: np.ndarray) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    phi = scheme.phi_n(s, pts)[..., None, None]
    q = scheme.base.q(s, pts)
    eye = np.eye(scheme.base.d)
    return phi * q + (1.0 - phi) * scheme.base.eta * eye


@dataclass(slots=True)
class ApproxCheck:
    check_id: str
    passed: bool
    margin: float
    detail: dict[str, Any] = field(default_factory=dict)


@dataclass(slots=True)
class ApproximationReport:
    n: int
    checks: list[ApproxCheck]
    identical_to_base: bool

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": "pass" if self.passed else "fail",
            "n": self.n,
            "identical_to_base": self.identical_to_base,
            "checks": {
                c.check_id: {"status": "pass" if c.passed else "fail", "margin": c.margin, **c.detail}
                for c in self.checks
            },
        }


def verify_approx(
    scheme: ApproximationScheme,
    V: StaticLyapunov,
    grid: ShellGrid,
) -> ApproximationReport:
    """Grid checks that truncation keeps the Lyapunov structure of ``A``."""
    logger = get_logger(__name__)
    approx = scheme.as_field()
    base = scheme.base
    eta = base.eta
    pts = grid.points()
    log_v = V.log_value(pts)
    log_m = np.log(V.M) if V.M > 0 else -np.inf
    fn = V.function

    gen_margin = np.inf
    ell_margin = np.inf
    q_sup = 0.0
    q_sup_phi = 1.0
    dq_sup = 0.0
    identical = True
    for s in grid.times:
        s = float(s)
        qn = approx.q(s, pts)
        phi = scheme.phi_n(s, pts)
        identical = identical and bool(np.all(phi == 1.0))

        ratio = generator_ratio(approx, fn, s, pts, diffusion=qn)
        with np.errstate(divide="ignore"):
            log_gen = np.where(ratio > 0, np.log(np.where(ratio > 0, ratio, 1.0)) + log_v, -np.inf)
        # compare log(A_n V) with log M; nonpositive values always pass
        slack = np.where(np.isfinite(log_gen), log_m - log_gen, np.inf)
        gen_margin = min(gen_margin, float(np.min(slack)))

        eig = np.linalg.eigvalsh(qn)
        ell_margin = min(ell_margin, float(np.min(eig[:, 0] - eta)) / eta)
        norms = eig[:, -1]
        idx = int(np.argmax(norms))
        if norms[idx] > q_sup:
            q_sup = float(norms[idx])
            q_sup_phi = float(phi[idx])
        dq_sup = max(dq_sup, float(np.max(np.abs(approx.diffusion_grad(s, pts)))))  # type: ignore[misc]

    W = scheme.w1
    same_rate = verify_lyapunov(W, approx, grid.restrict_times(0.0, W.horizon))
    checks = [
        ApproxCheck(
            "generator_bound",
            gen_margin >= -1e-10,
            gen_margin,
            {"M": V.M, "margin_kind": "log(M) - log(A_n V)"},
        ),
        ApproxCheck("ellipticity", ell_margin >= -1e-12, ell_margin, {"eta": eta}),
        ApproxCheck(
            "bounded_diffusion",
            bool(np.isfinite(q_sup)) and (q_sup_phi > 0.0 or q_sup <= eta * (1 + 1e-12)),
            q_sup,
            {"sup_norm": q_sup, "phi_at_sup": q_sup_phi},
        ),
        ApproxCheck("bounded_derivatives", bool(np.isfinite(dq_sup)), dq_sup, {"sup_abs": dq_sup}),
        ApproxCheck(
            "lyapunov_same_rate",
            same_rate.passed,
            same_rate.worst_margin,
            {"violation_count": same_rate.violation_count, "label": W.label},
        ),
    ]
    report = ApproximationReport(n=scheme.n, checks=checks, identical_to_base=identical)
    logger.info(
        "approximation_verified",
        extra={"n": scheme.n, "passed": report.passed, "identical_to_base": identical},
    )
    return report
