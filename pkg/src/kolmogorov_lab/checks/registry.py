"""Registry of verification checks a scenario may request."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from kolmogorov_lab.errors import InputError


@dataclass(frozen=True, slots=True)
class CheckSpec:
    check_id: str
    description: str
    operation: str
    needs: tuple[str, ...] = ()


@dataclass(slots=True)
class CheckResult:
    check_id: str
    passed: bool
    messages: list[str] = field(default_factory=list)
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": "pass" if self.passed else "fail",
            "messages": self.messages,
            "detail": self.detail,
        }


CHECKS: tuple[CheckSpec, ...] = (
    CheckSpec(
        "hypotheses_hyp51",
        "growth, ellipticity and coercivity conditions of the operator hold on the probe grid",
        "operators.check_hypotheses",
        ("growth",),
    ),
    CheckSpec(
        "lyapunov_static_lemma52",
        "V = exp(delta upsilon) has a finite generator bound M and a negative, decreasing tail bracket",
        "lyapunov.derive_static",
        ("growth",),
    ),
    CheckSpec(
        "lyapunov_certification_def26",
        "d_s W - A W >= -h W and its eta-Laplacian analogue hold at every grid point with the empirical rate",
        "lyapunov.verify_lyapunov",
        ("growth",),
    ),
    CheckSpec(
        "rate_integrability",
        "the integral of h over (0, t) is finite and stable under halving the time mesh",
        "lyapunov.derive_time_dependent",
        ("growth",),
    ),
    CheckSpec(
        "moment_bound_prop27",
        "Monte Carlo E W(s, X_t) and E V(X_t) stay below their Lyapunov bounds at 3 sigma slack",
        "sde.verify_moment_bound",
        ("growth",),
    ),
    CheckSpec(
        "fd_vs_closed_form",
        "finite-difference transition density matches the closed-form oracle in sup norm",
        "density.solve_fokker_planck",
        ("oracle", "fd"),
    ),
    CheckSpec(
        "kde_vs_closed_form",
        "kernel density estimate from simulated paths matches the closed-form oracle in L1",
        "density.kde_density",
        ("oracle", "kde"),
    ),
    CheckSpec(
        "kde_vs_fd",
        "the two density routes agree in L1 on the common grid",
        "density.compare_densities",
        ("fd", "kde"),
    ),
    CheckSpec(
        "tail_decay_thm53",
        "fitted log-density decay rate is at least delta0 (t-s)^alpha minus the tolerance at every gap",
        "bounds.fit_tail_decay",
        ("growth", "fd"),
    ),
    CheckSpec(
        "envelope_domination_thm53",
        "the kernel envelope fitted on the largest gap dominates every slice within the factor",
        "bounds.verify_envelope_domination",
        ("fd",),
    ),
    CheckSpec(
        "approx_convergence_prop29",
        "densities of truncated operators approach the untruncated density as the level grows",
        "approx.ApproximationScheme + density.compare_densities",
        ("growth", "fd", "approx"),
    ),
    CheckSpec(
        "approx_lemma28",
        "truncated operators keep ellipticity, the generator bound and the Lyapunov rate",
        "approx.verify_approx",
        ("growth", "approx"),
    ),
    CheckSpec(
        "exponent_calculators",
        "bootstrap, Moser, envelope-exponent and bound arithmetic reproduce their exact reference values",
        "regularity.bootstrap_exponents, regularity.moser_sequence, bounds.envelope_exponents",
    ),
    CheckSpec(
        "gamma_integrability",
        "Gamma(k, a, b) of the finite-difference density is finite (and matches the Gaussian value for OU)",
        "density.gamma_functional",
        ("fd",),
    ),
    CheckSpec(
        "weight_constants_hyp41",
        "constants c1 ... c8 of the weight system are finite and the weights are ordered",
        "bounds.weight_constants",
        ("growth",),
    ),
)

_BY_ID = {spec.check_id: spec for spec in CHECKS}


def list_checks() -> list[CheckSpec]:
    return sorted(CHECKS, key=lambda spec: spec.check_id)


def is_registered(check_id: str) -> bool:
    return check_id in _BY_ID


def get_check(check_id: str) -> CheckSpec:
    try:
        return _BY_ID[check_id]
    except KeyError:
        raise InputError(f"unknown check id {check_id!r}; run list-checks for the registry") from None
