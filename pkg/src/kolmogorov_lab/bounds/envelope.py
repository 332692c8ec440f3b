"""Kernel tail envelope ``C (g^e1 + g^e2) exp(-delta0 g^alpha |y|^beta)`` with ``g = t - s``."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from kolmogorov_lab.errors import ParameterDomainError
from kolmogorov_lab.operators.model import GrowthParams

DELTA0_FRACTION = 0.8


def envelope_exponents(p: float, m: float, alpha: float, k: float, d: int | None = None) -> tuple[float, float]:
    """``e1 = 1 - alpha k max(p, m) / beta`` and ``e2 = 2 - alpha k (p + (m-1)_+) / beta``."""
    if not p > max(m - 1.0, 1.0):
        raise ParameterDomainError(f"p must exceed max(m-1, 1) = {max(m - 1.0, 1.0):g}, got {p:g}")
    beta = p + 1.0 - m
    threshold = beta / (p - 1.0)
    if not alpha > threshold:
        raise ParameterDomainError(f"alpha must exceed (p+1-m)/(p-1) = {threshold:g}, got {alpha:g}")
    if d is not None and not k > d + 2:
        raise ParameterDomainError(f"k must exceed d+2 = {d + 2}, got {k:g}")
    e1 = 1.0 - alpha * k * max(p, m) / beta
    e2 = 2.0 - alpha * k * (p + max(m - 1.0, 0.0)) / beta
    return e1, e2


@dataclass(frozen=True, slots=True)
class KernelEnvelope:
    delta0: float
    alpha: float
    beta: float
    e1: float
    e2: float
    c_tilde: float = 1.0
    k: float | None = None
    fit: dict[str, Any] = field(default_factory=dict)

    def log_shape(self, gap: float, r: np.ndarray) -> np.ndarray:
        """``log`` of the envelope with ``C = 1``."""
        prefactor = np.logaddexp(self.e1 * np.log(gap), self.e2 * np.log(gap))
        return prefactor - self.delta0 * gap**self.alpha * np.asarray(r, dtype=float) ** self.beta

    def with_constant(self, c_tilde: float, **fit: Any) -> KernelEnvelope:
        return replace(self, c_tilde=float(c_tilde), fit=dict(fit))

    def to_dict(self) -> dict[str, Any]:
        return {
            "delta0": self.delta0,
            "alpha": self.alpha,
            "beta": self.beta,
            "k": self.k,
            "e1": self.e1,
            "e2": self.e2,
            "C_tilde": self.c_tilde,
            "fit": self.fit,
        }


def kernel_envelope(
    params: GrowthParams,
    alpha: float,
    k: float,
    d: int,
    *,
    delta0: float | None = None,
    c_tilde: float = 1.0,
) -> KernelEnvelope:
    """Envelope for an operator with the given growth constants.

    ``delta0`` defaults to ``0.8 kappa / (Lambda beta)`` and must lie strictly
    below ``kappa / (Lambda beta)``.
    """
    e1, e2 = envelope_exponents(params.p, params.m, alpha, k, d)
    upper = params.kappa / (params.Lambda * params.beta)
    value = DELTA0_FRACTION * upper if delta0 is None else float(delta0)
    if not 0.0 < value < upper:
        raise ParameterDomainError(f"delta0 must lie in (0, kappa/(Lambda beta) = {upper:g}), got {value:g}")
    return KernelEnvelope(delta0=value, alpha=alpha, beta=params.beta, e1=e1, e2=e2, c_tilde=c_tilde, k=k)


def brownian_envelope(q: float, d: int = 1) -> KernelEnvelope:
    """Exact envelope of the heat kernel of ``q Delta`` started at the origin.

    ``(4 pi q g)^(-d/2) exp(-|y|^2 / (4 q g))`` written as ``C (g^e + g^e) exp(-delta0 g^-1 |y|^2)``.
    """
    exponent = -d / 2.0
    return KernelEnvelope(
        delta0=1.0 / (4.0 * q),
        alpha=-1.0,
        beta=2.0,
        e1=exponent,
        e2=exponent,
        c_tilde=0.5 * (4.0 * np.pi * q) ** (-d / 2.0),
    )


def eval_envelope(env: KernelEnvelope, t: float, s: float, y: np.ndarray | float) -> np.ndarray:
    """Envelope at ``|y|`` (``y`` a scalar radius or points of shape ``(..., d)``)."""
    if not 0.0 <= s < t <= 1.0:
        raise ParameterDomainError(f"need 0 <= s < t <= 1, got s={s}, t={t}")
    arr = np.asarray(y, dtype=float)
    r = np.abs(arr) if arr.ndim == 0 else np.linalg.norm(arr, axis=-1)
    return env.c_tilde * np.exp(env.log_shape(t - s, r))


def canonical_window(s: float, t: float) -> tuple[float, float, float]:
    """``(a0, b, b0)`` with ``b0 - b = (t-s)/6`` and ``t - b0 = (t-s)/2``."""
    if not 0.0 < s < t:
        raise ParameterDomainError(f"need 0 < s < t, got s={s}, t={t}")
    gap = t - s
    a0 = max(s - gap / 2.0, s / 2.0)
    return a0, s + gap / 3.0, s + gap / 2.0
