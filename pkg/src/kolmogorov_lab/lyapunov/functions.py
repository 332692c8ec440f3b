"""Exponential radial Lyapunov functions and their rate functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.errors import ParameterDomainError
from kolmogorov_lab.lyapunov.profile import RadialProfile


@dataclass(frozen=True, slots=True)
class RadialExponential:
    """``exp(rate * upsilon(x))``; derivatives are returned relative to the value."""

    profile: RadialProfile
    rate: float

    def log_value(self, x: np.ndarray) -> np.ndarray:
        return self.rate * self.profile.value(x)

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_value(x))

    def grad_ratio(self, x: np.ndarray) -> np.ndarray:
        return self.rate * self.profile.gradient(x)

    def hess_ratio(self, x: np.ndarray) -> np.ndarray:
        g = self.profile.gradient(x)
        return self.rate * (self.profile.hessian(x) + self.rate * g[..., :, None] * g[..., None, :])

    def laplacian_ratio(self, x: np.ndarray) -> np.ndarray:
        g = self.profile.gradient(x)
        return self.rate * (self.profile.laplacian(x) + self.rate * np.sum(g * g, axis=-1))


@dataclass(frozen=True, slots=True)
class StaticLyapunov:
    profile: RadialProfile
    delta: float
    M: float
    r_cert: float
    M_reference: float = 0.0
    argmax: dict[str, Any] = field(default_factory=dict)
    tail: dict[str, Any] = field(default_factory=dict)

    @property
    def function(self) -> RadialExponential:
        return RadialExponential(self.profile, self.delta)

    def log_value(self, x: np.ndarray) -> np.ndarray:
        return self.delta * self.profile.value(x)

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_value(x))

    def to_dict(self) -> dict[str, Any]:
        return {
            "beta": self.profile.beta,
            "profile": {"a": self.profile.a, "b_c": self.profile.b_c, "c": self.profile.c},
            "delta": self.delta,
            "M": self.M,
            "M_reference": self.M_reference,
            "R_cert": self.r_cert,
            "argmax": self.argmax,
            "tail": self.tail,
        }


@dataclass(frozen=True, slots=True)
class RateFunction:
    """Rate ``h(s) >= 0`` on ``(0, horizon)``.

    ``empirical``: piecewise constant on ``[edges[i], edges[i+1])`` followed by a
    tail ``tail_constant * (horizon - s)**tail_exponent`` on ``[edges[-1], horizon)``.
    ``analytic``: ``constant * (horizon - s)**exponent`` everywhere.
    """

    kind: str
    horizon: float
    edges: np.ndarray = field(default_factory=lambda: np.zeros(1))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    constant: float = 0.0
    exponent: float = 0.0

    @classmethod
    def zero(cls, horizon: float) -> RateFunction:
        return cls(kind="analytic", horizon=horizon, constant=0.0, exponent=0.0)

    @classmethod
    def analytic(cls, constant: float, exponent: float, horizon: float) -> RateFunction:
        return cls(kind="analytic", horizon=horizon, constant=float(constant), exponent=float(exponent))

    def __call__(self, s: np.ndarray | float) -> np.ndarray:
        s_arr = np.asarray(s, dtype=float)
        gap = np.maximum(self.horizon - s_arr, 0.0)
        if self.kind == "analytic":
            if self.constant == 0.0:
                return np.zeros_like(gap)
            with np.errstate(divide="ignore"):
                return np.where(gap > 0, self.constant * np.power(gap, self.exponent), np.inf if self.exponent < 0 else 0.0)
        idx = np.clip(np.searchsorted(self.edges, s_arr, side="right") - 1, 0, len(self.values) - 1)
        piece = self.values[idx]
        with np.errstate(divide="ignore"):
            tail = self.constant * np.power(np.where(gap > 0, gap, 1.0), self.exponent)
        tail = np.where(gap > 0, tail, np.inf if self.exponent < 0 else tail)
        return np.where(s_arr >= self.edges[-1], tail, piece)

    def _tail_integral(self, lo: float, hi: float) -> float:
        """Integral of ``constant * (horizon - s)**exponent`` over ``[lo, hi]``."""
        if hi <= lo or self.constant == 0.0:
            return 0.0
        e1 = self.exponent + 1.0
        if e1 <= 0:
            return float("inf")
        u_lo = self.horizon - lo
        u_hi = max(self.horizon - hi, 0.0)
        return float(self.constant * (u_lo**e1 - u_hi**e1) / e1)

    def integrate(self, a: float, b: float) -> float:
        """Exact ``int_a^b h(s) ds`` for ``0 <= a <= b <= horizon``."""
        b = min(b, self.horizon)
        if b <= a:
            return 0.0
        if self.kind == "analytic":
            return self._tail_integral(a, b)
        total = 0.0
        lo_edges = self.edges[:-1]
        hi_edges = self.edges[1:]
        overlap = np.clip(np.minimum(hi_edges, b) - np.maximum(lo_edges, a), 0.0, None)
        total += float(np.dot(overlap, self.values))
        if a < self.edges[0]:
            total += float(self.values[0]) * (min(b, self.edges[0]) - a)
        total += self._tail_integral(max(a, float(self.edges[-1])), b)
        return total

    def samples(self) -> dict[str, np.ndarray]:
        if self.kind == "empirical":
            return {"s": self.edges[:-1].copy(), "h": self.values.copy()}
        grid = np.linspace(0.0, self.horizon, 101)[:-1]
        return {"s": grid, "h": self(grid)}

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "horizon": self.horizon,
            "constant": self.constant,
            "exponent": self.exponent,
            "integral": self.integrate(0.0, self.horizon),
        }


@dataclass(frozen=True, slots=True)
class TimeDependentLyapunov:
    """``W(s, x) = exp(epsilon (horizon - s)^alpha upsilon(x))``."""

    profile: RadialProfile
    epsilon: float
    alpha: float
    horizon: float
    delta: float
    h: RateFunction
    h_analytic: RateFunction | None = None
    m: float = 0.0
    label: str = "W"

    def __post_init__(self) -> None:
        if not 0.0 < self.horizon <= 1.0:
            raise ParameterDomainError(f"horizon must lie in (0, 1], got {self.horizon}")

    @property
    def analytic_exponent(self) -> float:
        beta = self.profile.beta
        return self.alpha - (2.0 * beta + self.m - 2.0) / (beta + self.m - 2.0)

    def rate(self, s: float) -> float:
        gap = max(self.horizon - float(s), 0.0)
        return self.epsilon * gap**self.alpha

    def rate_derivative(self, s: float) -> float:
        """``d/ds`` of ``epsilon (horizon - s)^alpha``."""
        gap = max(self.horizon - float(s), 0.0)
        if gap == 0.0:
            return 0.0
        return -self.epsilon * self.alpha * gap ** (self.alpha - 1.0)

    def at(self, s: float) -> RadialExponential:
        return RadialExponential(self.profile, self.rate(s))

    def log_value(self, s: float, x: np.ndarray) -> np.ndarray:
        return self.rate(s) * self.profile.value(x)

    def value(self, s: float, x: np.ndarray) -> np.ndarray:
        return np.exp(self.log_value(s, x))

    def ds_ratio(self, s: float, x: np.ndarray) -> np.ndarray:
        """``d_s W / W``."""
        return self.rate_derivative(s) * self.profile.value(x)

    def integrate_rate(self, a: float, b: float) -> float:
        return self.h.integrate(a, b)

    def dominated_by(self, static: StaticLyapunov, s_values: np.ndarray, x: np.ndarray) -> bool:
        """``W(s, x) <= V(x)`` at every probe, compared in log space."""
        log_v = static.log_value(x)
        return all(bool(np.all(self.log_value(float(s), x) <= log_v + 1e-12 * np.abs(log_v))) for s in s_values)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "label": self.label,
            "beta": self.profile.beta,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "horizon": self.horizon,
            "delta": self.delta,
            "h": self.h.to_dict(),
            "analytic_exponent": self.analytic_exponent,
        }
        if self.h_analytic is not None:
            payload["h_analytic"] = self.h_analytic.to_dict()
        return payload
