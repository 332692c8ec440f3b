"""Worst-case Moser level-set recursion ``y_{n+1} = (4 nu / l^2) 4^n y_n^(1+a)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from kolmogorov_lab.errors import ParameterDomainError

CONVERGED_LEVEL = 1e-12
DIVERGED_LEVEL = 1e150
GEOMETRIC_RATIO = 0.9
RATIO_WINDOW = 3


@dataclass(frozen=True, slots=True)
class MoserThreshold:
    level: float
    y0_star: float
    sup_constant: float

    def to_dict(self) -> dict[str, float]:
        return {"l_bar": self.level, "y0_star": self.y0_star, "C": self.sup_constant}


def moser_threshold(nu_d: float, alpha_m: float) -> MoserThreshold:
    """``l = max(1, 2^(1+1/a) sqrt(nu))`` and ``y0* = (4 nu / l^2)^(-1/a) 4^(-1/a^2)``; ``C = 2 l``."""
    if not nu_d > 0 or not alpha_m > 0:
        raise ParameterDomainError(f"need nu_d > 0 and alpha_m > 0, got {nu_d}, {alpha_m}")
    level = max(1.0, 2.0 ** (1.0 + 1.0 / alpha_m) * math.sqrt(nu_d))
    y0_star = (4.0 * nu_d / level**2) ** (-1.0 / alpha_m) * 4.0 ** (-1.0 / alpha_m**2)
    return MoserThreshold(level=level, y0_star=y0_star, sup_constant=2.0 * level)


@dataclass(slots=True)
class MoserTrace:
    nu_d: float
    alpha_m: float
    threshold: MoserThreshold
    y: list[float] = field(default_factory=list)
    converged: bool = False
    reason: str = ""

    @property
    def levels(self) -> list[float]:
        l_bar = self.threshold.level
        return [2.0 * l_bar - 2.0 ** (-n) * l_bar for n in range(len(self.y))]

    def to_columns(self) -> dict[str, list[Any]]:
        return {"n": list(range(len(self.y))), "l_n": self.levels, "y_n": self.y}

    def to_dict(self) -> dict[str, Any]:
        return {
            "nu_d": self.nu_d,
            "alpha_m": self.alpha_m,
            "threshold": self.threshold.to_dict(),
            "y": self.y,
            "levels": self.levels,
            "converged": self.converged,
            "reason": self.reason,
        }


def _geometric_decay(y: list[float]) -> bool:
    if len(y) < RATIO_WINDOW + 1 or any(v <= 0 for v in y[-RATIO_WINDOW - 1 :]):
        return False
    ratios = [y[i + 1] / y[i] for i in range(len(y) - RATIO_WINDOW - 1, len(y) - 1)]
    return all(r <= GEOMETRIC_RATIO for r in ratios) and all(b <= a for a, b in zip(ratios, ratios[1:]))


def moser_sequence(nu_d: float, alpha_m: float, y0: float, n_max: int = 60) -> MoserTrace:
    """Iterate the recursion with equality and classify the observed behaviour.

    The verdict is ``converged`` when ``y`` reaches ``1e-12`` or the last
    ratios are a non-increasing sequence bounded by 0.9; iteration stops early
    once ``y`` exceeds ``1e150``.
    """
    if y0 < 0:
        raise ParameterDomainError(f"y0 must be >= 0, got {y0}")
    if n_max < 1:
        raise ParameterDomainError("n_max must be >= 1")
    threshold = moser_threshold(nu_d, alpha_m)
    factor = 4.0 * nu_d / threshold.level**2
    trace = MoserTrace(nu_d=nu_d, alpha_m=alpha_m, threshold=threshold, y=[float(y0)])
    if y0 == 0.0:
        # zero is a fixed point of the recursion
        trace.y = [0.0] * (n_max + 1)
        trace.converged, trace.reason = True, "below_level"
        return trace
    y = float(y0)
    for n in range(n_max):
        if y <= CONVERGED_LEVEL:
            trace.converged, trace.reason = True, "below_level"
            return trace
        if y > DIVERGED_LEVEL:
            trace.reason = "diverged"
            return trace
        try:
            y = factor * 4.0**n * y ** (1.0 + alpha_m)
        except OverflowError:
            y = math.inf
        trace.y.append(y)
    if y <= CONVERGED_LEVEL:
        trace.converged, trace.reason = True, "below_level"
    elif _geometric_decay(trace.y):
        trace.converged, trace.reason = True, "geometric_decay"
    else:
        trace.reason = "not_converged"
    return trace
