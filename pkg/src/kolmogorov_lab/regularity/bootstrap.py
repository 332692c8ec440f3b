"""Integrability bootstrap ``1/r_{n+1} = (1/r_n)(1 - 1/k) + 1/k - 1/(d+2)``."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from kolmogorov_lab.errors import ParameterDomainError

MAX_STEPS = 1000


def _rational(value: float | int | Fraction) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(str(value))


def hest_exponent(r: float | Fraction, k: float | Fraction) -> float:
    """``p = r k / (r + k - 1)``."""
    if not r > 1 or not k > 1:
        raise ParameterDomainError(f"need r > 1 and k > 1, got r={r}, k={k}")
    rr, kk = _rational(r), _rational(k)
    return float(rr * kk / (rr + kk - 1))


@dataclass(slots=True)
class BootstrapTrace:
    d: int
    k: Fraction
    inverse_r: list[Fraction] = field(default_factory=list)
    p: list[Fraction | None] = field(default_factory=list)
    limit_inverse: Fraction = Fraction(0)

    @property
    def steps(self) -> int:
        return len(self.inverse_r) - 1

    @property
    def r(self) -> list[float]:
        return [float("inf") if x <= 0 else float(1 / x) for x in self.inverse_r]

    @property
    def limit_r(self) -> float:
        return float("inf") if self.limit_inverse <= 0 else float(1 / self.limit_inverse)

    def to_columns(self) -> dict[str, list[Any]]:
        return {
            "n": list(range(1, len(self.inverse_r) + 1)),
            "r_n": self.r,
            "p_n": [None if p is None else float(p) for p in self.p] + [None],
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "k": float(self.k),
            "steps": self.steps,
            "r": self.r,
            "p": [None if p is None else float(p) for p in self.p],
            "limit_inverse_r": float(self.limit_inverse),
            "limit_r": self.limit_r,
        }


def bootstrap_exponents(d: int, k: float, r1: float, target_r: float) -> BootstrapTrace:
    """Iterate from ``r1`` until ``r_n >= target_r``.

    ``p_n = r_n k / (r_n + k - 1)`` is recorded for every step taken. Once
    ``1/r_n <= 0`` every finite target is reached.
    """
    if d < 1:
        raise ParameterDomainError("d must be a positive integer")
    kk, first, target = _rational(k), _rational(r1), _rational(target_r)
    if not kk > 1:
        raise ParameterDomainError(f"need k > 1, got {k}")
    upper = Fraction(d + 2, d + 1)
    if not 1 < first < upper:
        raise ParameterDomainError(f"r1 must lie in (1, (d+2)/(d+1) = {float(upper):g}), got {r1}")
    limit = Fraction(d + 2) - kk
    limit = limit / (d + 2)
    if limit > 0 and target >= 1 / limit:
        raise ParameterDomainError(
            f"target r = {target_r} is unreachable: 1/r_n decreases to (d+2-k)/(d+2) = {float(limit):g}, "
            f"so r_n stays below {float(1 / limit):g}"
        )
    trace = BootstrapTrace(d=d, k=kk, inverse_r=[1 / first], p=[], limit_inverse=limit)
    step = 1 / kk - Fraction(1, d + 2)
    current = 1 / first
    while current > 0 and 1 / current < target:
        if len(trace.inverse_r) > MAX_STEPS:
            raise ParameterDomainError(f"target r = {target_r} not reached within {MAX_STEPS} steps")
        r_n = 1 / current
        trace.p.append(r_n * kk / (r_n + kk - 1))
        current = current * (1 - 1 / kk) + step
        trace.inverse_r.append(current)
    return trace
