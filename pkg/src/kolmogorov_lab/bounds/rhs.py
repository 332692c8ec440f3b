"""Right-hand sides of the weighted pointwise density bounds.

Terms are evaluated with :class:`fractions.Fraction` whenever every power is an
integer, so hand-checkable inputs give exact totals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from kolmogorov_lab.bounds.weights import WeightSystem
from kolmogorov_lab.errors import ParameterDomainError

Number = Fraction | float
_DENOMINATOR_LIMIT = 10**12


def _exact(value: float) -> Fraction:
    return Fraction(value).limit_denominator(_DENOMINATOR_LIMIT)


def _pow(base: Number, exponent: Fraction) -> Number:
    if exponent.denominator == 1:
        if base == 0 and exponent < 0:
            return float("inf")
        return base ** int(exponent) if isinstance(base, Fraction) else float(base) ** int(exponent)
    return float(base) ** float(exponent)


def _as_float(value: Number) -> float:
    return float(value)


@dataclass(frozen=True, slots=True)
class BoundValue:
    total: float
    terms: dict[str, float]
    C: float
    kind: str

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "C": self.C, "total": self.total, "terms": self.terms}


def _inputs(ws: WeightSystem, sup_zeta1: float, int_zeta1: float, int_zeta2: float, C: float) -> dict[str, Any]:
    values = {"sup_zeta1": sup_zeta1, "int_zeta1": int_zeta1, "int_zeta2": int_zeta2, "C": C}
    for name, value in values.items():
        if value < 0:
            raise ParameterDomainError(f"{name} must be nonnegative, got {value}")
    for cid, value in ws.constants.items():
        if value < 0:
            raise ParameterDomainError(f"{cid} must be nonnegative, got {value}")
    gap = ws.b0 - ws.b
    if not gap > 0:
        raise ParameterDomainError(f"need b0 > b, got b0 - b = {gap}")
    c = {cid: _exact(v) for cid, v in ws.constants.items()}
    return {
        "c": c,
        "k": _exact(ws.k),
        "gap": _exact(gap),
        "sup1": _exact(sup_zeta1),
        "int1": _exact(int_zeta1),
        "int2": _exact(int_zeta2),
    }


def _terms(ws: WeightSystem, sup_zeta1: float, int_zeta1: float, int_zeta2: float, C: float, *, general: bool) -> dict[str, Number]:
    v = _inputs(ws, sup_zeta1, int_zeta1, int_zeta2, C)
    c, k, gap = v["c"], v["k"], v["gap"]
    c1, c2, c3, c4, c5, c6, c7, c8 = (c[f"c{j}"] for j in range(1, 9))
    two, four = Fraction(2), Fraction(4)
    two_k, four_k = two / k, four / k

    t2 = _pow(c2, k) + _pow(c5, k) + c6
    t3 = _pow(k, k) * c1**2 / _pow(gap, k) + _pow(c2, 2 * k) + _pow(c3, k) + _pow(c4, k)
    t6 = k**2 * _pow(c1, four_k) / gap**2 + c2**4 + c3**2 + c4**2
    if general:
        t2 = _pow(c1, k) * _pow(c8, k) + t2
        t3 = t3 + _pow(c7, k)
        t6 = t6 + c7**2
    return {
        "sup_zeta1": c1 * v["sup1"],
        "int_zeta2": t2 * v["int2"],
        "int_zeta1_squared": t3 * v["int1"] ** 2,
        "int_zeta2_squared": _pow(c2, k) * c6 * v["int2"] ** 2,
        "int_zeta2_power": c2**2 * _pow(c6, two_k) * _pow(v["int2"], four_k),
        "int_zeta1_power": t6 * _pow(v["int1"], four_k),
    }


def _evaluate(kind: str, terms: dict[str, Number], C: float) -> BoundValue:
    scale = _exact(C)
    total: Number = sum((t for t in terms.values()), Fraction(0))
    return BoundValue(
        total=_as_float(scale * total),
        terms={name: _as_float(scale * t) for name, t in terms.items()},
        C=float(C),
        kind=kind,
    )


def general_bound_rhs(ws: WeightSystem, sup_zeta1: float, int_zeta1: float, int_zeta2: float, C: float) -> BoundValue:
    """Bound on ``w rho`` over ``(a, b) x R^d`` for unbounded diffusion (uses ``c1 ... c8``)."""
    return _evaluate("general", _terms(ws, sup_zeta1, int_zeta1, int_zeta2, C, general=True), C)


def main_bounded_rhs(ws: WeightSystem, sup_zeta1: float, int_zeta1: float, int_zeta2: float, C: float) -> BoundValue:
    """Same bound for bounded diffusion coefficients; ``c7`` and ``c8`` do not enter."""
    return _evaluate("bounded", _terms(ws, sup_zeta1, int_zeta1, int_zeta2, C, general=False), C)
