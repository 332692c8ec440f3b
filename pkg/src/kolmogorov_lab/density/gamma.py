"""The drift functional ``Gamma(k, a, b) = (int_a^b int |F|^k rho dy ds)^(1/k)``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.integrate import trapezoid

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.density.field import DensityField
from kolmogorov_lab.errors import InputError, ParameterDomainError
from kolmogorov_lab.operators.model import CoefficientField


@dataclass(frozen=True, slots=True)
class GammaValue:
    k: float
    a: float
    b: float
    raw: float

    @property
    def value(self) -> float:
        return float(self.raw ** (1.0 / self.k))

    def to_dict(self) -> dict[str, Any]:
        return {"k": self.k, "window": [self.a, self.b], "raw": self.raw, "value": self.value}


def _slice_at(density: DensityField, time: float) -> np.ndarray:
    """Slice at ``time``, linearly interpolated between neighbouring nodes."""
    times = density.times
    hi = int(np.searchsorted(times, time, side="left"))
    if hi < times.size and abs(times[hi] - time) <= 1e-12:
        return density.values[hi]
    lo = hi - 1
    weight = (time - times[lo]) / (times[hi] - times[lo])
    return (1.0 - weight) * density.values[lo] + weight * density.values[hi]


def gamma_functional(density: DensityField, field: CoefficientField, k: float, window: tuple[float, float]) -> GammaValue:
    """Trapezoid quadrature in space on every slice, then in time over ``window``.

    Interior time nodes are used as they are; the window ends get slices
    interpolated linearly in time.
    """
    logger = get_logger(__name__)
    a, b = (float(window[0]), float(window[1]))
    if not k >= 1:
        raise ParameterDomainError(f"k must be >= 1, got {k}")
    if not a < b:
        raise InputError(f"empty window ({a}, {b})")
    times = density.times
    if a < times[0] - 1e-12 or b > times[-1] + 1e-12:
        raise InputError(f"window ({a}, {b}) is not inside the density's time nodes [{times[0]}, {times[-1]}]")
    if density.grid.dim != field.d:
        raise InputError("density grid and field dimensions differ")

    inner = times[(times > a + 1e-12) & (times < b - 1e-12)]
    nodes = np.concatenate([[a], inner, [b]])
    pts = density.grid.points()
    spatial = np.empty(nodes.size)
    for i, s in enumerate(nodes):
        rho = _slice_at(density, float(s))
        f = field.f(float(s), pts)
        integrand = np.linalg.norm(f, axis=-1) ** k * rho.reshape(-1)
        spatial[i] = float(density.grid.integrate(integrand.reshape(density.grid.shape)))
    raw = float(trapezoid(spatial, nodes))
    result = GammaValue(k=float(k), a=a, b=b, raw=max(raw, 0.0))
    logger.info("gamma_evaluated", extra={"k": k, "a": a, "b": b, "raw": result.raw, "nodes": int(nodes.size)})
    return result
