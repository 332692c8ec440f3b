"""Closed-form transition laws used as oracles.

Both reference processes solve ``dX = F dt + sqrt(2 q) dB`` (the generator has
no 1/2 in front of ``q Delta``).
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.stats import norm

from kolmogorov_lab.density.field import DensityField, SpatialGrid
from kolmogorov_lab.errors import ParameterDomainError


def _check_gap(gap: float) -> None:
    if not gap > 0:
        raise ParameterDomainError(f"time gap must be > 0, got {gap}")


def brownian_density(gap: float, x0: np.ndarray, y: np.ndarray, q: float = 0.5) -> np.ndarray:
    """Density of ``x0 + sqrt(2 q) B_gap`` at the points ``y`` (shape ``(..., d)``)."""
    _check_gap(gap)
    pts = np.asarray(y, dtype=float)
    centre = np.asarray(x0, dtype=float)
    scale = np.sqrt(2.0 * q * gap)
    return np.prod(norm.pdf(pts, loc=centre, scale=scale), axis=-1)


def ou_mean_var(gap: float, x0: np.ndarray, theta: float = 1.0, q: float = 1.0) -> tuple[np.ndarray, float]:
    """Mean and per-component variance of the OU law after ``gap``."""
    mean = np.asarray(x0, dtype=float) * np.exp(-theta * gap)
    var = q / theta * (1.0 - np.exp(-2.0 * theta * gap))
    return mean, float(var)


def ou_density(gap: float, x0: np.ndarray, y: np.ndarray, theta: float = 1.0, q: float = 1.0) -> np.ndarray:
    _check_gap(gap)
    mean, var = ou_mean_var(gap, x0, theta, q)
    return np.prod(norm.pdf(np.asarray(y, dtype=float), loc=mean, scale=np.sqrt(var)), axis=-1)


def gaussian_exp_moment(delta: float, mean: np.ndarray, var: float) -> float:
    """``E exp(delta |X|^2)`` for ``X ~ N(mean, var I_d)``; infinite when ``2 delta var >= 1``."""
    centre = np.asarray(mean, dtype=float).reshape(-1)
    denom = 1.0 - 2.0 * delta * var
    if denom <= 0:
        return float("inf")
    d = centre.size
    return float(denom ** (-d / 2.0) * np.exp(delta * float(centre @ centre) / denom))


def ou_gamma_raw(
    theta: float, q: float, x0: np.ndarray, t: float, a: float, b: float, k: int = 2
) -> float:
    """``int_a^b E|F(X_t)|^k ds`` for ``F = -theta y`` started at ``(s, x0)``; ``k = 2`` only."""
    if k != 2:
        raise ParameterDomainError("closed-form Gamma oracle is only available for k = 2")
    centre = np.asarray(x0, dtype=float).reshape(-1)
    d = centre.size

    def second_moment(s: float) -> float:
        mean, var = ou_mean_var(t - s, centre, theta, q)
        return d * var + float(mean @ mean)

    value, _ = integrate.quad(second_moment, a, b, epsabs=1e-13, epsrel=1e-12)
    return float(theta**2 * value)


def tabulate_oracle(
    density: Callable[[float, np.ndarray], np.ndarray],
    grid: SpatialGrid,
    starts: Sequence[float],
    t: float,
    x0: np.ndarray,
    name: str,
) -> DensityField:
    """Start-time family ``density(t - s, y)`` evaluated on ``grid``."""
    s_arr = np.asarray(starts, dtype=float)
    pts = grid.points()
    values = np.stack([density(t - float(s), pts).reshape(grid.shape) for s in s_arr], axis=0)
    return DensityField(
        times=s_arr,
        grid=grid,
        values=values,
        provenance="oracle",
        horizon=float(t),
        x0=np.asarray(x0, dtype=float).reshape(grid.dim),
        field_name=name,
        time_role="start",
    )
