"""Smooth cutoff with plateau on [-1, 1], support in [-2, 2] and |t phi'(t)| <= 2."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from kolmogorov_lab.errors import CertificationError

MOLLIFY_WIDTH = 0.05
SLOPE_BOUND = 2.0
_TABLE_POINTS = 20001
_SCAN_POINTS = 10_000


def _smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step from 0 (u <= 0) to 1 (u >= 1)."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        g = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return f / (f + g)


def _bump(tau: np.ndarray) -> np.ndarray:
    """Mollified indicator of (1, 2) ramping over 0.05 at each end."""
    return _smooth_step((tau - 1.0) / MOLLIFY_WIDTH) * _smooth_step((2.0 - tau) / MOLLIFY_WIDTH)


@dataclass(frozen=True, slots=True)
class CutoffProfile:
    """``phi' = -scale * bump(tau) / tau`` on (1, 2), tabulated for ``phi``."""

    table_tau: np.ndarray
    table_phi: np.ndarray
    scale: float
    slope_bound: float

    def __call__(self, tau: np.ndarray | float) -> np.ndarray:
        a = np.abs(np.asarray(tau, dtype=float))
        return np.interp(a, self.table_tau, self.table_phi, left=1.0, right=0.0)

    def derivative(self, tau: np.ndarray | float) -> np.ndarray:
        t = np.asarray(tau, dtype=float)
        a = np.abs(t)
        inside = (a > 1.0) & (a < 2.0)
        safe = np.where(inside, a, 1.5)
        return np.where(inside, -self.scale * _bump(safe) / safe * np.sign(t), 0.0)

    def slope_product(self, tau: np.ndarray | float) -> np.ndarray:
        """``tau * phi'(tau)``."""
        t = np.asarray(tau, dtype=float)
        return t * self.derivative(t)


def make_cutoff() -> CutoffProfile:
    tau = np.linspace(1.0, 2.0, _TABLE_POINTS)
    integrand = _bump(tau) / tau
    cumulative = cumulative_trapezoid(integrand, tau, initial=0.0)
    scale = 1.0 / cumulative[-1]
    phi = 1.0 - scale * cumulative
    phi[-1] = 0.0
    phi = np.clip(phi, 0.0, 1.0)
    draft = CutoffProfile(table_tau=tau, table_phi=phi, scale=float(scale), slope_bound=0.0)
    scan = np.linspace(0.0, 3.0, _SCAN_POINTS)
    bound = float(np.max(np.abs(draft.slope_product(scan))))
    if bound > SLOPE_BOUND:
        raise CertificationError(f"cutoff slope product {bound:.4f} exceeds {SLOPE_BOUND}")
    return CutoffProfile(table_tau=tau, table_phi=phi, scale=float(scale), slope_bound=bound)
