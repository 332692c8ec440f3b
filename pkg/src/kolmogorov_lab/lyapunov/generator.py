"""Closed-form and finite-difference application of A(t) to radial exponentials.

Everything is computed as the ratio ``(A fn) / fn`` first: the ratio is a
polynomial-size quantity while ``fn`` itself overflows double precision at
moderate radii (``exp(0.2 |x|^4)`` at ``|x| = 10``).
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np

from kolmogorov_lab.errors import CoefficientEvaluationError
from kolmogorov_lab.lyapunov.functions import RadialExponential
from kolmogorov_lab.operators.model import CoefficientField


def generator_ratio(
    field: CoefficientField,
    fn: RadialExponential,
    t: float,
    x: np.ndarray,
    *,
    reference: bool = False,
    diffusion: np.ndarray | None = None,
) -> np.ndarray:
    """``(A(t) fn)(x) / fn(x)``.

    ``reference=True`` uses ``eta Delta + F . grad`` instead of ``A(t)``;
    ``diffusion`` overrides ``Q(t, x)`` (used for blended coefficients).
    """
    pts = np.asarray(x, dtype=float)
    f = field.f(t, pts)
    grad = fn.grad_ratio(pts)
    drift_part = np.sum(f * grad, axis=-1)
    if reference:
        second = field.eta * fn.laplacian_ratio(pts)
    else:
        q = field.q(t, pts) if diffusion is None else diffusion
        second = np.einsum("...ij,...ij->...", q, fn.hess_ratio(pts))
    return second + drift_part


def scale_by_value(ratio: np.ndarray, log_value: np.ndarray) -> np.ndarray:
    """``ratio * exp(log_value)`` without forming ``exp(log_value)`` separately."""
    with np.errstate(divide="ignore", over="ignore"):
        magnitude = np.exp(np.log(np.abs(ratio)) + log_value)
    return np.sign(ratio) * magnitude


def apply_generator(
    field: CoefficientField,
    fn: RadialExponential,
    t: float,
    x: np.ndarray,
    *,
    reference: bool = False,
) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    out = scale_by_value(generator_ratio(field, fn, t, pts, reference=reference), fn.log_value(pts))
    if not np.all(np.isfinite(out)):
        raise CoefficientEvaluationError("generator value is not finite", t=t, x=pts.tolist())
    return out


def _fd_log_derivatives(
    log_fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    d = x.shape[-1]
    h = np.asarray(1e-4 * np.maximum(1.0, np.linalg.norm(x, axis=-1)))
    f0 = log_fn(x)
    grad = np.zeros(x.shape)
    hess = np.zeros(x.shape + (d,))
    unit = np.eye(d)
    for i in range(d):
        ei = h[..., None] * unit[i]
        fp = log_fn(x + ei)
        fm = log_fn(x - ei)
        grad[..., i] = (fp - fm) / (2.0 * h)
        hess[..., i, i] = (fp - 2.0 * f0 + fm) / h**2
        for j in range(i + 1, d):
            ej = h[..., None] * unit[j]
            mixed = (
                log_fn(x + ei + ej) - log_fn(x + ei - ej) - log_fn(x - ei + ej) + log_fn(x - ei - ej)
            ) / (4.0 * h**2)
            hess[..., i, j] = mixed
            hess[..., j, i] = mixed
    return grad, hess


def generator_ratio_fd(
    field: CoefficientField,
    fn: RadialExponential,
    t: float,
    x: np.ndarray,
    *,
    reference: bool = False,
) -> np.ndarray:
    """Finite-difference oracle for :func:`generator_ratio` built from ``log fn`` only."""
    pts = np.asarray(x, dtype=float)
    grad, hess = _fd_log_derivatives(fn.log_value, pts)
    full_hess = hess + grad[..., :, None] * grad[..., None, :]
    f = field.f(t, pts)
    if reference:
        second = field.eta * np.trace(full_hess, axis1=-2, axis2=-1)
    else:
        second = np.einsum("...ij,...ij->...", field.q(t, pts), full_hess)
    return second + np.sum(f * grad, axis=-1)


def apply_generator_fd(
    field: CoefficientField,
    fn: RadialExponential,
    t: float,
    x: np.ndarray,
    *,
    reference: bool = False,
) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    ratio = generator_ratio_fd(field, fn, t, pts, reference=reference)
    return scale_by_value(ratio, fn.log_value(pts))
