"""Gaussian product-kernel density estimates from simulated ensembles."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy.signal import fftconvolve
from scipy.stats import norm

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.density.field import DensityField, SpatialGrid
from kolmogorov_lab.errors import InputError
from kolmogorov_lab.sde.engine import PathEnsemble

BANDWIDTH_RULES = ("scott", "silverman")
_CHUNK_ELEMENTS = 4_000_000


def bandwidth(samples: np.ndarray, rule: str | float | Sequence[float] = "scott") -> np.ndarray:
    """Per-axis bandwidth: a rule name or explicit value(s)."""
    n, d = samples.shape
    if not isinstance(rule, str):
        width = np.broadcast_to(np.asarray(rule, dtype=float), (d,)).copy()
        if np.any(width <= 0):
            raise InputError("bandwidth must be > 0")
        return width
    if rule not in BANDWIDTH_RULES:
        raise InputError(f"unknown bandwidth rule {rule!r}")
    spread = np.std(samples, axis=0, ddof=1) if n > 1 else np.zeros(d)
    if np.any(spread <= 0):
        raise InputError("bandwidth rule needs at least two distinct samples; pass an explicit bandwidth")
    if rule == "scott":
        factor = n ** (-1.0 / (d + 4))
    else:
        factor = (4.0 / (d + 2.0)) ** (1.0 / (d + 4)) * n ** (-1.0 / (d + 4))
    return spread * factor


def _kde_exact(samples: np.ndarray, grid: SpatialGrid, width: np.ndarray) -> np.ndarray:
    pts = grid.points()
    out = np.zeros(pts.shape[0])
    step = max(1, _CHUNK_ELEMENTS // (pts.shape[0] * grid.dim))
    for lo in range(0, samples.shape[0], step):
        chunk = samples[lo : lo + step]
        kern = norm.pdf((pts[:, None, :] - chunk[None, :, :]) / width) / width
        out += np.prod(kern, axis=-1).sum(axis=1)
    return (out / samples.shape[0]).reshape(grid.shape)


def _linear_binning(samples: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Linear-binning weights on the grid nodes; samples outside the box are dropped."""
    counts = np.zeros(grid.shape)
    inside = np.ones(samples.shape[0], dtype=bool)
    lower = []
    frac = []
    for k, axis in enumerate(grid.axes):
        pos = (samples[:, k] - axis[0]) / (axis[1] - axis[0])
        inside &= (pos >= 0) & (pos <= axis.size - 1)
        base = np.clip(np.floor(pos), 0, axis.size - 2).astype(int)
        lower.append(base)
        frac.append(pos - base)
    d = grid.dim
    for corner in range(2**d):
        idx = []
        weight = np.ones(samples.shape[0])
        for k in range(d):
            upper = (corner >> k) & 1
            idx.append(lower[k] + upper)
            weight = weight * (frac[k] if upper else 1.0 - frac[k])
        np.add.at(counts, tuple(i[inside] for i in idx), weight[inside])
    return counts


def _kde_binned(samples: np.ndarray, grid: SpatialGrid, width: np.ndarray) -> np.ndarray:
    counts = _linear_binning(samples, grid)
    kernel = np.ones([1] * grid.dim)
    for k, (step, h) in enumerate(zip(grid.spacing, width, strict=True)):
        half = min(int(np.ceil(6.0 * h / step)), grid.shape[k] - 1)
        offsets = step * np.arange(-half, half + 1)
        shape = [1] * grid.dim
        shape[k] = offsets.size
        kernel = kernel * (norm.pdf(offsets / h) / h).reshape(shape)
    smooth = fftconvolve(counts, kernel, mode="same") / samples.shape[0]
    return np.maximum(smooth, 0.0)


def kde_slice(
    samples: np.ndarray,
    grid: SpatialGrid,
    rule: str | float | Sequence[float] = "scott",
    *,
    exact_limit: float = 5e7,
) -> tuple[np.ndarray, np.ndarray, str]:
    """Estimate on ``grid`` from ``samples`` of shape ``(n, d)``.

    Direct summation is used while ``n * grid nodes <= exact_limit``; larger
    problems use linear binning and an FFT convolution.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    pts = pts[np.all(np.isfinite(pts), axis=-1)]
    if pts.shape[0] == 0:
        raise InputError("ensemble has no finite samples")
    if pts.shape[1] != grid.dim:
        raise InputError("sample dimension does not match the grid")
    width = bandwidth(pts, rule)
    if pts.shape[0] * int(np.prod(grid.shape)) <= exact_limit:
        return _kde_exact(pts, grid, width), width, "exact"
    return _kde_binned(pts, grid, width), width, "binned"


def kde_density(
    ensembles: Sequence[PathEnsemble],
    grid: SpatialGrid,
    *,
    rule: str | float | Sequence[float] = "scott",
    exact_limit: float = 5e7,
) -> DensityField:
    """One slice per ensemble; the ensembles share ``t`` and ``x0`` and differ in ``s``."""
    logger = get_logger(__name__)
    if not ensembles:
        raise InputError("no ensembles given")
    first = ensembles[0].plan
    for ens in ensembles:
        if abs(ens.plan.t - first.t) > 1e-12 or not np.allclose(ens.plan.start, first.start):
            raise InputError("ensembles must share the horizon and the start point")
    order = np.argsort([ens.plan.s for ens in ensembles], kind="stable")
    values = []
    widths = []
    methods = []
    for i in order:
        est, width, method = kde_slice(ensembles[i].terminal, grid, rule, exact_limit=exact_limit)
        values.append(est)
        widths.append(width.tolist())
        methods.append(method)
    stacked = np.stack(values, axis=0)
    density = DensityField(
        times=np.asarray([ensembles[i].plan.s for i in order], dtype=float),
        grid=grid,
        values=stacked,
        provenance="kde",
        horizon=float(first.t),
        x0=first.start,
        field_name=first.field.name,
        time_role="start",
        meta={"bandwidth": widths, "method": methods, "rule": rule if isinstance(rule, str) else "explicit"},
    )
    density.leakage = np.clip(1.0 - density.mass(), 0.0, None)
    logger.info(
        "kde_density_estimated",
        extra={"slices": len(values), "grid": list(grid.shape), "methods": sorted(set(methods))},
    )
    return density
