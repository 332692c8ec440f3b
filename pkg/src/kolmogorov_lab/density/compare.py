"""Distances between two density fields."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.density.field import DensityField, SpatialGrid
from kolmogorov_lab.errors import InputError


@dataclass(slots=True)
class DensityComparison:
    sup: float
    l1: float
    l2: float
    times: list[float]
    per_slice: list[dict[str, float]] = field(default_factory=list)
    resampled: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "sup": self.sup,
            "l1": self.l1,
            "l2": self.l2,
            "times": self.times,
            "per_slice": self.per_slice,
            "resampled": self.resampled,
        }


def _common_times(d1: DensityField, d2: DensityField, tol: float = 1e-9) -> list[tuple[int, int]]:
    pairs = []
    for i, s in enumerate(d1.times):
        hits = np.flatnonzero(np.abs(d2.times - s) <= tol)
        if hits.size:
            pairs.append((i, int(hits[0])))
    return pairs


def _region_mask(grid: SpatialGrid, region: Sequence[Sequence[float]] | None) -> np.ndarray:
    if region is None:
        return np.ones(grid.shape, dtype=bool)
    if len(region) != grid.dim:
        raise InputError("region dimension does not match the grids")
    mesh = grid.mesh()
    mask = np.ones(grid.shape, dtype=bool)
    for k, (lo, hi) in enumerate(region):
        mask &= (mesh[..., k] >= lo - 1e-12) & (mesh[..., k] <= hi + 1e-12)
    if not np.any(mask):
        raise InputError("region contains no grid node")
    return mask


def compare_densities(
    d1: DensityField,
    d2: DensityField,
    region: Sequence[Sequence[float]] | None = None,
    *,
    resample: bool = True,
) -> DensityComparison:
    """Sup, L1 and L2 distances over ``region`` at every common time node.

    Different grids are resampled (linear interpolation) onto the grid of the
    common box at the finer spacing, which keeps the result symmetric.
    """
    if d1.grid.dim != d2.grid.dim:
        raise InputError("densities have different dimensions")
    pairs = _common_times(d1, d2)
    if not pairs:
        raise InputError("densities share no time node")
    same = d1.grid.same_as(d2.grid)
    if same:
        grid = d1.grid
    elif not resample:
        raise InputError("densities live on different grids and resampling is disabled")
    else:
        grid = d1.grid.intersect(d2.grid)
    mask = _region_mask(grid, region)
    weights = grid.weights() * mask

    per_slice = []
    for i, j in pairs:
        diff = np.abs(d1.resample(grid, i) - d2.resample(grid, j))
        per_slice.append(
            {
                "time": float(d1.times[i]),
                "sup": float(np.max(diff[mask])),
                "l1": float(np.sum(weights * diff)),
                "l2": float(np.sqrt(np.sum(weights * diff * diff))),
            }
        )
    return DensityComparison(
        sup=max(p["sup"] for p in per_slice),
        l1=max(p["l1"] for p in per_slice),
        l2=max(p["l2"] for p in per_slice),
        times=[p["time"] for p in per_slice],
        per_slice=per_slice,
        resampled=not same,
    )
