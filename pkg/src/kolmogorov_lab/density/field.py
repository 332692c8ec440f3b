"""Gridded densities ``rho(s, y)`` and the tensor grids they live on."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator

from kolmogorov_lab.errors import InputError

PROVENANCES = ("kde", "fd", "oracle")
TIME_ROLES = ("start", "forward")


@dataclass(frozen=True, slots=True)
class SpatialGrid:
    """Tensor grid with uniform spacing on each axis (box endpoints included)."""

    axes: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if not self.axes:
            raise InputError("grid needs at least one axis")
        for axis in self.axes:
            if axis.ndim != 1 or axis.size < 3:
                raise InputError("each grid axis needs at least three nodes")

    @classmethod
    def build(cls, box: Sequence[Sequence[float]], n: int | Sequence[int]) -> SpatialGrid:
        counts = [int(n)] * len(box) if isinstance(n, (int, np.integer)) else [int(c) for c in n]
        if len(counts) != len(box):
            raise InputError("node counts do not match the box dimension")
        axes = []
        for (lo, hi), count in zip(box, counts, strict=True):
            if not hi > lo:
                raise InputError(f"empty box side [{lo}, {hi}]")
            axes.append(np.linspace(float(lo), float(hi), count))
        return cls(tuple(axes))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(axis.size for axis in self.axes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(float(axis[1] - axis[0]) for axis in self.axes)

    @property
    def box(self) -> list[tuple[float, float]]:
        return [(float(axis[0]), float(axis[-1])) for axis in self.axes]

    def mesh(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def points(self) -> np.ndarray:
        return self.mesh().reshape(-1, self.dim)

    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights on the nodes."""
        out = np.ones(self.shape)
        for k, axis in enumerate(self.axes):
            w = np.full(axis.size, axis[1] - axis[0])
            w[0] *= 0.5
            w[-1] *= 0.5
            shape = [1] * self.dim
            shape[k] = axis.size
            out = out * w.reshape(shape)
        return out

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Trapezoid integral over the trailing ``dim`` axes."""
        out = np.asarray(values, dtype=float)
        for axis in reversed(self.axes):
            out = trapezoid(out, axis, axis=-1)
        return out

    def contains(self, point: np.ndarray, margin: float = 0.0) -> bool:
        pt = np.asarray(point, dtype=float).reshape(self.dim)
        return all(lo + margin <= x <= hi - margin for x, (lo, hi) in zip(pt, self.box, strict=True))

    def same_as(self, other: SpatialGrid) -> bool:
        return self.shape == other.shape and all(
            np.allclose(a, b, rtol=0.0, atol=1e-12) for a, b in zip(self.axes, other.axes, strict=True)
        )

    def intersect(self, other: SpatialGrid) -> SpatialGrid:
        """Grid over the common box at the finer of the two spacings."""
        if self.dim != other.dim:
            raise InputError("grids have different dimensions")
        axes = []
        for a, b in zip(self.axes, other.axes, strict=True):
            lo = max(a[0], b[0])
            hi = min(a[-1], b[-1])
            if not hi > lo:
                raise InputError("grids do not overlap")
            step = min(a[1] - a[0], b[1] - b[0])
            count = max(3, int(np.ceil((hi - lo) / step - 1e-9)) + 1)
            axes.append(np.linspace(lo, hi, count))
        return SpatialGrid(tuple(axes))

    def describe(self) -> dict[str, Any]:
        return {"box": self.box, "shape": list(self.shape), "spacing": list(self.spacing)}


@dataclass(slots=True)
class DensityField:
    """Slices ``values[i]`` of a density on ``grid`` at the time nodes ``times[i]``.

    With ``time_role == "start"`` the nodes are start times ``s`` and slice ``i``
    is the density of ``X_t`` started at ``(s, x0)``. With ``"forward"`` the
    nodes are running times ``tau`` of one process started at ``(start, x0)``.
    """

    times: np.ndarray
    grid: SpatialGrid
    values: np.ndarray
    provenance: str
    horizon: float
    x0: np.ndarray
    field_name: str
    time_role: str = "start"
    start: float | None = None
    leakage: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise InputError(f"unknown provenance {self.provenance!r}")
        if self.time_role not in TIME_ROLES:
            raise InputError(f"unknown time role {self.time_role!r}")
        if self.values.shape != (self.times.size,) + self.grid.shape:
            raise InputError("density values do not match the time nodes and grid")
        if self.time_role == "forward" and self.start is None:
            raise InputError("forward densities need a start time")
        if self.leakage is None:
            self.leakage = np.zeros(self.times.size)

    @property
    def gaps(self) -> np.ndarray:
        """Elapsed time ``t - s`` of each slice."""
        if self.time_role == "start":
            return self.horizon - self.times
        return self.times - float(self.start)  # type: ignore[arg-type]

    def mass(self) -> np.ndarray:
        return self.grid.integrate(self.values)

    def interpolator(self, index: int) -> RegularGridInterpolator:
        return RegularGridInterpolator(self.grid.axes, self.values[index], bounds_error=False, fill_value=0.0)

    def resample(self, grid: SpatialGrid, index: int) -> np.ndarray:
        if self.grid.same_as(grid):
            return self.values[index]
        return self.interpolator(index)(grid.points()).reshape(grid.shape)

    def to_columns(self) -> dict[str, np.ndarray]:
        pts = self.grid.points()
        n_nodes = pts.shape[0]
        columns: dict[str, np.ndarray] = {"s": np.repeat(self.times, n_nodes)}
        for k in range(self.grid.dim):
            columns[f"y{k + 1}"] = np.tile(pts[:, k], self.times.size)
        columns["rho"] = self.values.reshape(-1)
        return columns

    def sidecar(self) -> dict[str, Any]:
        return {
            "provenance": self.provenance,
            "field": self.field_name,
            "time_role": self.time_role,
            "horizon": self.horizon,
            "start": self.start,
            "x0": self.x0.tolist(),
            "grid": self.grid.describe(),
            "times": self.times.tolist(),
            "mass": self.mass().tolist(),
            "leakage": np.asarray(self.leakage).tolist(),
            "meta": self.meta,
        }
