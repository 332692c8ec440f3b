"""Space-time probe grids made of radial shells."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.errors import InputError


def default_directions(d: int, count: int = 16) -> np.ndarray:
    """Unit probe directions spanning R^d.

    d=1 gives ``[+1, -1]``; d=2 gives ``count`` equally spaced angles; higher
    dimensions use the signed axes plus the signed main diagonals.
    """
    if d < 1:
        raise InputError("dimension must be positive")
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    eye = np.eye(d)
    diag = np.ones((1, d)) / np.sqrt(d)
    alt = np.array([[(-1.0) ** i for i in range(d)]]) / np.sqrt(d)
    return np.concatenate([eye, -eye, diag, -diag, alt, -alt], axis=0)


@dataclass(frozen=True, slots=True)
class ShellGrid:
    times: np.ndarray
    radii: np.ndarray
    directions: np.ndarray
    include_origin: bool = True
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if np.asarray(self.times).size == 0 or np.asarray(self.radii).size == 0:
            raise InputError("grid needs at least one time and one radius")
        if np.asarray(self.directions).ndim != 2:
            raise InputError("directions must be a (count, d) array")

    @classmethod
    def build(
        cls,
        d: int,
        times: np.ndarray | list[float],
        r_max: float,
        dr: float,
        *,
        directions: np.ndarray | None = None,
        r_min: float | None = None,
    ) -> ShellGrid:
        start = dr if r_min is None else r_min
        count = int(np.floor((r_max - start) / dr + 1e-9)) + 1
        radii = start + dr * np.arange(count)
        dirs = default_directions(d) if directions is None else np.asarray(directions, dtype=float)
        return cls(
            times=np.asarray(times, dtype=float),
            radii=radii,
            directions=dirs,
            meta={"r_max": float(r_max), "dr": float(dr)},
        )

    @property
    def dim(self) -> int:
        return int(self.directions.shape[1])

    @property
    def r_max(self) -> float:
        return float(np.max(self.radii))

    def points(self) -> np.ndarray:
        """All spatial probe points, shape ``(n_points, d)``."""
        shell = self.radii[:, None, None] * self.directions[None, :, :]
        pts = shell.reshape(-1, self.dim)
        if self.include_origin and not np.any(self.radii == 0.0):
            pts = np.concatenate([np.zeros((1, self.dim)), pts], axis=0)
        return pts

    def restrict_times(self, lo: float, hi: float) -> ShellGrid:
        mask = (self.times >= lo - 1e-12) & (self.times <= hi + 1e-12)
        return ShellGrid(self.times[mask], self.radii, self.directions, self.include_origin, self.meta)

    def with_times(self, times: np.ndarray | list[float]) -> ShellGrid:
        return ShellGrid(np.asarray(times, dtype=float), self.radii, self.directions, self.include_origin, self.meta)

    def describe(self) -> dict[str, Any]:
        return {
            "d": self.dim,
            "n_times": int(self.times.size),
            "t_min": float(np.min(self.times)),
            "t_max": float(np.max(self.times)),
            "n_radii": int(self.radii.size),
            "r_max": self.r_max,
            "n_directions": int(self.directions.shape[0]),
        }
