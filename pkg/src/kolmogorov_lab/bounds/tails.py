"""Empirical tail decay of densities and domination by a kernel envelope."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.bounds.envelope import KernelEnvelope
from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.density.field import DensityField, SpatialGrid
from kolmogorov_lab.errors import InputError

TAIL_DROP = 1e-3
RELATIVE_FLOOR = 1e-10
ABSOLUTE_FLOOR = 1e-300
MIN_TAIL_POINTS = 8
DOMINATION_FACTOR = 1.1


@dataclass(frozen=True, slots=True)
class TailFit:
    delta_hat: float
    intercept: float
    residual: float
    r0: float
    n_points: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "delta_hat": self.delta_hat,
            "intercept": self.intercept,
            "residual": self.residual,
            "r0": self.r0,
            "n_points": self.n_points,
        }


def fit_tail_decay(
    rho: np.ndarray,
    grid: SpatialGrid,
    beta: float,
    *,
    r0: float | None = None,
    relative_floor: float = RELATIVE_FLOOR,
) -> TailFit:
    """Least-squares fit of ``log rho = c - delta |y|^beta`` on ``|y| >= r0``.

    ``r0`` defaults to the smallest radius where ``rho`` has dropped below
    ``1e-3`` of its peak. Nodes below ``relative_floor * peak`` are ignored.
    """
    values = np.asarray(rho, dtype=float).reshape(-1)
    radius = np.linalg.norm(grid.points(), axis=-1)
    peak = float(np.max(values))
    if not peak > 0:
        raise InputError("density slice has no positive value")
    if r0 is None:
        dropped = values <= TAIL_DROP * peak
        if not np.any(dropped):
            raise InputError("density never drops three decades below its peak on this grid")
        r0 = float(np.min(radius[dropped]))
    floor = max(ABSOLUTE_FLOOR, relative_floor * peak)
    use = (radius >= r0) & (values > floor)
    count = int(np.count_nonzero(use))
    if count < MIN_TAIL_POINTS:
        raise InputError(f"only {count} usable tail points (need {MIN_TAIL_POINTS}); widen the grid or lower r0")
    design = np.stack([np.ones(count), -(radius[use] ** beta)], axis=-1)
    target = np.log(values[use])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = float(np.max(np.abs(design @ coef - target)))
    return TailFit(delta_hat=float(coef[1]), intercept=float(coef[0]), residual=residual, r0=float(r0), n_points=count)


@dataclass(slots=True)
class DominationEntry:
    gap: float
    factor: float
    n_points: int
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "gap": self.gap,
            "factor": self.factor,
            "n_points": self.n_points,
            "status": "pass" if self.passed else "fail",
        }


@dataclass(slots=True)
class DominationReport:
    envelope: KernelEnvelope
    fit_gap: float
    entries: list[DominationEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def worst_factor(self) -> float:
        return max(e.factor for e in self.entries)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": "pass" if self.passed else "fail",
            "fit_gap": self.fit_gap,
            "worst_factor": self.worst_factor,
            "envelope": self.envelope.to_dict(),
            "entries": [e.to_dict() for e in self.entries],
        }


def _log_ratios(density: DensityField, index: int, env: KernelEnvelope, relative_floor: float) -> np.ndarray:
    values = density.values[index].reshape(-1)
    peak = float(np.max(values))
    use = values > max(ABSOLUTE_FLOOR, relative_floor * peak)
    radius = np.linalg.norm(density.grid.points(), axis=-1)[use]
    return np.log(values[use]) - env.log_shape(float(density.gaps[index]), radius)


def verify_envelope_domination(
    densities: DensityField | Sequence[DensityField],
    env: KernelEnvelope,
    *,
    factor: float = DOMINATION_FACTOR,
    relative_floor: float = RELATIVE_FLOOR,
) -> DominationReport:
    """Fit ``C`` on the largest time gap, then check ``rho <= factor * C * envelope`` on every gap.

    Nodes below ``relative_floor`` times the slice peak are not compared.
    """
    logger = get_logger(__name__)
    items = [densities] if isinstance(densities, DensityField) else list(densities)
    slices = [(dens, i) for dens in items for i in range(dens.times.size) if dens.gaps[i] > 0]
    if not slices:
        raise InputError("no density slice with a positive time gap")
    fit_density, fit_index = max(slices, key=lambda item: float(item[0].gaps[item[1]]))
    fit_gap = float(fit_density.gaps[fit_index])
    log_c = float(np.max(_log_ratios(fit_density, fit_index, env, relative_floor)))
    fitted = env.with_constant(float(np.exp(log_c)), gap=fit_gap, provenance=fit_density.provenance)

    entries = []
    for dens, i in slices:
        log_ratio = _log_ratios(dens, i, env, relative_floor) - log_c
        worst = float(np.exp(np.max(log_ratio)))
        entries.append(DominationEntry(float(dens.gaps[i]), worst, int(log_ratio.size), worst <= factor))
    entries.sort(key=lambda e: e.gap)
    report = DominationReport(envelope=fitted, fit_gap=fit_gap, entries=entries)
    logger.info(
        "envelope_domination_checked",
        extra={"fit_gap": fit_gap, "C_tilde": fitted.c_tilde, "worst_factor": report.worst_factor},
    )
    return report
