"""Grid certification of the time-dependent Lyapunov inequalities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.lyapunov.derive import slice_rate
from kolmogorov_lab.lyapunov.functions import RateFunction, TimeDependentLyapunov
from kolmogorov_lab.operators.grid import ShellGrid
from kolmogorov_lab.operators.model import CoefficientField

MAX_LISTED_VIOLATIONS = 50


@dataclass(slots=True)
class Violation:
    s: float
    x: list[float]
    inequality: str
    margin: float


@dataclass(slots=True)
class LyapunovCertification:
    label: str
    rate_kind: str
    checked_points: int
    violation_count: int
    worst_margin: float
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violation_count == 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": "pass" if self.passed else "fail",
            "label": self.label,
            "rate_kind": self.rate_kind,
            "checked_points": self.checked_points,
            "violation_count": self.violation_count,
            "worst_margin": self.worst_margin,
            "violations": [
                {"s": v.s, "x": v.x, "inequality": v.inequality, "margin": v.margin}
                for v in self.violations
            ],
        }


def verify_lyapunov(
    W: TimeDependentLyapunov,
    field: CoefficientField,
    grid: ShellGrid,
    *,
    rate: RateFunction | None = None,
    region_min_radius: np.ndarray | None = None,
) -> LyapunovCertification:
    """Check ``d_s W - A W >= -h W`` and ``d_s W - (eta Delta + F . grad) W >= -h W``.

    ``rate`` overrides ``W.h``. ``region_min_radius`` restricts each slice to
    points with ``|x|`` at least the given per-slice radius.
    """
    logger = get_logger(__name__)
    h = W.h if rate is None else rate
    pts = grid.points()
    radius = np.linalg.norm(pts, axis=-1)
    slices = np.unique(grid.times[(grid.times >= 0.0) & (grid.times < W.horizon)])
    violations: list[Violation] = []
    count = 0
    checked = 0
    worst = np.inf
    for i, s in enumerate(slices):
        mask = np.ones(len(pts), dtype=bool)
        if region_min_radius is not None:
            mask = radius >= float(np.asarray(region_min_radius)[i])
        if not np.any(mask):
            continue
        sub = pts[mask]
        h_s = float(h(float(s)))
        gen, ref = slice_rate(W, field, float(s), sub)
        for name, values in (("generator", gen), ("reference", ref)):
            margin = h_s - values
            tol = 1e-12 * np.maximum(1.0, np.abs(values))
            bad = np.flatnonzero(margin < -tol)
            checked += sub.shape[0]
            count += int(bad.size)
            worst = min(worst, float(np.min(margin)))
            for j in bad[: max(0, MAX_LISTED_VIOLATIONS - len(violations))]:
                violations.append(Violation(float(s), sub[j].tolist(), name, float(margin[j])))

    result = LyapunovCertification(
        label=W.label,
        rate_kind=h.kind,
        checked_points=checked,
        violation_count=count,
        worst_margin=float(worst),
        violations=violations,
    )
    logger.info(
        "lyapunov_verified",
        extra={"label": W.label, "violations": count, "checked": checked, "rate_kind": result.rate_kind},
    )
    return result
