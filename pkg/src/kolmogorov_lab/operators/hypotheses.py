"""Grid certification of the structural growth hypotheses.

Checking is advisory: violations become report entries and never raise, so the
Brownian and Ornstein-Uhlenbeck oracles (p = 1) can still be used downstream.
Each condition records a signed margin ``allowed - actual``; a negative margin
is a violation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.operators.grid import ShellGrid
from kolmogorov_lab.operators.model import (
    CoefficientField,
    GrowthParams,
    diffusion_jacobian,
)

CONDITION_IDS = (
    "ellipticity",
    "q_radial_growth",
    "q_quadratic_growth",
    "dq_growth",
    "drift_growth_B1",
    "drift_coercive_B2B3",
)

_REL_TOL = 1e-10


@dataclass(slots=True)
class ConditionResult:
    condition_id: str
    passed: bool
    worst_margin: float
    worst_violation: float
    worst_t: float
    worst_x: list[float]
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": "pass" if self.passed else "fail",
            "worst_margin": self.worst_margin,
            "worst_violation": self.worst_violation,
            "worst_point": {"t": self.worst_t, "x": self.worst_x},
            **self.detail,
        }


@dataclass(slots=True)
class HypothesisReport:
    conditions: list[ConditionResult]
    grid: dict[str, Any]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def condition(self, condition_id: str) -> ConditionResult:
        for item in self.conditions:
            if item.condition_id == condition_id:
                return item
        raise KeyError(condition_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "verdict": "pass" if self.passed else "fail",
            "grid": self.grid,
            "conditions": {c.condition_id: c.to_dict() for c in self.conditions},
        }


class _Tracker:
    """Keeps the worst scaled margin seen for one condition across time slices."""

    def __init__(self, condition_id: str):
        self.condition_id = condition_id
        self.margin = np.inf
        self.scaled = np.inf
        self.t = 0.0
        self.x: list[float] = []
        self.detail: dict[str, Any] = {}

    def update(
        self,
        t: float,
        points: np.ndarray,
        allowed: np.ndarray,
        actual: np.ndarray,
        detail: dict[str, Any] | None = None,
    ) -> None:
        margin = allowed - actual
        scaled = margin / np.maximum(1.0, np.abs(allowed))
        idx = int(np.argmin(scaled))
        if scaled[idx] < self.scaled:
            self.scaled = float(scaled[idx])
            self.margin = float(margin[idx])
            self.t = float(t)
            self.x = points[idx].tolist()
            self.detail = dict(detail or {})

    def result(self) -> ConditionResult:
        return ConditionResult(
            condition_id=self.condition_id,
            passed=self.scaled >= -_REL_TOL,
            worst_margin=self.margin,
            worst_violation=max(0.0, -self.margin),
            worst_t=self.t,
            worst_x=self.x,
            detail=self.detail,
        )


def check_hypotheses(
    field: CoefficientField,
    params: GrowthParams,
    grid: ShellGrid,
    probes: np.ndarray | None = None,
) -> HypothesisReport:
    """Check the six growth conditions at every node of ``grid``.

    Quadratic-form conditions use symmetric eigenvalues, i.e. every direction
    xi at once; ``probes`` additionally evaluates ``<Q xi, xi>`` on the given
    directions and folds them into the ellipticity record.
    """
    logger = get_logger(__name__)
    points = grid.points()
    r = np.linalg.norm(points, axis=-1)
    growth = params.Lambda * (1.0 + r**params.m)
    trackers = {cid: _Tracker(cid) for cid in CONDITION_IDS}
    d = field.d

    for t in grid.times:
        q = field.q(float(t), points)
        f = field.f(float(t), points)
        eig = np.linalg.eigvalsh(q)

        trackers["ellipticity"].update(t, points, eig[:, 0], np.full_like(r, field.eta))
        if probes is not None:
            xi = np.asarray(probes, dtype=float)
            xi = xi / np.linalg.norm(xi, axis=-1, keepdims=True)
            quad = np.einsum("kd,nde,ke->nk", xi, q, xi).min(axis=-1)
            trackers["ellipticity"].update(t, points, quad, np.full_like(r, field.eta))

        qx = np.linalg.norm(np.einsum("nij,nj->ni", q, points), axis=-1)
        trackers["q_radial_growth"].update(t, points, growth * r, qx)
        trackers["q_quadratic_growth"].update(t, points, growth, eig[:, -1])

        jac = diffusion_jacobian(field, float(t), points)
        # |d_i q_ij| for every (i, j)
        diag_i = np.abs(np.einsum("niji->nij", jac)).reshape(len(points), -1)
        worst_pair = int(np.argmax(diag_i.max(axis=0))) if diag_i.size else 0
        trackers["dq_growth"].update(
            t,
            points,
            growth,
            diag_i.max(axis=-1),
            {"worst_pair": [worst_pair // d, worst_pair % d]},
        )

        trackers["drift_growth_B1"].update(
            t, points, params.Lambda * r**params.p, np.linalg.norm(f, axis=-1)
        )

        b = np.asarray(params.b(float(t), points), dtype=float)
        inner = np.einsum("ni,ni->n", f, points)
        coercive_margin = -b * r ** (params.p + 1.0) - inner
        kappa_margin = np.where(r >= params.K, b - params.kappa, np.inf)
        combined = np.minimum(np.minimum(coercive_margin, b), kappa_margin)
        allowed = -b * r ** (params.p + 1.0)
        trackers["drift_coercive_B2B3"].update(t, points, allowed, allowed - combined)

    report = HypothesisReport(
        conditions=[trackers[cid].result() for cid in CONDITION_IDS],
        grid=grid.describe(),
    )
    logger.info(
        "hypotheses_checked",
        extra={
            "field": field.name,
            "verdict": "pass" if report.passed else "fail",
            "failed": [c.condition_id for c in report.conditions if not c.passed],
        },
    )
    return report
