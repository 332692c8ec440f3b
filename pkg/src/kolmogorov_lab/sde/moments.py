"""Monte Carlo moment curves ``zeta(s) = E[W(s, X_t) | X_s = x0]`` and their bounds."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.errors import ParameterDomainError
from kolmogorov_lab.lyapunov.functions import RateFunction, StaticLyapunov
from kolmogorov_lab.operators.model import CoefficientField
from kolmogorov_lab.sde.engine import SimulationPlan, simulate_paths

MC_SLACK_SIGMAS = 3.0


class MomentWeight(Protocol):
    label: str
    horizon: float
    h: RateFunction

    def log_value(self, s: float, x: np.ndarray) -> np.ndarray: ...


@dataclass(slots=True)
class MomentCurve:
    starts: np.ndarray
    horizon: float
    x0: np.ndarray
    labels: list[str]
    zeta: np.ndarray
    se: np.ndarray
    v_mean: np.ndarray | None = None
    v_se: np.ndarray | None = None
    explosions: list[int] = field(default_factory=list)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ParameterDomainError(f"no moment estimates for {label!r}") from None

    def to_columns(self) -> dict[str, np.ndarray]:
        rows = len(self.labels) * self.starts.size
        return {
            "label": np.repeat(np.asarray(self.labels), self.starts.size),
            "s": np.tile(self.starts, len(self.labels)),
            "zeta_hat": self.zeta.reshape(rows),
            "se": self.se.reshape(rows),
        }

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "horizon": self.horizon,
            "x0": self.x0.tolist(),
            "starts": self.starts.tolist(),
            "curves": {
                label: {"zeta_hat": self.zeta[i].tolist(), "se": self.se[i].tolist()}
                for i, label in enumerate(self.labels)
            },
        }
        if self.v_mean is not None and self.v_se is not None:
            payload["V"] = {"mean": self.v_mean.tolist(), "se": self.v_se.tolist()}
        return payload


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return float("nan"), float("nan")
    mean = float(np.mean(values))
    if values.size < 2 or not np.isfinite(mean):
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / np.sqrt(values.size))


def _weight_values(log_value: Callable[[np.ndarray], np.ndarray], terminal: np.ndarray) -> np.ndarray:
    # an exploded path has unbounded weight
    finite = np.all(np.isfinite(terminal), axis=-1)
    values = np.full(terminal.shape[0], np.inf)
    with np.errstate(over="ignore"):
        values[finite] = np.exp(log_value(terminal[finite]))
    return values


def moment_curve(
    field: CoefficientField,
    weights: Sequence[MomentWeight],
    starts: Sequence[float],
    t: float,
    x0: np.ndarray,
    n_paths: int,
    seed: int,
    *,
    dt: float = 1e-3,
    scheme: str = "tamed-euler",
    static: StaticLyapunov | None = None,
    threads: int = 1,
) -> MomentCurve:
    """One simulation per start time ``s_j``, run on stream ``j``.

    ``s_j == t`` needs no simulation: the law of ``X_t`` is the point mass at
    ``x0``.
    """
    logger = get_logger(__name__)
    start_arr = np.asarray(starts, dtype=float)
    point = np.asarray(x0, dtype=float).reshape(field.d)
    for w in weights:
        if abs(w.horizon - t) > 1e-12:
            raise ParameterDomainError(f"{w.label} has horizon {w.horizon:g}, expected {t:g}")
    if np.any(start_arr > t):
        raise ParameterDomainError("every start time must be <= t")

    zeta = np.empty((len(weights), start_arr.size))
    se = np.zeros_like(zeta)
    v_mean = np.empty(start_arr.size) if static is not None else None
    v_se = np.zeros(start_arr.size) if static is not None else None
    explosions: list[int] = []
    for j, s in enumerate(start_arr):
        s = float(s)
        if s >= t:
            terminal = point[None, :]
            explosions.append(0)
        else:
            plan = SimulationPlan(
                field=field, s=s, t=t, x0=point, n_paths=n_paths, dt=dt, scheme=scheme, seed=seed, stream_id=j
            )
            ensemble = simulate_paths(plan, threads=threads)
            terminal = ensemble.terminal
            explosions.append(ensemble.explosions)
        for i, w in enumerate(weights):
            values = _weight_values(lambda y, w=w: w.log_value(s, y), terminal)
            zeta[i, j], se[i, j] = _mean_and_se(values)
        if static is not None and v_mean is not None and v_se is not None:
            v_mean[j], v_se[j] = _mean_and_se(_weight_values(static.log_value, terminal))

    curve = MomentCurve(
        starts=start_arr,
        horizon=float(t),
        x0=point,
        labels=[w.label for w in weights],
        zeta=zeta,
        se=se,
        v_mean=v_mean,
        v_se=v_se,
        explosions=explosions,
    )
    logger.info(
        "moment_curve_estimated",
        extra={"labels": curve.labels, "starts": start_arr.tolist(), "n_paths": n_paths, "seed": seed},
    )
    return curve


@dataclass(slots=True)
class MomentBoundEntry:
    kind: str
    s: float
    estimate: float
    se: float
    bound: float
    slack_bound: float
    explosions: int = 0

    @property
    def status(self) -> str:
        if self.explosions:
            return "inconclusive"
        return "pass" if self.estimate <= self.slack_bound else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "s": self.s,
            "estimate": self.estimate,
            "se": self.se,
            "bound": self.bound,
            "slack_bound": self.slack_bound,
            "explosions": self.explosions,
            "status": self.status,
        }


@dataclass(slots=True)
class MomentBoundReport:
    label: str
    entries: list[MomentBoundEntry]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def status(self) -> str:
        statuses = {e.status for e in self.entries}
        if "fail" in statuses:
            return "fail"
        return "inconclusive" if "inconclusive" in statuses else "pass"

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "label": self.label,
            "entries": [e.to_dict() for e in self.entries],
        }


def _slack(estimate: float, se: float) -> float:
    if estimate <= 0 or not np.isfinite(estimate):
        return 1.0
    return 1.0 + MC_SLACK_SIGMAS * se / estimate


def verify_moment_bound(
    curve: MomentCurve,
    W: MomentWeight,
    *,
    h: RateFunction | None = None,
    V: StaticLyapunov | None = None,
    M: float | None = None,
) -> MomentBoundReport:
    """Check ``zeta(s_j) <= exp(int_{s_j}^t h) W(t, x0)`` with ``3 sigma`` Monte Carlo slack.

    With ``V`` and ``M`` the curve's ``E V(X_t)`` is also checked against
    ``V(x0) + M (t - s_j)``. A start time whose simulation lost paths to
    explosion is ``inconclusive``, never ``pass``.
    """
    logger = get_logger(__name__)
    rate = W.h if h is None else h
    i = curve.index(W.label)
    lost = curve.explosions or [0] * curve.starts.size
    w_final = float(np.exp(W.log_value(curve.horizon, curve.x0[None, :]))[0])
    entries: list[MomentBoundEntry] = []
    for j, s in enumerate(curve.starts):
        s = float(s)
        growth = np.exp(rate.integrate(s, curve.horizon)) if s < curve.horizon else 1.0
        bound = float(growth * w_final)
        estimate = float(curve.zeta[i, j])
        err = float(curve.se[i, j])
        entries.append(
            MomentBoundEntry("W", s, estimate, err, bound, bound * _slack(estimate, err), int(lost[j]))
        )

    if V is not None and M is not None:
        if curve.v_mean is None or curve.v_se is None:
            raise ParameterDomainError("moment curve carries no V estimates; pass the static function to moment_curve")
        v0 = float(V.value(curve.x0[None, :])[0])
        for j, s in enumerate(curve.starts):
            bound = v0 + M * (curve.horizon - float(s))
            estimate = float(curve.v_mean[j])
            err = float(curve.v_se[j])
            entries.append(
                MomentBoundEntry("V", float(s), estimate, err, bound, bound * _slack(estimate, err), int(lost[j]))
            )

    report = MomentBoundReport(label=W.label, entries=entries)
    logger.info("moment_bound_verified", extra={"label": W.label, "status": report.status, "entries": len(entries)})
    return report
