"""The weight system ``w <= W1 <= W2`` and its constants ``c1 ... c8``.

With ``w = exp(r0 u)``, ``W1 = exp(r1 u)``, ``W2 = exp(r2 u)``, ``u = upsilon(x)``
and ``r_i = eps_i (t-s)^alpha``, every constant is the grid supremum of

    c1: w / W1
    c2: |Q grad w| / (w^(1-1/k) W1^(1/k))
    c3: |A0 w| / (w^(1-2/k) W1^(2/k))         A0 = sum q_ij D_ij
    c4: |d_s w| / (w^(1-2/k) W1^(2/k))
    c5: |sum_i D_i q_ij| / (w^(-1/k) W2^(1/k))
    c6: w |F|^k / W2
    c7: |Delta w| / (w^(1-2/k) W1^(2/k))
    c8: |Q grad W1| / (w^(1-1/k) W2^(1/k))

Each ratio is a polynomial factor times ``exp(linear combination of r_i u)``,
so no exponential is ever formed on its own.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.errors import CoefficientEvaluationError, ParameterDomainError
from kolmogorov_lab.lyapunov.functions import RadialExponential, StaticLyapunov
from kolmogorov_lab.operators.grid import ShellGrid
from kolmogorov_lab.operators.model import CoefficientField, GrowthParams, divergence_vector

CONSTANT_IDS = ("c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8")


def r_exponents(params: GrowthParams, alpha: float, k: float) -> dict[str, float]:
    """Powers ``r_j`` with ``c_j = cbar_j (t - b0)^(-r_j)``."""
    beta = params.beta
    m = params.m
    return {
        "c1": 0.0,
        "c2": alpha * max(m - 1.0, 0.0) / beta,
        "c3": alpha * max(m - 2.0, 0.0) / beta,
        "c4": 1.0,
        "c5": alpha * m / beta,
        "c6": alpha * k * params.p / beta,
        "c7": 0.0,
        "c8": alpha * max(m - 1.0, 0.0) / beta,
    }


def power_exp_sup(gamma: float, beta: float, r: float) -> float:
    """``sup_{y>0} y^gamma exp(-r y^beta) = r^(-gamma/beta) (gamma/beta)^(gamma/beta) e^(-gamma/beta)``."""
    if gamma <= 0 or beta <= 0 or r <= 0:
        raise ParameterDomainError("gamma, beta and r must be > 0")
    ratio = gamma / beta
    return float(r ** (-ratio) * ratio**ratio * np.exp(-ratio))


@dataclass(slots=True)
class WeightSystem:
    epsilons: tuple[float, float, float]
    k: float
    alpha: float
    horizon: float
    window: tuple[float, float, float, float]
    constants: dict[str, float]
    exponents: dict[str, float] = field(default_factory=dict)
    argmax: dict[str, dict[str, Any]] = field(default_factory=dict)
    grid_c1: float = 1.0
    c0: float = 1.0
    sigma: float = 0.0
    ordering_holds: bool = True
    analytic_c2: float | None = None

    @classmethod
    def from_constants(
        cls,
        constants: Mapping[str, float] | Sequence[float],
        k: float,
        window: tuple[float, float, float, float],
        *,
        horizon: float = 1.0,
        alpha: float = 0.0,
        epsilons: tuple[float, float, float] = (0.0, 0.0, 0.0),
    ) -> WeightSystem:
        """Weight system with explicitly given constants (no grid evaluation)."""
        if isinstance(constants, Mapping):
            values = {cid: float(constants.get(cid, 0.0)) for cid in CONSTANT_IDS}
        else:
            if len(constants) != len(CONSTANT_IDS):
                raise ParameterDomainError("eight constants c1..c8 are required")
            values = {cid: float(v) for cid, v in zip(CONSTANT_IDS, constants, strict=True)}
        return cls(epsilons=epsilons, k=float(k), alpha=alpha, horizon=horizon, window=window, constants=values)

    @property
    def a0(self) -> float:
        return self.window[0]

    @property
    def b(self) -> float:
        return self.window[2]

    @property
    def b0(self) -> float:
        return self.window[3]

    def cbar(self) -> dict[str, float]:
        """``cbar_j = c_j (t - b0)^(r_j)``."""
        gap = self.horizon - self.b0
        return {cid: value * gap ** self.exponents.get(cid, 0.0) for cid, value in self.constants.items()}

    def to_dict(self) -> dict[str, Any]:
        return {
            "epsilons": list(self.epsilons),
            "k": self.k,
            "alpha": self.alpha,
            "horizon": self.horizon,
            "window": {"a0": self.window[0], "a": self.window[1], "b": self.window[2], "b0": self.window[3]},
            "constants": self.constants,
            "r": self.exponents,
            "cbar": self.cbar() if self.exponents else {},
            "argmax": self.argmax,
            "grid_c1": self.grid_c1,
            "c0": self.c0,
            "sigma": self.sigma,
            "ordering_holds": self.ordering_holds,
            "analytic_c2": self.analytic_c2,
        }


def check_epsilons(epsilons: Sequence[float], delta: float, k: float) -> tuple[float, float, float]:
    if len(epsilons) != 3:
        raise ParameterDomainError("three rates eps0 < eps1 < eps2 are required")
    e0, e1, e2 = (float(e) for e in epsilons)
    if not 0.0 < e0 < e1 < e2 < delta:
        raise ParameterDomainError(f"need 0 < eps0 < eps1 < eps2 < delta = {delta:g}, got {e0:g}, {e1:g}, {e2:g}")
    if not k * (e1 - e0) < e2 - e0:
        raise ParameterDomainError(
            f"need k (eps1 - eps0) < eps2 - eps0, got {k * (e1 - e0):g} >= {e2 - e0:g}"
        )
    return e0, e1, e2


def check_window(window: Sequence[float], horizon: float) -> tuple[float, float, float, float]:
    if len(window) != 4:
        raise ParameterDomainError("window is (a0, a, b, b0)")
    a0, a, b, b0 = (float(v) for v in window)
    if not 0.0 < a0 < a < b < b0 < horizon:
        raise ParameterDomainError(f"need 0 < a0 < a < b < b0 < t, got {a0:g}, {a:g}, {b:g}, {b0:g} (t={horizon:g})")
    return a0, a, b, b0


def analytic_c2_bound(
    params: GrowthParams, epsilons: Sequence[float], alpha: float, k: float, horizon: float, window: Sequence[float]
) -> float:
    """Bound on the ``|x| >= 1`` part of ``c2`` from :func:`power_exp_sup`."""
    e0, e1, _ = (float(e) for e in epsilons)
    beta = params.beta
    gamma = beta - 1.0 + params.m
    cbar = 2.0 * e0 * beta * params.Lambda * power_exp_sup(gamma, beta, (e1 - e0) / k)
    power = -alpha * (params.m - 1.0) / beta
    a0, b0 = float(window[0]), float(window[-1])
    gaps = np.array([horizon - a0, horizon - b0])
    return float(cbar * np.max(gaps**power))


class _Sup:
    def __init__(self) -> None:
        self.value = -np.inf
        self.where: dict[str, Any] = {}

    def update(self, log_ratio: np.ndarray, s: float, pts: np.ndarray, cid: str) -> None:
        if not np.all(np.isfinite(log_ratio) | (log_ratio == -np.inf)):
            bad = int(np.argmax(~np.isfinite(log_ratio) & (log_ratio != -np.inf)))
            raise CoefficientEvaluationError(f"non-finite ratio for {cid}", t=s, x=pts[bad].tolist())
        i = int(np.argmax(log_ratio))
        if log_ratio[i] > self.value:
            self.value = float(log_ratio[i])
            self.where = {"s": s, "x": pts[i].tolist()}

    @property
    def constant(self) -> float:
        return 0.0 if self.value == -np.inf else float(np.exp(self.value))


def _log_abs(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(values))


def weight_constants(
    field: CoefficientField,
    params: GrowthParams,
    static: StaticLyapunov,
    epsilons: Sequence[float],
    alpha: float,
    k: float,
    window: Sequence[float],
    grid: ShellGrid,
    *,
    horizon: float = 1.0,
) -> WeightSystem:
    """Grid suprema of the eight defining ratios over the times of ``grid`` inside ``[a0, b0]``."""
    logger = get_logger(__name__)
    if not k > field.d + 2:
        raise ParameterDomainError(f"k must exceed d+2 = {field.d + 2}, got {k:g}")
    e0, e1, e2 = check_epsilons(epsilons, static.delta, k)
    a0, a, b, b0 = check_window(window, horizon)
    profile = static.profile
    times = grid.times[(grid.times >= a0 - 1e-12) & (grid.times <= b0 + 1e-12)]
    if times.size == 0:
        raise ParameterDomainError(f"grid has no time slice inside [{a0:g}, {b0:g}]")
    pts = grid.points()
    u = profile.value(pts)
    g = profile.gradient(pts)
    hess = profile.hessian(pts)
    lap = profile.laplacian(pts)

    sups = {cid: _Sup() for cid in CONSTANT_IDS}
    c1_grid = _Sup()
    dominance = _Sup()
    ordering = True
    for s in times:
        s = float(s)
        gap = horizon - s
        r0, r1, r2 = (e * gap**alpha for e in (e0, e1, e2))
        q = field.q(s, pts)
        f = field.f(s, pts)
        qg = np.linalg.norm(np.einsum("nij,nj->ni", q, g), axis=-1)
        w_fn = RadialExponential(profile, r0)
        a0w = np.einsum("nij,nij->n", q, w_fn.hess_ratio(pts))
        ds_w = -e0 * alpha * gap ** (alpha - 1.0) * u
        lap_w = r0 * (lap + r0 * np.sum(g * g, axis=-1))
        div = np.linalg.norm(divergence_vector(field, s, pts), axis=-1)
        f_norm = np.linalg.norm(f, axis=-1)

        one = (r0 - r1) * u / k
        two = 2.0 * (r0 - r1) * u / k
        c1_grid.update((r0 - r1) * u, s, pts, "c1")
        sups["c2"].update(_log_abs(r0 * qg) + one, s, pts, "c2")
        sups["c3"].update(_log_abs(a0w) + two, s, pts, "c3")
        sups["c4"].update(_log_abs(ds_w) + two, s, pts, "c4")
        sups["c5"].update(_log_abs(div) + (r0 - r2) * u / k, s, pts, "c5")
        sups["c6"].update(k * _log_abs(f_norm) + (r0 - r2) * u, s, pts, "c6")
        sups["c7"].update(_log_abs(lap_w) + two, s, pts, "c7")
        sups["c8"].update(_log_abs(r1 * qg) + (k * r1 - (k - 1.0) * r0 - r2) * u / k, s, pts, "c8")
        # W2 <= c0 V^(1-sigma) with 1 - sigma = eps2 / delta
        dominance.update((r2 - e2) * u, s, pts, "c0")
        ordering = ordering and bool(np.all(r0 * u <= r1 * u + 1e-12) and np.all(r1 * u <= r2 * u + 1e-12))

    constants = {cid: sups[cid].constant for cid in CONSTANT_IDS}
    constants["c1"] = max(1.0, c1_grid.constant)
    argmax = {cid: sups[cid].where for cid in CONSTANT_IDS if sups[cid].where}
    system = WeightSystem(
        epsilons=(e0, e1, e2),
        k=float(k),
        alpha=float(alpha),
        horizon=float(horizon),
        window=(a0, a, b, b0),
        constants=constants,
        exponents=r_exponents(params, alpha, k),
        argmax=argmax,
        grid_c1=c1_grid.constant,
        c0=max(1.0, dominance.constant),
        sigma=1.0 - e2 / static.delta,
        ordering_holds=ordering,
        analytic_c2=analytic_c2_bound(params, (e0, e1, e2), alpha, k, horizon, (a0, a, b, b0)),
    )
    logger.info(
        "weight_constants_computed",
        extra={"window": [a0, a, b, b0], "k": k, "slices": int(times.size), "ordering_holds": ordering},
    )
    return system


def localized_constants(constants: Mapping[str, float] | Sequence[float], eta: float) -> tuple[float, float, float]:
    """``(2 c2, c3 + eta c7, c5 + 4 c1 c8)`` for the truncated operators."""
    if isinstance(constants, Mapping):
        c = {cid: float(constants.get(cid, 0.0)) for cid in CONSTANT_IDS}
    else:
        c = {cid: float(v) for cid, v in zip(CONSTANT_IDS, constants, strict=True)}
    return 2.0 * c["c2"], c["c3"] + eta * c["c7"], c["c5"] + 4.0 * c["c1"] * c["c8"]
