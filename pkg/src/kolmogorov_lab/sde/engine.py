"""Path simulation for ``dX = F dt + sigma dB`` with ``sigma sigma^T = 2 Q``."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.errors import ParameterDomainError, SimulationError
from kolmogorov_lab.operators.model import CoefficientField
from kolmogorov_lab.sde.factor import diffusion_factor
from kolmogorov_lab.sde.streams import BLOCK_SIZE, PathNoise, block_layout

SCHEMES = ("tamed-euler", "semi-implicit-drift", "euler")
_NEWTON_MAX_ITER = 50
_NEWTON_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class SimulationPlan:
    field: CoefficientField
    s: float
    t: float
    x0: np.ndarray
    n_paths: int
    dt: float = 1e-3
    scheme: str = "tamed-euler"
    seed: int = 0
    stream_id: int = 0
    store_every: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.s < self.t <= 1.0:
            raise ParameterDomainError(f"need 0 <= s < t <= 1, got s={self.s}, t={self.t}")
        if self.n_paths < 1:
            raise ParameterDomainError("path count must be >= 1")
        if not self.dt > 0:
            raise ParameterDomainError("step size must be > 0")
        if self.scheme not in SCHEMES:
            raise ParameterDomainError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if np.asarray(self.x0).reshape(-1).shape[0] != self.field.d:
            raise ParameterDomainError("start point dimension does not match the field")

    @property
    def start(self) -> np.ndarray:
        return np.asarray(self.x0, dtype=float).reshape(self.field.d)

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil((self.t - self.s) / self.dt - 1e-9))

    @property
    def step(self) -> float:
        return (self.t - self.s) / self.n_steps


@dataclass(slots=True)
class PathEnsemble:
    plan: SimulationPlan
    terminal: np.ndarray
    path_keys: np.ndarray
    explosions: int
    max_abs: float
    slices: np.ndarray | None = None
    slice_times: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def finite_terminal(self) -> np.ndarray:
        return self.terminal[np.all(np.isfinite(self.terminal), axis=-1)]

    def diagnostics(self) -> dict[str, Any]:
        return {
            "n_paths": int(self.terminal.shape[0]),
            "explosions": self.explosions,
            "max_abs": self.max_abs,
            "scheme": self.plan.scheme,
            "steps": self.plan.n_steps,
            "dt": self.plan.step,
        }

    def to_columns(self) -> dict[str, np.ndarray]:
        columns: dict[str, np.ndarray] = {"path": np.arange(self.terminal.shape[0])}
        for k in range(self.terminal.shape[1]):
            columns[f"x{k + 1}"] = self.terminal[:, k]
        return columns


def _drift_increment(plan: SimulationPlan, t: float, x: np.ndarray, h: float, *, tamed: bool) -> np.ndarray:
    f = plan.field.f(t, x)
    if tamed:
        norm = np.linalg.norm(f, axis=-1, keepdims=True)
        return f * h / (1.0 + h * norm)
    return f * h


def _implicit_solve(plan: SimulationPlan, t_next: float, rhs: np.ndarray, guess: np.ndarray, h: float) -> np.ndarray:
    """Solve ``Y - h F(t_next, Y) = rhs`` by Newton with a finite-difference Jacobian."""
    field = plan.field
    d = field.d
    y = guess.copy()
    eye = np.eye(d)
    for _ in range(_NEWTON_MAX_ITER):
        fy = field.f(t_next, y)
        residual = y - h * fy - rhs
        scale = 1.0 + np.abs(y).max(axis=-1)
        # rows that went non-finite are left to the explosion check of the caller
        done = (np.abs(residual).max(axis=-1) <= _NEWTON_TOL * scale) | ~np.all(np.isfinite(residual), axis=-1)
        if np.all(done):
            return y
        step = np.maximum(1e-7, 1e-7 * np.abs(y))
        jac = np.empty(y.shape + (d,))
        for k in range(d):
            shifted = y.copy()
            shifted[:, k] += step[:, k]
            jac[:, :, k] = (field.f(t_next, shifted) - fy) / step[:, k : k + 1]
        system = eye - h * jac
        y = y.copy()
        y[~done] -= np.linalg.solve(system[~done], residual[~done][..., None])[..., 0]
    raise SimulationError("semi-implicit drift step did not converge")


def _simulate_block(plan: SimulationPlan, start: int, stop: int) -> tuple[np.ndarray, int, float, np.ndarray | None]:
    n = stop - start
    d = plan.field.d
    noise_source = PathNoise(plan.seed, plan.stream_id, start, stop, d)
    x = np.tile(plan.start, (n, 1))
    h = plan.step
    sqrt_h = math.sqrt(h)
    alive = np.ones(n, dtype=bool)
    stored: list[np.ndarray] = []
    max_abs = float(np.max(np.abs(x))) if x.size else 0.0
    for k in range(plan.n_steps):
        t_k = plan.s + k * h
        noise = noise_source.next_step(plan.n_steps - k)
        xa = x[alive]
        if xa.shape[0] == 0:
            break
        sigma = diffusion_factor(plan.field.q(t_k, xa))
        diffusion = np.einsum("nij,nj->ni", sigma, noise[alive]) * sqrt_h
        if plan.scheme == "semi-implicit-drift":
            rhs = xa + diffusion
            guess = rhs + _drift_increment(plan, t_k, xa, h, tamed=True)
            with np.errstate(over="ignore", invalid="ignore"):
                xa = _implicit_solve(plan, t_k + h, rhs, guess, h)
        else:
            with np.errstate(over="ignore", invalid="ignore"):
                xa = xa + _drift_increment(plan, t_k, xa, h, tamed=plan.scheme == "tamed-euler") + diffusion
        x[alive] = xa
        bad = alive & ~np.all(np.isfinite(x), axis=-1)
        if np.any(bad):
            x[bad] = np.nan
            alive &= ~bad
        if np.any(alive):
            max_abs = max(max_abs, float(np.max(np.abs(x[alive]))))
        if plan.store_every and (k + 1) % plan.store_every == 0:
            stored.append(x.copy())
    slices = np.stack(stored, axis=0) if stored else None
    return x, int(n - np.count_nonzero(alive)), max_abs, slices


def path_keys(plan: SimulationPlan) -> np.ndarray:
    """``(seed, stream_id, path)`` key of every path, shape ``(n_paths, 3)``."""
    keys = np.empty((plan.n_paths, 3), dtype=np.uint64)
    keys[:, 0] = plan.seed
    keys[:, 1] = plan.stream_id
    keys[:, 2] = np.arange(plan.n_paths, dtype=np.uint64)
    return keys


def simulate_paths(plan: SimulationPlan, threads: int = 1) -> PathEnsemble:
    """Simulate ``plan.n_paths`` independent paths from ``(s, x0)`` to ``t``.

    Every path draws from its own Philox stream keyed by ``(seed, stream_id,
    path)``, so path ``i`` is the same for every path count and every
    ``threads`` value. Blocks of :data:`BLOCK_SIZE` paths are only the unit
    handed to the thread pool.
    """
    logger = get_logger(__name__)
    layout = block_layout(plan.n_paths, BLOCK_SIZE)
    jobs = layout
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: _simulate_block(plan, *job), jobs))
    else:
        results = [_simulate_block(plan, *job) for job in jobs]

    terminal = np.concatenate([r[0] for r in results], axis=0)
    explosions = sum(r[1] for r in results)
    max_abs = max(r[2] for r in results)
    slices = None
    slice_times = None
    if plan.store_every and results[0][3] is not None:
        slices = np.concatenate([r[3] for r in results if r[3] is not None], axis=1)
        count = slices.shape[0]
        slice_times = plan.s + plan.step * plan.store_every * np.arange(1, count + 1)

    if explosions == plan.n_paths:
        raise SimulationError(f"all {plan.n_paths} paths exploded under scheme {plan.scheme!r}")
    ensemble = PathEnsemble(
        plan=plan,
        terminal=terminal,
        path_keys=path_keys(plan),
        explosions=explosions,
        max_abs=max_abs,
        slices=slices,
        slice_times=slice_times,
    )
    logger.info(
        "paths_simulated",
        extra={
            "field": plan.field.name,
            "n_paths": plan.n_paths,
            "s": plan.s,
            "t": plan.t,
            "scheme": plan.scheme,
            "explosions": explosions,
            "blocks": len(jobs),
        },
    )
    return ensemble
