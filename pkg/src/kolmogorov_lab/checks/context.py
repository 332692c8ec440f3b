"""Lazily built objects shared by the checks of one scenario run."""

from __future__ import annotations

from functools import cached_property
from typing import Any

import numpy as np

from kolmogorov_lab.bounds.envelope import KernelEnvelope, brownian_envelope, canonical_window, kernel_envelope
from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.config.scenario import ApproxSpec, LyapunovSpec, Scenario
from kolmogorov_lab.density.field import DensityField, SpatialGrid
from kolmogorov_lab.density.fokker_planck import start_time_family
from kolmogorov_lab.density.kde import kde_density
from kolmogorov_lab.density.oracles import brownian_density, ou_density, tabulate_oracle
from kolmogorov_lab.errors import ConfigurationError, InputError
from kolmogorov_lab.io.writer import ArtifactWriter
from kolmogorov_lab.lyapunov.derive import derive_static, derive_time_dependent
from kolmogorov_lab.lyapunov.functions import StaticLyapunov, TimeDependentLyapunov
from kolmogorov_lab.operators.grid import ShellGrid
from kolmogorov_lab.operators.model import CoefficientField, GrowthParams
from kolmogorov_lab.sde.engine import PathEnsemble, SimulationPlan, simulate_paths

# KDE ensembles draw from their own streams so they never share noise with moment curves
KDE_STREAM_OFFSET = 1000


class ScenarioContext:
    def __init__(
        self,
        scenario: Scenario,
        writer: ArtifactWriter,
        *,
        seed: int,
        threads: int = 1,
        kde_exact_limit: float = 5e7,
        approx_levels: list[int] | None = None,
    ):
        self.scenario = scenario
        self.writer = writer
        self.seed = seed
        self.threads = threads
        self.kde_exact_limit = kde_exact_limit
        self._approx_levels = approx_levels
        self.densities: dict[str, DensityField] = {}
        self.tail_rows: dict[float, dict[str, Any]] = {}
        self.logger = get_logger(__name__)

    @property
    def lyap_spec(self) -> LyapunovSpec:
        if self.scenario.lyapunov is None:
            raise InputError("scenario has no lyapunov section")
        return self.scenario.lyapunov

    @property
    def horizon(self) -> float:
        return self.scenario.simulation.t

    @property
    def x0(self) -> np.ndarray:
        return np.asarray(self.scenario.simulation.x0, dtype=float)

    @property
    def starts(self) -> np.ndarray:
        return np.sort(np.asarray(self.scenario.simulation.starts, dtype=float))

    @property
    def approx_spec(self) -> ApproxSpec:
        if self.scenario.approx is None:
            raise ConfigurationError("scenario has no approx section")
        return self.scenario.approx

    @property
    def approx_levels(self) -> list[int]:
        if self._approx_levels:
            return sorted(set(self._approx_levels))
        return list(self.approx_spec.levels)

    @cached_property
    def field(self) -> CoefficientField:
        return self.scenario.operator.build_field()

    @cached_property
    def params(self) -> GrowthParams:
        params = self.scenario.operator.build_params()
        if params is None:
            raise InputError(f"the {self.scenario.operator.family} family has no growth parameters")
        return params

    @cached_property
    def probe_grid(self) -> ShellGrid:
        spec = self.lyap_spec.grid
        return ShellGrid.build(self.field.d, spec.times(), spec.r_max, spec.dr)

    @cached_property
    def static(self) -> StaticLyapunov:
        spec = self.lyap_spec
        return derive_static(self.field, self.params, spec.delta_frac, self.probe_grid, r_cert=spec.r_cert)

    @cached_property
    def lyapunov(self) -> TimeDependentLyapunov:
        spec = self.lyap_spec
        return derive_time_dependent(
            self.static, self.field, self.params, self.horizon, spec.eps_frac, spec.alpha, self.probe_grid
        )

    @cached_property
    def envelope(self) -> KernelEnvelope:
        op = self.scenario.operator
        if op.family == "example54":
            spec = self.lyap_spec
            return kernel_envelope(self.params, spec.alpha, spec.weights.k, op.d)
        if np.any(self.x0 != 0.0):
            raise InputError("the heat-kernel envelope is centred at the origin; use x0 = 0")
        return brownian_envelope(op.q, op.d)

    def family_density(self, starts: np.ndarray | list[float], field: CoefficientField | None = None) -> DensityField:
        spec = self.scenario.density
        return start_time_family(
            field or self.field, starts, self.horizon, self.x0, spec.box, spec.nx, spec.dt, spec.boundary
        )

    @cached_property
    def fd_density(self) -> DensityField:
        density = self.family_density(self.starts)
        self.densities["fd"] = density
        return density

    @cached_property
    def ensembles(self) -> list[PathEnsemble]:
        sim = self.scenario.simulation
        n_paths = self.scenario.density.kde.n_paths or sim.n_paths
        out = []
        for j, s in enumerate(self.starts):
            plan = SimulationPlan(
                field=self.field,
                s=float(s),
                t=self.horizon,
                x0=self.x0,
                n_paths=n_paths,
                dt=sim.dt,
                scheme=sim.scheme,
                seed=self.seed,
                stream_id=KDE_STREAM_OFFSET + j,
            )
            out.append(simulate_paths(plan, threads=self.threads))
        return out

    @cached_property
    def kde_grid(self) -> SpatialGrid:
        spec = self.scenario.density
        return SpatialGrid.build(spec.kde.box or spec.box, spec.kde.n or spec.nx)

    @cached_property
    def kde_density(self) -> DensityField:
        rule = self.scenario.density.kde.bandwidth
        density = kde_density(self.ensembles, self.kde_grid, rule=rule, exact_limit=self.kde_exact_limit)
        self.densities["kde"] = density
        return density

    def oracle_on(self, grid: SpatialGrid, name: str = "oracle") -> DensityField:
        op = self.scenario.operator
        x0 = self.x0
        if op.family == "brownian":
            def fn(gap: float, y: np.ndarray) -> np.ndarray:
                return brownian_density(gap, x0, y, op.q)
        elif op.family == "ou":
            def fn(gap: float, y: np.ndarray) -> np.ndarray:
                return ou_density(gap, x0, y, op.theta, op.q)
        else:
            raise InputError(f"no closed-form density for the {op.family} family")
        density = tabulate_oracle(fn, grid, self.starts, self.horizon, x0, self.field.name)
        self.densities[name] = density
        return density

    def default_window(self) -> tuple[float, float, float, float]:
        """``(a0, s, b, b0)`` around the middle start time."""
        s = float(self.starts[len(self.starts) // 2])
        a0, b, b0 = canonical_window(s, self.horizon)
        return a0, s, b, b0

    def tail_row(self, gap: float) -> dict[str, Any]:
        return self.tail_rows.setdefault(round(float(gap), 12), {})
