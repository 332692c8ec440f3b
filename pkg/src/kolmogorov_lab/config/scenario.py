"""Scenario files: YAML documents validated by pydantic models.

Every model forbids unknown keys. Validation failures are re-raised as
:class:`ScenarioError` anchored at the YAML line of the offending key, e.g.
``scenarios/x.yaml:12: lyapunov.alpha: ...``.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_core import PydanticCustomError

from kolmogorov_lab.checks.registry import get_check, is_registered
from kolmogorov_lab.errors import ScenarioError
from kolmogorov_lab.operators.model import (
    CoefficientField,
    GrowthParams,
    brownian_field,
    constant_b,
    make_example54,
    ou_field,
)
from kolmogorov_lab.utils.ids import stable_hash_id

FAMILIES = ("brownian", "ou", "example54")
ORACLE_FAMILIES = ("brownian", "ou")


def _rule(path: str, reason: str) -> PydanticCustomError:
    return PydanticCustomError("scenario_rule", "{reason}", {"path": path, "reason": reason})


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GrowthSpec(_Spec):
    m: float = Field(ge=0)
    p: float
    Lambda: float = Field(gt=0)
    kappa: float = Field(gt=0)
    K: float = Field(default=1.0, ge=1)
    b: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _p_range(self) -> GrowthSpec:
        floor = max(self.m - 1.0, 1.0)
        if not self.p > floor:
            raise _rule("p", f"p must exceed max(m-1, 1) = {floor:g}, got {self.p:g}")
        return self

    @property
    def beta(self) -> float:
        return self.p + 1.0 - self.m

    @property
    def alpha_threshold(self) -> float:
        return (self.p + 1.0 - self.m) / (self.p - 1.0)

    def build(self) -> GrowthParams:
        return GrowthParams(
            m=self.m, p=self.p, Lambda=self.Lambda, kappa=self.kappa, K=self.K, b=constant_b(self.b)
        )


class OperatorSpec(_Spec):
    family: Literal["brownian", "ou", "example54"]
    d: int = Field(default=1, ge=1)
    q: float = Field(default=0.5, gt=0)
    theta: float = Field(default=1.0, gt=0)
    growth: GrowthSpec | None = None
    q0: float | list[list[float]] = 1.0

    @model_validator(mode="after")
    def _family_fields(self) -> OperatorSpec:
        if self.family == "example54" and self.growth is None:
            raise _rule("growth", "the example54 family needs growth parameters (m, p, Lambda, kappa)")
        if self.family != "example54" and self.growth is not None:
            raise _rule("growth", f"growth parameters do not apply to the {self.family} family")
        if isinstance(self.q0, list):
            mat = np.asarray(self.q0, dtype=float)
            if mat.shape != (self.d, self.d):
                raise _rule("q0", f"q0 must be a {self.d}x{self.d} matrix, got shape {list(mat.shape)}")
            if not np.allclose(mat, mat.T) or np.linalg.eigvalsh(mat).min() <= 0:
                raise _rule("q0", "q0 must be symmetric positive definite")
        elif not self.q0 > 0:
            raise _rule("q0", f"q0 must be > 0, got {self.q0:g}")
        return self

    def build_field(self) -> CoefficientField:
        if self.family == "brownian":
            return brownian_field(self.d, self.q)
        if self.family == "ou":
            return ou_field(self.d, self.theta, self.q)
        assert self.growth is not None
        q0 = np.asarray(self.q0, dtype=float) if isinstance(self.q0, list) else float(self.q0)
        return make_example54(self.d, self.growth.build(), q0)

    def build_params(self) -> GrowthParams | None:
        return None if self.growth is None else self.growth.build()


class ProbeGridSpec(_Spec):
    s_step: float = Field(default=0.01, gt=0)
    s_max: float = Field(default=0.99, ge=0)
    r_max: float = Field(default=10.0, gt=0)
    dr: float = Field(default=0.05, gt=0)

    def times(self, step: float | None = None) -> np.ndarray:
        width = self.s_step if step is None else step
        count = int(np.floor(self.s_max / width + 1e-9)) + 1
        return np.round(width * np.arange(count), 12)


class WeightSpec(_Spec):
    eps_fracs: tuple[float, float, float] = (0.1, 0.2, 0.9)
    k: float = Field(default=4.0, gt=1)
    window: tuple[float, float, float, float] | None = None
    C: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _ordering(self) -> WeightSpec:
        f0, f1, f2 = self.eps_fracs
        if not 0.0 < f0 < f1 < f2 < 1.0:
            raise _rule("eps_fracs", f"need 0 < eps0 < eps1 < eps2 < 1 (fractions of delta), got {list(self.eps_fracs)}")
        if not self.k * (f1 - f0) < f2 - f0:
            raise _rule("eps_fracs", f"need k (eps1 - eps0) < eps2 - eps0 with k = {self.k:g}")
        return self


class LyapunovSpec(_Spec):
    delta_frac: float = Field(default=0.8, gt=0, lt=1)
    eps_frac: float = Field(default=0.5, gt=0, lt=1)
    alpha: float
    r_cert: float | None = Field(default=None, gt=0)
    grid: ProbeGridSpec = ProbeGridSpec()
    weights: WeightSpec = WeightSpec()


class SimulationSpec(_Spec):
    starts: list[float] = Field(min_length=1)
    t: float = Field(default=1.0, gt=0, le=1)
    x0: list[float] = Field(min_length=1)
    n_paths: int = Field(default=100_000, ge=1)
    dt: float = Field(default=1e-3, gt=0)
    scheme: Literal["tamed-euler", "semi-implicit-drift", "euler"] = "tamed-euler"
    seed: int | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _starts(self) -> SimulationSpec:
        for i, s in enumerate(self.starts):
            if not 0.0 <= s < self.t:
                raise _rule(f"starts.{i}", f"start times must lie in [0, t = {self.t:g}), got {s:g}")
        if len(set(self.starts)) != len(self.starts):
            raise _rule("starts", "start times must be distinct")
        return self


class KdeSpec(_Spec):
    n_paths: int | None = Field(default=None, ge=2)
    bandwidth: Literal["scott", "silverman"] | float = "scott"
    n: int | None = Field(default=None, ge=3)
    box: list[tuple[float, float]] | None = None


class DensitySpec(_Spec):
    route: Literal["kde", "fd", "both"] = "fd"
    box: list[tuple[float, float]] = [(-6.0, 6.0)]
    nx: int | list[int] = 1201
    dt: float = Field(default=1e-4, gt=0)
    boundary: Literal["absorbing", "reflecting"] = "absorbing"
    kde: KdeSpec = KdeSpec()

    @model_validator(mode="after")
    def _boxes(self) -> DensitySpec:
        for name, box in (("box", self.box), ("kde.box", self.kde.box or [])):
            for i, (lo, hi) in enumerate(box):
                if not lo < hi:
                    raise _rule(f"{name}.{i}", f"box side needs lo < hi, got [{lo:g}, {hi:g}]")
        return self

    @property
    def uses_fd(self) -> bool:
        return self.route in ("fd", "both")

    @property
    def uses_kde(self) -> bool:
        return self.route in ("kde", "both")


class ApproxSpec(_Spec):
    levels: list[int] = Field(default_factory=lambda: [10, 100, 1000], min_length=1)
    region: list[tuple[float, float]] | None = None
    window: tuple[float, float] = (0.25, 0.75)

    @model_validator(mode="after")
    def _levels(self) -> ApproxSpec:
        if any(n < 1 for n in self.levels):
            raise _rule("levels", "truncation levels must be positive integers")
        if sorted(set(self.levels)) != list(self.levels):
            raise _rule("levels", "truncation levels must be distinct and increasing")
        if not self.window[0] <= self.window[1]:
            raise _rule("window", "window needs lo <= hi")
        return self


class ToleranceSpec(_Spec):
    fd_sup: float = Field(default=1e-3, gt=0)
    kde_l1: float = Field(default=0.05, gt=0)
    kde_fd_l1: float = Field(default=0.05, gt=0)
    tail_rel: float = Field(default=0.1, ge=0, lt=1)
    domination_factor: float = Field(default=1.1, ge=1)
    approx_sup: float = Field(default=1e-3, gt=0)
    quad_rel: float = Field(default=0.01, gt=0)
    gamma_abs: float = Field(default=1e-3, gt=0)


class GammaSpec(_Spec):
    k: float = Field(default=2.0, ge=1)
    window: tuple[float, float] = (0.25, 0.5)
    nodes: int = Field(default=11, ge=2)

    @model_validator(mode="after")
    def _window(self) -> GammaSpec:
        if not 0.0 <= self.window[0] < self.window[1]:
            raise _rule("window", f"need 0 <= a < b, got {list(self.window)}")
        return self


class BootstrapSpec(_Spec):
    d: int = Field(ge=1)
    k: float = Field(gt=1)
    r1: float
    target_r: float


class MoserSpec(_Spec):
    nu_d: float = Field(gt=0)
    alpha_m: float = Field(gt=0)
    y0: float = Field(ge=0)
    n_max: int = Field(default=60, ge=1)


class RegularitySpec(_Spec):
    bootstrap: BootstrapSpec | None = None
    moser: MoserSpec | None = None


class VerificationSpec(_Spec):
    checks: list[str] = Field(default_factory=list)
    tolerances: ToleranceSpec = ToleranceSpec()
    gamma: GammaSpec = GammaSpec()
    tail_beta: float | None = Field(default=None, gt=0)
    regularity: RegularitySpec = RegularitySpec()


class OutputSpec(_Spec):
    dir: Path | None = None
    format: Literal["json", "csv"] = "json"


class Scenario(_Spec):
    name: str = Field(min_length=1)
    operator: OperatorSpec
    lyapunov: LyapunovSpec | None = None
    simulation: SimulationSpec
    density: DensitySpec = DensitySpec()
    approx: ApproxSpec | None = None
    verification: VerificationSpec = VerificationSpec()
    output: OutputSpec = OutputSpec()

    @model_validator(mode="after")
    def _cross_rules(self) -> Scenario:
        op = self.operator
        if len(self.simulation.x0) != op.d:
            raise _rule("simulation.x0", f"x0 has {len(self.simulation.x0)} coordinates for d = {op.d}")
        if len(self.density.box) != op.d:
            raise _rule("density.box", f"box has {len(self.density.box)} sides for d = {op.d}")
        if self.density.kde.box is not None and len(self.density.kde.box) != op.d:
            raise _rule("density.kde.box", f"box has {len(self.density.kde.box)} sides for d = {op.d}")
        if self.density.uses_fd and op.d > 2:
            raise _rule("density.route", f"finite differences support d <= 2, got d = {op.d}")
        if self.lyapunov is not None and op.growth is not None:
            self._check_growth(op.growth, self.lyapunov, op.d)
        seen: set[str] = set()
        for i, check_id in enumerate(self.verification.checks):
            if not is_registered(check_id):
                raise _rule(f"verification.checks.{i}", f"unknown check id {check_id!r}")
            if check_id in seen:
                raise _rule(f"verification.checks.{i}", f"check {check_id!r} is listed twice")
            seen.add(check_id)
            self._check_needs(i, check_id)
        return self

    @staticmethod
    def _check_growth(growth: GrowthSpec, lyap: LyapunovSpec, d: int) -> None:
        threshold = growth.alpha_threshold
        if not lyap.alpha > threshold:
            raise _rule(
                "lyapunov.alpha",
                f"alpha = {lyap.alpha:g} violates alpha > (p+1-m)/(p-1) = {threshold:g} "
                f"(p = {growth.p:g}, m = {growth.m:g}), the constraint of the kernel tail envelope",
            )
        k = lyap.weights.k
        if not k > d + 2:
            raise _rule("lyapunov.weights.k", f"k must exceed d+2 = {d + 2}, got {k:g}")

    def _check_needs(self, index: int, check_id: str) -> None:
        path = f"verification.checks.{index}"
        op = self.operator
        for need in get_check(check_id).needs:
            if need == "growth" and (op.growth is None or self.lyapunov is None):
                raise _rule(path, f"{check_id} needs the example54 family with a lyapunov section")
            if need == "oracle" and op.family not in ORACLE_FAMILIES:
                raise _rule(path, f"{check_id} needs a closed-form family {ORACLE_FAMILIES}, got {op.family}")
            if need == "fd" and not self.density.uses_fd:
                raise _rule(path, f"{check_id} needs density.route fd or both")
            if need == "kde" and not self.density.uses_kde:
                raise _rule(path, f"{check_id} needs density.route kde or both")
            if need == "approx" and self.approx is None:
                raise _rule(path, f"{check_id} needs an approx section")

    def digest(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True).encode("utf-8")
        return stable_hash_id(payload)


def _node_line(root: yaml.Node | None, loc: Sequence[str | int]) -> int | None:
    """Line (1-based) of the deepest node of ``loc`` present in the YAML tree."""
    if root is None:
        return None
    node: yaml.Node = root
    line = root.start_mark.line + 1
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                if str(key.value) == str(part):
                    node, line = value, key.start_mark.line + 1
                    break
            else:
                break
        elif isinstance(node, yaml.SequenceNode):
            try:
                index = int(part)
            except (TypeError, ValueError):
                break
            if not 0 <= index < len(node.value):
                break
            node = node.value[index]
            line = node.start_mark.line + 1
        else:
            break
    return line


def _error_loc(error: Any) -> tuple[str | int, ...]:
    loc = tuple(part for part in error.get("loc", ()) if not isinstance(part, str) or not part.startswith("function-"))
    ctx = error.get("ctx") or {}
    path = ctx.get("path")
    if path:
        extra: list[str | int] = [int(p) if p.isdigit() else p for p in str(path).split(".")]
        # cross rules on the root model carry absolute paths
        loc = tuple(extra) if not loc else loc + tuple(extra)
    return loc


def _scenario_error(exc: ValidationError, source: str, root: yaml.Node | None) -> ScenarioError:
    errors = exc.errors()
    first = errors[0]
    loc = _error_loc(first)
    dotted = ".".join(str(part) for part in loc) or "<root>"
    message = first.get("msg", "invalid value")
    if first.get("type") == "extra_forbidden":
        message = "unknown key"
    if len(errors) > 1:
        message += f" (and {len(errors) - 1} more error(s))"
    return ScenarioError(f"{dotted}: {message}", source=source, line=_node_line(root, loc))


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError(f"invalid YAML: {getattr(exc, 'problem', exc)}", source=source, line=line) from exc
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping", source=source, line=1)
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise _scenario_error(exc, source, root) from None


def load_scenario(path: Path | str) -> Scenario:
    scenario_path = Path(path)
    try:
        text = scenario_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", source=str(scenario_path)) from exc
    return parse_scenario(text, source=str(scenario_path))
