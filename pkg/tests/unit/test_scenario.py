from pathlib import Path

import pytest

from kolmogorov_lab.config.scenario import load_scenario, parse_scenario
from kolmogorov_lab.errors import ScenarioError

EXAMPLE54 = """\
name: tight_alpha
operator:
  family: example54
  d: 1
  growth:
    m: 0.0
    p: 3.0
    Lambda: 1.0
    kappa: 1.0
lyapunov:
  alpha: {alpha}
simulation:
  starts: [0.25, 0.5]
  x0: [0.0]
verification:
  checks: [{check}]
"""

BROWNIAN = """\
name: heat
operator:
  family: brownian
  d: 1
  {extra}
simulation:
  starts: {starts}
  x0: [0.0]
verification:
  checks: [{check}]
"""


def _brownian(extra: str = "q: 0.5", starts: str = "[0.5]", check: str = "fd_vs_closed_form") -> str:
    return BROWNIAN.format(extra=extra, starts=starts, check=check)


def test_valid_scenario_parses() -> None:
    scenario = parse_scenario(EXAMPLE54.format(alpha=2.5, check="moment_bound_prop27"), "x.yaml")
    assert scenario.operator.growth is not None
    assert scenario.operator.growth.alpha_threshold == pytest.approx(2.0)
    assert scenario.density.route == "fd"
    field = scenario.operator.build_field()
    assert field.name == "example54"


def test_alpha_at_threshold_is_rejected_at_its_line() -> None:
    with pytest.raises(ScenarioError) as excinfo:
        parse_scenario(EXAMPLE54.format(alpha=2.0, check="moment_bound_prop27"), "tight.yaml")
    assert excinfo.value.line == 11
    assert str(excinfo.value).startswith("tight.yaml:11: lyapunov.alpha: ")
    assert "(p+1-m)/(p-1)" in str(excinfo.value)


def test_unknown_key_is_reported_at_its_line() -> None:
    with pytest.raises(ScenarioError) as excinfo:
        parse_scenario(_brownian(extra="colour: red"), "heat.yaml")
    assert excinfo.value.line == 5
    assert "operator.colour: unknown key" in str(excinfo.value)


def test_unknown_check_id() -> None:
    with pytest.raises(ScenarioError, match="unknown check id 'no_such_check'") as excinfo:
        parse_scenario(_brownian(check="no_such_check"), "heat.yaml")
    assert "verification.checks.0" in str(excinfo.value)


def test_check_needs_are_enforced() -> None:
    with pytest.raises(ScenarioError, match="needs the example54 family"):
        parse_scenario(_brownian(check="moment_bound_prop27"), "heat.yaml")
    with pytest.raises(ScenarioError, match="needs density.route kde"):
        parse_scenario(_brownian(check="kde_vs_closed_form"), "heat.yaml")


def test_start_times_must_precede_horizon() -> None:
    with pytest.raises(ScenarioError, match="simulation.starts.1"):
        parse_scenario(_brownian(starts="[0.5, 1.0]"), "heat.yaml")
    with pytest.raises(ScenarioError, match="distinct"):
        parse_scenario(_brownian(starts="[0.5, 0.5]"), "heat.yaml")


def test_digest_is_stable_and_content_sensitive() -> None:
    first = parse_scenario(_brownian(), "a.yaml")
    again = parse_scenario(_brownian(), "b.yaml")
    other = parse_scenario(_brownian(extra="q: 0.25"), "a.yaml")
    assert first.digest() == again.digest()
    assert first.digest() != other.digest()
    assert len(first.digest()) == 64


def test_invalid_yaml_and_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ScenarioError, match="invalid YAML"):
        parse_scenario("name: [unclosed\n", "bad.yaml")
    with pytest.raises(ScenarioError, match="must be a mapping"):
        parse_scenario("- 1\n- 2\n", "list.yaml")
    with pytest.raises(ScenarioError, match="cannot read scenario"):
        load_scenario(tmp_path / "missing.yaml")


def test_bundled_scenarios_load() -> None:
    root = Path(__file__).resolve().parents[2] / "scenarios"
    names = {load_scenario(path).name for path in root.glob("*.yaml")}
    assert {"brownian_smoke", "example54_acceptance", "ou_oracle"} <= names
