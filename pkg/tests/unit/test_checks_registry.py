from collections.abc import Callable
from pathlib import Path

import pytest

from kolmogorov_lab.checks.context import ScenarioContext
from kolmogorov_lab.checks.registry import CHECKS, CheckResult, get_check, is_registered, list_checks
from kolmogorov_lab.checks.suite import CHECK_RUNNERS, check_approx_convergence, run_checks
from kolmogorov_lab.config.scenario import parse_scenario
from kolmogorov_lab.errors import ConfigurationError, InputError
from kolmogorov_lab.io.writer import ArtifactWriter

KNOWN_NEEDS = {"growth", "oracle", "fd", "kde", "approx"}

HEAT = """\
name: heat
operator:
  family: brownian
  d: 1
  q: 0.5
simulation:
  starts: [0.5]
  x0: [0.0]
verification:
  checks: [fd_vs_closed_form]
"""


def test_registry_is_sorted_and_unique() -> None:
    ids = [spec.check_id for spec in list_checks()]
    assert ids == sorted(ids)
    assert len(ids) == len(set(ids)) == len(CHECKS)
    assert {"moment_bound_prop27", "tail_decay_thm53", "fd_vs_closed_form"} <= set(ids)


def test_needs_use_known_vocabulary() -> None:
    for spec in CHECKS:
        assert set(spec.needs) <= KNOWN_NEEDS, spec.check_id
    assert get_check("exponent_calculators").needs == ()


def test_unknown_check_raises_input_error() -> None:
    assert not is_registered("nope")
    with pytest.raises(InputError, match="unknown check id 'nope'"):
        get_check("nope")


def test_check_result_serializes_status() -> None:
    assert CheckResult("x", True).to_dict()["status"] == "pass"
    failed = CheckResult("x", False, ["too large"], {"sup": 1.0}).to_dict()
    assert failed == {"status": "fail", "messages": ["too large"], "detail": {"sup": 1.0}}


def _heat_context(tmp_path: Path) -> ScenarioContext:
    scenario = parse_scenario(HEAT, "heat.yaml")
    return ScenarioContext(scenario, ArtifactWriter(tmp_path), seed=1)


def test_approx_check_without_approx_section_is_a_configuration_error(tmp_path: Path) -> None:
    ctx = _heat_context(tmp_path)
    with pytest.raises(ConfigurationError, match="no approx section"):
        check_approx_convergence(ctx)
    with pytest.raises(ConfigurationError):
        _ = ctx.approx_levels


def test_run_checks_dedupes_and_orders_by_id(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    calls: list[str] = []

    def runner(check_id: str) -> Callable[[ScenarioContext], CheckResult]:
        def run(ctx: ScenarioContext) -> CheckResult:
            calls.append(check_id)
            return CheckResult(check_id, True)

        return run

    for check_id in ("tail_decay_thm53", "fd_vs_closed_form", "exponent_calculators"):
        monkeypatch.setitem(CHECK_RUNNERS, check_id, runner(check_id))
    results = run_checks(
        _heat_context(tmp_path), ["tail_decay_thm53", "fd_vs_closed_form", "exponent_calculators", "fd_vs_closed_form"]
    )
    expected = ["exponent_calculators", "fd_vs_closed_form", "tail_decay_thm53"]
    assert calls == expected
    assert [r.check_id for r in results] == expected
