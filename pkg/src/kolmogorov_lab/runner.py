"""Scenario orchestration: run checks, write the artifact tree and the run manifest."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from kolmogorov_lab.checks.context import ScenarioContext
from kolmogorov_lab.checks.registry import CheckResult
from kolmogorov_lab.checks.suite import run_checks
from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.config.scenario import Scenario, load_scenario
from kolmogorov_lab.config.settings import Settings, get_settings
from kolmogorov_lab.io.paths import report_relative_path, tails_relative_path
from kolmogorov_lab.io.writer import ArtifactWriter, table_plot_script
from kolmogorov_lab.state.manifests import ManifestStore
from kolmogorov_lab.utils.ids import new_run_id

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1


@dataclass(slots=True)
class RunOutcome:
    exit_code: int
    out_dir: Path
    report: dict[str, Any]
    output_format: str = "json"


def open_context(
    scenario: Scenario,
    *,
    settings: Settings | None = None,
    out: Path | None = None,
    seed: int | None = None,
    threads: int | None = None,
    approx_levels: list[int] | None = None,
) -> ScenarioContext:
    """Resolve output directory, seed and threads (flag > scenario > environment)."""
    settings = settings or get_settings()
    out_dir = out or scenario.output.dir or settings.out_dir
    resolved_seed = seed if seed is not None else scenario.simulation.seed
    if resolved_seed is None:
        resolved_seed = settings.seed
    return ScenarioContext(
        scenario,
        ArtifactWriter(Path(out_dir)),
        seed=resolved_seed,
        threads=threads or settings.threads,
        kde_exact_limit=settings.kde_exact_limit,
        approx_levels=approx_levels,
    )


def build_report(ctx: ScenarioContext, results: Sequence[CheckResult], command: str) -> dict[str, Any]:
    """Deterministic report: nothing here depends on wall clock, thread count or output location."""
    failed = sorted(r.check_id for r in results if not r.passed)
    scenario = ctx.scenario
    return {
        "scenario": scenario.name,
        "scenario_digest": scenario.digest(),
        "seed": ctx.seed,
        "command": command,
        "operator": ctx.field.describe(),
        "checks": {r.check_id: r.to_dict() for r in results},
        "verdicts": {r.check_id: "pass" if r.passed else "fail" for r in results},
        "summary": {"requested": len(results), "passed": len(results) - len(failed), "failed": failed},
        "verdict": "pass" if not failed else "fail",
    }


def _write_tails(ctx: ScenarioContext) -> None:
    if not ctx.tail_rows:
        return
    gaps = sorted(ctx.tail_rows)
    names: list[str] = []
    for gap in gaps:
        names.extend(name for name in ctx.tail_rows[gap] if name not in names)
    columns: dict[str, list[Any]] = {"gap": gaps}
    for name in names:
        columns[name] = [ctx.tail_rows[gap].get(name) for gap in gaps]
    ctx.writer.write_csv(tails_relative_path(), columns)
    ys = [name for name in ("delta_hat", "delta_required", "domination_factor") if name in columns]
    if ys:
        ctx.writer.write_plot_script(
            "tails", table_plot_script(tails_relative_path(), list(columns), "gap", ys, title="tail decay by gap")
        )


def execute(
    ctx: ScenarioContext,
    check_ids: Sequence[str],
    *,
    command: str,
    run_id: str,
) -> RunOutcome:
    logger = get_logger(__name__)
    results = run_checks(ctx, check_ids)
    for name in sorted(ctx.densities):
        ctx.writer.write_density(name, ctx.densities[name])
    _write_tails(ctx)
    report = build_report(ctx, results, command)
    ctx.writer.write_json(report_relative_path(), report)

    exit_code = EXIT_PASS if report["verdict"] == "pass" else EXIT_CHECK_FAILED
    ManifestStore(ctx.writer.root / "manifests").write(
        run_id,
        {
            "command": command,
            "scenario": ctx.scenario.name,
            "seed": ctx.seed,
            "threads": ctx.threads,
            "exit_code": exit_code,
            "artifacts": sorted(set(ctx.writer.written)),
        },
    )
    logger.info(
        "run_complete",
        extra={"command": command, "verdict": report["verdict"], "failed": report["summary"]["failed"]},
    )
    return RunOutcome(
        exit_code=exit_code, out_dir=ctx.writer.root, report=report, output_format=ctx.scenario.output.format
    )


def run_scenario(
    config_path: Path,
    *,
    out: Path | None = None,
    seed: int | None = None,
    threads: int | None = None,
    run_id: str | None = None,
    settings: Settings | None = None,
) -> RunOutcome:
    """Run every check the scenario requests; exit code 0 iff all pass."""
    scenario = load_scenario(config_path)
    ctx = open_context(scenario, settings=settings, out=out, seed=seed, threads=threads)
    return execute(ctx, scenario.verification.checks, command="run", run_id=run_id or new_run_id())
