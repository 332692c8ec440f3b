"""Command-line entrypoint for the Kolmogorov operator lab."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from kolmogorov_lab.checks.context import ScenarioContext
from kolmogorov_lab.checks.registry import list_checks
from kolmogorov_lab.config.logging import configure_logging, get_logger, set_run_context
from kolmogorov_lab.config.scenario import Scenario, load_scenario
from kolmogorov_lab.config.settings import Settings, get_settings
from kolmogorov_lab.errors import InputError, LabError
from kolmogorov_lab.io.paths import ensemble_relative_path, trace_relative_path
from kolmogorov_lab.io.writer import ArtifactWriter, csv_bytes, dumps_stable
from kolmogorov_lab.regularity.bootstrap import bootstrap_exponents
from kolmogorov_lab.regularity.moser import moser_sequence
from kolmogorov_lab.runner import RunOutcome, execute, open_context, run_scenario
from kolmogorov_lab.state.manifests import ManifestStore
from kolmogorov_lab.utils.ids import gap_label, new_run_id

EXIT_INTERNAL = 3

LYAPUNOV_CHECKS = ["lyapunov_static_lemma52", "lyapunov_certification_def26", "rate_integrability"]
KERNEL_CHECKS = ["tail_decay_thm53", "envelope_domination_thm53"]


@dataclass(slots=True)
class RunContext:
    run_id: str
    env: str
    settings: Settings
    out: Path | None
    seed: int | None
    threads: int | None
    fmt: str | None

    @property
    def out_dir(self) -> Path:
        return self.out or self.settings.out_dir


def _emit(fmt: str | None, payload: Any, columns: dict[str, list[Any]]) -> None:
    if fmt == "csv":
        sys.stdout.write(csv_bytes(columns).decode("utf-8"))
    else:
        sys.stdout.write(dumps_stable(payload))


def _emit_outcome(outcome: RunOutcome, fmt: str | None) -> int:
    fmt = fmt or outcome.output_format
    verdicts = outcome.report["verdicts"]
    ids = sorted(verdicts)
    _emit(
        fmt,
        {"out_dir": outcome.out_dir.as_posix(), "verdicts": verdicts, "verdict": outcome.report["verdict"]},
        {"check": ids, "status": [verdicts[i] for i in ids]},
    )
    return outcome.exit_code


def _scenario(args: argparse.Namespace) -> Scenario:
    if args.config is None:
        raise InputError(f"{args.command} needs --config <scenario.yaml>")
    return load_scenario(Path(args.config))


def _context(scenario: Scenario, run_context: RunContext, **kwargs: Any) -> ScenarioContext:
    return open_context(
        scenario,
        settings=run_context.settings,
        out=run_context.out,
        seed=run_context.seed,
        threads=run_context.threads,
        **kwargs,
    )


def _run_checks(
    args: argparse.Namespace,
    run_context: RunContext,
    check_ids: list[str],
    scenario: Scenario | None = None,
    **kwargs: Any,
) -> int:
    ctx = _context(scenario or _scenario(args), run_context, **kwargs)
    outcome = execute(ctx, check_ids, command=args.command, run_id=run_context.run_id)
    return _emit_outcome(outcome, run_context.fmt)


def cmd_check_hypotheses(args: argparse.Namespace, run_context: RunContext) -> int:
    return _run_checks(args, run_context, ["hypotheses_hyp51"])


def cmd_derive_lyapunov(args: argparse.Namespace, run_context: RunContext) -> int:
    return _run_checks(args, run_context, LYAPUNOV_CHECKS)


def cmd_approx(args: argparse.Namespace, run_context: RunContext) -> int:
    scenario = _scenario(args)
    checks = ["approx_lemma28"]
    if scenario.density.uses_fd and scenario.approx is not None:
        checks.append("approx_convergence_prop29")
    return _run_checks(args, run_context, checks, scenario, approx_levels=args.level)


def cmd_simulate(args: argparse.Namespace, run_context: RunContext) -> int:
    logger = get_logger(__name__)
    scenario = _scenario(args)
    ctx = _context(scenario, run_context)
    diagnostics = []
    for s, ensemble in zip(ctx.starts, ctx.ensembles, strict=True):
        gap = ctx.horizon - float(s)
        ctx.writer.write_csv(ensemble_relative_path(f"ensemble_{gap_label(gap)}"), ensemble.to_columns())
        diagnostics.append({"s": float(s), "gap": gap, **ensemble.diagnostics()})
    ctx.writer.write_json("ensembles/diagnostics.json", {"seed": ctx.seed, "ensembles": diagnostics})
    ManifestStore(ctx.writer.root / "manifests").write(
        run_context.run_id,
        {"command": args.command, "seed": ctx.seed, "threads": ctx.threads, "artifacts": sorted(ctx.writer.written)},
    )
    explosions = sum(d["explosions"] for d in diagnostics)
    logger.info("paths_written", extra={"ensembles": len(diagnostics), "explosions": explosions})
    _emit(
        run_context.fmt,
        {"ensembles": diagnostics},
        {
            "s": [d["s"] for d in diagnostics],
            "n_paths": [d["n_paths"] for d in diagnostics],
            "explosions": [d["explosions"] for d in diagnostics],
        },
    )
    return 0


def cmd_density(args: argparse.Namespace, run_context: RunContext) -> int:
    scenario = _scenario(args)
    density = scenario.density
    has_oracle = scenario.operator.family in ("brownian", "ou")
    checks = []
    if has_oracle and density.uses_fd:
        checks.append("fd_vs_closed_form")
    if has_oracle and density.uses_kde:
        checks.append("kde_vs_closed_form")
    if density.route == "both":
        checks.append("kde_vs_fd")
    ctx = _context(scenario, run_context)
    if density.uses_fd:
        _ = ctx.fd_density
    if density.uses_kde:
        _ = ctx.kde_density
    outcome = execute(ctx, checks, command=args.command, run_id=run_context.run_id)
    return _emit_outcome(outcome, run_context.fmt)


def cmd_verify_moment(args: argparse.Namespace, run_context: RunContext) -> int:
    return _run_checks(args, run_context, ["moment_bound_prop27"])


def cmd_verify_kernel(args: argparse.Namespace, run_context: RunContext) -> int:
    return _run_checks(args, run_context, KERNEL_CHECKS)


def _write_trace(run_context: RunContext, kind: str, columns: dict[str, list[Any]], payload: dict[str, Any]) -> int:
    writer = ArtifactWriter(run_context.out_dir)
    writer.write_csv(trace_relative_path(kind), columns)
    _emit(run_context.fmt, payload, columns)
    return 0


def cmd_bootstrap(args: argparse.Namespace, run_context: RunContext) -> int:
    trace = bootstrap_exponents(args.d, args.k, args.r1, args.target)
    return _write_trace(run_context, "bootstrap", trace.to_columns(), trace.to_dict())


def cmd_moser(args: argparse.Namespace, run_context: RunContext) -> int:
    trace = moser_sequence(args.nu, args.alpha_m, args.y0, args.n_max)
    return _write_trace(run_context, "moser", trace.to_columns(), trace.to_dict())


def cmd_run(args: argparse.Namespace, run_context: RunContext) -> int:
    if args.config is None:
        raise InputError("run needs --config <scenario.yaml>")
    outcome = run_scenario(
        Path(args.config),
        out=run_context.out,
        seed=run_context.seed,
        threads=run_context.threads,
        run_id=run_context.run_id,
        settings=run_context.settings,
    )
    return _emit_outcome(outcome, run_context.fmt)


def cmd_list_checks(run_context: RunContext) -> int:
    specs = list_checks()
    _emit(
        run_context.fmt,
        [{"id": s.check_id, "description": s.description, "operation": s.operation} for s in specs],
        {
            "id": [s.check_id for s in specs],
            "description": [s.description for s in specs],
            "operation": [s.operation for s in specs],
        },
    )
    return 0


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return seed


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kolmogorov-lab")
    parser.add_argument("--config", default=None, help="Scenario YAML file")
    parser.add_argument("--out", type=Path, default=None, help="Artifact directory (overrides KOLMO_OUT_DIR)")
    parser.add_argument("--seed", type=_seed, default=None, help="Root seed (overrides the scenario and KOLMO_SEED)")
    parser.add_argument("--threads", type=_positive_int, default=None)
    parser.add_argument("--format", dest="fmt", choices=["json", "csv"], default=None)
    parser.add_argument("--run-id", default=None, help="Explicit run_id for the manifest and logs")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("check-hypotheses")
    sub.add_parser("derive-lyapunov")
    p_approx = sub.add_parser("approx")
    p_approx.add_argument("--level", type=_positive_int, action="append", default=None)
    sub.add_parser("simulate")
    sub.add_parser("density")
    sub.add_parser("verify-moment")
    sub.add_parser("verify-kernel")

    p_boot = sub.add_parser("bootstrap")
    p_boot.add_argument("--d", type=_positive_int, required=True)
    p_boot.add_argument("--k", type=float, required=True)
    p_boot.add_argument("--r1", type=float, required=True)
    p_boot.add_argument("--target", type=float, required=True)

    p_moser = sub.add_parser("moser")
    p_moser.add_argument("--nu", type=float, required=True)
    p_moser.add_argument("--alpha-m", dest="alpha_m", type=float, required=True)
    p_moser.add_argument("--y0", type=float, required=True)
    p_moser.add_argument("--n-max", dest="n_max", type=_positive_int, default=60)

    sub.add_parser("run")
    sub.add_parser("list-checks")
    return parser


COMMANDS = {
    "check-hypotheses": cmd_check_hypotheses,
    "derive-lyapunov": cmd_derive_lyapunov,
    "approx": cmd_approx,
    "simulate": cmd_simulate,
    "density": cmd_density,
    "verify-moment": cmd_verify_moment,
    "verify-kernel": cmd_verify_kernel,
    "bootstrap": cmd_bootstrap,
    "moser": cmd_moser,
    "run": cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logger = get_logger(__name__)

    try:
        settings = get_settings()
        configure_logging(settings.log_level)
        run_id = args.run_id or os.getenv("RUN_ID") or new_run_id()
        run_context = RunContext(
            run_id=run_id,
            env=settings.lab_env,
            settings=settings,
            out=args.out,
            seed=args.seed,
            threads=args.threads,
            fmt=args.fmt,
        )
        set_run_context(run_id=run_context.run_id)

        if args.command == "list-checks":
            return cmd_list_checks(run_context)
        handler = COMMANDS.get(args.command)
        if handler is None:
            parser.print_help()
            return 2
        return handler(args, run_context)
    except LabError as exc:
        logger.error("command_failed", extra={"command": args.command, "error": str(exc), "exit_code": exc.exit_code})
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception:
        logger.exception("command_crashed", extra={"command": getattr(args, "command", "unknown")})
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
