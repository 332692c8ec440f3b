"""Naming conventions for the artifact tree of a run."""

from __future__ import annotations

from kolmogorov_lab.utils.ids import sanitize_id_for_path


def report_relative_path() -> str:
    return "report.json"


def density_relative_path(name: str) -> str:
    return f"densities/{sanitize_id_for_path(name)}.csv"


def density_sidecar_relative_path(name: str) -> str:
    return f"densities/{sanitize_id_for_path(name)}.json"


def plot_relative_path(name: str) -> str:
    return f"plots/{sanitize_id_for_path(name)}.plt"


def moments_relative_path() -> str:
    return "moments.csv"


def tails_relative_path() -> str:
    return "tails.csv"


def rate_relative_path(name: str) -> str:
    return f"lyapunov/{sanitize_id_for_path(name)}_rate.csv"


def ensemble_relative_path(name: str) -> str:
    return f"ensembles/{sanitize_id_for_path(name)}.csv"


def trace_relative_path(kind: str) -> str:
    return f"traces/{sanitize_id_for_path(kind)}.csv"

