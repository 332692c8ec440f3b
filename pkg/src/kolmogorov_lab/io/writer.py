"""Writers for JSON reports, CSV tables and gnuplot scripts."""

from __future__ import annotations

import dataclasses
import io
import json
import math
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import pyarrow as pa
import pyarrow.csv as pa_csv

from kolmogorov_lab.config.logging import get_logger
from kolmogorov_lab.errors import InputError
from kolmogorov_lab.io.paths import (
    density_relative_path,
    density_sidecar_relative_path,
    plot_relative_path,
)

if TYPE_CHECKING:
    from kolmogorov_lab.density.field import DensityField


def to_jsonable(value: Any) -> Any:
    """Convert numpy/dataclass values into plain JSON types.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"`` so the
    output is strict JSON and byte-stable.
    """
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        if hasattr(value, "to_dict"):
            return to_jsonable(value.to_dict())
        return to_jsonable(dataclasses.asdict(value))
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isfinite(number):
            return number
        return "nan" if math.isnan(number) else ("inf" if number > 0 else "-inf")
    if isinstance(value, (str, type(None))):
        return value
    if isinstance(value, Path):
        return value.as_posix()
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return str(value)


def dumps_stable(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


def csv_bytes(columns: Mapping[str, Sequence[Any] | np.ndarray]) -> bytes:
    arrays = {name: pa.array(np.asarray(values).tolist()) for name, values in columns.items()}
    buffer = io.BytesIO()
    pa_csv.write_csv(pa.table(arrays), buffer)
    return buffer.getvalue()


class ArtifactWriter:
    """Writes every artifact of a run below one root directory."""

    def __init__(self, root: Path):
        self.root = root
        self.logger = get_logger(__name__)
        self.written: list[str] = []

    def resolve(self, relative_path: str) -> Path:
        normalized = Path(relative_path)
        if normalized.is_absolute():
            raise InputError(f"artifact path must be relative, got {relative_path}")
        resolved = (self.root / normalized).resolve()
        root = self.root.resolve()
        if root not in resolved.parents:
            raise InputError(f"artifact path escapes the output directory: {relative_path}")
        return resolved

    def _put(self, relative_path: str, data: bytes) -> str:
        target = self.resolve(relative_path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
        self.written.append(relative_path)
        return str(target)

    def write_json(self, relative_path: str, payload: Any) -> str:
        return self._put(relative_path, dumps_stable(payload).encode("utf-8"))

    def write_csv(self, relative_path: str, columns: Mapping[str, Sequence[Any] | np.ndarray]) -> str:
        return self._put(relative_path, csv_bytes(columns))

    def write_plot_script(self, name: str, script: str) -> str:
        return self._put(plot_relative_path(name), script.encode("utf-8"))

    def write_density(self, name: str, density: DensityField) -> str:
        csv_rel = density_relative_path(name)
        path = self.write_csv(csv_rel, density.to_columns())
        self.write_json(density_sidecar_relative_path(name), density.sidecar())
        self.write_plot_script(f"{name}_slices", density_plot_script(csv_rel, density))
        self.logger.info(
            "density_written",
            extra={"name": name, "provenance": density.provenance, "slices": len(density.times)},
        )
        return path


def density_plot_script(csv_relative_path: str, density: DensityField) -> str:
    """Gnuplot script plotting every slice and its log-density tail."""
    data = f"../{csv_relative_path}"
    lines = [
        "set datafile separator ','",
        "set key outside",
        f"set title '{density.provenance} density, t={density.horizon:g}'",
    ]
    if density.grid.dim == 1:
        plots = []
        logs = []
        for s in density.times:
            cond = f"(abs($1-{s:.12g})<1e-12 ? $3 : 1/0)"
            plots.append(f"'{data}' using 2:{cond} every ::1 with lines title 's={s:g}'")
            logs.append(f"'{data}' using 2:(log({cond})) every ::1 with lines title 's={s:g}'")
        lines.append("set xlabel 'y'")
        lines.append("plot " + ", \\\n     ".join(plots))
        lines.append("pause -1")
        lines.append("set ylabel 'log rho'")
        lines.append("plot " + ", \\\n     ".join(logs))
    else:
        lines.append("set pm3d map")
        lines.append(f"splot '{data}' using 2:3:4 every ::1 with pm3d title 'rho'")
    lines.append("")
    return "\n".join(lines)


def table_plot_script(csv_relative_path: str, columns: Sequence[str], x: str, ys: Sequence[str], *, title: str) -> str:
    """Gnuplot script plotting ``ys`` against ``x`` from a CSV written by :meth:`ArtifactWriter.write_csv`."""
    names = list(columns)
    index = {name: i + 1 for i, name in enumerate(names)}
    missing = [name for name in (x, *ys) if name not in index]
    if missing:
        raise KeyError(f"columns {missing} not in {names}")
    data = f"../{csv_relative_path}"
    plots = [f"'{data}' using {index[x]}:{index[y]} every ::1 with linespoints title '{y}'" for y in ys]
    lines = [
        "set datafile separator ','",
        "set key outside",
        f"set title '{title}'",
        f"set xlabel '{x}'",
        "plot " + ", \\\n     ".join(plots),
        "",
    ]
    return "\n".join(lines)
