import json
from pathlib import Path

import numpy as np
import pytest

from kolmogorov_lab.errors import InputError
from kolmogorov_lab.io.paths import (
    density_relative_path,
    ensemble_relative_path,
    plot_relative_path,
    rate_relative_path,
    trace_relative_path,
)
from kolmogorov_lab.io.writer import ArtifactWriter, csv_bytes, dumps_stable, table_plot_script, to_jsonable
from kolmogorov_lab.state.manifests import ManifestStore
from kolmogorov_lab.utils.ids import gap_label, sanitize_id_for_path


def test_path_builders() -> None:
    assert density_relative_path("fd_example54") == "densities/fd_example54.csv"
    assert plot_relative_path("fd slices") == "plots/fd_slices.plt"
    assert rate_relative_path("W1") == "lyapunov/W1_rate.csv"
    assert ensemble_relative_path(f"ensemble_{gap_label(0.25)}") == "ensembles/ensemble_gap0p25.csv"
    assert trace_relative_path("../moser") == "traces/moser.csv"
    assert sanitize_id_for_path("///") == "unknown"


def test_non_finite_values_become_strings() -> None:
    payload = {"a": np.inf, "b": -np.inf, "c": np.nan, "d": np.float64(0.5), "e": np.arange(2)}
    assert to_jsonable(payload) == {"a": "inf", "b": "-inf", "c": "nan", "d": 0.5, "e": [0, 1]}
    text = dumps_stable({"z": 1, "a": np.bool_(True)})
    assert text.index('"a"') < text.index('"z"')
    assert json.loads(text) == {"a": True, "z": 1}


def test_csv_bytes_header_and_rows() -> None:
    lines = csv_bytes({"s": [0.25, 0.5], "n": [1, 2]}).decode("utf-8").splitlines()
    assert lines[0] == '"s","n"'
    assert len(lines) == 3


def test_table_plot_script_uses_column_indices() -> None:
    script = table_plot_script("moments.csv", ["s", "zeta", "bound"], "s", ["zeta", "bound"], title="moments")
    assert "using 1:2" in script and "using 1:3" in script
    assert "'../moments.csv'" in script
    with pytest.raises(KeyError):
        table_plot_script("moments.csv", ["s"], "s", ["zeta"], title="moments")


def test_writer_stays_below_its_root(tmp_path: Path) -> None:
    writer = ArtifactWriter(tmp_path)
    path = writer.write_json("report.json", {"verdict": "pass"})
    assert Path(path).read_text(encoding="utf-8").endswith("\n")
    writer.write_csv("traces/bootstrap.csv", {"n": [0, 1]})
    assert writer.written == ["report.json", "traces/bootstrap.csv"]
    with pytest.raises(InputError):
        writer.write_json("../outside.json", {})
    with pytest.raises(InputError):
        writer.write_json(str(tmp_path / "abs.json"), {})


def test_manifest_round_trip(tmp_path: Path) -> None:
    store = ManifestStore(tmp_path / "manifests")
    assert store.run_ids() == []
    store.write("r1", {"seed": 7})
    manifest = store.read("r1")
    assert manifest is not None
    assert manifest["payload"] == {"seed": 7}
    assert "written_at" in manifest
    assert store.run_ids() == ["r1"]
    assert store.read("missing") is None
