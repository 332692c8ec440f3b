import json
from pathlib import Path

import pytest

from kolmogorov_lab.cli import main
from kolmogorov_lab.config.settings import get_settings

ROOT = Path(__file__).resolve().parents[2]

SMALL_OU = """\
name: small_ou
operator:
  family: ou
  d: 1
  theta: 1.0
  q: 1.0
simulation:
  starts: [0.5, 0.75]
  x0: [0.0]
  n_paths: 20000
  dt: 0.01
  seed: 7
density:
  route: kde
  box: [[-5.0, 5.0]]
verification:
  checks: [kde_vs_closed_form]
"""

TIGHT_ALPHA = """\
name: tight_alpha
operator:
  family: example54
  d: 1
  growth: {m: 0.0, p: 3.0, Lambda: 1.0, kappa: 1.0}
lyapunov:
  alpha: 2.0
simulation:
  starts: [0.5]
  x0: [0.0]
"""


@pytest.fixture(autouse=True)
def _isolated_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch):
    monkeypatch.setenv("KOLMO_OUT_DIR", str(tmp_path / "default_out"))
    monkeypatch.delenv("KOLMO_THREADS", raising=False)
    monkeypatch.delenv("KOLMO_SEED", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def _write(tmp_path: Path, name: str, text: str) -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_brownian_smoke_run(tmp_path: Path) -> None:
    out = tmp_path / "smoke"
    config = ROOT / "scenarios" / "brownian_smoke.yaml"
    assert main(["--config", str(config), "--out", str(out), "run"]) == 0

    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["verdicts"] == {"fd_vs_closed_form": "pass"}
    assert report["verdict"] == "pass"
    assert "run_id" not in report
    assert (out / "densities" / "fd.csv").exists()
    assert list((out / "manifests").glob("run_*.json"))


def test_alpha_at_threshold_exits_with_usage_error(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _write(tmp_path, "tight.yaml", TIGHT_ALPHA)
    assert main(["--config", str(config), "--out", str(tmp_path / "o"), "run"]) == 2
    assert "lyapunov.alpha" in capsys.readouterr().err
    assert not (tmp_path / "o" / "report.json").exists()


def test_missing_config_is_a_usage_error() -> None:
    assert main(["verify-moment"]) == 2


def test_list_checks(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["list-checks"]) == 0
    listed = json.loads(capsys.readouterr().out)
    ids = [entry["id"] for entry in listed]
    assert ids == sorted(ids)
    assert "moment_bound_prop27" in ids


def test_exponent_commands_write_traces(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "traces_out"
    assert main(["--out", str(out), "bootstrap", "--d", "1", "--k", "2", "--r1", "1.2", "--target", "2.18"]) == 0
    capsys.readouterr()
    assert main(["--out", str(out), "--format", "csv", "moser", "--nu", "1", "--alpha-m", "1", "--y0", "1", "--n-max", "3"]) == 0
    assert capsys.readouterr().out.splitlines()[0].startswith('"n"')
    assert (out / "traces" / "bootstrap.csv").exists()
    assert (out / "traces" / "moser.csv").exists()


def test_bootstrap_rejects_unreachable_target(tmp_path: Path) -> None:
    argv = ["--out", str(tmp_path), "bootstrap", "--d", "1", "--k", "2", "--r1", "1.2", "--target", "3"]
    assert main(argv) == 2


def test_simulate_writes_ensembles(tmp_path: Path) -> None:
    config = _write(tmp_path, "small.yaml", SMALL_OU)
    out = tmp_path / "sim"
    assert main(["--config", str(config), "--out", str(out), "simulate"]) == 0
    diagnostics = json.loads((out / "ensembles" / "diagnostics.json").read_text(encoding="utf-8"))
    assert diagnostics["seed"] == 7
    assert len(diagnostics["ensembles"]) == 2
    assert len(list((out / "ensembles").glob("ensemble_*.csv"))) == 2


def test_report_is_identical_across_thread_counts(tmp_path: Path) -> None:
    config = _write(tmp_path, "small.yaml", SMALL_OU)
    reports = []
    for threads in ("1", "2"):
        out = tmp_path / f"threads_{threads}"
        main(["--config", str(config), "--out", str(out), "--threads", threads, "run"])
        reports.append((out / "report.json").read_bytes())
    assert reports[0] == reports[1]


@pytest.mark.slow
def test_example54_acceptance(tmp_path: Path) -> None:
    out = tmp_path / "acceptance"
    config = ROOT / "scenarios" / "example54_acceptance.yaml"
    assert main(["--config", str(config), "--out", str(out), "run"]) == 0
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["summary"]["failed"] == []
    assert (out / "moments.csv").exists()
    assert (out / "tails.csv").exists()
