import csv
import io
import json
import os
import subprocess
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from seirwave.cli import main, render_svg
from seirwave.metrics import METRIC_NAMES

FIXTURE_CONFIG = resources.files("seirwave") / "data" / "synthetic_fit.json"
FIXTURE_DEATHS = resources.files("seirwave") / "data" / "synthetic_deaths.csv"


def read_csv(path):
    return list(csv.DictReader(io.StringIO(Path(path).read_text(encoding="utf-8"))))


def write_config(tmp_path, cfg):
    p = tmp_path / "config.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    return str(p)


# -- simulate --

def test_simulate_writes_trajectory_and_manifest(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--out", str(out), "--horizon", "585"]) == 0
    rows = read_csv(out / "trajectory.csv")
    assert list(rows[0]) == ["day", "date", "S", "E", "I", "C", "R", "D",
                             "daily_deaths", "R0", "beta", "beds"]
    assert len(rows) == 586
    assert rows[0]["date"] == "2020-01-22" and rows[-1]["day"] == "585"
    daily = np.array([float(r["daily_deaths"]) for r in rows])
    inner = (daily[1:-1] > daily[:-2]) & (daily[1:-1] >= daily[2:])
    peaks = np.flatnonzero(inner & (daily[1:-1] >= 0.01 * daily.max())) + 1
    assert len(peaks) == 2 and peaks[1] - peaks[0] >= 60
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "completed"
    assert manifest["resolved_defaults"]["beds_0"] == pytest.approx(69000.0)
    assert manifest["resolved_defaults"]["sigma"] == 0.2


def test_zero_transmission_config(tmp_path):
    from seirwave.fitting import TABLE_I_FITTED

    cfg = {"parameters": dict(TABLE_I_FITTED, r0_start=0.0, r0_end=0.0), "seed_exposed": 0}
    out = tmp_path / "zero"
    assert main(["simulate", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == 0
    assert all(float(r["D"]) == 0.0 for r in read_csv(out / "trajectory.csv"))


def test_flags_override_config(tmp_path):
    cfg = {"substeps": 2, "horizon_days": 30, "seed_exposed": 5}
    out = tmp_path / "o"
    assert main(["simulate", "--config", write_config(tmp_path, cfg), "--out", str(out),
                 "--substeps", "8"]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["substeps"] == 8
    assert m["config"]["horizon_days"] == 30
    assert m["config"]["seed_exposed"] == 5


@pytest.mark.parametrize("cfg, needle", [
    ({"data": {"vaccination": "missing.csv"}}, "missing.csv"),
    ({"substeps": 0}, "substeps"),
    ({"no_such_key": 1}, "no_such_key"),
    ({"rates": {"rsus": 3.0}}, "rsus"),
    ({"specs": [{"name": "k", "initial_value": 1, "min": 2, "max": 2}]}, "min"),
])
def test_bad_config_exits_2(tmp_path, capsys, cfg, needle):
    assert main(["simulate", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "x")]) == 2
    assert needle in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 2
    assert "nope.json" in capsys.readouterr().err


def test_integration_failure_exits_3(tmp_path):
    from seirwave.fitting import TABLE_I_FITTED

    cfg = {"parameters": dict(TABLE_I_FITTED, r0_start=1e300, r0_end=1e300),
           "population": {"n": 1e6}, "seed_exposed": 1000}
    out = tmp_path / "boom"
    assert main(["simulate", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == 3
    assert json.loads((out / "manifest.json").read_text())["status"] == "failed"
    assert not (out / "trajectory.csv").exists()


# -- fit --

@pytest.fixture(scope="module")
def fixture_fit(tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    assert main(["fit", "--config", str(FIXTURE_CONFIG), "--out", str(out)]) == 0
    return out


@pytest.mark.slow
def test_fit_on_bundled_fixture(fixture_fit):
    doc = json.loads((fixture_fit / "fit.json").read_text())
    for key in ("n_data", "n_varys", "chi_square", "reduced_chi_square", "aic", "bic"):
        assert key in doc
    assert doc["n_data"] == 585 and doc["n_varys"] == 10
    assert doc["reduced_chi_square"] <= 1.0
    rows = read_csv(fixture_fit / "fitted_vs_observed.csv")
    assert list(rows[0]) == ["day", "date", "observed", "model"]
    assert len(rows) == 585
    metrics = json.loads((fixture_fit / "metrics.json").read_text())
    assert metrics["r2"] >= 0.9999
    manifest = json.loads((fixture_fit / "manifest.json").read_text())
    assert manifest["fit"] == doc
    assert manifest["metrics_series"]["kind"] == "cumulative_deaths"


@pytest.mark.slow
def test_fit_is_byte_reproducible(fixture_fit, tmp_path):
    out = tmp_path / "again"
    assert main(["fit", "--config", str(FIXTURE_CONFIG), "--out", str(out)]) == 0
    assert (out / "fit.json").read_bytes() == (fixture_fit / "fit.json").read_bytes()
    assert (out / "fitted_vs_observed.csv").read_bytes() == (fixture_fit / "fitted_vs_observed.csv").read_bytes()


def test_fit_without_data_exits_2(tmp_path, capsys):
    assert main(["fit", "--out", str(tmp_path / "f")]) == 2
    assert "data.deaths" in capsys.readouterr().err


def test_fit_unknown_country_exits_2(tmp_path, capsys):
    assert main(["fit", "--deaths", str(FIXTURE_DEATHS), "--country", "Atlantis",
                 "--out", str(tmp_path / "f")]) == 2
    assert "Atlantis" in capsys.readouterr().err


def test_fit_abort_exits_4(tmp_path):
    specs = [{"name": n, "initial_value": v, "min": lo, "max": hi} for n, v, lo, hi in [
        ("r0_start", 1e300, 2.0, 1e301), ("k", 2.5, 0.01, 5.0), ("a1", 10.0, 0.0, 350.0),
        ("b1", 90.0, 0.0, 350.0), ("a2", 200.0, 0.0, 350.0), ("b2", 90.0, 0.0, 350.0),
        ("r0_end", 0.9, 0.3, 3.5), ("prob_i_to_c", 0.05, 0.01, 0.1),
        ("prob_c_to_d", 0.5, 0.05, 0.8), ("s", 0.003, 1e-3, 0.01)]]
    cfg = {"specs": specs, "data": {"deaths": str(FIXTURE_DEATHS)}, "country": "Synthetic",
           "population": {"n": 1e6}, "seed_exposed": 100, "n_days": 100}
    out = tmp_path / "f"
    assert main(["fit", "--config", write_config(tmp_path, cfg), "--out", str(out)]) == 4
    assert json.loads((out / "manifest.json").read_text())["status"] == "failed"


# -- evaluate --

def test_evaluate_identical_and_hand_case(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("day,value\n0,1\n1,2\n2,3\n")
    b.write_text("day,value\n0,2\n1,2\n2,2\n")
    assert main(["evaluate", str(a), str(a), "--out", str(tmp_path / "same")]) == 0
    same = json.loads((tmp_path / "same" / "metrics.json").read_text())
    assert same["r2"] == 1.0 and same["mae"] == 0.0
    assert main(["evaluate", str(a), str(b), "--n-varys", "1", "--out", str(tmp_path / "e")]) == 0
    m = json.loads((tmp_path / "e" / "metrics.json").read_text())
    assert round(m["mae"], 4) == 0.6667 and m["r2"] == pytest.approx(0.0, abs=1e-15)
    assert sorted(m) == sorted(METRIC_NAMES)


def test_evaluate_length_mismatch_exits_2(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("1\n2\n3\n")
    b.write_text("1\n2\n")
    assert main(["evaluate", str(a), str(b), "--out", str(tmp_path / "e")]) == 2


# -- plotdata --

def test_plotdata_long_format_and_svg(tmp_path):
    src = tmp_path / "traj.csv"
    src.write_text("day,date,S,D\r\n0,2020-01-01,10,0\r\n1,2020-01-02,9,1\r\n2,2020-01-03,8,2\r\n")
    out = tmp_path / "p"
    assert main(["plotdata", str(src), "--out", str(out)]) == 0
    rows = read_csv(out / "plot_long.csv")
    assert len(rows) == 6
    assert rows[0] == {"series": "S", "day": "0", "value": "10.0"}
    svg = (out / "plot.svg").read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") == 2
    out2 = tmp_path / "p2"
    assert main(["plotdata", str(src), "--out", str(out2)]) == 0
    assert (out2 / "plot.svg").read_bytes() == (out / "plot.svg").read_bytes()


def test_plotdata_bad_input_exits_2(tmp_path):
    src = tmp_path / "traj.csv"
    src.write_text("day,S\n0,1\n")
    assert main(["plotdata", str(src), "--series", "", "--out", str(tmp_path / "p")]) == 2
    assert main(["plotdata", str(src), "--series", "X", "--out", str(tmp_path / "p")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["plotdata", str(bad), "--out", str(tmp_path / "p")]) == 2


def test_svg_is_deterministic():
    a = render_svg([0, 1, 2], {"x": [1.0, 2.0, 0.5]}, title="t")
    assert a == render_svg([0, 1, 2], {"x": [1.0, 2.0, 0.5]}, title="t")
    assert "<text" in a and "t</text>" in a


# -- ingest --

def test_ingest_writes_clean_series(tmp_path):
    deaths = tmp_path / "deaths.csv"
    deaths.write_text("Province/State,Country/Region,Lat,Long,1/22/20,1/23/20,1/24/20,1/25/20\n"
                      "A,X,0,0,0,5,3,7\n")
    vacc = tmp_path / "vacc.csv"
    vacc.write_text("week_start,first_doses\n2020-01-22,700\n")
    out = tmp_path / "ing"
    assert main(["ingest", "--deaths", str(deaths), "--vaccination", str(vacc), "--country", "X",
                 "--out", str(out)]) == 0
    rows = read_csv(out / "observed.csv")
    assert [float(r["cumulative_deaths"]) for r in rows] == [0, 5, 5, 7]
    assert [float(r["daily_deaths"]) for r in rows] == [0, 5, 0, 2]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["cleaning"]["adjusted_points"]["deaths"] == 1
    v = read_csv(out / "vaccination_daily.csv")
    assert [float(r["first_doses"]) for r in v] == [100.0] * 4


def test_manifest_is_written_before_results(tmp_path, monkeypatch):
    import seirwave.cli as cli

    seen = []
    orig = cli._write_csv

    def spy(path, header, rows):
        seen.append((Path(path).name, (Path(path).parent / "manifest.json").exists()))
        return orig(path, header, rows)

    monkeypatch.setattr(cli, "_write_csv", spy)
    assert main(["simulate", "--out", str(tmp_path / "s"), "--horizon", "10"]) == 0
    assert seen == [("trajectory.csv", True)]


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "seirwave", "simulate", "--horizon", "5",
                        "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "seirwave", "simulate", "--substeps", "x"],
                       capture_output=True, text=True)
    assert r.returncode == 2
