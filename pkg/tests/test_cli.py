import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from customs_adapt import cli, simulator

SCEN = {"weeks": 22, "items_per_week": 200, "drift_kind": "sudden", "drift_week": 14,
        "n_importers": 400, "n_tariff_codes": 60, "seed": 5}
SIM = {"runs": 1, "warmup_weeks": 6}


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "scen.json").write_text(json.dumps(SCEN))
    (d / "sim.json").write_text(json.dumps(SIM))
    assert cli.main(["datagen", "--config", str(d / "scen.json"), "--out", str(d / "data")]) == 0
    return d


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_datagen_header_and_determinism(files, tmp_path):
    data = files / "data" / "stream.csv"
    assert data.read_text().splitlines()[0] == "id,week,fob_value,gross_weight,quantity,tariff_code,importer_id,declarant_id,office_id,illicit,revenue"
    assert cli.main(["datagen", "--config", str(files / "scen.json"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "stream.csv").read_bytes() == data.read_bytes()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["wall_clock_s"] is not None


def test_bad_config_exit_code(tmp_path, capsys):
    (tmp_path / "c.json").write_text(json.dumps({"weeks": 0}))
    assert cli.main(["datagen", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path)]) == 2
    assert "weeks" in capsys.readouterr().err


def test_missing_data_exit_code(tmp_path):
    assert cli.main(["simulate", "--data", str(tmp_path / "nope.csv"), "--method", "adapt", "--out", str(tmp_path)]) == 3


def test_unknown_method_lists_valid_ones(files, tmp_path, capsys):
    code = cli.main(["simulate", "--data", str(files / "data" / "stream.csv"), "--method", "greedy",
                     "--out", str(tmp_path)])
    assert code == 2
    assert "adapt" in capsys.readouterr().err


@pytest.mark.parametrize("method, k", [("exploit", 0.0), ("fixed:0.1", 0.1)])
def test_simulate_alias_and_summary_consistency(files, tmp_path, method, k):
    args = ["simulate", "--config", str(files / "sim.json"), "--data", str(files / "data" / "stream.csv"),
            "--method", method, "--out", str(tmp_path)]
    assert cli.main(args) == 0
    rows = _rows(tmp_path / "timeline.csv")
    assert {float(r["k_t"]) for r in rows} == {k}
    summary = _rows(tmp_path / "summary.csv")[0]
    np_ = np.array([float(r["norm_precision"]) for r in rows])
    assert float(summary["norm_precision_all"]) == pytest.approx(np_.mean())
    assert float(summary["norm_precision_0.5y"]) == pytest.approx(np_[-26:].mean())
    assert b"\r" not in (tmp_path / "timeline.csv").read_bytes()


def test_simulate_is_byte_identical(files, tmp_path):
    outs = []
    for name in ("a", "b"):
        assert cli.main(["simulate", "--config", str(files / "sim.json"), "--data", str(files / "data" / "stream.csv"),
                         "--method", "adapt", "--seed", "11", "--out", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name / "timeline.csv").read_bytes())
    assert outs[0] == outs[1]


def test_replay_from_manifest(files, tmp_path):
    out = tmp_path / "orig"
    assert cli.main(["simulate", "--config", str(files / "sim.json"), "--data", str(files / "data" / "stream.csv"),
                     "--method", "ada", "--out", str(out)]) == 0
    first = (out / "timeline.csv").read_bytes()
    (out / "timeline.csv").unlink()
    assert cli.main(["replay", str(out / "manifest.json")]) == 0
    assert (out / "timeline.csv").read_bytes() == first


def test_sweep_default_and_custom(files, tmp_path):
    base = ["sweep", "--config", str(files / "sim.json"), "--data", str(files / "data" / "stream.csv")]
    assert cli.main(base + ["--out", str(tmp_path / "d")]) == 0
    rows = _rows(tmp_path / "d" / "sweep.csv")
    assert len(rows) == 12 and rows[-1]["ratio"].startswith("oracle:")
    col = [float(r["norm_precision_0.5y"]) for r in rows[:-1]]
    assert float(rows[-1]["norm_precision_0.5y"]) == max(col)
    assert cli.main(base + ["--ratios", "0.25,0.05", "--out", str(tmp_path / "c")]) == 0
    assert [r["ratio"] for r in _rows(tmp_path / "c" / "sweep.csv")][:2] == ["0.25", "0.05"]
    assert cli.main(base + ["--ratios", "0.2,x", "--out", str(tmp_path / "e")]) == 2


def test_drift_command(files, tmp_path):
    out = tmp_path / "drift.csv"
    args = ["drift", "--config", str(files / "sim.json"), "--data", str(files / "data" / "stream.csv"), "--out", str(out)]
    assert cli.main(args) == 0
    vals = [float(r["drift_s"]) for r in _rows(out)]
    assert len(vals) == SCEN["weeks"] - SIM["warmup_weeks"] and all(0 <= v <= 1 for v in vals)
    first = out.read_bytes()
    assert cli.main(args) == 0 and out.read_bytes() == first
    (files / "long.json").write_text(json.dumps({"warmup_weeks": 30}))
    assert cli.main(["drift", "--config", str(files / "long.json"), "--data", str(files / "data" / "stream.csv"),
                     "--out", str(out)]) == 3


def test_report_svg_and_pearson(files, tmp_path):
    tls = []
    for m in ("exploit", "explore"):
        assert cli.main(["simulate", "--config", str(files / "sim.json"), "--data", str(files / "data" / "stream.csv"),
                         "--method", m, "--out", str(tmp_path / m)]) == 0
        tls.append(str(tmp_path / m / "timeline.csv"))
    assert cli.main(["report", tls[0], "--out", str(tmp_path / "r1")]) == 0
    root = ET.parse(tmp_path / "r1" / "norm_precision.svg").getroot()
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) >= 1
    assert cli.main(["report", *tls, "--out", str(tmp_path / "r2")]) == 0
    svg = (tmp_path / "r2" / "norm_precision.svg").read_text()
    assert "FIXED:0" in svg and "FIXED:1" in svg
    ET.fromstring(svg)
    pear = _rows(tmp_path / "r2" / "pearson.csv")
    assert [r["method"] for r in pear] == ["FIXED:0", "FIXED:1"]


def test_report_truncates_mismatched_weeks(files, tmp_path, caplog):
    tl = simulator.read_timeline_csv(_simulated(files, tmp_path))
    short = simulator.SimTimeline(tl.method, tl.seeds, [r for r in tl.rows if r.week >= 10])
    simulator.write_timeline_csv(short, tmp_path / "short.csv")
    assert cli.main(["report", str(tmp_path / "t" / "timeline.csv"), str(tmp_path / "short.csv"),
                     "--out", str(tmp_path / "r")]) == 0
    assert "truncating" in caplog.text
    assert _rows(tmp_path / "r" / "pearson.csv")[0]["n"] == str(SCEN["weeks"] - 10)


def _simulated(files, tmp_path):
    assert cli.main(["simulate", "--config", str(files / "sim.json"), "--data", str(files / "data" / "stream.csv"),
                     "--method", "apt", "--out", str(tmp_path / "t")]) == 0
    return tmp_path / "t" / "timeline.csv"


def test_report_needs_a_timeline(tmp_path):
    assert cli.main(["report", "--out", str(tmp_path)]) == 3
