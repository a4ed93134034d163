import csv
import json

import numpy as np
import pytest

from logconcave.cli import main


def run(capsys, argv):
    assert main(argv) == 0
    return capsys.readouterr().out


def test_fit_from_file(tmp_path, capsys):
    data = tmp_path / "x.txt"
    np.savetxt(data, np.random.default_rng(0).normal(size=(40, 2)))
    out = json.loads(run(capsys, ["fit", "--data", str(data), "--out", "json"]))
    assert out["integral"] == pytest.approx(1.0, abs=1e-6)


def test_fit_from_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"density": {"family": "gaussian", "params": {"d": 1}}, "n": 30}))
    run(capsys, ["fit", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "4"])
    out = json.load(open(tmp_path / "o" / "fit.json"))
    assert out["integral"] == pytest.approx(1.0, abs=1e-6)


def test_risk_outputs(tmp_path, capsys):
    argv = ["risk", "--scenario", "uniform_interval", "--replicates", "2", "--n-grid", "10,20"]
    text = run(capsys, argv + ["--out", "csv"])
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 4 and rows[0]["n"] == "10"
    run(capsys, argv + ["--out", str(tmp_path)])
    for ext in ("csv", "svg", "json"):
        assert (tmp_path / f"risk.{ext}").exists()
    assert not (tmp_path / "risk.partial.csv").exists()


def test_envelope_table(capsys):
    text = run(capsys, ["envelope", "--grid=-1:1:0.5"])
    lines = text.strip().splitlines()
    assert lines[0] == "x,F,lower,upper" and len(lines) == 6
    x, F = map(float, lines[3].split(",")[:2])
    assert x == 0.0 and F == pytest.approx(2 ** -0.5, abs=1e-12)


def test_invelope(capsys):
    out = json.loads(run(capsys, ["invelope", "--d", "2", "--eta", "1e-3", "--out", "json"]))
    assert out["vertices_in_J"] and out["vertex_count"] == len(out["vertices"])
    assert out["complement_volume_P"] >= out["complement_volume_J"]


def test_check_class(capsys):
    dens = json.dumps({"family": "gaussian", "params": {"d": 1}})
    base = ["check-class", "--density", dens, "--pairs", "5000", "--out", "json"]
    assert json.loads(run(capsys, base + ["--lambda", "1.0"]))["pass"]
    assert not json.loads(run(capsys, base + ["--lambda", "0.1"]))["pass"]


def test_lsc_demo(tmp_path, capsys):
    run(capsys, ["lsc-demo", "--n", "30", "--replicates", "2", "--out", str(tmp_path)])
    out = json.load(open(tmp_path / "lsc.json"))
    assert out["ell_grid"] == [0, 5]
    assert len((tmp_path / "lsc.csv").read_text().strip().splitlines()) == 5


def test_missing_inputs():
    with pytest.raises(SystemExit):
        main(["fit"])
    with pytest.raises(SystemExit):
        main(["bogus"])
