import csv
import io
import json
import os

import pytest

from gluskin import cli, records
from gluskin.sampling import Seed


@pytest.fixture(autouse=True)
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv(records.OUTPUT_DIR_ENV, str(tmp_path))
    return tmp_path


def call(*argv):
    return cli.main([str(a) for a in argv])


def test_records_are_byte_identical(tmp_path):
    args = ["measure", "--family", "l1ball", "--n", 4, "--h", 2.0, "--samples", 20000, "--seed", 7,
            "--omit-timing"]
    assert call(*args, "--output", tmp_path / "a.json") == 0
    assert call(*args, "--output", tmp_path / "b.json") == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    rec = records.read_record(tmp_path / "a.json")
    assert set(rec) == set(records.RECORD_KEYS)
    assert rec["results"]["ci_low"] <= rec["results"]["oracle"] <= rec["results"]["ci_high"]


def test_default_output_location(outdir):
    assert call("optimize", "--log-n", 20, "--seed", 3) == 0
    assert (outdir / "optimize-seed3.json").exists()


def test_sweep_csv_matches_json(tmp_path):
    out, table = tmp_path / "sweep.json", tmp_path / "sweep.csv"
    assert call("optimize", "--log-n", 100, "--sweep", 10, "--log-n-max", 10000,
                "--output", out, "--csv", table) == 0
    rows = list(csv.DictReader(table.open()))
    assert len(rows) == 10
    assert list(rows[0]) == list(cli.SWEEP_COLUMNS)
    js = records.read_record(out)["results"]["rows"]
    for r, j in zip(rows, js):
        assert float(r["log_rho"]) == j["log_rho"]
        assert r["active_branch"] == j["active_branch"]


def test_span_distance_lemma(tmp_path):
    out = tmp_path / "span.json"
    code = call("verify-lemma", "--name", "span-distance", "--n", 20, "--u", 10, "--k", 4, "--tau", 1.0,
                "--delta", 0.5, "--trials", 50, "--output", out)
    res = records.read_record(out)["results"]
    assert code == (0 if res["passed"] else 1)
    assert res["empirical_rate"] >= res["bound_value"]


@pytest.mark.parametrize("argv", [
    ["measure", "--family", "l1ball", "--n", 3, "--h", 1.5, "--samples", 30000],
    ["optimize", "--log-n", 50],
    ["pipeline", "--n", 3, "--samples", 300, "--matrices", 2],
])
def test_replay_across_workers(tmp_path, argv):
    out = tmp_path / "r.json"
    assert call(*argv, "--workers", 1, "--output", out) == 0
    for w in (1, 4):
        assert call("replay", out, "--workers", w) == 0


def test_replay_detects_tampering(tmp_path):
    out = tmp_path / "r.json"
    call("measure", "--family", "l1ball", "--n", 2, "--samples", 1000, "--output", out)
    rec = json.loads(out.read_text())
    rec["results"]["hits"] += 1
    out.write_text(json.dumps(rec))
    assert call("replay", out) == 1


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 4, "family": "l1ball", "bogus": 1}))
    assert call("measure", "--config", bad) == 2
    assert "bogus" in capsys.readouterr().err
    assert call("measure", "--family", "cube", "--n", 3) == 2
    assert call("measure", "--n", 3) == 2
    assert call("optimize", "--log-n", 2.0) == 2
    assert call("optimize", "--log-n", 20, "--constants", "nope=1") == 2


def test_config_file_and_flags(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"family": "l1ball", "n": 2, "samples": 500, "seed": 9}))
    out = tmp_path / "o.json"
    assert call("measure", "--config", conf, "--h", 1.0, "--output", out) == 0
    p = records.read_record(out)["parameters"]
    assert p["seed"] == 9 and p["h"] == 1.0 and p["samples"] == 500


def test_run_config_round_trip():
    cfg = cli.RunConfig.from_dict({"command": "verify-lemma", "name": "simple-bound", "n": 8, "r": 4,
                                   "h": 0.5, "seed": 4, "stream": 2, "constants": {"c_tilt": 0.5}})
    again = cli.RunConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert cfg.seed == Seed(4, 2)
    with pytest.raises(cli.ConfigError):
        cli.RunConfig.from_dict({"command": "nope"})


def test_atomic_write_leaves_no_temp(tmp_path):
    path = tmp_path / "sub" / "x.json"
    records.atomic_write(path, "one")
    records.atomic_write(path, "two")
    assert path.read_text() == "two"
    assert os.listdir(tmp_path / "sub") == ["x.json"]
    with pytest.raises(ValueError):
        records.write_record(path, {"name": "x"})


def test_float_formatting_round_trips():
    for x in (0.1, 1 / 3, 1e-300, 2.0 ** 60, -0.0):
        assert float(records.dumps(x)) == x
    assert records.dumps(float("inf")) == "Infinity"


def test_summary_output():
    buf = io.StringIO()
    cfg = cli.RunConfig.from_dict({"command": "optimize", "log_n": 30})
    assert cli.run(cfg, out=buf) == 0
    assert "log rho" in buf.getvalue()
