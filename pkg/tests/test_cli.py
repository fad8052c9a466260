"""The erfcurves command line."""

import json
import subprocess
import sys

import pytest

from erfcurves.cli import main
from erfcurves.ingestion import fixture_paths

OFFERS, BIDS = (str(p) for p in fixture_paths())


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--seed", "3", "--hours", "4", "--out", str(out)]) == 0
    return out


def test_fit_writes_model_json_and_svg(tmp_path):
    out = tmp_path / "m.json"
    rc = main(["fit", "--supply-file", OFFERS, "--demand-file", BIDS, "--date", "01-01-2017",
               "--hour", "1", "--m-supply", "3", "--m-demand", "2", "--out", str(out),
               "--svg", str(tmp_path / "ov")])
    assert rc == 0
    record = json.loads(out.read_text())
    assert record["P"] == 2.0
    assert len(record["supply"]["terms"]) == 3
    assert record["config"]["price_cap"] == 400.0
    assert (tmp_path / "ov_supply.svg").exists() and (tmp_path / "ov_demand.svg").exists()


def test_fit_needs_an_hour_when_ambiguous(capsys):
    assert main(["fit", "--supply-file", OFFERS, "--demand-file", BIDS]) == 1
    assert "--date" in capsys.readouterr().err


def test_batch_stats_coeffs(corpus_dir, tmp_path):
    models = tmp_path / "models"
    report = tmp_path / "r.csv"
    assert main(["batch", "--corpus", str(corpus_dir), "--m-supply", "6", "--m-demand", "3",
                 "--models-dir", str(models), "--out", str(report)]) == 0
    assert report.read_text().startswith("date,hour,status,P,P_appr")
    assert len(list(models.glob("*_supply.json"))) == 4
    stats = tmp_path / "c.json"
    assert main(["coeffs", "--models-dir", str(models), "--side", "supply", "--format", "json",
                 "--out", str(stats)]) == 0
    assert json.loads(stats.read_text())["n_curves"] == 4
    assert main(["stats", "--corpus", str(corpus_dir), "--out", str(tmp_path / "s.csv")]) == 0


def test_batch_with_config_file(corpus_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fit": {"m_supply": 4, "method": "uniform"}, "synth": {"elastic_volume": 100.0}}))
    out = tmp_path / "r.json"
    assert main(["batch", "--corpus", str(corpus_dir), "--config", str(cfg), "--m-demand", "2",
                 "--format", "json", "--out", str(out)]) == 0
    config = json.loads(out.read_text())["config"]
    assert (config["m_supply"], config["m_demand"], config["method"]) == (4, 2, "uniform")
    assert main(["synth", "--config", str(cfg), "--hours", "1", "--out", str(tmp_path / "c2")]) == 0
    prov = json.loads((tmp_path / "c2" / "provenance.json").read_text())
    assert prov["params"]["elastic_volume"] == 100.0


@pytest.mark.parametrize("argv", [
    [],
    ["nonsense"],
    ["batch", "--method", "random", "--corpus", "x"],
    ["batch", "--m-supply", "many"],
    ["batch"],
    ["synth"],
])
def test_usage_errors_exit_1(argv):
    with pytest.raises(SystemExit) as info:
        rc = main(argv)
        raise SystemExit(rc)
    assert info.value.code == 1


def test_data_errors_exit_2(tmp_path, capsys):
    assert main(["batch", "--supply-file", str(tmp_path / "no.csv"), "--demand-file", BIDS]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("date,hour,volume,price\n01-01-2017,1,abc,5\n")
    assert main(["batch", "--supply-file", str(bad), "--demand-file", BIDS]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["fit", "--supply-file", OFFERS, "--demand-file", BIDS, "--date", "2017-02-02",
                 "--hour", "1"]) == 2


def test_skip_bad_flag(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text(open(OFFERS).read() + "01-01-2017,1,abc,5\n")
    assert main(["stats", "--supply-file", str(bad), "--demand-file", BIDS, "--skip-bad",
                 "--out", str(tmp_path / "s.csv")]) == 0


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "erfcurves", "stats", "--supply-file", OFFERS,
                          "--demand-file", BIDS, "--format", "json"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["by_hour"]["1"] == [6.0, 4.0]
