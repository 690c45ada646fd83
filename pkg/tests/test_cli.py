import csv
import json
import subprocess
import sys

import pytest

from chp_clearing.cli import CLEAR_ARTIFACTS, main
from chp_clearing.io import save_instance
from conftest import REFERENCE, pair_network


@pytest.fixture(scope="module")
def ref_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("inst") / "ref.json"
    path.write_bytes(REFERENCE.read_bytes())
    return path


@pytest.fixture(scope="module")
def run_dir(ref_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "run1"
    assert main(["clear", "--instance", str(ref_path), "--out", str(out)]) == 0
    return out


def _rows(path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def test_clear_writes_six_artifacts(run_dir):
    assert sorted(p.name for p in run_dir.iterdir()) == sorted(CLEAR_ARTIFACTS)


def test_clear_output_shape(run_dir):
    prices = _rows(run_dir / "prices.csv")
    assert list(prices[0]) == ["market", "location", "period", "period_start_hours", "energy_price",
                               "grade_S", "grade_R", "MG", "CO"]
    elec = [r for r in prices if r["market"] == "electricity" and r["location"] == "1"]
    assert [int(r["period"]) for r in elec] == list(range(1, 17))
    assert float(elec[1]["period_start_hours"]) == 0.25
    surplus = _rows(run_dir / "surplus.csv")
    assert {"CR", "IL", "IU", "identity_gap"} <= set(surplus[0])
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["command"] == "clear"
    assert set(manifest["outputs"]) == set(CLEAR_ARTIFACTS) - {"manifest.json"}


def test_clear_is_byte_identical(ref_path, run_dir, tmp_path):
    again = tmp_path / "run2"
    assert main(["clear", "--instance", str(ref_path), "--out", str(again)]) == 0
    for name in CLEAR_ARTIFACTS:
        assert (again / name).read_bytes() == (run_dir / name).read_bytes(), name


def test_optional_artifacts(ref_path, tmp_path):
    out = tmp_path / "run"
    assert main(["clear", "--instance", str(ref_path), "--out", str(out), "--export-qp", "--dump-dynamics"]) == 0
    assert (out / "problem.qps").read_text().startswith("NAME chp_dispatch")
    assert (out / "dynamics.txt").is_file()


def test_malformed_instance_exits_1(tmp_path, capsys):
    doc = json.loads(REFERENCE.read_text())
    doc["units"][1]["cost"] = "cheap"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["clear", "--instance", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "units[1].cost" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_invalid_instance_exits_1(tmp_path, capsys):
    path = tmp_path / "slow.json"
    save_instance(pair_network(length=5000.0), path)
    assert main(["validate", "--instance", str(path)]) == 1
    assert "transport time" in capsys.readouterr().err


def test_validate_reference(ref_path, capsys):
    assert main(["validate", "--instance", str(ref_path)]) == 0
    assert "valid" in capsys.readouterr().out


def test_infeasible_exits_2_and_names_rows(tmp_path, capsys):
    path = tmp_path / "inf.json"
    save_instance(pair_network(req=(110.0, 110.0), cap=100.0), path)
    assert main(["clear", "--instance", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "temp_req[2:supply]" in capsys.readouterr().err


def test_verify_single_node(ref_path, tmp_path, capsys):
    out = tmp_path / "v"
    code = main(["verify", "--instance", str(ref_path), "--out", str(out), "--targets", "node:1",
                 "--sweep-count", "0"])
    assert code == 0
    rows = _rows(out / "verification.csv")
    assert {r["target"] for r in rows} == {"node:1"}
    assert len(rows) == 4
    assert "PASS price oracle" in capsys.readouterr().out


def test_verify_fault_hook_exits_3(ref_path, tmp_path):
    code = main(["verify", "--instance", str(ref_path), "--out", str(tmp_path / "v"), "--targets", "bus:3",
                 "--sweep-count", "0", "--fault-price-scale", "2"])
    assert code == 3


def test_verify_unknown_target_exits_1(ref_path, tmp_path):
    assert main(["verify", "--instance", str(ref_path), "--out", str(tmp_path / "v"), "--targets", "node:99",
                 "--sweep-count", "0"]) == 1


def test_plotdata_series(run_dir, tmp_path):
    out = tmp_path / "series.csv"
    assert main(["plotdata", "--run", str(run_dir), "--out", str(out)]) == 0
    rows = _rows(out)
    gp = [r for r in rows if r["series"] == "G_p" and r["location"] == "CHP1"]
    gh = [r for r in rows if r["series"] == "G_h" and r["location"] == "CHP1"]
    assert len(gp) == 16 and len(gh) == 4
    stacks = {r["location"] for r in rows if r["series"] == "surplus_heat"}
    assert {"CR", "IL", "IU"} <= stacks


def test_plotdata_empty_run_dir(tmp_path, capsys):
    assert main(["plotdata", "--run", str(tmp_path)]) == 1
    assert "missing run artifacts" in capsys.readouterr().err


def test_module_entry_point(ref_path):
    proc = subprocess.run([sys.executable, "-m", "chp_clearing", "validate", "--instance", str(ref_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
