import csv
import json
import subprocess
import sys

import pytest

from percolation_rmt.cli import main


def run(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_sample_spectrum_csv(capsys):
    rc, out, _ = run(["sample-spectrum", "--n", "5", "--b", "3"], capsys)
    rows = list(csv.reader(out.splitlines()))
    assert rc == 0 and rows[0] == ["index", "eigenvalue"] and len(rows) == 12
    vals = [float(r[1]) for r in rows[1:]]
    assert vals == sorted(vals)


def test_sample_spectrum_json_and_dump(tmp_path, capsys):
    dump = tmp_path / "m.txt"
    rc, out, _ = run(["sample-spectrum", "--n", "4", "--wigner", "--format", "json", "--dump-matrix", str(dump)], capsys)
    d = json.loads(out)
    assert rc == 0 and d["N"] == 9 and len(d["eigenvalues"]) == 9
    assert dump.read_text().strip()


def test_esd_report_writes_summary(tmp_path, capsys):
    out = tmp_path / "esd.csv"
    assert main(["esd-report", "--n", "100", "--b", "8", "--bins", "11", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 12
    summary = json.loads((tmp_path / "esd.csv.summary.json").read_text())
    assert 0 <= summary["ks"] <= 1 and len(summary["moments"]) == 8


def test_variance_scan_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"b_ladder": [2, 3, 4], "aspect": 4, "replicas": 6, "seed": 5}))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["variance-scan", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["variance-scan", "--config", str(cfg), "--out", str(out2), "--jobs", "2"]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert main(["variance-scan", "--config", str(cfg), "--out", str(out2), "--seed", "6"]) == 0
    assert out1.read_bytes() != out2.read_bytes()
    assert json.loads((tmp_path / "b.csv.summary.json").read_text())["config"]["seed"] == 6


def test_convergence_scan_json(capsys):
    rc, out, _ = run(
        ["convergence-scan", "--b", "2", "--b", "3", "--b", "4", "--aspect", "4", "--replicas", "4", "--format", "json"],
        capsys,
    )
    d = json.loads(out)
    assert rc == 0 and "ks_median" in d["fits"]


def test_scan_v2_override_moves_default_z(capsys):
    rc, out, _ = run(["variance-scan", "--v2", "4", "--b", "2", "--b", "3", "--b", "4", "--aspect", "4", "--replicas", "3"], capsys)
    assert rc == 0 and "var_g[0,5]" in out


def test_scan_rejects_bad_config(capsys):
    rc, _, err = run(["variance-scan", "--v2", "0"], capsys)
    assert rc == 2 and "error" in err
    rc, _, err = run(["variance-scan", "--z", "0,1"], capsys)
    assert rc == 2


def test_wigner_scan(capsys):
    rc, out, _ = run(["convergence-scan", "--wigner-n", "10", "--wigner-n", "20", "--replicas", "3"], capsys)
    assert rc == 0 and out.splitlines()[1].startswith("21.0,10,3,ks_median")


def test_fixedpoint_outputs(tmp_path, capsys):
    out = tmp_path / "fp.csv"
    assert main(["fixedpoint", "--n", "128", "--b", "4", "--z", "0,3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "i,re_r,im_r" and len(lines) == 258
    s = json.loads((tmp_path / "fp.csv.summary.json").read_text())
    assert s["residual"] <= 1e-12 and s["sup_abs_r"] <= s["ball_radius"]
    assert s["deviation_interior_L8"] <= 0.01


def test_fixedpoint_outside_lambda(capsys):
    rc, _, err = run(["fixedpoint", "--n", "16", "--b", "2", "--z", "0,1"], capsys)
    assert rc == 2 and "allow-outside-lambda" in err
    rc, _, err = run(["fixedpoint", "--n", "16", "--b", "2", "--z", "0,2", "--allow-outside-lambda"], capsys)
    assert rc == 0 and "no uniqueness" in err


def test_cumulant_check(capsys):
    rc, out, _ = run(["cumulant-check", "--dist", "rademacher:1", "--function", "poly:0,0,0,1", "--q", "3"], capsys)
    d = json.loads(out)
    assert rc == 0 and d["remainder_abs"] <= 1e-12 and d["bound"] == 0.0
    rc, out, _ = run(["cumulant-check", "--mask-b", "16", "--psi", "0.5", "--method", "exact"], capsys)
    d = json.loads(out)
    assert rc == 0 and d["bound_holds"] is True


def test_resolvent_check(capsys):
    rc, out, _ = run(["resolvent-check", "--n", "20", "--b", "4", "--z", "0,3", "--z", "1,-4"], capsys)
    d = json.loads(out)
    assert rc == 0 and len(d["points"]) == 2
    assert all(sum(p["violations"].values()) == 0 for p in d["points"])
    assert d["derivative"]["ratio"] == pytest.approx(4.0, rel=0.1)


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "percolation_rmt.cli", "sample-spectrum", "--n", "2", "--b", "2"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert res.stdout.startswith("index,eigenvalue")
