import csv
import json

import pytest

from hlab.cli import DEFAULTS, build_parser, load_config, run
from hlab.errors import ConfigError
from hlab.family import RANK0, RANK1
from hlab.lattice import ELLIPTIC


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_parser_defaults():
    args = build_parser().parse_args(["theta"])
    assert args.out == "hlab-out" and args.tol is None and args.B is None
    with pytest.raises(SystemExit):
        build_parser().parse_args(["nonsense"])


def test_coeffs(tmp_path):
    assert run(["coeffs", "--out", str(tmp_path), "--B", "20"]) == 0
    rows = read_csv(tmp_path / "coefficients.csv")
    assert [int(r["a_n"]) for r in rows[:10]] == [1, -2, -1, 2, 1, 2, -2, 0, -2, -2]
    angles = {int(r["p"]): r for r in read_csv(tmp_path / "angles.csv")}
    assert angles[11]["reduction"] == "bad" and angles[11]["theta_p"] == ""
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["config"]["coeffs"]["B"] == 20 and "coefficients.csv" in m["outputs"]


def test_periods(tmp_path):
    assert run(["periods", "--out", str(tmp_path), "--B", "2000"]) == 0
    rec = json.loads((tmp_path / "periods.json").read_text())
    assert rec["kind"] == ELLIPTIC
    assert rec["j"][0] == pytest.approx(-122023936 / 161051, rel=1e-6)
    assert len(read_csv(tmp_path / "lattice_points.csv")) == 49


def test_theta(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta": {"discriminants": [-23]}}))
    assert run(["theta", "--config", str(cfg), "--out", str(tmp_path / "o"), "--B", "10"]) == 0
    classes = read_csv(tmp_path / "o" / "classes.csv")
    assert [(r["a"], r["b"], r["c"]) for r in classes] == [("1", "1", "6"), ("2", "1", "3"), ("2", "-1", "3")]
    theta = read_csv(tmp_path / "o" / "theta.csv")
    assert len(theta) == 33 and theta[0]["r_den"] == "2"


def test_lseries(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lseries": {"labels": ["11a", "37a"]}}))
    assert run(["lseries", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = {r["label"]: r for r in read_csv(tmp_path / "o" / "lvalues.csv")}
    assert float(rows["11a"]["L_smoothed"]) == pytest.approx(0.2538418608559106, abs=1e-12)
    assert rows["37a"]["sign"] == "-1" and rows["37a"]["D"] == "-3"
    assert float(rows["37a"]["Lprime"]) == pytest.approx(0.3059997738340523, abs=1e-12)
    verdicts = json.loads((tmp_path / "o" / "rank_report.json").read_text())
    assert [v["verdict"] for v in verdicts] == [RANK0, RANK1]


def test_pairing(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"pairing": {"labels": ["11a"]}}))
    assert run(["pairing", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "pairings.csv")
    assert float(rows[0]["re"]) == pytest.approx(0.046900147873495, abs=1e-12)


def test_scan(tmp_path):
    assert run(["scan", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "scan_summary.json").read_text())
    assert summary["l_affinity_residual"] < 1e-10
    assert (tmp_path / "scan_l.csv").read_text().startswith("t,")


def test_rerun_from_manifest_is_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["lseries", "--out", str(a), "--B", "1500"]) == 0
    assert run(["lseries", "--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    assert outputs(a) == outputs(b)


def test_unknown_label_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"coeffs": {"label": "99z"}}))
    assert run(["coeffs", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError" and "99z" in err["message"]


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json")
    assert run(["theta", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))


def test_domain_error_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta": {"discriminants": [-12]}}))
    assert run(["theta", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "NotFundamental"


def test_tol_flag_recorded(tmp_path):
    assert run(["theta", "--out", str(tmp_path), "--B", "5", "--tol", "1e-6"]) == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["tolerances"]["tol"] == 1e-6 and m["config"]["theta"]["B"] == 5
    assert set(DEFAULTS) == {"coeffs", "periods", "lseries", "theta", "pairing", "scan"}
