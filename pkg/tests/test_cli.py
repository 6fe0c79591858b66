import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from anosov_plane.cli import EXIT_FAIL, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, run

SCHEMA_DIR = Path(__file__).parents[1] / "src" / "anosov_plane" / "schemas"
REPORT_SCHEMA = json.loads((SCHEMA_DIR / "report.schema.json").read_text())
CONFIG_SCHEMA = json.loads((SCHEMA_DIR / "config.schema.json").read_text())


def cli(*args, cwd=None):
    p = subprocess.run([sys.executable, "-m", "anosov_plane", *args], capture_output=True, text=True, cwd=cwd)
    report = json.loads(p.stdout) if p.stdout.strip().startswith("{") else None
    if report is not None:
        jsonschema.validate(report, REPORT_SCHEMA)
    return p.returncode, report, p.stderr


def strip_timings(report):
    return {k: v for k, v in report.items() if k != "timings"}


def test_verify_band_u():
    code, rep, _ = cli("verify", "--structure", "band-u")
    assert code == 0 and rep["ok"]
    assert set(rep["verdicts"].values()) == {"pass"}
    assert rep["results"]["completeness_upper"]["verdict"] == "diverges"


def test_verify_frame():
    code, rep, _ = cli("verify", "--structure", "frame", "--lambda", "0.5")
    assert code == 0 and rep["ok"]
    assert rep["results"]["completeness_right"]["verdict"] == "diverges"


def test_verify_frame_bad_lambda():
    code, rep, err = cli("verify", "--structure", "frame", "--lambda", "1.5")
    assert code == EXIT_USAGE and rep is None
    assert "config.lambda" in err


def test_verify_whisker_is_config_error():
    code, _, err = cli("verify", "--structure", "whisker")
    assert code == EXIT_USAGE and "config.structure" in err


def test_render_requires_out():
    code, _, err = cli("render", "--structure", "band-u")
    assert code == EXIT_USAGE and "config.out" in err


def test_render_writes_file(tmp_path):
    out = tmp_path / "u.svg"
    code, rep, _ = cli("render", "--structure", "band-u", "--window", "-0.5,4,-0.5,3.5", "--out", str(out))
    assert code == 0 and out.exists()
    assert out.read_bytes() == (Path(__file__).parent / "golden" / "band_u.svg").read_bytes()
    assert rep["results"]["window"] == [-0.5, 4.0, -0.5, 3.5]


def test_render_unwritable_is_runtime_error(tmp_path):
    code, _, err = cli("render", "--structure", "band-u", "--out", str(tmp_path / "no" / "u.svg"))
    assert code == EXIT_RUNTIME and "u.svg" in err


def test_render_bad_seed():
    code, _, err = cli("render", "--structure", "band-u", "--out", "/dev/null", "--seeds", "1,3")
    assert code == EXIT_USAGE and "config.seeds" in err


def test_access_whisker():
    code, rep, _ = cli("access", "--structure", "whisker", "--humps", "3", "--from", "p0", "--to", "p3")
    assert code == 0
    acc = rep["results"]["access"]
    assert acc["upper_bound"] == 7 and acc["lower_bound"] == 7
    assert len(acc["chain"]) == 8


def test_access_standard():
    code, rep, _ = cli("access", "--structure", "standard-plane", "--from", "0,0", "--to", "1,1")
    assert code == 0 and rep["results"]["access"]["upper_bound"] == 2


def test_access_v_degree():
    # the degree of V is exactly 2: one corner path of every pair stays in V
    code, rep, _ = cli("access", "--structure", "hyperbola-v", "--degree", "--pairs", "500", "--resolution", "200")
    assert code == 0
    assert rep["results"]["degree"]["max_observed"] == 2
    assert rep["results"]["degree"]["saturated"] is False


def test_access_point_outside():
    code, _, err = cli("access", "--structure", "band-u", "--from", "1,3", "--to", "1,1.5")
    assert code == EXIT_USAGE and "config.from" in err


@pytest.mark.parametrize("flow,value", [("reeb1", False), ("reeb2-same-orientation", True),
                                        ("reeb2-opposite", False), ("frame-unstable", True)])
def test_topology_obstruction(flow, value):
    code, rep, _ = cli("topology", "--flow", flow, "--obstruction", "--expect", str(value).lower())
    assert code == 0
    assert rep["results"]["obstruction"]["value"] is value
    code, rep, _ = cli("topology", "--flow", flow, "--obstruction", "--expect", str(not value).lower())
    assert code == EXIT_FAIL and rep["ok"] is False


def test_topology_jplus():
    code, rep, _ = cli("topology", "--flow", "reeb1", "--jplus", "-1.5707963267948966,0")
    assert code == 0
    j = rep["results"]["jplus"]
    assert j["clusters"] == ["right-edge"] and j["off_separatrix_samples"] == 0


def test_unknown_flow():
    code, _, _ = cli("topology", "--flow", "reeb9")
    assert code == EXIT_USAGE


def test_config_file_and_override(tmp_path):
    cfg = {"schema": 1, "structure": "standard-plane", "from": "0,0", "to": "1,1", "resolution": 50}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    code, rep, _ = cli("access", "--config", str(path))
    assert code == 0 and rep["config"]["resolution"] == 50
    code, rep, _ = cli("access", "--config", str(path), "--resolution", "60", "--to", "0,1")
    assert code == 0 and rep["config"]["resolution"] == 60
    assert rep["results"]["access"]["upper_bound"] == 1


def test_config_errors(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"structure": "band-u"}))
    code, _, err = cli("verify", "--config", str(path))
    assert code == EXIT_USAGE and "schema" in err
    path.write_text(json.dumps({"schema": 1, "bogus": 3}))
    code, _, err = cli("verify", "--config", str(path))
    assert code == EXIT_USAGE
    path.write_text(json.dumps({"schema": 1, "window": [1, 0, 0, 1]}))
    code, _, err = cli("render", "--config", str(path), "--out", str(tmp_path / "x.svg"))
    assert code == EXIT_USAGE and "config.window" in err


def test_report_file_and_verdict_lines(tmp_path):
    rep_path = tmp_path / "r.json"
    p = subprocess.run([sys.executable, "-m", "anosov_plane", "access", "--structure", "standard-plane",
                        "--from", "0,0", "--to", "1,1", "--report", str(rep_path)], capture_output=True, text=True)
    assert p.returncode == 0 and "access: pass" in p.stdout
    jsonschema.validate(json.loads(rep_path.read_text()), REPORT_SCHEMA)


def test_same_seed_same_report(tmp_path):
    args = ["access", "--structure", "band-u", "--degree", "--pairs", "40", "--resolution", "80",
            "--report", str(tmp_path / "r.json"), "--seed"]
    a, b = run(args + ["7"])[1], run(args + ["7"])[1]
    assert strip_timings(a) == strip_timings(b)
    assert json.loads((tmp_path / "r.json").read_text())["config"]["seed"] == 7
    c = run(args + ["8"])[1]
    assert c["config"]["seed"] == 8


def test_in_process_run_matches_exit_codes(tmp_path):
    assert EXIT_OK == 0
    code, rep = run(["access", "--structure", "standard-plane", "--from", "0,0", "--to", "1,1",
                     "--report", str(tmp_path / "r.json")])
    assert code == 0 and rep["ok"]
