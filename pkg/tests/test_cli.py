import io
import json

import numpy as np
import pytest

from triquad.cli import dispatch
from triquad.quadsys import band_system, four_lines_system, random_system


def run(argv, env=None):
    out, err = io.StringIO(), io.StringIO()
    code = dispatch(argv, out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def sysfile(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(random_system(4, 1, "dense").to_json())
    return str(p)


def test_usage_errors():
    assert run(["count", "--q", "0"])[0] == 2
    assert run(["nosuch"])[0] == 2
    assert run(["count", "--system", "x.json", "--n", "1,2", "--q", "3"])[0] == 2
    assert run([])[0] == 2


def test_missing_file_is_input_error():
    code, _, err = run(["count", "--system", "/nonexistent.json", "--n", "1,2,3", "--q", "3"])
    assert code == 2 and "system" in err


def test_count_json(sysfile):
    code, out, _ = run(["count", "--system", sysfile, "--n", "1,2,3", "--q", "6"])
    rec = json.loads(out)
    assert code == 0
    assert set(rec) >= {"value", "method", "elapsed_ms"}


def test_budget_exit(sysfile, monkeypatch):
    monkeypatch.setenv("TRIQUAD_BUDGET", "10")
    code, _, err = run(["count", "--system", sysfile, "--n", "1,2,3", "--q", "6", "--no-fast-path"])
    assert code == 3 and "budget" in err
    code, _, _ = run(["count", "--system", sysfile, "--n", "1,2,3", "--q", "6", "--no-fast-path",
                      "--force"])
    assert code == 0


def test_certify_four_lines(tmp_path):
    p = tmp_path / "b.json"
    p.write_text(four_lines_system().to_json())
    code, out, _ = run(["certify", "--system", str(p)])
    assert code == 0 and json.loads(out)["status"] == "singular-with-witness"


def test_csv_projection(sysfile):
    code, out, _ = run(["tsum", "--system", sysfile, "--n", "1,2,3", "--q", "4", "--path", "all",
                        "--format", "csv"])
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 2 and "counting.re" in lines[0]


def test_reports_byte_identical(sysfile):
    argv = ["classify", "--system", sysfile, "--n", "1,2,3", "--pmax", "7"]
    assert run(argv)[1] == run(argv)[1]


def test_out_file(sysfile, tmp_path):
    dest = tmp_path / "r.jsonl"
    code, out, _ = run(["series", "--system", sysfile, "--n", "1,2,3", "--qmax", "6",
                        "--out", str(dest)])
    assert code == 0 and out == ""
    assert json.loads(dest.read_text())["truncation"] == 6


def test_builtin_systems():
    code, out, _ = run(["classify", "--system", "builtin:band:6", "--p", "3,5"])
    assert code == 0 and len(out.strip().splitlines()) == 2
    assert run(["classify", "--system", "builtin:nope", "--p", "3"])[0] == 2
    assert run(["classify", "--system", "builtin:band", "--p", "4"])[0] == 2


def test_jint_oracle(sysfile):
    code, out, _ = run(["jint", "--system", sysfile, "--mu", "0.1,0.1,0.1", "--oracle",
                        "--eps", "0.1", "--samples", "4096"])
    assert code == 0 and "value" in json.loads(out)


def test_predict_and_scan(sysfile):
    code, out, _ = run(["predict", "--system", sysfile, "--n", "1,2,3", "--n", "0,1,1", "--B", "3",
                        "--qmax", "3", "--samples", "4096", "--eps", "0.2", "--truth"])
    recs = [json.loads(l) for l in out.splitlines()]
    assert code == 0 and len(recs) == 2
    assert set(recs[0]) >= {"n", "R_B", "prediction", "sseries", "sintegral", "flags"}
    code, out, _ = run(["scan", "--system", sysfile, "--window", "0..1", "--B", "3", "--qmax", "3",
                        "--samples", "4096", "--eps", "0.2"])
    assert code == 0 and "summary" in json.loads(out.splitlines()[-1])


def test_verify_quick(sysfile):
    code, out, _ = run(["verify", "--system", sysfile, "--quick"])
    recs = [json.loads(l) for l in out.splitlines()]
    assert code == 0 and all(r["ok"] for r in recs)
