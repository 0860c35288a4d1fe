import json
import subprocess
import sys

import numpy as np
import pytest

from wcf_forge.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_json_and_verify(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, text, _ = run(capsys, "solve", "--coords", "0,1,2,3", "--out", str(out), "--json")
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1 and doc["passed"]
    assert json.loads(text) == doc
    O = np.array(doc["terms"][0]["certificate"]["O"])
    np.testing.assert_allclose(O, [[np.sqrt(3) / 2, 0.5], [-0.5, np.sqrt(3) / 2]], atol=1e-12)
    code, text, _ = run(capsys, "verify", str(out))
    assert code == 0 and text.strip().endswith("PASS")


def test_verify_tampered(tmp_path, capsys):
    out = tmp_path / "s.json"
    run(capsys, "solve", "--coords", "1,2,3,4,5", "--roots", "0.5", "--out", str(out))
    doc = json.loads(out.read_text())
    doc["terms"][0]["certificate"]["O"][0][0] += 1e-3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, text, _ = run(capsys, "verify", str(bad))
    assert code == 1 and "FAIL" in text


def test_solve_is_deterministic(tmp_path):
    paths = [tmp_path / f"{i}.json" for i in range(2)]
    for p in paths:
        subprocess.run(
            [sys.executable, "-m", "wcf_forge.cli", "solve", "--coords", "1,2,3,4,5,6,7",
             "--roots", "0.5,1.5,2.5,5.5", "--out", str(p)],
            check=True, capture_output=True,
        )
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_decompose_command(capsys):
    code, text, _ = run(capsys, "decompose", "--coords", "0,1,2", "--roots", "3", "--json")
    assert code == 0
    doc = json.loads(text)
    assert sorted(t["alpha"] for t in doc["terms"]) == [1.0, 3.0]
    assert all(t["kind"] == "f0" for t in doc["terms"])


def test_validity_exit_codes(tmp_path, capsys):
    assert run(capsys, "validity", "--coords", "0,1,2,3")[0] == 0
    assert run(capsys, "validity", "--coords", "0,1", "--weights=1,-1")[0] == 1
    p = [-1 / 6, 1 / 2, -1 / 2, 1 / 6 + 5e-9 * 4 / 3]
    code = run(capsys, "validity", "--coords", "1,2,3,4", "--weights=" + ",".join(map(repr, p)))[0]
    assert code == 2
    f = tmp_path / "t.json"
    f.write_text(json.dumps({"points": [{"x": 0, "p": -0.5}, {"x": 1, "p": 1}, {"x": 2, "p": -0.5}]}))
    code, text, _ = run(capsys, "validity", "--input", str(f), "--json")
    assert code == 0 and json.loads(text)["verdict"] == "valid"


def test_usage_and_data_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["solve", "--nonsense"])
    assert e.value.code == 64
    capsys.readouterr()
    assert run(capsys, "solve", "--coords", "1,1,2")[0] == 64
    assert run(capsys, "solve", "--coords", "1,2,3", "--roots", "4,5")[0] == 64
    assert run(capsys, "solve")[0] == 64
    bad = tmp_path / "x.json"
    bad.write_text("{not json")
    assert run(capsys, "verify", str(bad))[0] == 65
    assert run(capsys, "verify", str(tmp_path / "missing.json"))[0] == 65
    bad.write_text(json.dumps({"terms": [{"nope": 1}]}))
    assert run(capsys, "verify", str(bad))[0] == 65


def test_demo_one_tenth(capsys):
    code, text, _ = run(capsys, "demo", "one-tenth", "--json")
    assert code == 0
    doc = json.loads(text)
    assert doc["problem"]["coords"] == [0, 1, 2, 3, 4]
    assert all(t["term"]["kind"] == "f0" for t in doc["terms"])
    assert run(capsys, "demo", "one-tenth", "--points", "0,1,2")[0] == 64


def test_batch(tmp_path, capsys, monkeypatch):
    spec = tmp_path / "b.jsonl"
    spec.write_text('{"coords": [0, 1, 2, 3]}\n{"coords": [1, 2, 3, 4], "power": 2}\n{"coords": [1, 2], "roots": [5]}\n')
    out = tmp_path / "b.out"
    monkeypatch.setenv("WCF_FORGE_THREADS", "2")
    code = run(capsys, "solve", "--batch", str(spec), "--out", str(out))[0]
    docs = [json.loads(l) for l in out.read_text().splitlines()]
    assert code == 1
    assert [d["passed"] for d in docs] == [True, True, False] and "error" in docs[2]
    spec.write_text("[1, 2\n")
    assert run(capsys, "solve", "--batch", str(spec))[0] == 65


def test_report_writes_figures(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "solve", "--coords", "0,1,2", "--out", str(out), "--report")
    assert code == 0
    for name in ("r_assignment.png", "r_schedule.png", "r_eps_sweep.png"):
        assert (tmp_path / name).stat().st_size > 1000
        assert name in err
