import json

import numpy as np
import pytest

from momdp_front import io
from momdp_front.cli import main


@pytest.fixture
def t2_file(tmp_path, t2):
    path = tmp_path / "t2.json"
    io.save_model(t2, path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate(capsys, t2_file, tmp_path):
    assert run(capsys, "validate", t2_file)[0] == 0
    d = json.loads(t2_file.read_text())
    d["kernel"][0][0] = [0.5, 0.6]
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(d))
    code, _, err = run(capsys, "validate", broken)
    assert code == 1 and "row sum" in err
    junk = tmp_path / "junk.json"
    junk.write_text("not json")
    assert run(capsys, "validate", junk)[0] == 2
    assert run(capsys, "validate", tmp_path / "missing.json")[0] == 2


def test_enumeration_bound_from_environment(capsys, tmp_path, monkeypatch):
    kernel = np.zeros((12, 2, 12))
    for x in range(12):
        kernel[x, 0, x] = 1.0
        kernel[x, 1, (x + 1) % 12] = 1.0
    from momdp_front.model import MomdpModel

    path = tmp_path / "ring.json"
    io.save_model(MomdpModel(kernel, np.zeros((1, 12, 2)), np.eye(12)[0]), path)
    monkeypatch.setenv("MOMDP_ENUM_BOUND", "10")
    code, _, err = run(capsys, "validate", path)
    assert code == 1 and "unverifiable" in err
    monkeypatch.setenv("MOMDP_ENUM_BOUND", "ten")
    assert run(capsys, "validate", path)[0] == 2


def test_front_files(capsys, t2_file, tmp_path):
    out, csv = tmp_path / "f.json", tmp_path / "f.csv"
    code, text, _ = run(capsys, "front", t2_file, "--out", out, "--csv", csv)
    assert code == 0 and "2 vertices, 1 edges" in text
    front = io.load_front(out)
    assert front.edges[0].slope == -4.0
    rows = io.read_csv(csv.read_text())
    assert [r["kind"] for r in rows] == ["vertex", "vertex", "edge"]


def test_front_methods_agree(capsys, t2_file, tmp_path):
    files = {}
    for method in ("dichotomy", "bruteforce", "family"):
        files[method] = tmp_path / f"{method}.json"
        assert run(capsys, "front", t2_file, "--method", method, "--out", files[method])[0] == 0
    J = {m: io.load_front(p).objectives() for m, p in files.items()}
    np.testing.assert_allclose(J["bruteforce"], J["dichotomy"], atol=1e-12)
    np.testing.assert_allclose(J["family"], J["dichotomy"], atol=1e-12)


def test_dichotomy_needs_two_objectives(capsys, tmp_path, rng):
    from momdp_front.model import random_unichain_model

    path = tmp_path / "k3.json"
    io.save_model(random_unichain_model(rng, 2, 2, 3), path)
    assert run(capsys, "front", path)[0] == 1
    assert run(capsys, "front", path, "--method", "bruteforce")[0] == 0


def test_nlopt(capsys, t2_file, tmp_path):
    out, curve = tmp_path / "s.json", tmp_path / "c.csv"
    code, text, _ = run(capsys, "nlopt", t2_file, "--scalarization", "linear(1)+power(1,2)", "--out", out, "--curve", curve)
    assert code == 0
    sol = json.loads(out.read_text())
    assert sol["location"] == "edge"
    assert sol["b"] == pytest.approx(13 / 16, abs=1e-6)
    assert sol["value"] == pytest.approx(0.484375, abs=1e-9)
    assert sol["alpha"] == pytest.approx(13 / 17, abs=1e-6)
    assert sol["pareto_optimal"]
    rows = io.read_csv(curve.read_text())
    assert min(float(r["f"]) for r in rows) >= sol["value"] - 1e-12
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scalarization": {"terms": [{"type": "linear", "a": 1}, {"type": "linear", "a": 1}]}}))
    code, text, _ = run(capsys, "nlopt", t2_file, "--config", cfg)
    assert code == 0 and "optimum at vertex" in text
    assert run(capsys, "nlopt", t2_file, "--scalarization", "linear(-1)+linear(1)")[0] == 1
    assert run(capsys, "nlopt", t2_file, "--scalarization", "wobble(2)")[0] == 2


def test_solve(capsys, t2_file, tmp_path):
    out = tmp_path / "sol.json"
    code, text, _ = run(capsys, "solve", t2_file, "--weights", "1,1", "--out", out)
    assert code == 0
    assert json.loads(out.read_text())["policy"] == [0, 0]
    assert run(capsys, "solve", t2_file, "--weights", "1,-1")[0] == 1


def test_casegen(capsys, tmp_path):
    out = tmp_path / "scalar.json"
    assert run(capsys, "casegen", "--preset", "scalar", "--p-s", "0.8", "--x-max", "3", "--out", out)[0] == 0
    model = io.load_model(out)
    np.testing.assert_allclose(model.costs[0, :, 0], [0.5, 1, 1, 1], atol=1e-12)
    assert model.metadata["riccati_residual"] <= 1e-12
    out = tmp_path / "pend.json"
    assert run(capsys, "casegen", "--preset", "pendubot", "--out", out)[0] == 0
    model = io.load_model(out)
    assert (model.num_states, model.num_actions) == (51, 2)
    assert model.metadata["x_max_source"] == "default"
    assert run(capsys, "casegen", "--p-s", "0", "--out", tmp_path / "x.json")[0] == 1


def test_simulate(capsys, t2_file, scalar_case, tmp_path):
    code, text, _ = run(capsys, "simulate", t2_file, "--actions", "aa", "--steps", 10000)
    assert code == 0 and "empirical 0.5" in text
    out = tmp_path / "sim.json"
    args = ("simulate", t2_file, "--mix", "aa:ba:0.42857142857142855", "--seed", 5, "--out", out)
    assert run(capsys, *args)[0] == 0
    first = out.read_text()
    run(capsys, *args)
    assert out.read_text() == first
    case = tmp_path / "case.json"
    io.save_model(scalar_case, case)
    assert run(capsys, "simulate", case, "--threshold", 1, "--steps", 200000, "--seed", 1)[0] == 0
    assert run(capsys, "simulate", t2_file, "--actions", "aaa")[0] == 1
    assert run(capsys, "simulate", t2_file, "--mix", "aa:bb:0.5")[0] == 1


def test_decompose(capsys, t2_file, tmp_path):
    front = tmp_path / "f.json"
    run(capsys, "front", t2_file, "--out", front)
    out = tmp_path / "d.json"
    code, text, _ = run(capsys, "decompose", front, "--target", f"{5 / 12!r},{1 / 3!r}", "--out", out)
    assert code == 0
    d = json.loads(out.read_text())
    assert [p["weight"] for p in d["parts"]] == pytest.approx([0.5, 0.5])
    assert d["realization"]["alpha"] == pytest.approx(3 / 7, abs=1e-12)
    code, _, _ = run(capsys, "decompose", front, "--target", "0.5,0", "--out", out)
    assert code == 0 and len(json.loads(out.read_text())["parts"]) == 1
    code, _, err = run(capsys, "decompose", front, "--target", "0,0")
    assert code == 1 and "nearest" in err
