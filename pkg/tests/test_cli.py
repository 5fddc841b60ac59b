import json

import numpy as np
import pytest

from varlex.cli import run_cli
from varlex.exponents import make_exponent
from varlex.grid import GridField, unit_interval_grid
from varlex.matrix import matrix_field_from_spec

G = unit_interval_grid(16)


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(0)
    paths = {}

    def put(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        paths[name] = str(path)

    put("f.json", GridField(G, rng.random(16)).to_dict())
    put("g.json", GridField(G, rng.random(16)).to_dict())
    put("ones.json", GridField(G, np.ones(16)).to_dict())
    put("w.json", GridField(G, np.exp(rng.normal(size=16))).to_dict())
    put("p.json", make_exponent(G, 1.5 + rng.random(16)).to_dict())
    put("W.json", matrix_field_from_spec(G, {"kind": "random", "d": 2}, rng=1).to_dict())
    put("vf.json", {"values": rng.standard_normal((16, 2)).ravel().tolist()})
    put("bad.json", "not a field")
    (tmp_path / "broken.json").write_text('{\n  "n": 1,\n  oops\n}')
    paths["broken.json"] = str(tmp_path / "broken.json")
    paths["dir"] = tmp_path
    return paths


def run(argv, capsys):
    code = run_cli(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_norm_prints_json(files, capsys):
    code, out, _ = run(["norm", "--field", files["ones.json"], "--exponent", "2"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["norm"] == pytest.approx(1.0) and {"modular_at_norm", "iterations"} <= set(d)
    code, out, _ = run(["norm", "--field", files["f.json"], "--exponent", files["p.json"],
                        "--weight", files["w.json"]], capsys)
    assert code == 0 and json.loads(out)["norm"] > 0


@pytest.mark.parametrize("extra", [
    ["--kind", "ap", "--p", "2"],
    ["--kind", "ap", "--p", "P"],
    ["--kind", "rh", "--r", "2"],
    ["--kind", "apq", "--p", "2", "--q", "4", "--alpha", "0.25"],
    ["--kind", "multi-apq", "--weight", "W2", "--p", "3", "--p", "3", "--q", "3", "--alpha", "0.3333333333333333"],
])
def test_weight_constant(files, capsys, extra):
    extra = [files["p.json"] if a == "P" else files["w.json"] if a == "W2" else a for a in extra]
    code, out, err = run(["weight-constant", "--weight", files["w.json"], "--depth", "3"] + extra, capsys)
    assert code == 0, err
    d = json.loads(out)
    assert d["constant"] >= 1 - 1e-9 and d["n_cubes"] == 15


@pytest.mark.parametrize("op,extra", [
    ("max", ["--alpha", "0.5"]), ("dyadic-max", []), ("sharp", ["--delta", "0.5"]),
    ("avg", ["--cube", "1:0"]), ("integral", ["--alpha", "0.5"]), ("wdm", ["--sigma", "W"]),
])
def test_apply_op(files, capsys, op, extra):
    extra = [files["w.json"] if a == "W" else a for a in extra]
    code, out, err = run(["apply-op", "--op", op, "--field", files["f.json"]] + extra, capsys)
    assert code == 0, err
    d = json.loads(out)
    assert len(d["values"]) == 16 and min(d["values"]) >= 0


def test_cz_dump(files, capsys):
    dump = files["dir"] / "cz.json"
    code, out, _ = run(["cz", "--field", files["f.json"], "--field", files["g.json"], "--alpha", "0.5",
                        "--dump", str(dump)], capsys)
    assert code == 0
    d = json.loads(out)
    assert all(d["checks"].values()) and d["sparse_max_ratio"] <= d["a"] * 2 ** 1.5
    assert set(json.loads(dump.read_text())) == {"a", "alpha", "levels"}


@pytest.mark.parametrize("action,extra", [
    ("avg-norm", ["--vector", "1,0", "--cube", "1:1"]),
    ("reduce", ["--dual"]),
    ("apq", ["--alpha", "0.25", "--depth", "2"]),
    ("apq-reduced", ["--alpha", "0.25", "--depth", "1"]),
    ("cg", ["--vector-field", "VF", "--depth", "2"]),
])
def test_matw(files, capsys, action, extra):
    extra = [files["vf.json"] if a == "VF" else a for a in extra]
    code, out, err = run(["matw", action, "--weight", files["W.json"], "--p", "2"] + extra, capsys)
    assert code == 0, err
    d = json.loads(out)
    if action == "reduce":
        assert d["certified"] and d["lower"] >= 1


def test_verify_and_report(files, capsys):
    cfg = files["dir"] / "c.json"
    cfg.write_text(json.dumps({"schema": "varlex.config/1", "seed": 1,
                               "suites": {"weights": {"depth": 2, "grid": {"N": 16}}}}))
    out = files["dir"] / "rep.json"
    code, text, _ = run(["verify", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 0 and "PASSED" in text
    assert (files["dir"] / "rep.csv").exists()
    code, text, _ = run(["report", "--input", str(out), "-v"], capsys)
    assert code == 0 and "weights.trivial" in text and "measured" in text


def test_verify_failure_exit_one(files, capsys):
    cfg = files["dir"] / "c.json"
    cfg.write_text(json.dumps({"schema": "varlex.config/1", "tolerances": {"luxemburg.seconds": 0},
                               "suites": {"luxemburg": {"trials": 2, "grid": {"N": 16}}}}))
    code, text, _ = run(["verify", "--config", str(cfg), "--out", str(files["dir"] / "r.json")], capsys)
    assert code == 1 and "FAILED" in text
    code, _, _ = run(["report", "--input", str(files["dir"] / "r.json")], capsys)
    assert code == 1


def test_usage_errors_exit_two(files, capsys):
    code, _, err = run(["frobnicate"], capsys)
    assert code == 2 and "usage" in err
    code, _, err = run([], capsys)
    assert code == 2
    code, _, err = run(["norm", "--field", str(files["dir"] / "missing.json"), "--exponent", "2"], capsys)
    assert code == 2 and "missing.json" in err
    code, _, err = run(["norm", "--field", files["broken.json"], "--exponent", "2"], capsys)
    assert code == 2 and "line 3" in err
    code, _, err = run(["norm", "--field", files["bad.json"], "--exponent", "2"], capsys)
    assert code == 2
    code, _, err = run(["apply-op", "--op", "avg", "--field", files["f.json"]], capsys)
    assert code == 2 and "--cube" in err


def test_malformed_config_exit_two(files, capsys):
    cfg = files["dir"] / "c.json"
    cfg.write_text(json.dumps({"schema": "varlex.config/1", "suites": {"nope": {}}}))
    code, _, err = run(["verify", "--config", str(cfg)], capsys)
    assert code == 2 and "suites.nope" in err
    cfg.write_text('{\n"schema": "varlex.config/1",\n  "seed": ,\n}')
    code, _, err = run(["verify", "--config", str(cfg)], capsys)
    assert code == 2 and "line 3" in err
