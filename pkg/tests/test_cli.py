import json
from fractions import Fraction as F

import pytest

from binombias.cli import main, parse_function


def test_parse_function_minilanguage(tmp_path):
    assert parse_function("entropy")(0.5) == pytest.approx(0.34657359, abs=1e-6)
    assert parse_function("power:0.5")(0.25) == pytest.approx(0.5)
    assert parse_function("absdev")(F(1, 2)) == 0
    assert parse_function("xlog:1,1")(0.0) == 0
    assert parse_function("variance_gadget:10")(F(1, 10)) == 1
    assert parse_function("poly:0,0,1")(F(1, 3)) == F(1, 9)
    assert parse_function("affine:2,1")(F(1, 2)) == 2
    assert parse_function("sawtooth", n=10)(F(1, 2)) == 1
    csv = tmp_path / "n.csv"
    csv.write_text("x,y\n0,0\n1,1\n")
    assert parse_function(f"pwl:{csv}")(F(1, 2)) == F(1, 2)
    with pytest.raises(ValueError):
        parse_function("mystery")


def test_jackknife_curve_and_meta(tmp_path):
    out = tmp_path / "curve.csv"
    rc = main(["jackknife", "--function", "affine:2,1", "--delete", "1",
               "--r", "2", "--n", "10", "--grid", "101", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "p,bias"
    assert all(abs(float(l.split(",")[1])) < 1e-10 for l in lines[1:])
    meta = json.loads((tmp_path / "curve.meta.json").read_text())
    assert meta["command"] == "jackknife" and "version" in meta


def test_jackknife_rate_table(tmp_path):
    out = tmp_path / "rate.csv"
    rc = main(["jackknife", "--function", "poly:0,0,1", "--scheme", "half",
               "--n-list", "8,16,32,64", "--grid", "201", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,sup_abs_bias,argmax_p"
    assert len(lines) == 5


def test_bootstrap_trace_and_determinism(tmp_path):
    args = ["bootstrap", "--function", "absdev", "--n", "5", "--m-max", "50",
            "--stride", "10", "--grid", "101", "--bits", "128"]
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_text() == out2.read_text()
    lines = out1.read_text().splitlines()
    assert lines[0] == "m,sup_abs_bias,argmax_p,refined"
    assert lines[-1].startswith("limit,")


def test_bootstrap_limit_gap_flag(tmp_path):
    out = tmp_path / "lg.csv"
    rc = main(["bootstrap", "--function", "affine:1,0", "--n", "4",
               "--m-max", "10", "--limit-gap", "--out", str(out)])
    assert rc == 0
    row = out.read_text().splitlines()[1].split(",")
    assert float(row[1]) < 1e-30


def test_taylor_cmd(tmp_path):
    out = tmp_path / "ty.csv"
    rc = main(["taylor", "--function", "poly:0,0,0,0,1", "--k", "2",
               "--n-list", "10,20,40", "--grid", "51", "--out", str(out)])
    assert rc == 0
    meta = json.loads((tmp_path / "ty.meta.json").read_text())
    assert meta["rate_fit"]["slope"] == pytest.approx(-2, abs=0.4)


def test_modulus_cmd(tmp_path):
    out = tmp_path / "mod.csv"
    rc = main(["modulus", "--function", "entropy", "--r", "2",
               "--t-ladder", "4..7", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,value,ratio"
    vals = [float(l.split(",")[1]) for l in lines[1:]]
    assert vals == sorted(vals)


def test_entbounds_cmd(tmp_path):
    out = tmp_path / "ent.csv"
    rc = main(["entbounds", "--random", "25", "--seed", "7", "--out", str(out)])
    assert rc == 0
    meta = json.loads((tmp_path / "ent.meta.json").read_text())
    assert meta["all_hold_count"] == 25


def test_config_file_with_flag_override(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"function": "affine:1,0", "n": 4,
                                "m_max": 5, "limit_gap": True}))
    out = tmp_path / "o.csv"
    rc = main(["bootstrap", "--config", str(conf), "--n", "3",
               "--m-max", "5", "--out", str(out)])
    assert rc == 0


def test_invalid_config_errors(tmp_path):
    out = tmp_path / "x.csv"
    rc = main(["jackknife", "--function", "power:2.0", "--n", "10",
               "--out", str(out)])
    assert rc == 2


def test_verify_pass_and_tamper(tmp_path):
    from importlib import resources

    refs = json.loads(
        resources.files("binombias").joinpath("references/acceptance.json").read_text()
    )
    good = {k: refs[k] for k in ("vandermonde_random_200",
                                 "central_moment_recurrence_exact")}
    ref = tmp_path / "refs.json"
    ref.write_text(json.dumps(good))
    report = tmp_path / "rep.json"
    assert main(["verify", "--reference", str(ref), "--report", str(report)]) == 0
    assert all(v["pass"] for v in json.loads(report.read_text()).values())
    bad = dict(good)
    bad["vandermonde_random_200"] = {"value": 2.0, "tol": 0.1}
    ref.write_text(json.dumps(bad))
    assert main(["verify", "--reference", str(ref)]) == 1
    # subset filter
    assert main(["verify", "--reference", str(ref), "--only", "central"]) == 0
