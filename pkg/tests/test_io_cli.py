import json
import math
from fractions import Fraction

import numpy as np
import pytest

from qcd import example as ex
from qcd import io
from qcd import qlinalg as ql
from qcd import rand
from qcd.cli import main
from qcd.config import RunConfig


def test_parse_number_exact():
    assert io.parse_number("2^-50") == Fraction(1, 2**50)
    assert io.parse_float("2^-5") == 0.03125
    assert io.parse_number("1/4") == Fraction(1, 4)
    assert io.parse_number("0.1") == Fraction(1, 10)
    with pytest.raises(io.InputError):
        io.parse_number("two")


def test_operator_round_trip_float_and_mp():
    x = rand.random_density(3, 1)
    assert np.array_equal(io.operator_from_json(json.loads(io.dumps(io.operator_to_json(x)))), x)
    hp = ql.to_hp(x)
    back = io.operator_from_json(json.loads(io.dumps(io.operator_to_json(hp))))
    assert ql.is_hp(back)
    assert np.allclose(ql.to_float(back), x, atol=0, rtol=0)


def test_operator_errors():
    with pytest.raises(io.InputError):
        io.operator_from_json({"re": [[1, 0]], "dims": [2, 2]})
    with pytest.raises(io.InputError):
        io.operator_from_json([1, 2])


def test_channel_kinds():
    ch = rand.random_channel(2, 2, 3)
    again = io.channel_from_json(io.channel_to_json(ch))
    assert np.array_equal(again.choi, ch.choi)
    kr = io.channel_from_json({"kind": "kraus", "kraus": [io.operator_to_json(k) for k in ch.kraus]})
    assert np.allclose(kr.choi, ch.choi)
    f = io.channel_from_json({"kind": "example", "which": "F", "kappa": "2^-50"})
    assert f.hp
    with pytest.raises(io.InputError):
        io.channel_from_json({"kind": "nope"})


def test_trace_round_trip():
    tr = ex.simulate_example(2.0**-50)
    back = io.trace_from_json(json.loads(io.dumps(io.trace_to_json(tr))))
    assert back.gains == pytest.approx(tr.gains, abs=1e-12)
    assert back.ell == tr.ell


def test_jsonable_non_finite():
    assert io.jsonable({"a": math.inf, "b": [-math.inf, math.nan], "c": np.float64(1.5)}) == \
        {"a": "inf", "b": ["-inf", "nan"], "c": 1.5}


def test_broken_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"re": [[1, 0],\n [0 1]]}')
    with pytest.raises(io.InputError) as info:
        io.load_file(str(p))
    assert info.value.line == 2


def test_config_merge_and_range(tmp_path):
    cfg = RunConfig().merged({"seed": 7, "tol": None})
    assert cfg.seed == 7 and cfg.tol == RunConfig().tol
    with pytest.raises(ValueError):
        RunConfig(tol=1e-2)
    with pytest.raises(ValueError):
        RunConfig().merged({"bogus": 1})
    p = tmp_path / "c.json"
    p.write_text('{"threads": 2, "tol": 1e-8}')
    assert RunConfig.from_file(str(p)) == RunConfig(threads=2, tol=1e-8)


# --------------------------------------------------------------------- CLI


def _write(path, obj):
    path.write_text(io.dumps(obj))
    return str(path)


@pytest.fixture
def states(tmp_path):
    r, s = rand.random_density(2, 1), rand.random_density(2, 2)
    return _write(tmp_path / "r.json", io.operator_to_json(r)), _write(tmp_path / "s.json", io.operator_to_json(s))


def test_cli_dh(states, capsys):
    r, s = states
    assert main(["dh", "--rho", r, "--sigma", s, "--eps", "0.1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert {"beta", "dh_bits", "test"} <= out.keys()
    assert main(["dh", "--rho", r, "--sigma", s, "--eps", "0.1", "--method", "neyman-pearson"]) == 0
    np_out = json.loads(capsys.readouterr().out)
    assert np_out["dh_bits"] == pytest.approx(out["dh_bits"], abs=1e-6)


def test_cli_divergence(states, capsys):
    r, s = states
    assert main(["divergence", "--rho", r, "--sigma", s, "--alpha", "1.5", "--eps", "0.2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["relative_entropy"] <= out["petz_renyi"] <= out["dmax"]
    assert out["dmax_smoothed"]["value"] <= out["dmax"]


def test_cli_channel_dh(tmp_path, capsys):
    e, f = rand.random_channel(2, 2, 1, real=True), rand.random_channel(2, 2, 2, real=True)
    pe, pf = _write(tmp_path / "e.json", io.channel_to_json(e)), _write(tmp_path / "f.json", io.channel_to_json(f))
    assert main(["channel-dh", "--e", pe, "--f", pf, "--n", "2", "--eps", "0.2"]) == 0
    direct = json.loads(capsys.readouterr().out)
    assert main(["channel-dh", "--e", pe, "--f", pf, "--n", "2", "--eps", "0.2", "--reduced"]) == 0
    reduced = json.loads(capsys.readouterr().out)
    assert reduced["dh_bits"] == pytest.approx(direct["dh_bits"], abs=1e-5)


def test_cli_orbits(capsys):
    assert main(["orbits", "--d", "2", "--n", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "representative,size"
    assert len(lines) - 1 == math.comb(5, 2)
    assert sum(int(line.split(",")[1]) for line in lines[1:]) == 16


def test_cli_adaptive_sim_and_bound(tmp_path, capsys):
    trace = str(tmp_path / "tr.json")
    assert main(["adaptive-sim", "--example-kappa", "2^-50", "--out", trace]) == 0
    assert main(["bound", "--trace", trace, "--m", "100000", "--alpha-p", "2^-5", "--corollary4"]) == 0
    out = json.loads(capsys.readouterr().out)
    row = ex.figure3_rows(m_grid=[100000])[0]
    assert out["rhs_sqrt"] == pytest.approx(row.yellow, abs=1e-9)
    assert out["corollary4"]["rhs"] <= out["rhs_general"]


def test_cli_adaptive_sim_from_files(tmp_path, capsys):
    e, f = rand.random_channel(2, 2, 1), rand.random_channel(2, 2, 2)
    strat = rand.random_strategy(3, seed=3)
    args = ["adaptive-sim", "--e", _write(tmp_path / "e.json", io.channel_to_json(e)),
            "--f", _write(tmp_path / "f.json", io.channel_to_json(f)),
            "--strategy", _write(tmp_path / "s.json", io.strategy_to_json(strat))]
    assert main(args) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == 3 and len(out["gains"]) == 3


def test_cli_refuses_zero_kappa(tmp_path, capsys):
    trace = str(tmp_path / "tr0.json")
    assert main(["adaptive-sim", "--example-kappa", "0", "--out", trace]) == 0
    assert main(["bound", "--trace", trace, "--m", "100", "--alpha-p", "0.1"]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "InfiniteMaxDivergenceError"


def test_cli_figure3_deterministic(tmp_path):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    args = ["figure3", "--kappa", "2^-50", "--alpha-p", "2^-5", "--points", "12"]
    assert main(args + ["--out", a]) == 0
    assert main(args + ["--out", b, "--threads", "2"]) == 0
    text = open(a).read()
    assert text == open(b).read()
    lines = text.strip().splitlines()
    assert lines[0] == "m,black,yellow,red,green,eq38_ok" and len(lines) == 13
    assert lines[1].split(",")[1] == "25.2075187"


def test_cli_errors(tmp_path, capsys):
    assert main(["nonsense"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "UsageError"
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  oops }")
    assert main(["dh", "--rho", str(bad), "--sigma", str(bad), "--eps", "0.1"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "InputError" and err["line"] == 2
    assert main(["--tol", "1", "selftest"]) == 1
    assert "tol" in json.loads(capsys.readouterr().err)["message"]


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    out = tmp_path / "orbits.csv"
    cfg.write_text(json.dumps({"out": str(out)}))
    assert main(["orbits", "--d", "2", "--n", "1", "--config", str(cfg)]) == 0
    assert out.read_text().startswith("representative,size")


def test_cli_selftest(capsys):
    assert main(["selftest"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
