import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ltperiods import cli
from ltperiods.cli import (EXIT, _dec, _enc, cache_path, deserialize_phi, load_or_build, main,
                           parse_element, read_config, serialize_phi)
from ltperiods.periodmap import compute_phi

F = Fraction


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


@given(st.integers(), st.integers(0, 30), st.sampled_from([2, 3, 5]))
def test_rational_codec_roundtrip(n, k, p):
    c = F(n, p ** k)
    assert _dec(_enc(c, p), p) == c


def test_codec_rejects_foreign_denominators():
    with pytest.raises(ValueError):
        _enc(F(1, 3), 2)


def test_serialize_roundtrip():
    pp = compute_phi(2, 40)
    back = deserialize_phi(serialize_phi(pp, "4"))
    assert back.phi0.coeffs == pp.phi0.coeffs and back.phi1.coeffs == pp.phi1.coeffs
    assert back.tail(0, 7) == pp.tail(0, 7)


def test_corruption_detected():
    text = serialize_phi(compute_phi(2, 40), "4")
    assert deserialize_phi(text.replace('"3/1"', '"5/1"', 1) if '"3/1"' in text
                           else text[:-5] + "0000\n") is None
    lines = text.split("\n")
    body = lines[1].replace("1", "0", 1)
    assert deserialize_phi("\n".join([lines[0], body] + lines[2:])) is None
    assert deserialize_phi(text[: len(text) // 2]) is None


def test_header_mismatch_rejected():
    text = serialize_phi(compute_phi(2, 40), "4")
    assert deserialize_phi(text, {"u_trunc": 41}) is None
    assert deserialize_phi(text, {"u_trunc": 40, "p": 2}) is not None


def test_cache_miss_then_hit_and_repair(tmp_path):
    pp, hit = load_or_build(2, 1, 24, "4", tmp_path)
    assert not hit
    pp2, hit2 = load_or_build(2, 1, 24, "4", tmp_path)
    assert hit2 and pp2.phi0.coeffs == pp.phi0.coeffs
    path = cache_path(tmp_path, 2, 1, 24, "4")
    path.write_text(path.read_text()[:-10] + "deadbeef\n")
    _, hit3 = load_or_build(2, 1, 24, "4", tmp_path)
    assert not hit3
    assert deserialize_phi(path.read_text()) is not None


def test_parse_element():
    assert parse_element("0", 2).is_zero()
    assert parse_element("pi", 2).valuation() == 1
    assert parse_element("pi^(2/8)", 2).valuation() == F(1, 4)
    assert parse_element("pi^(1/3)*(1+pi)", 2).valuation() == F(1, 3)
    z = parse_element("zeta*pi^(1/2)", 2)
    assert z.valuation() == F(1, 2)
    for bad in ("pi^(0/3)", "2*pi", "pi^1/2", ""):
        with pytest.raises(ValueError):
            parse_element(bad, 2)


def test_read_config(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nprecision = 6\n\njobs=2  # trailing\n")
    assert read_config(path) == {"precision": "6", "jobs": "2"}
    path.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        read_config(path)


def test_phi_command(capsys, tmp_path):
    code, out = run(capsys, "phi", "--udeg", "16", "--cache-dir", str(tmp_path))
    d = json.loads(out)
    assert code == 0 and not d["cache_hit"] and d["phi1"] == ["1*u^1", "1*u^4", "1/2*u^7"]
    code, out = run(capsys, "phi", "--udeg", "16", "--cache-dir", str(tmp_path))
    assert json.loads(out)["cache_hit"]


def test_bad_arguments_exit_2(capsys):
    assert main(["phi", "--udeg", "0"]) == EXIT["error"]
    assert main(["phi", "--p", "6"]) == EXIT["error"]
    assert main(["nosuchcommand"]) == EXIT["error"]
    assert main(["--config", "/nonexistent/file", "phi"]) == EXIT["error"]
    capsys.readouterr()


def test_config_supplies_defaults(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(f"cache_dir = {tmp_path / 'cache'}\nudeg = 12\n")
    code, out = run(capsys, "--config", str(cfg), "phi")
    assert code == 0 and json.loads(out)["u_trunc"] == 12
    assert cache_path(tmp_path / "cache", 2, 1, 12, "4").exists()


def test_fiber_command_match(capsys):
    code, out = run(capsys, "fiber", "--gamma", "1/2")
    d = json.loads(out)
    assert code == EXIT["match"] and d["verdict"] == "match" and d["schema_version"]


def test_fiber_command_bad_element(capsys):
    code, out = run(capsys, "fiber", "--u1", "pi^(x/2)")
    assert code == EXIT["error"] and json.loads(out)["verdict"] == "error"


def test_fiber_several_jobs(capsys):
    code, out = run(capsys, "fiber", "--gamma", "1/2", "--u1", "pi^(2/3)", "--jobs", "2")
    reports = json.loads(out)
    assert code == EXIT["match"] and [r["verdict"] for r in reports] == ["match", "match"]


def test_fiber_low_truncation_is_inconclusive(capsys):
    code, out = run(capsys, "fiber", "--gamma", "1/6", "--udeg", "10")
    assert code in (EXIT["inconclusive"], EXIT["error"])
    assert json.loads(out)["verdict"] in ("inconclusive", "error")


def test_formulas_tables(capsys):
    code, out = run(capsys, "formulas", "qc", "--s", "1")
    d = json.loads(out)
    assert code == 0 and d["norm"] == "1/3" and d["distribution"] == [["1/3", 2]]
    code, out = run(capsys, "formulas", "radii", "--gamma", "1/4")
    d = json.loads(out)
    assert d["injectivity"] == "1/2" and d["derivative"] == "1/2" and d["image"] == "1/1"
    code, out = run(capsys, "formulas", "action", "--n", "1")
    d = json.loads(out)
    assert d["E"] == 4 and d["omega_unit"] == "1/6" and d["bound_at_3/2_omega"] is True


def test_combine_exit_codes():
    mk = lambda v: {"verdict": v}
    assert cli._combine([mk("match"), mk("match")]) == 0
    assert cli._combine([mk("match"), mk("mismatch")]) == 1
    assert cli._combine([mk("inconclusive"), mk("match")]) == 3
    assert cli._combine([mk("error"), mk("mismatch")]) == 2


def test_hecke_command_at_zero(capsys):
    code, out = run(capsys, "hecke", "--u0", "0")
    d = json.loads(out)
    assert code == EXIT["match"] and d["measured"]["norms"] == [["1/3", 3]]
    assert all(n["relation"] is True for n in d["measured"]["neighbours"])
