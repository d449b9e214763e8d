"""Command-line driver: phi-series cache, fiber and Hecke experiments, formula tables.

Exit codes: 0 match, 1 mismatch, 2 error, 3 inconclusive."""
from __future__ import annotations

import argparse
import concurrent.futures
import functools
import hashlib
import json
import math
import os
import re
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

from .errors import PrecisionLoss, StabilizationFailure
from .formalmod import prime_of
from .geometry import (GroupElementApprox, action_bound_check, action_leading_term,
                       analyticity_domain_exp, fiber_truncation, hecke_experiment,
                       measure_fiber_pattern, qc_norm_exp,
                       qc_orbit_distribution, sample_point)
from .localfield import FieldTower, fmt_exp, parse_exp, teichmuller
from .periodmap import (PeriodPair, WholeDisk, compute_phi, derivative_norm_exp,
                        image_radius_exp, injectivity_radius_exp, phi_tail_bound)
from .series import TruncatedSeries1

SCHEMA_VERSION = 1
CACHE_FORMAT = 1
EXIT = {"match": 0, "mismatch": 1, "error": 2, "inconclusive": 3}


# ---------------------------------------------------------------------------
# config


def read_config(path) -> dict:
    """Plain key=value lines; '#' starts a comment."""
    out = {}
    if not path:
        return out
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# ---------------------------------------------------------------------------
# phi cache


def _enc(c: Fraction, p: int) -> str:
    """sign, base-p numerator digits and the pi-denominator exponent: '-101/3'."""
    num, den = c.numerator, c.denominator
    k = 0
    while den % p == 0:
        den //= p
        k += 1
    if den != 1:
        raise ValueError("coefficient has a denominator prime to p")
    sign = "-" if num < 0 else ""
    num = abs(num)
    digits = ""
    while num:
        digits = "0123456789abcdefghijklmnopqrstuvwxyz"[num % p] + digits
        num //= p
    return f"{sign}{digits or '0'}/{k}"


def _dec(s: str, p: int) -> Fraction:
    body, k = s.rsplit("/", 1)
    sign = -1 if body.startswith("-") else 1
    return Fraction(sign * int(body.lstrip("-"), p), p ** int(k))


def cache_path(cache_dir, p: int, f: int, u_trunc: int, precision) -> Path:
    return Path(cache_dir) / f"phi_p{p}_f{f}_u{u_trunc}_prec{str(precision).replace('/', '-')}.cache"


def serialize_phi(pp: PeriodPair, precision) -> str:
    p, f = prime_of(pp.q)
    header = {"format": CACHE_FORMAT, "p": p, "f": f, "u_trunc": pp.u_trunc,
              "precision": str(precision), "stabilization_degree": pp.stabilization_degree}
    body = {"phi0": [_enc(c, p) for c in pp.phi0.coeffs],
            "phi1": [_enc(c, p) for c in pp.phi1.coeffs]}
    text = json.dumps(header, sort_keys=True) + "\n" + json.dumps(body, sort_keys=True) + "\n"
    return text + "sha256 " + hashlib.sha256(text.encode()).hexdigest() + "\n"


def deserialize_phi(text: str, expect: dict | None = None) -> PeriodPair | None:
    """The cached pair, or None on a checksum failure, truncation or header mismatch."""
    lines = text.split("\n")
    if len(lines) < 4 or not lines[2].startswith("sha256 "):
        return None
    payload = lines[0] + "\n" + lines[1] + "\n"
    if hashlib.sha256(payload.encode()).hexdigest() != lines[2][7:].strip():
        return None
    try:
        header, body = json.loads(lines[0]), json.loads(lines[1])
    except json.JSONDecodeError:
        return None
    if header.get("format") != CACHE_FORMAT:
        return None
    if expect and any(header.get(k) != v for k, v in expect.items()):
        return None
    p, f, N = header["p"], header["f"], header["u_trunc"]
    q = p ** f
    phi0 = TruncatedSeries1([_dec(s, p) for s in body["phi0"]], N, Fraction(0), p)
    phi1 = TruncatedSeries1([_dec(s, p) for s in body["phi1"]], N, Fraction(0), p)
    phi0.tail = functools.partial(phi_tail_bound, q, 0)
    phi1.tail = functools.partial(phi_tail_bound, q, 1)
    return PeriodPair(phi0, phi1, header["stabilization_degree"], q)


def load_or_build(p: int, f: int, u_trunc: int, precision, cache_dir) -> tuple:
    """(PeriodPair, hit) using the on-disk cache when present."""
    q = p ** f
    if cache_dir is None:
        return compute_phi(q, u_trunc), False
    path = cache_path(cache_dir, p, f, u_trunc, precision)
    expect = {"p": p, "f": f, "u_trunc": u_trunc, "precision": str(precision)}
    if path.exists():
        try:
            pp = deserialize_phi(path.read_text(), expect)
        except (OSError, ValueError):
            pp = None
        if pp is not None:
            return pp, True
    pp = compute_phi(q, u_trunc)
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, prefix=".phi-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(serialize_phi(pp, precision))
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return pp, False


# ---------------------------------------------------------------------------
# element specs


_ELEM = re.compile(r"^(?:(zeta)\*)?pi(?:\^\((\d+)/(\d+)\))?(\*\(1\+pi\))?$")


def parse_element(spec: str, q: int):
    """'0', 'pi', 'pi^(a/b)', 'zeta*pi^(a/b)', 'pi^(a/b)*(1+pi)'."""
    s = spec.replace(" ", "")
    if s == "0":
        p, f = prime_of(q)
        return FieldTower.base(p, f).zero()
    m = _ELEM.match(s)
    if not m:
        raise ValueError(f"cannot parse element {spec!r}")
    a, b = (int(m.group(2)), int(m.group(3))) if m.group(2) else (1, 1)
    if b == 0 or a == 0:
        raise ValueError("exponent must be a positive fraction")
    g = math.gcd(a, b)
    a, b = a // g, b // g
    return sample_point(q, a, b, perturbed=bool(m.group(4)), zeta=1 if m.group(1) else 0)


# ---------------------------------------------------------------------------
# commands


def _report(exp_id, params, inputs, measured, predicted, verdict, t0, **extra) -> dict:
    rep = {"schema_version": SCHEMA_VERSION, "experiment": exp_id, "parameters": params,
           "inputs": inputs, "measured": measured, "predicted": predicted, "verdict": verdict,
           "wall_time": round(time.time() - t0, 3)}
    rep.update(extra)
    return rep


def _pairs(entries) -> list:
    return [[fmt_exp(e), c] for e, c in entries]


def _fmt_coeffs(series, limit=8) -> list:
    out = []
    for k, c in enumerate(series.coeffs):
        if c:
            out.append(f"{c}*u^{k}")
            if len(out) >= limit:
                break
    return out


def cmd_phi(args, cfg) -> int:
    p, f = args.p, args.f
    prime_of(p ** f)
    if args.udeg < 1:
        print("error: --udeg must be >= 1", file=sys.stderr)
        return EXIT["error"]
    try:
        pp, hit = load_or_build(p, f, args.udeg, args.precision, args.cache_dir)
    except StabilizationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT["error"]
    summary = {"schema_version": SCHEMA_VERSION, "p": p, "f": f, "u_trunc": pp.u_trunc,
               "cache_hit": hit, "phi0": _fmt_coeffs(pp.phi0), "phi1": _fmt_coeffs(pp.phi1)}
    _emit(summary, args)
    return EXIT["match"]


def run_fiber(q: int, gamma: str | None, u1_spec: str | None, udeg, precision, cache_dir) -> dict:
    t0 = time.time()
    if u1_spec is None:
        g = parse_exp(gamma)
        u1_spec = f"pi^({g.numerator}/{g.denominator})"
    params = {"q": q, "precision": str(precision)}
    inputs = {"gamma": gamma, "u1": u1_spec}
    try:
        u1 = parse_element(u1_spec, q)
        g = u1.valuation(strict=True)
        if gamma is not None and parse_exp(gamma) != g:
            raise ValueError("u1 does not have the requested valuation")
        N = udeg or fiber_truncation(g, q)
        p, f = prime_of(q)
        pp, _ = load_or_build(p, f, N, precision, cache_dir)
        params["u_trunc"] = N
        rep = measure_fiber_pattern(pp, u1)
    except PrecisionLoss as exc:
        return _report("fiber", params, inputs, None, None, "inconclusive", t0,
                       message=str(exc), suggestion="raise --udeg or the working precision")
    except (ValueError, ArithmeticError) as exc:
        return _report("fiber", params, inputs, None, None, "error", t0, message=str(exc))
    measured = {"profile": _pairs(rep.measured.entries), "interior_count": rep.interior_count,
                "distinguished_degree": rep.distinguished_degree,
                "dominating_valuation": fmt_exp(rep.dominating_valuation)}
    predicted = {"pattern": _pairs(rep.predicted.entries), "case": rep.predicted.case,
                 "interior_count": rep.predicted.interior_count}
    return _report("fiber", params, inputs, measured, predicted, rep.verdict, t0)


def run_hecke(q: int, u0_spec: str, n_max: int, precision) -> dict:
    t0 = time.time()
    params = {"q": q, "n_max": n_max, "precision": str(precision)}
    inputs = {"u0": u0_spec}
    try:
        u0 = parse_element(u0_spec, q)
        rep = hecke_experiment(u0, q, n_max=n_max, precision=Fraction(precision))
    except PrecisionLoss as exc:
        return _report("hecke", params, inputs, None, None, "inconclusive", t0,
                       message=str(exc), suggestion="raise --n-max or --precision")
    except (ValueError, ArithmeticError) as exc:
        return _report("hecke", params, inputs, None, None, "error", t0, message=str(exc))
    if rep.norms_match and rep.relation_holds:
        verdict = "match"
    elif not rep.norms_match or rep.relation_refuted:
        verdict = "mismatch"
    else:
        verdict = "inconclusive"           # some neighbour is too imprecise to decide
    measured = {"norms": _pairs(rep.norms), "neighbours": rep.neighbours,
                "relation_holds": rep.relation_holds,
                "consistent_relation_holds": rep.consistent_relation_holds}
    predicted = {"norms": _pairs(rep.predicted_norms), "relation": "[z:w] -> [pi w : z]"}
    return _report("hecke", params, inputs, measured, predicted, verdict, t0)


def _run_many(fn, jobs: list, n_jobs: int) -> list:
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(fn, *zip(*jobs)))


def _combine(reports: list) -> int:
    verdicts = [r["verdict"] for r in reports]
    if "error" in verdicts:
        return EXIT["error"]
    if "mismatch" in verdicts:
        return EXIT["mismatch"]
    if "inconclusive" in verdicts:
        return EXIT["inconclusive"]
    return EXIT["match"]


def cmd_fiber(args, cfg) -> int:
    gammas = args.gamma or []
    u1s = args.u1 or []
    jobs = [(args.q, g, None, args.udeg, args.precision, args.cache_dir) for g in gammas]
    jobs += [(args.q, None, u, args.udeg, args.precision, args.cache_dir) for u in u1s]
    if not jobs:
        print("error: give --gamma or --u1", file=sys.stderr)
        return EXIT["error"]
    reports = _run_many(run_fiber, jobs, args.jobs)
    _emit(reports[0] if len(reports) == 1 else reports, args)
    return _combine(reports)


def cmd_hecke(args, cfg) -> int:
    jobs = [(args.q, u, args.n_max, args.precision) for u in args.u0]
    reports = _run_many(run_hecke, jobs, args.jobs)
    _emit(reports[0] if len(reports) == 1 else reports, args)
    return _combine(reports)


def formulas_table(kind: str, q: int, s=None, case=None, n=None, gamma=None) -> dict:
    if kind == "qc":
        return {"case": case, "s": s, "q": q, "norm": fmt_exp(qc_norm_exp(case, s, q)),
                "distribution": _pairs(qc_orbit_distribution(case, s, q))}
    if kind == "action":
        p, f = prime_of(q)
        T = FieldTower.base(p, 2 * f)
        xi = teichmuller(T, T.residue_field.generator())
        g = GroupElementApprox("unit", n, xi)
        term = action_leading_term(g, q)
        omega = analyticity_domain_exp("unit", n, q)
        return {"n": n, "q": q, "E": term.exponent, "omega_unit": fmt_exp(omega),
                "omega_pi_D": fmt_exp(analyticity_domain_exp("pi_D", n, q)),
                "bound_at_3/2_omega": action_bound_check(g, omega * Fraction(3, 2), q)}
    if kind == "radii":
        g = parse_exp(gamma)
        inj = injectivity_radius_exp(g, q)
        out = {"gamma": fmt_exp(g), "q": q,
               "injectivity": ("whole disk " + fmt_exp(inj.radius_exp)) if isinstance(inj, WholeDisk)
               else fmt_exp(inj)}
        s_use = s
        if s_use is None:
            s_use = 1
            while Fraction(1, q ** (s_use + 2) + q ** (s_use + 1)) >= g:
                s_use += 2
        out["s"] = s_use
        for name, fn in (("derivative", derivative_norm_exp), ("image", image_radius_exp)):
            try:
                out[name] = fmt_exp(fn(g, q, s_use))
            except ValueError as exc:
                out[name] = f"out of range: {exc}"
        return out
    raise ValueError(f"unknown table {kind!r}")


def cmd_formulas(args, cfg) -> int:
    try:
        table = formulas_table(args.table, args.q, s=args.s, case=args.case, n=args.n,
                               gamma=args.gamma)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT["error"]
    _emit(table, args)
    return EXIT["match"]


# ---------------------------------------------------------------------------
# entry point


def _emit(obj, args):
    if getattr(args, "plain", False) and isinstance(obj, dict):
        for k, v in obj.items():
            print(f"{k}: {v}")
    else:
        print(json.dumps(obj, indent=2, sort_keys=False))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ltperiods", description=__doc__)
    ap.add_argument("--config", help="key=value file (precision, cache_dir, udeg, n_max, jobs)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--precision", default=None)
        sp.add_argument("--cache-dir", default=None)
        sp.add_argument("--jobs", type=int, default=None)
        sp.add_argument("--plain", action="store_true")

    sp = sub.add_parser("phi", help="compute and cache phi0, phi1")
    sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--f", type=int, default=1)
    sp.add_argument("--udeg", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_phi)

    sp = sub.add_parser("fiber", help="measure a fiber of the period map")
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--gamma", action="append", help="valuation a/b of u1 (repeatable)")
    sp.add_argument("--u1", action="append", help="element spec (repeatable)")
    sp.add_argument("--udeg", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_fiber)

    sp = sub.add_parser("hecke", help="classify height-1 neighbours and test the Hecke relation")
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--u0", action="append", required=True)
    sp.add_argument("--n-max", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_hecke)

    sp = sub.add_parser("formulas", help="closed-form tables")
    sp.add_argument("table", choices=["qc", "action", "radii"])
    sp.add_argument("--q", type=int, default=2)
    sp.add_argument("--s", type=int, default=None)
    sp.add_argument("--case", default="unram")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--gamma", default=None)
    sp.add_argument("--plain", action="store_true")
    sp.set_defaults(func=cmd_formulas)
    return ap


def _apply_config(args, cfg):
    defaults = {"precision": "4", "cache_dir": None, "udeg": None, "n_max": "16", "jobs": "1"}
    for key, dflt in defaults.items():
        if not hasattr(args, key) or getattr(args, key) is not None:
            continue
        val = cfg.get(key, dflt)
        if key in ("udeg", "n_max", "jobs") and val is not None:
            val = int(val)
        setattr(args, key, val)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT["error"] if exc.code else 0
    try:
        cfg = read_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT["error"]
    _apply_config(args, cfg)
    if args.cmd == "phi" and args.udeg is None:
        args.udeg = 32
    try:
        return args.func(args, cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT["error"]


if __name__ == "__main__":
    sys.exit(main())
