"""Command-line interface: ``varlex <subcommand> ...``.

Exit codes: 0 success, 1 an asserted check failed, 2 bad usage or malformed input.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import harness
from .cz import cz_decompose, sparse_domination_check
from .exponents import ExponentField, constant_exponent, make_exponent
from .grid import DomainGrid, DyadicCube, GridField, enumerate_cubes
from .lebesgue import luxemburg_norm
from .matrix import (MatrixWeightField, avg_norm, christ_goldberg, matrix_apq_direct, matrix_apq_reduced,
                     reducing_operator)
from .operators import (dyadic_maximal, fractional_average, fractional_integral, fractional_maximal, sharp_maximal,
                        weighted_dyadic_maximal)
from .weights import (WeightVector, ap_variable, apq_constant, classical_ap, multi_apq_constant,
                      reverse_holder_report)


class InputError(Exception):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: line {e.lineno}: {e.msg}") from None


def _field(path) -> GridField:
    d = _load_json(path)
    try:
        return GridField.from_dict(d)
    except (KeyError, ValueError, TypeError) as e:
        raise InputError(f"{path}: bad field: {e}") from None


def _exponent(spec, grid: DomainGrid) -> ExponentField:
    """A file path, or a number for a constant exponent."""
    try:
        return constant_exponent(grid, float(spec))
    except ValueError:
        pass
    d = _load_json(spec)
    try:
        p = ExponentField.from_dict(d)
    except (KeyError, ValueError, TypeError) as e:
        raise InputError(f"{spec}: bad exponent: {e}") from None
    if p.grid != grid:
        raise InputError(f"{spec}: exponent grid {p.grid.to_dict()} differs from field grid {grid.to_dict()}")
    return p


def _cube(spec: str, n: int) -> DyadicCube:
    """``depth:j`` or ``depth:j1,j2`` for the unshifted family."""
    try:
        depth, corner = spec.split(":")
        j = tuple(int(x) for x in corner.split(","))
    except ValueError:
        raise InputError(f"cube {spec!r}: expected depth:j1[,j2]") from None
    if len(j) != n:
        raise InputError(f"cube {spec!r}: need {n} corner indices")
    return DyadicCube((0,) * n, int(depth), j)


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _family(grid, args):
    shifts = "all" if getattr(args, "shifts", "zero") == "all" else [0]
    return enumerate_cubes(grid, shifts, args.depth)


# ------------------------------------------------------------------ commands


def cmd_norm(args):
    f = _field(args.field)
    p = _exponent(args.exponent, f.grid)
    vals = f.values
    if args.weight:
        w = _field(args.weight).values
        if np.any(~(w > 0)):
            raise InputError(f"{args.weight}: weight must be positive")
        vals = vals * w
    r = luxemburg_norm(vals, p)
    _emit({"norm": r.norm, "modular_at_norm": r.modular_at_norm, "iterations": r.iterations,
           "bracket": list(r.bracket), "p_minus": p.p_minus, "p_plus": p.p_plus}, args.out)
    return 0


def cmd_weight_constant(args):
    ws = [_field(w) for w in args.weight]
    g = ws[0].grid
    fam = _family(g, args)
    kind = args.kind
    if kind == "ap":
        if args.p is None:
            raise InputError("--p is required")
        try:
            rep = classical_ap(ws[0], float(args.p[0]), fam)
        except ValueError:
            rep = ap_variable(ws[0], _exponent(args.p[0], g), fam)
        out = rep.to_dict(args.dump)
    elif kind == "rh":
        if args.r is None:
            raise InputError("--r is required")
        out = reverse_holder_report(ws[0], args.r, fam).to_dict(args.dump)
    elif kind in ("apq", "multi-apq"):
        if args.p is None or args.q is None:
            raise InputError("--p and --q are required")
        ps = [_exponent(p, g) for p in args.p]
        q = _exponent(args.q, g)
        if len(ps) != len(ws):
            raise InputError("give one --p per --weight")
        if kind == "apq":
            rep = apq_constant(ws[0], ps[0], q, args.alpha, fam)
        else:
            rep = multi_apq_constant(WeightVector(ws, ps, q), args.alpha, fam)
        out = rep.to_dict(args.dump)
    else:
        raise InputError(f"unknown kind {kind!r}")
    _emit(out, args.out)
    return 0


def cmd_apply_op(args):
    fs = [_field(f) for f in args.field]
    g = fs[0].grid
    op = args.op
    if op == "max":
        res = fractional_maximal(fs, args.alpha, _family(g, argparse.Namespace(shifts=args.shifts, depth=args.depth)))
    elif op == "dyadic-max":
        res = dyadic_maximal(fs, args.alpha, g, args.depth)
    elif op == "sharp":
        res = sharp_maximal(fs[0], args.delta, enumerate_cubes(g, [0], args.depth))
    elif op == "avg":
        if not args.cube:
            raise InputError("--cube is required for avg")
        res = fractional_average(fs, args.alpha, _cube(args.cube, g.n), g)
    elif op == "integral":
        res = fractional_integral(fs, args.alpha, g, allow_large=args.allow_large)
    elif op == "wdm":
        if not args.sigma:
            raise InputError("--sigma is required for wdm")
        res = weighted_dyadic_maximal(fs[0], _field(args.sigma[0]), enumerate_cubes(g, [0], args.depth))
    else:
        raise InputError(f"unknown op {op!r}")
    d = res.field.to_dict()
    d["operator"] = res.tag
    d["params"] = res.params
    _emit(d, args.out)
    return 0


def cmd_cz(args):
    fs = [_field(f) for f in args.field]
    g = fs[0].grid
    sig = [_field(s) for s in args.sigma] if args.sigma else None
    if sig is not None and len(sig) != len(fs):
        raise InputError("give one --sigma per --field")
    a = args.a if args.a is not None else 2.0 ** (len(fs) * g.n - args.alpha) + 1
    dec = cz_decompose(fs, sig, args.alpha, a, g, args.depth, verify=False)
    chk = dec.check()
    rep = sparse_domination_check(dec, fs, sig, args.alpha)
    summary = {"a": a, "k_range": dec.k_range, "checks": chk, "sparse_max_ratio": rep.max_ratio,
               "cubes_per_level": {str(lv.k): len(lv.cubes) for lv in dec.levels}}
    if args.dump:
        _emit(dec.to_dict(), args.dump)
    _emit(summary, args.out)
    return 0 if all(chk.values()) else 1


def _matrix(path) -> MatrixWeightField:
    d = _load_json(path)
    try:
        return MatrixWeightField.from_dict(d)
    except (KeyError, ValueError, TypeError) as e:
        raise InputError(f"{path}: bad matrix weight: {e}") from None


def cmd_matw(args):
    W = _matrix(args.weight)
    g = W.grid
    p = _exponent(args.p, g)
    if args.action == "avg-norm":
        v = np.array([float(x) for x in args.vector.split(",")]) if args.vector else np.eye(W.d)[0]
        if not np.any(v):
            raise InputError("vector must be nonzero")
        out = {"avg_norm": avg_norm(W, p, _cube(args.cube or "0:" + ",".join(["0"] * g.n), g.n), v,
                                    inverse=args.dual)}
    elif args.action == "reduce":
        op = reducing_operator(W, p, _cube(args.cube or "0:" + ",".join(["0"] * g.n), g.n), dual=args.dual)
        out = {"cube": op.cube.to_dict(), "tag": op.tag, "matrix": op.matrix.tolist(),
               "ellipsoid": op.ellipsoid.tolist(), "factor": op.factor, "lower": op.lower,
               "certified": op.certified}
    elif args.action in ("apq", "apq-reduced"):
        q = _exponent(args.q, g) if args.q else make_exponent(g, 1 / (1 / p.values - args.alpha / g.n))
        fam = enumerate_cubes(g, [0], args.depth)
        fn = matrix_apq_direct if args.action == "apq" else matrix_apq_reduced
        out = fn(W, p, q, args.alpha, fam).to_dict(args.dump)
    elif args.action == "cg":
        if not args.vector_field:
            raise InputError("--vector-field is required for cg")
        d = _load_json(args.vector_field)
        f = np.asarray(d["values"], dtype=float).reshape(g.shape + (W.d,))
        res = christ_goldberg(f, W, args.alpha, enumerate_cubes(g, [0], args.depth))
        out = res.to_dict()
    else:
        raise InputError(f"unknown matw action {args.action!r}")
    _emit(out, args.out)
    return 0


def _config_path(path):
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("varlex") / "configs" / p.name
    if bundled.is_file():
        return bundled
    raise InputError(f"{path}: no such config (also looked for a bundled {p.name})")


def cmd_verify(args):
    path = _config_path(args.config)
    try:
        cfg = harness.ExperimentConfig.from_json(Path(path).read_text())
    except harness.ConfigError as e:
        print(f"varlex: config error in {path}: {e}", file=sys.stderr)
        return 2
    if args.probes:
        cfg.probes = args.probes
    report = harness.run_verification(cfg, threads=args.threads)
    out = args.out or "varlex-report.json"
    csv_path = args.csv or str(Path(out).with_suffix(".csv"))
    report.write(out, csv_path)
    for line in report.summary_lines():
        print(line)
    print(f"{'PASSED' if report.passed else 'FAILED'}: {len(report.records)} checks, "
          f"{len(report.failures())} failed; report in {out}, {csv_path}")
    return 0 if report.passed else 1


def cmd_report(args):
    d = _load_json(args.input)
    checks = d.get("checks")
    if not isinstance(checks, list):
        raise InputError(f"{args.input}: not a verification report")
    for c in checks:
        print(f"{c['status'].upper():6s} {c['id']}: {c['anchor']}")
        if args.verbose:
            print("       measured:", json.dumps(c["measured"], sort_keys=True))
            print("       tolerance:", json.dumps(c["tolerance"], sort_keys=True))
    failed = [c for c in checks if c["status"] == "fail"]
    print(f"{len(checks)} checks, {len(failed)} failed")
    return 1 if failed else 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="varlex", description="Variable-exponent harmonic analysis toolkit.")
    sub = ap.add_subparsers(dest="command", metavar="{norm,weight-constant,apply-op,cz,matw,verify,report}")
    sub.required = True

    s = sub.add_parser("norm", help="Luxemburg norm of a field")
    s.add_argument("--field", required=True)
    s.add_argument("--exponent", required=True, help="exponent JSON file or a constant")
    s.add_argument("--weight")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_norm)

    s = sub.add_parser("weight-constant", help="weight constants over a dyadic family")
    s.add_argument("--kind", required=True, choices=["ap", "rh", "apq", "multi-apq"])
    s.add_argument("--weight", action="append", required=True)
    s.add_argument("--p", action="append", help="exponent file or constant; repeat for multi-apq")
    s.add_argument("--q")
    s.add_argument("--r", type=float)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--depth", type=int)
    s.add_argument("--shifts", choices=["zero", "all"], default="zero")
    s.add_argument("--dump", action="store_true", help="include per-cube values")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_weight_constant)

    s = sub.add_parser("apply-op", help="apply an operator to fields")
    s.add_argument("--op", required=True, choices=["max", "dyadic-max", "sharp", "avg", "integral", "wdm"])
    s.add_argument("--field", action="append", required=True)
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("--sigma", action="append")
    s.add_argument("--cube", help="depth:j1[,j2]")
    s.add_argument("--depth", type=int)
    s.add_argument("--shifts", choices=["zero", "all"], default="zero")
    s.add_argument("--allow-large", action="store_true")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_apply_op)

    s = sub.add_parser("cz", help="stopping-cube decomposition and sparse bound")
    s.add_argument("--field", action="append", required=True)
    s.add_argument("--sigma", action="append")
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--a", type=float)
    s.add_argument("--depth", type=int)
    s.add_argument("--dump", help="write the cube list as JSON")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_cz)

    s = sub.add_parser("matw", help="matrix weight quantities")
    s.add_argument("action", choices=["avg-norm", "reduce", "apq", "apq-reduced", "cg"])
    s.add_argument("--weight", required=True)
    s.add_argument("--p", required=True)
    s.add_argument("--q")
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--cube")
    s.add_argument("--vector", help="comma-separated direction")
    s.add_argument("--vector-field", help="JSON with values of shape grid + (d,)")
    s.add_argument("--dual", action="store_true", help="use |W^-1 v| instead of |W v|")
    s.add_argument("--depth", type=int, default=3)
    s.add_argument("--dump", action="store_true")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_matw)

    s = sub.add_parser("verify", help="run verification suites from a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--csv")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--probes", type=int)
    s.set_defaults(fn=cmd_verify)

    s = sub.add_parser("report", help="summarize a verification report")
    s.add_argument("--input", required=True)
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(fn=cmd_report)
    return ap


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except (InputError, harness.ConfigError) as e:
        print(f"varlex: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"varlex: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
