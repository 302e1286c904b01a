"""Command-line interface.

Exit codes: 0 success, 1 usage or model-file error, 2 solver failure,
3 an example reproduction missed its tolerance.
"""

from __future__ import annotations

import argparse
import sys
import warnings

from . import catalog, deriv, diagram
from .bifurcation import T_NONZERO, T_ZERO, classify, solve_bifurcation, solve_pitchfork
from .errors import ImplicitBifError
from .modelfile import ModelFileError, load_model
from .orbit import MULTISTART_RNG_SEED, ORBIT_TOL, find_periodic_orbits, solve_periodic_orbit
from .report import bifurcation_dict, dumps, fmt, orbit_dict, table

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_MISS = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _sign(text: str) -> int:
    if text in ("+1", "1", "+"):
        return 1
    if text in ("-1", "-"):
        return -1
    raise argparse.ArgumentTypeError("sign must be +1 or -1")


def _model(path):
    try:
        return load_model(path)
    except OSError as err:
        raise UsageError(f"cannot read model file: {err}") from err
    except ModelFileError as err:
        raise UsageError(f"{path}: {err}") from err


# ---------------------------------------------------------------------------


def cmd_orbit(args) -> int:
    spec, m = _model(args.model)
    report = {"command": "orbit", "model": spec.as_dict(),
              "inputs": {"alpha": args.alpha, "period": args.period, "tol": args.tol}}
    if args.seed is not None:
        seed = _floats(args.seed)
        if len(seed) != args.period:
            raise UsageError(f"--seed has {len(seed)} values, period is {args.period}")
        report["inputs"]["seed"] = seed
        orbits = [solve_periodic_orbit(m, args.period, args.alpha, seed, tol=args.tol)]
    else:
        report["inputs"]["multistart_seed"] = args.multistart_seed
        orbits = find_periodic_orbits(m, args.period, args.alpha,
                                      rng_seed=args.multistart_seed)
        if not orbits:
            raise ImplicitBifError("multistart found no orbit of that period")
    report["orbits"] = []
    for o in orbits:
        entry = orbit_dict(o)
        entry["d1"] = deriv.d1(m, o)[0]
        report["orbits"].append(entry)

    if args.json:
        print(dumps(report))
    else:
        rows = [[", ".join(fmt(v) for v in e["points"]), e["residual"], e["d1"]]
                for e in report["orbits"]]
        print(f"{spec.name}: period {args.period} at alpha = {fmt(args.alpha)}")
        print(table(["points", "residual", "d1"], rows))
    return EXIT_OK


def cmd_bif(args) -> int:
    spec, m = _model(args.model)
    seed = _floats(args.seed)
    if len(seed) != args.period + 1:
        raise UsageError(f"--seed needs {args.period} points and alpha ({args.period + 1} values)")
    if args.pitchfork:
        cand = solve_pitchfork(m, args.period, seed)
    else:
        cand = solve_bifurcation(m, args.period, args.sign, seed,
                                 allow_degenerate=args.allow_degenerate)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = classify(m, cand, args.t_zero, args.t_nonzero)
    report = {"command": "bif", "model": spec.as_dict(),
              "inputs": {"period": args.period, "sign": args.sign, "pitchfork": args.pitchfork,
                         "seed": seed, "t_zero": args.t_zero, "t_nonzero": args.t_nonzero}}
    report.update(bifurcation_dict(r))
    if args.json:
        print(dumps(report))
        return EXIT_OK

    o = cand.orbit
    print(f"{spec.name}: period {o.period}, sign {cand.sign:+d}")
    print(f"points  {', '.join(fmt(v) for v in o.points)}")
    print(f"alpha   {fmt(o.alpha)}")
    print(f"residual {fmt(o.residual)}  iterations {cand.iterations}")
    need = r.requirements()
    rows = [[c.name, c.value, "yes" if c.is_zero else "no", "yes" if c.is_nonzero else "no",
             need.get(c.name, "")] for c in r.conditions.values()]
    print(table(["condition", "value", "zero", "nonzero", "required"], rows))
    print(f"d1 {fmt(r.bundle.d1)}  schwarzian {fmt(r.bundle.schwarzian)}")
    for w in r.warnings:
        print(f"warning: {w}")
    print(f"kind: {r.kind}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    _, m = _model(args.model)
    try:
        grid = diagram.parse_grid(args.alpha)
    except ValueError as err:
        raise UsageError(str(err)) from err
    res = diagram.sweep(m, grid, args.x0, args.burn, args.keep, args.direction, args.workers)
    with open(args.out, "w", newline="\n", encoding="utf-8") as fh:
        diagram.write_csv(res, fh)
    print(f"wrote {sum(len(x) for x in res.orbits)} rows to {args.out} "
          f"({len(res.failed)} failed)")
    if args.transitions:
        rows = [[t.alpha, t.period_left, t.period_right] for t in diagram.transitions(res)]
        print(table(["alpha", "from", "to"], rows))
    return EXIT_OK


def cmd_examples(args) -> int:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = catalog.reproduce(args.which)
    if args.json:
        out = {"command": "examples", "which": args.which, "ok": rep.ok,
               "rows": [r.as_dict() for r in rep.rows],
               "reports": [dict(label=c.label, **bifurcation_dict(r)) for c, r in rep.reports]}
        if args.which == "euler":
            out["method_checks"] = catalog.euler_checks(rep)
        print(dumps(out))
    else:
        rows = [[r.label, r.expected, r.computed, r.diff, r.tol, "ok" if r.ok else "MISS"]
                for r in rep.rows]
        print(table(["quantity", "expected", "computed", "diff", "tol", ""], rows))
    return EXIT_OK if rep.ok else EXIT_MISS


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="implicitbif",
                 description="Bifurcations of periodic orbits of implicit maps F(x, y, alpha) = 0.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("orbit", help="solve for a periodic orbit")
    p.add_argument("--model", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--seed", help="comma-separated initial points; omit for multistart")
    p.add_argument("--tol", type=float, default=ORBIT_TOL)
    p.add_argument("--multistart-seed", type=int, default=MULTISTART_RNG_SEED)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("bif", help="locate and classify a bifurcation point")
    p.add_argument("--model", required=True)
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--sign", type=_sign, default=1)
    p.add_argument("--pitchfork", action="store_true",
                   help="also impose d_xx f^p = 0 (sign is then +1)")
    p.add_argument("--seed", required=True, help="p points then alpha, comma-separated")
    p.add_argument("--t-zero", type=float, default=T_ZERO)
    p.add_argument("--t-nonzero", type=float, default=T_NONZERO)
    p.add_argument("--allow-degenerate", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bif)

    p = sub.add_parser("sweep", help="bifurcation-diagram data as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--alpha", required=True, help="lo:hi:n")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--burn", type=int, default=500)
    p.add_argument("--keep", type=int, default=64)
    p.add_argument("--out", required=True)
    p.add_argument("--direction", choices=diagram.DIRECTIONS, default="forward")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--transitions", action="store_true",
                   help="print detected period changes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("examples", help="reproduce the built-in worked examples")
    p.add_argument("--which", choices=catalog.WHICH, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_examples)
    return ap


_VALUE_FLAGS = ("--seed", "--alpha", "--x0", "--sign")


def _join_negative_values(argv):
    """Turn ``--seed -0.5,1`` into ``--seed=-0.5,1`` so argparse accepts it."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        return args.func(args)
    except (UsageError, ValueError) as err:
        print(f"implicitbif: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ImplicitBifError, ArithmeticError) as err:
        print(f"implicitbif: solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
