"""Command-line entry point: fixed points, trees, restriction matrices and verification suites.

Every command writes one JSON document (stdout or --out). Complex numbers are
{"re": str, "im": str}. Exit codes: 0 pass, 1 numerical failure, 2 configuration error.
"""

import argparse
import cmath
import json
import os
import random
import sys

from gmpy2 import mpfr

from . import envelope_x as ex
from . import envelope_xprime as ep
from . import mirror
from .errors import (
    DiagramOutOfRectangle,
    InvalidNK,
    InvolutionUndefined,
    PairNotConnected,
    StabEnvError,
    UnassignedSymbol,
)
from .rect_combinatorics import (
    SIDE_COMPLEMENT,
    SIDE_LAMBDA,
    GrassData,
    bij,
    check_diagram,
    diagrams,
    enumerate_trees,
    kappa,
)
from .theta_core import (
    DEFAULT_PRECISION,
    EllipticParams,
    four_term_residual,
    inversion_residual,
    quasiperiod_residual,
    random_log,
    three_term_residual,
)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CONFIG_ERRORS = (InvalidNK, DiagramOutOfRectangle, UnassignedSymbol, InvolutionUndefined,
                 PairNotConnected, ValueError)

SUITE_TOL = {"theta-identities": 1e-35, "mirror": 1e-8, "gkm": 1e-8,
             "cancellation": 1e-25, "mother-k1": 1e-30}


class ConfigError(StabEnvError):
    pass


def _fmt(x):
    return f"{float(x):.6e}"


def default_precision():
    raw = os.environ.get("STABENV_PRECISION")
    if raw is None:
        return DEFAULT_PRECISION
    try:
        bits = int(raw)
    except ValueError:
        raise ConfigError(f"STABENV_PRECISION must be an integer, got {raw!r}") from None
    if bits <= 0:
        raise ConfigError("STABENV_PRECISION must be positive")
    return bits


def parse_lambda(text):
    if text is None or text.strip() in ("", "0", "empty"):
        return ()
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--lambda expects comma separated integers, got {text!r}") from None


def elliptic_params(args):
    return EllipticParams((args.q_re, args.q_im), args.precision or default_precision())


def settings_from(args):
    return mirror.Settings(elliptic_params(args), args.epsilon, args.levels, args.guard_bits)


def grass(args):
    return GrassData(args.n, args.k)


# ----------------------------------------------------------------------------
# Commands


def cmd_fixed_points(args):
    g = grass(args)
    points = [{"index": i, "subset": list(bij(lam, g)), "diagram": list(lam)}
              for i, lam in enumerate(diagrams(g), start=1)]
    return {"command": "fixed-points", "n": g.n, "k": g.k, "points": points}, True


def cmd_trees(args):
    g = grass(args)
    lam = check_diagram(parse_lambda(args.lam), g)
    out = {"command": "trees", "n": g.n, "k": g.k, "lambda": list(lam)}
    for side, key in ((SIDE_LAMBDA, "trees"), (SIDE_COMPLEMENT, "complement_trees")):
        trees = enumerate_trees(lam, g, side)
        out[key] = [dict(t.to_json(), kappa=kappa(t)) for t in trees]
    out["pair_count"] = len(out["trees"]) * len(out["complement_trees"])
    return out, True


def cmd_matrix(args):
    g = grass(args)
    settings = settings_from(args)
    xtbl = ex.draw_x_table(g, args.seed, settings.ell)
    cx, cp = mirror.configs(g, xtbl, settings, args.seed)
    if args.side == "x":
        mat = ex.restriction_matrix_x(cx, args.seed)
    else:
        mat = ep.restriction_matrix_xprime(cp, args.seed)
        mat.metadata["x_parameters"] = xtbl.to_json()
    return dict(mat.to_json(), command="matrix"), True


def suite_theta(args):
    rng = random.Random(f"theta|{args.seed}")
    prec = args.precision or default_precision()
    worst = {"quasiperiod": mpfr(0), "inversion": mpfr(0), "three_term": mpfr(0), "four_term": mpfr(0)}
    for _ in range(args.samples):
        r, ang = rng.uniform(0.05, 0.5), rng.uniform(-3.14159, 3.14159)
        q = cmath.rect(r, ang)
        ell = EllipticParams(q, prec)
        with ell.context():
            logs = [random_log(rng) for _ in range(7)]
        worst["quasiperiod"] = max(worst["quasiperiod"], quasiperiod_residual(logs[0], ell))
        worst["inversion"] = max(worst["inversion"], inversion_residual(logs[0], ell))
        worst["three_term"] = max(worst["three_term"], three_term_residual(*logs[:5], ell))
        worst["four_term"] = max(worst["four_term"], four_term_residual(*logs, ell))
    tol = args.tol if args.tol is not None else SUITE_TOL["theta-identities"]
    passed = all(v <= tol for v in worst.values())
    return {"suite": "theta-identities", "samples": args.samples, "seed": args.seed, "tol": tol,
            "precision": prec, "worst": {k: _fmt(v) for k, v in worst.items()}, "pass": passed}, passed


def suite_mirror(args):
    g = grass(args)
    tol = args.tol if args.tol is not None else SUITE_TOL["mirror"]
    report = mirror.verify_mirror(g, args.seed, settings_from(args), tol)
    return dict(report.to_json(), suite="mirror"), report.passed


def suite_mother_k1(args):
    g = GrassData(args.n, 1)
    ell = elliptic_params(args)
    tol = args.tol if args.tol is not None else SUITE_TOL["mother-k1"]
    rows = mirror.mother_k1_residuals(g, args.seed, ell)
    entries = [{"side": side, "label": list(label), "residual": _fmt(res), "pass": bool(res <= tol)}
               for side, label, res in rows]
    passed = all(e["pass"] for e in entries)
    return {"suite": "mother-k1", "n": g.n, "k": 1, "seed": args.seed, "tol": tol,
            "entries": entries, "pass": passed}, passed


def suite_gkm(args):
    g = grass(args)
    settings = settings_from(args)
    tol = args.tol if args.tol is not None else SUITE_TOL["gkm"]
    xtbl = ex.draw_x_table(g, args.seed, settings.ell)
    entries = []
    for lam, mu, (i, j) in mirror.curve_connected_pairs(g):
        res = mirror.gkm_check_pair(lam, mu, xtbl, g, settings)
        entries.append({"lambda": list(lam), "mu": list(mu), "i": i, "j": j,
                        "residual": _fmt(res), "pass": bool(res <= tol)})
    passed = all(e["pass"] for e in entries)
    return {"suite": "gkm", "n": g.n, "k": g.k, "seed": args.seed, "tol": tol,
            "parameters": xtbl.to_json(), "pairs": entries, "pass": passed}, passed


def suite_cancellation(args):
    g = grass(args)
    ell = elliptic_params(args)
    tol = args.tol if args.tol is not None else SUITE_TOL["cancellation"]
    entries = []
    for lam, tb, box, ratio in mirror.all_cancellation_ratios(g, args.seed, ell):
        with ell.context():
            res = abs(ratio + 1)
        entries.append({"lambda": list(lam), "tree": tb.to_json(), "box": list(box),
                        "deviation": _fmt(res), "pass": bool(res <= tol)})
    passed = all(e["pass"] for e in entries)
    return {"suite": "cancellation", "n": g.n, "k": g.k, "seed": args.seed, "tol": tol,
            "cases": entries, "pass": passed}, passed


SUITES = {"theta-identities": suite_theta, "mirror": suite_mirror, "gkm": suite_gkm,
          "cancellation": suite_cancellation, "mother-k1": suite_mother_k1}


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    reports, ok = {}, True
    for name in names:
        report, passed = SUITES[name](args)
        reports[name] = report
        ok = ok and passed
    if args.suite != "all":
        return dict(reports[args.suite], command="verify"), ok
    return {"command": "verify", "suite": "all", "reports": reports, "pass": ok}, ok


# ----------------------------------------------------------------------------
# Parsing


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=4)
    common.add_argument("--k", type=int, default=2)
    common.add_argument("--q-re", default="0.1", help="real part of q (decimal string, parsed exactly)")
    common.add_argument("--q-im", default="0", help="imaginary part of q")
    common.add_argument("--precision", type=int, default=None,
                        help="working bits (default: STABENV_PRECISION or 256)")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--epsilon", type=float, default=ep.DEFAULT_EPSILON)
    common.add_argument("--levels", type=int, default=ep.DEFAULT_LEVELS)
    common.add_argument("--guard-bits", type=int, default=ep.DEFAULT_GUARD_BITS)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=100)
    common.add_argument("--lambda", dest="lam", default=None, help="diagram rows, e.g. 2,2")
    common.add_argument("--out", default=None, help="write JSON here instead of stdout")

    parser = argparse.ArgumentParser(prog="stabenv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fixed-points", parents=[common]).set_defaults(func=cmd_fixed_points)
    sub.add_parser("trees", parents=[common]).set_defaults(func=cmd_trees)
    mp = sub.add_parser("matrix", parents=[common])
    mp.add_argument("side", choices=["x", "xprime"])
    mp.set_defaults(func=cmd_matrix)
    vp = sub.add_parser("verify", parents=[common])
    vp.add_argument("suite", choices=list(SUITES) + ["all"])
    vp.set_defaults(func=cmd_verify)
    return parser


def _validate(args):
    try:
        mpfr(args.q_re), mpfr(args.q_im)
    except ValueError:
        raise ConfigError(f"q must be decimal numbers, got {args.q_re!r}, {args.q_im!r}") from None
    if args.samples < 1:
        raise ConfigError("--samples must be positive")
    if args.precision is not None and args.precision <= 0:
        raise ConfigError("--precision must be positive")
    if not 0 < args.epsilon <= 1e-4:
        raise ConfigError("--epsilon must lie in (0, 1e-4]")
    if args.levels < 2:
        raise ConfigError("--levels must be at least 2")


def _emit(doc, out):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
        if args.command != "verify" or args.suite != "theta-identities":
            grass(args)
            elliptic_params(args)
    except (ConfigError, *CONFIG_ERRORS) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc), "kind": "configuration"}, args.out)
        return EXIT_CONFIG
    try:
        doc, ok = args.func(args)
    except (ConfigError, *CONFIG_ERRORS) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc), "kind": "configuration"}, args.out)
        return EXIT_CONFIG
    except StabEnvError as exc:
        _emit({"error": type(exc).__name__, "message": str(exc), "kind": "numerical"}, args.out)
        return EXIT_FAIL
    _emit(doc, args.out)
    return EXIT_PASS if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
