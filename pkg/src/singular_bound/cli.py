"""Command-line front end.

Subcommands: ``rlct`` (complexity tables), ``constants`` (loss moment
constants), ``certify`` (risk certificates), ``estimate-z`` (partition
estimates), ``gibbs-run`` (posterior chains), ``experiment`` (scaling
studies).  Exit codes: 0 success, 2 argument error, 3 constraint
violation, 4 diagnostic failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .bernstein import logistic_loss_constants, squared_loss_constants
from .config import config_help, load_config
from .errors import ConstraintError, DiagnosticError
from .experiment import run_certify, run_gibbs, run_scaling_experiment, run_thermo_grid
from .partition import (fit_rlct_from_partition, monomial_risk,
                        neg_log_z_quadrature, write_partition_csv)
from .rlct import (NormalCrossingChart, completion_regime, completion_rlct,
                   completion_rlct_closed_form, normal_crossing_rlct,
                   regular_model_rlct, relu_rlct_upper_bound)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONSTRAINT = 3
EXIT_DIAGNOSTIC = 4


def _emit(payload: dict):
    print(json.dumps(payload, sort_keys=True))


def _frac_dict(value: Fraction) -> dict:
    return {"num": value.numerator, "den": value.denominator}


def cmd_rlct(args) -> int:
    if args.target == "completion":
        d1, d2, h, r = args.dims
        pair = completion_rlct(d1, d2, h, r)
        closed = completion_rlct_closed_form(d1, d2, h, r)
        _emit({
            "lambda": _frac_dict(pair.lam), "m": pair.m,
            "regime": completion_regime(d1, d2, h, r),
            "closed_form": {"lambda": _frac_dict(closed.lam), "m": closed.m},
            "methods_agree": pair == closed,
            "discrepancy": _frac_dict(pair.lam - closed.lam),
        })
    elif args.target == "relu":
        lam = relu_rlct_upper_bound(args.dims)
        _emit({"lambda_bar": _frac_dict(lam)})
    elif args.target == "bic":
        (d,) = args.dims
        _emit({"lambda": _frac_dict(regular_model_rlct(d)), "m": 1})
    else:  # charts
        with open(args.chart_file) as fh:
            doc = json.load(fh)
        charts = [NormalCrossingChart(tuple(c["k"]), tuple(c["h"]))
                  for c in doc["charts"]]
        pair = normal_crossing_rlct(charts)
        _emit({"lambda": _frac_dict(pair.lam), "m": pair.m})
    return EXIT_OK


def cmd_constants(args) -> int:
    if args.loss == "squared":
        c = squared_loss_constants(args.params[0], args.params[1])
    else:
        c = logistic_loss_constants(args.params[0], args.params[1])
    _emit({"L": c.l_var, "b": c.b_scale, "omega_bar": c.omega_bar})
    return EXIT_OK


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_value("gibbs.seed", args.seed)
    return cfg


def cmd_certify(args) -> int:
    cfg = _load(args)
    cert, path = run_certify(cfg, args.out)
    _emit({**cert.to_json_dict(), "file": path})
    return EXIT_OK


def cmd_estimate_z(args) -> int:
    if args.mode == "quad":
        if len(args.k) != len(args.h):
            raise ConstraintError("--k and --h need the same number of exponents")
        estimates = [neg_log_z_quadrature(monomial_risk(args.k), tuple(args.h),
                                          beta=args.beta, n=n, points_per_axis=args.points)
                     for n in args.n]
        if args.csv:
            write_partition_csv(estimates, args.csv)
        payload = {"estimates": [{"n": e.n, "neg_log_z": e.neg_log_z}
                                 for e in estimates]}
        if args.fit:
            fit = fit_rlct_from_partition(estimates, include_loglog=args.loglog)
            payload["fit"] = json.loads(fit.to_json())
        _emit(payload)
        return EXIT_OK
    cfg = _load(args)
    out = run_thermo_grid(cfg, args.out)
    payload = {"csv": out["csv"]}
    if "fit" in out:
        payload["fit"] = json.loads(out["fit"].to_json())
    _emit(payload)
    return EXIT_OK


def cmd_gibbs_run(args) -> int:
    cfg = _load(args)
    out = run_gibbs(cfg, args.out)
    _emit({"chain_csv": out["chain_csv"], **out["summary"]})
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _load(args)
    out = run_scaling_experiment(cfg, threads=args.threads, out_dir=args.out)
    payload = {"dir": out["dir"], "rows": len(out["rows"]),
               "failures": out["n_failures"]}
    if "lambda_hat" in out:
        payload["lambda_hat"] = out["lambda_hat"]
    _emit(payload)
    return EXIT_OK if out["n_failures"] == 0 else EXIT_DIAGNOSTIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singular-bound",
        description="Risk certificates and complexity diagnostics for Gibbs "
                    "posteriors in singular models.",
        epilog="Config keys:\n" + config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--seed", type=int, default=None,
                        help="override gibbs.seed from the config")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for grid experiments")
    parser.add_argument("--out", default=None, help="override the output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rlct = sub.add_parser("rlct", help="complexity pairs and upper bounds")
    rlct_sub = p_rlct.add_subparsers(dest="target", required=True)
    p_comp = rlct_sub.add_parser("completion", help="matrix completion (d1 d2 H r)")
    p_comp.add_argument("dims", type=int, nargs=4, metavar=("D1", "D2", "H", "R"))
    p_relu = rlct_sub.add_parser("relu", help="true layer widths")
    p_relu.add_argument("dims", type=int, nargs="+")
    p_bic = rlct_sub.add_parser("bic", help="regular-model d/2")
    p_bic.add_argument("dims", type=int, nargs=1)
    p_charts = rlct_sub.add_parser("charts", help="normal-crossing chart file (JSON)")
    p_charts.add_argument("chart_file")

    p_const = sub.add_parser("constants", help="loss moment constants (L, b, cap)")
    p_const.add_argument("loss", choices=("squared", "logistic"))
    p_const.add_argument("params", type=float, nargs=2,
                         metavar=("BOUND", "SIGMA_OR_TAU"))

    p_cert = sub.add_parser("certify", help="evaluate a risk certificate")
    p_cert.add_argument("config")

    p_z = sub.add_parser("estimate-z", help="partition function estimates")
    z_sub = p_z.add_subparsers(dest="mode", required=True)
    p_quad = z_sub.add_parser("quad", help="deterministic quadrature, monomial risk")
    p_quad.add_argument("--k", type=int, nargs="+", required=True)
    p_quad.add_argument("--h", type=int, nargs="+", required=True)
    p_quad.add_argument("--beta", type=float, default=1.0)
    p_quad.add_argument("--n", type=float, nargs="+", required=True)
    p_quad.add_argument("--points", type=int, default=128)
    p_quad.add_argument("--fit", action="store_true")
    p_quad.add_argument("--loglog", action="store_true")
    p_quad.add_argument("--csv", default=None)
    p_thermo = z_sub.add_parser("thermo", help="thermodynamic integration from a config")
    p_thermo.add_argument("config")

    p_gibbs = sub.add_parser("gibbs-run", help="sample one Gibbs posterior chain set")
    p_gibbs.add_argument("config")

    p_exp = sub.add_parser("experiment", help="scaling study over grid.n")
    p_exp.add_argument("config")
    return parser


_HANDLERS = {
    "rlct": cmd_rlct,
    "constants": cmd_constants,
    "certify": cmd_certify,
    "estimate-z": cmd_estimate_z,
    "gibbs-run": cmd_gibbs_run,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConstraintError as exc:
        if args.command == "rlct":
            print(f"usage error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"constraint violation: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DiagnosticError as exc:
        print(f"diagnostic failure: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC


if __name__ == "__main__":
    sys.exit(main())
