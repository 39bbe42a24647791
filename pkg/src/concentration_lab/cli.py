"""``concentration-lab`` command line.

Exit status: 0 when every check passes, 1 when a violation is found,
2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds as B
from .lab import (ConfigError, ExperimentConfig, load_function, monte_carlo_tail, parse_t_grid,
                  reindex_experiment, rn_experiment, rows_to_csv, CSV_VERSION)
from .lipschitz import WeightedSpace, check_psi_dominance
from .martingale import check_vd_bound
from .measure import MeasureError, load_measure, measure_to_spec
from .metrics import MetricSpec
from .mixing import delta_matrix, gamma_matrix, gershgorin_bound, inf_norm, spectral_norm

OK, VIOLATION, USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _metric(text) -> MetricSpec:
    try:
        return MetricSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_measure(args) -> int:
    P = load_measure(args.spec)
    summary = {"n": P.n, "a": P.a, "kind": P.kind, "total_mass": float(P.p.sum()),
               "support_size": int(np.count_nonzero(P.p))}
    if args.explicit_out:
        Path(args.explicit_out).write_text(json.dumps(measure_to_spec(P, explicit=True)))
    _emit(_json(summary), args.out)
    return OK


def cmd_mixing(args) -> int:
    P = load_measure(args.measure)
    D = delta_matrix(P)
    M = gamma_matrix(D) if args.which == "gamma" else D
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "col", "value"])
    for r, c, v in M.to_rows():
        w.writerow([r, c, repr(v)])
    if args.csv:
        Path(args.csv).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    G = gamma_matrix(D)
    dn, gn = inf_norm(D), spectral_norm(G)
    summary = {"inf_norm": dn, "spectral_norm": gn, "gershgorin": gershgorin_bound(G),
               "R_n": gn / dn, "range_ok": D.satisfies_range(),
               "row_monotone": D.satisfies_row_monotonicity()}
    if args.json:
        Path(args.json).write_text(_json(summary))
    else:
        sys.stdout.write(_json(summary))
    return OK


def cmd_dominance(args) -> int:
    spec = args.metric
    a = args.a if args.a is not None else spec.m
    if a is None:
        raise _UsageError("--a is required for hamming metrics")
    spec.check_alphabet(a)
    space = WeightedSpace.grid(args.n, a) if spec.kind in ("dm", "lp") else \
        WeightedSpace.counting(args.n, a)
    rep = check_psi_dominance(spec, space, trials=args.trials, seed=args.seed)
    _emit(_json(rep.to_json()), args.out)
    return OK if rep.passed else VIOLATION


def cmd_martingale(args) -> int:
    P = load_measure(args.measure)
    f = load_function(args.f)
    if (f.n, f.a) != (P.n, P.a):
        raise ConfigError("function and measure live on different spaces")
    rep = check_vd_bound(P, f, args.metric)
    _emit(_json(rep.to_json()), args.out)
    return OK if rep.passed else VIOLATION


def _param_value(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    return float(text)


def cmd_bounds(args) -> int:
    params = {}
    for item in args.params:
        if "=" not in item:
            raise _UsageError(f"parameter {item!r} is not of the form k=v")
        k, v = item.split("=", 1)
        try:
            params[k] = _param_value(v)
        except ValueError:
            raise _UsageError(f"parameter {k} has non-numeric value {v!r}") from None
    curve = B.make_curve(args.curve, **params)
    t = parse_t_grid(args.t_grid)
    vals = np.atleast_1d(curve(t))
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "value", "vacuous"])
    for tk, vk in zip(t, vals):
        w.writerow([repr(float(tk)), repr(float(vk)), int(vk >= 1.0)])
    _emit(buf.getvalue(), args.out)
    return OK


def cmd_tail(args) -> int:
    if args.f is None and args.f_seed is None:
        raise _UsageError("give --f or --f-seed")
    cfg = ExperimentConfig(measure=args.measure, metric=args.metric_text,
                           t_grid=parse_t_grid(args.t_grid), function=args.f,
                           function_seed=args.f_seed, samples=args.samples, seed=args.seed,
                           output=None, convex=args.convex, force_sampling=args.force_sampling,
                           workers=args.workers)
    rep = monte_carlo_tail(cfg)
    _emit(rep.to_csv(), args.out)
    return VIOLATION if rep.any_violation else OK


def cmd_rn(args) -> int:
    rows = rn_experiment(args.n_min, args.n_max)
    _emit(rows_to_csv(rows), args.out)
    return OK


def cmd_reindex(args) -> int:
    perm = [int(v) for v in args.perm.split(",")] if args.perm else None
    rep = reindex_experiment(args.n, perm)
    _emit(_json(rep), args.out)
    same = np.allclose(rep["exact_tail_before"], rep["exact_tail_after"], atol=1e-12)
    return OK if same else VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="concentration-lab",
                description="Concentration-of-measure laboratory for finite sequence spaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("measure", help="validate a measure spec and summarize it")
    s.add_argument("spec")
    s.add_argument("--explicit-out", help="write the full density table here")
    s.add_argument("--out")
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("mixing", help="Delta/Gamma matrices as CSV plus a norm summary")
    s.add_argument("--measure", required=True)
    s.add_argument("--which", choices=("delta", "gamma"), default="delta")
    s.add_argument("--csv", help="matrix CSV path (default stdout)")
    s.add_argument("--json", help="norm summary path (default stdout)")
    s.set_defaults(func=cmd_mixing)

    s = sub.add_parser("dominance", help="randomized Phi <= Psi check")
    s.add_argument("--metric", type=_metric, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--a", type=int)
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_dominance)

    s = sub.add_parser("martingale", help="martingale-difference sup norms vs Lip * ||Delta||")
    s.add_argument("--measure", required=True)
    s.add_argument("--f", required=True)
    s.add_argument("--metric", type=_metric, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_martingale)

    s = sub.add_parser("bounds", help="evaluate a closed-form bound on a t grid")
    s.add_argument("--curve", required=True,
                   choices=("azuma", "main", "mcdiarmid", "marton", "samson"))
    s.add_argument("--params", nargs="*", default=[], metavar="k=v")
    s.add_argument("--t-grid", required=True, metavar="a:b:steps")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("tail", help="Monte Carlo tails against the applicable bounds")
    s.add_argument("--measure", required=True)
    s.add_argument("--metric", dest="metric_text", required=True)
    s.add_argument("--f")
    s.add_argument("--f-seed", type=int)
    s.add_argument("--t-grid", required=True, metavar="a:b:steps")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--convex", action="store_true", help="attest f is convex (enables samson)")
    s.add_argument("--force-sampling", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_tail)

    s = sub.add_parser("rn", help="R_n table for the row-homogeneous and forbidden families")
    s.add_argument("--n-min", type=int, default=4)
    s.add_argument("--n-max", type=int, default=12)
    s.add_argument("--out")
    s.set_defaults(func=cmd_rn)

    s = sub.add_parser("reindex", help="forbidden measure before and after relabeling")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--perm", help="comma-separated 1-based permutation")
    s.add_argument("--out")
    s.set_defaults(func=cmd_reindex)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (OSError, json.JSONDecodeError, MeasureError, ConfigError, ValueError, KeyError,
            TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
