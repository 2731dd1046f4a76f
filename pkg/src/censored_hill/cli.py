"""Command-line entry point.

Subcommands::

    censored-hill estimate DATA.csv --k 200 [--premium] [--k-grid 10:400:10]
    censored-hill simulate [model flags] --n 30000 --k-grid 500 --reps 1000
    censored-hill limits --gamma1 0.6 --p 0.6 [--sweep-t0]
    censored-hill lemma1-check [model flags] --z 1,2,5 --t 1e-3,1e-4

JSON goes to stdout.  Auxiliary CSV files are written only when
``--out-dir`` is given, and only inside that directory.  Errors are reported
on stderr as one JSON line ``{"error": kind, "message": ...}`` with exit
status 2 (invalid input), 3 (estimation failure) or 4 (numerical failure).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import gausslimit, io, models, montecarlo
from .errors import DomainError, EstimationError, NumericError
from .estimators import asymptotic_ci, hill_plot, premium_estimate, sort_with_concomitants

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ESTIMATION = 3
EXIT_NUMERIC = 4


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int):
        super().__init__(message)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse prints usage and exits 2; keep the exit code but emit one JSON line.
    def error(self, message):
        raise CliError("validation", message, EXIT_VALIDATION)


# -- flag parsing ------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    """``"500"``, ``"10,20,50"`` or ``"10:100:10"`` (inclusive stop)."""
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            return list(range(start, stop + 1, step))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer list or start:stop:step range: {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=_seed, default=42, help="master seed (default 42)")
    p.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads (default: all cores; never changes results)")
    p.add_argument("--out-dir", type=Path, default=None,
                   help="directory for CSV/JSON side outputs; nothing is written without it")


def _add_model(p: argparse.ArgumentParser, prefix: str, family: str, gamma: float, what: str) -> None:
    g = p.add_argument_group(f"{prefix.upper()} model ({what})")
    g.add_argument(f"--{prefix}-family", choices=[f.value for f in models.Family], default=family)
    g.add_argument(f"--{prefix}-gamma", type=float, default=gamma)
    g.add_argument(f"--{prefix}-scale", type=float, default=1.0)
    g.add_argument(f"--{prefix}-burr-rho", type=float, default=None,
                   help="second-order parameter, Burr only (negative)")


def _add_setup(p: argparse.ArgumentParser) -> None:
    _add_model(p, "x", "frechet", 0.6, "variable of interest")
    _add_model(p, "y", "frechet", 0.9, "censoring variable")
    p.add_argument("--setup", type=Path, default=None,
                   help='JSON file {"model_x": {...}, "model_y": {...}}; overrides the model flags')


def _model_from_args(args, prefix: str) -> models.TailModel:
    rho = getattr(args, f"{prefix}_burr_rho")
    family = getattr(args, f"{prefix}_family")
    if family == "burr" and rho is None:
        rho = -1.0
    return models.TailModel(
        family=family,
        gamma=getattr(args, f"{prefix}_gamma"),
        scale=getattr(args, f"{prefix}_scale"),
        burr_rho=rho if family == "burr" else None,
    )


def _setup_from_args(args) -> models.CensoringSetup:
    if args.setup is not None:
        try:
            data = json.loads(args.setup.read_text())
        except OSError as exc:
            raise DomainError(f"cannot read setup file {args.setup}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise DomainError(f"setup file is not valid JSON: {exc}") from None
        return models.CensoringSetup.from_dict(data)
    return models.CensoringSetup(_model_from_args(args, "x"), _model_from_args(args, "y"))


def _out_dir(args) -> Path | None:
    if args.out_dir is None:
        return None
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DomainError(f"cannot create output directory {args.out_dir}: {exc.strerror}") from None
    return args.out_dir


def _histogram_rows(values, bins: int = 40):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return []
    counts, edges = np.histogram(v, bins=bins)
    return [[edges[i], edges[i + 1], int(c)] for i, c in enumerate(counts)]


# -- subcommands -------------------------------------------------------------

def cmd_estimate(args, out) -> int:
    if args.k is None and args.k_grid is None:
        raise DomainError("give --k, --k-grid or both")
    if not 0 < args.alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {args.alpha}")
    if args.premium and args.k is None:
        raise DomainError("--premium needs --k")
    outdir = _out_dir(args)
    srt = sort_with_concomitants(io.read_censored_csv(args.data))
    result: dict = {"n": srt.n}
    if args.k_grid is not None:
        fits = hill_plot(srt, args.k_grid, args.alpha)
        result["hill_plot"] = [
            {"k": k, "fit": None if f is None else f.to_dict()} for k, f in zip(args.k_grid, fits)
        ]
        if outdir is not None:
            rows = []
            for k, f in zip(args.k_grid, fits):
                if f is None:
                    rows.append([k, None, 0.0, None, None, None])
                else:
                    rows.append([k, f.gamma1_hat, f.p_hat, f.se, f.ci_low, f.ci_high])
            io.write_csv(outdir / "hill_plot.csv",
                         ["k", "gamma1_hat", "p_hat", "se", "ci_low", "ci_high"], rows)
    if args.k is not None:
        result["fit"] = asymptotic_ci(srt, args.k, args.alpha).to_dict()
        if args.premium:
            result["premium"] = premium_estimate(srt, args.k).to_dict()
    text = io.dumps_json(result)
    out.write(text)
    if outdir is not None:
        (outdir / "estimate.json").write_text(text)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    setup = _setup_from_args(args)
    config = montecarlo.ExperimentConfig(
        setup=setup, n=args.n, k_grid=args.k_grid, reps=args.reps,
        master_seed=args.seed, alpha=args.alpha,
    )
    outdir = _out_dir(args)
    report = montecarlo.run_estimation_experiment(config, threads=args.threads)
    text = io.dumps_json(report.to_dict())
    out.write(text)
    if outdir is not None:
        (outdir / "report.json").write_text(text)
        header, rows = report.csv_rows()
        io.write_csv(outdir / "report.csv", header, rows)
        for rec in report.records:
            io.write_csv(outdir / f"qq_k{rec.k}.csv", ["normal_quantile", "standardized"],
                         report.qq_pairs(rec.k))
            io.write_csv(outdir / f"hist_k{rec.k}.csv", ["bin_low", "bin_high", "count"],
                         _histogram_rows(rec.standardized))
    return EXIT_OK


def _default_theta(gamma1: float, p: float) -> float:
    # Frechet/Frechet pair with the requested tail indices.
    if p >= 1:
        return 0.5
    gamma2 = gamma1 * p / (1.0 - p)
    return models.theta(models.CensoringSetup(
        models.TailModel("frechet", gamma1), models.TailModel("frechet", gamma2)))


def cmd_limits(args, out) -> int:
    if not 0 < args.p <= 1:
        raise DomainError(f"p must lie in (0, 1], got {args.p}")
    if not args.gamma1 > 0:
        raise DomainError(f"gamma1 must be positive, got {args.gamma1}")
    theta = args.theta if args.theta is not None else _default_theta(args.gamma1, args.p)
    t0s = [args.t0, args.t0 / 2.0] if args.sweep_t0 else [args.t0]
    params = [gausslimit.LimitParams(args.gamma1, args.p, theta, t0, args.grid) for t0 in t0s]
    outdir = _out_dir(args)
    reports = [montecarlo.run_limit_experiment(pp, args.reps, args.seed, args.threads) for pp in params]
    result = reports[0].to_dict() if len(reports) == 1 else {"runs": [r.to_dict() for r in reports]}
    text = io.dumps_json(result)
    out.write(text)
    if outdir is not None:
        (outdir / "limits.json").write_text(text)
        for rep in reports:
            tag = f"t0_{rep.params.t0:g}"
            io.write_csv(outdir / f"hist_gamma_{tag}.csv", ["bin_low", "bin_high", "count"],
                         _histogram_rows(rep.values[0]))
            if rep.premium is not None:
                io.write_csv(outdir / f"hist_premium_{tag}.csv", ["bin_low", "bin_high", "count"],
                             _histogram_rows(rep.values[1]))
    return EXIT_OK


def subdist_rows(setup: models.CensoringSetup, zs, ts) -> list[list[float]]:
    rows = []
    for z in zs:
        target = setup.p * z ** (-1.0 / setup.gamma_z)
        for t in ts:
            ratio = models.subdist_ratio(setup, z, t)
            rows.append([z, t, ratio, target, abs(ratio - target) / target])
    return rows


def cmd_lemma1_check(args, out) -> int:
    setup = _setup_from_args(args)
    if any(z < 1 for z in args.z):
        raise DomainError("every z must be >= 1")
    if any(not 0 < t < 1 for t in args.t):
        raise DomainError("every t must lie in (0, 1)")
    outdir = _out_dir(args)
    rows = subdist_rows(setup, args.z, args.t)
    header = ["z", "t", "ratio", "target", "rel_error"]
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(repr(float(v)) for v in row) + "\n")
    if outdir is not None:
        io.write_csv(outdir / "lemma1.csv", header, rows)
    return EXIT_OK


# -- parser and dispatch -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="censored-hill", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="tail index (and premium) from a z,delta CSV file")
    p.add_argument("data", type=Path, help="CSV file with header z,delta")
    p.add_argument("--k", type=_positive_int, default=None, help="number of upper order statistics")
    p.add_argument("--k-grid", type=_int_list, default=None,
                   help="Hill-plot grid: list a,b,c or range start:stop:step")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--premium", action="store_true", help="also estimate the excess-of-loss premium")
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="Monte Carlo study of the estimators")
    _add_setup(p)
    p.add_argument("--n", type=_positive_int, default=30000)
    p.add_argument("--k-grid", type=_int_list, default=[500])
    p.add_argument("--reps", type=_positive_int, default=1000)
    p.add_argument("--alpha", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("limits", help="Monte Carlo study of the Gaussian limit functionals")
    p.add_argument("--gamma1", type=float, default=0.6)
    p.add_argument("--p", type=float, default=0.6)
    p.add_argument("--theta", type=float, default=None,
                   help="default: value of the Frechet/Frechet pair with these gamma1 and p")
    p.add_argument("--t0", type=float, default=0.005)
    p.add_argument("--grid", type=_positive_int, default=512, help="quadrature nodes")
    p.add_argument("--reps", type=_positive_int, default=20000)
    p.add_argument("--sweep-t0", action="store_true", help="also run at t0/2 and report both")
    _add_common(p)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("lemma1-check", help="tail ratio of the uncensored subdistribution")
    _add_setup(p)
    p.add_argument("--z", type=_float_list, default=[1.0, 2.0, 5.0])
    p.add_argument("--t", type=_float_list, default=[1e-3, 1e-4, 1e-5])
    _add_common(p)
    p.set_defaults(func=cmd_lemma1_check)
    return parser


def _fail(kind: str, message: str, code: int, err) -> int:
    line = json.dumps({"error": kind, "message": " ".join(str(message).split())})
    err.write(line + "\n")
    return code


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except CliError as exc:
        return _fail(exc.kind, str(exc), exc.code, err)
    except EstimationError as exc:
        return _fail("estimation", str(exc), EXIT_ESTIMATION, err)
    except NumericError as exc:
        return _fail("numeric", str(exc), EXIT_NUMERIC, err)
    except (DomainError, ValueError) as exc:
        return _fail("validation", str(exc), EXIT_VALIDATION, err)


if __name__ == "__main__":
    sys.exit(main())
