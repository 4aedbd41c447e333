"""Command-line front end.

Every flag can also be set through an environment variable named
``SPIKED_WIGNER_<FLAG>`` (upper case, dashes replaced by underscores), e.g.
``SPIKED_WIGNER_QUAD_ORDER=200``. Explicit flags win over the environment.
"""
from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass
import io
import json
import math
import os
from pathlib import Path
import sys
import warnings

import numpy as np

from . import checks
from .correction import (DomainError, clt_params, correction_bundle, delta_rs,
                         detection_formulas, inject_fault)
from .detection import LlrSample, build_report
from .io import samples_to_csv
from .prior import parse_prior
from .rs_solver import lambda_c, rho_star, solve_qstar
from .scalar_channel import gauss_hermite
from .simulator import (DEFAULT_CAP, EnumerationCapError, McmcConfig, aggregate_overlaps,
                        exact_llr, llr_samples, mcmc_posterior, posterior_pair_correlations,
                        sample_instance)

ENV_PREFIX = "SPIKED_WIGNER_"
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    command: str
    prior: str
    lambdas: tuple
    n: int
    samples: int
    seed: int
    t: float
    out: str | None
    format: str
    quad_order: int


def run_config(args) -> RunConfig:
    lams = _lambda_grid(args) if hasattr(args, "lambda_min") or getattr(args, "lam", None) is not None else ()
    return RunConfig(args.command, getattr(args, "prior", ""), lams, getattr(args, "n", 0),
                     getattr(args, "samples", 0), getattr(args, "seed", 0), getattr(args, "t", 1.0),
                     getattr(args, "out", None), getattr(args, "format", "csv"),
                     getattr(args, "quad_order", 100))


class UsageError(ValueError):
    pass


def _lambda_grid(args) -> tuple:
    if getattr(args, "lam", None) is not None:
        return (float(args.lam),)
    if args.lambda_steps < 1:
        raise UsageError("--lambda-steps must be at least 1")
    if args.lambda_max < args.lambda_min:
        raise UsageError("--lambda-max must not be below --lambda-min")
    if args.lambda_steps == 1:
        return (float(args.lambda_min),)
    return tuple(float(x) for x in np.linspace(args.lambda_min, args.lambda_max, args.lambda_steps))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if not math.isfinite(v) else repr(v)
    return str(v)


def _emit_table(columns, rows, args) -> str:
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        text = buf.getvalue()
    else:
        def conv(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v.item() if isinstance(v, np.generic) else v
        text = json.dumps({"columns": list(columns),
                           "rows": [dict(zip(columns, map(conv, r))) for r in rows]},
                          indent=2) + "\n"
    _write(text, args.out)
    return text


def _write(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# commands -------------------------------------------------------------------

def cmd_rs_curve(args) -> int:
    prior = parse_prior(args.prior)
    quad = gauss_hermite(args.quad_order)
    rows = []
    for lam in _lambda_grid(args):
        s = solve_qstar(lam, prior, quad, grid_size=args.grid_size)
        rows.append((lam, s.qstar, s.phi_rs, prior.moments().m2 - s.qstar, s.near_degenerate))
    _emit_table(("lambda", "qstar", "phi_rs", "mmse", "near_degenerate"), rows, args)
    return 0


def cmd_correction_curve(args) -> int:
    prior = parse_prior(args.prior)
    quad = gauss_hermite(args.quad_order)
    rows = []
    for lam in _lambda_grid(args):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sol = solve_qstar(lam, prior, quad, grid_size=args.grid_size)
            b = correction_bundle(lam, prior, quad, solution=sol)
        try:
            d1 = delta_rs(lam, 1.0, b)
        except DomainError:
            d1 = None
        kl = clt_params(lam).mu if lam < 1 else None
        rows.append((lam, b.mu1, b.mu2, b.psi_rs, d1, kl, sol.near_degenerate, b.covered))
    _emit_table(("lambda", "mu1", "mu2", "psi_rs", "delta_rs@t=1", "kl_formula", "near_degenerate",
                 "covered"), rows, args)
    return 0


def cmd_detect_curve(args) -> int:
    grid = _lambda_grid(args)
    if any(lam >= 1 for lam in grid):
        raise UsageError("detection formulas need lambda < 1")
    rows = []
    for lam in grid:
        d = detection_formulas(lam)
        rows.append((lam, d.err_star, d.tv, d.type1, d.type2))
    _emit_table(("lambda", "err_star", "tv", "type1", "type2"), rows, args)
    return 0


def _lam_single(args) -> float:
    grid = _lambda_grid(args)
    if len(grid) != 1:
        raise UsageError("this command takes a single --lambda")
    return grid[0]


def cmd_simulate(args) -> int:
    prior = parse_prior(args.prior)
    lam = _lam_single(args)
    n, count, seed = args.n, args.samples, args.seed
    if count < 2:
        raise UsageError("--samples must be at least 2")
    try:
        planted = llr_samples(n, lam, prior, True, seed, count, cap=args.cap)
        null = llr_samples(n, lam, prior, False, seed, count, cap=args.cap)
    except EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failures = []
    # hard invariants: determinism and agreement of enumeration paths
    again = llr_samples(n, lam, prior, True, seed, min(count, 3), cap=args.cap)
    if not np.array_equal(again, planted[:again.size]):
        failures.append("determinism")
    if prior.size ** n <= 2 ** 16:
        inst = sample_instance(n, lam, prior, True, seed, 0)
        g = exact_llr(inst, prior, "gray_code", cap=args.cap).log_l
        if abs(g - exact_llr(inst, prior, "naive", cap=args.cap).log_l) >= 1e-10:
            failures.append("gray_vs_naive")
    tag = prior.tag
    lc = 1.0 if prior.kind == "rademacher" else (
        lambda_c(prior).lambda_c if prior.is_centered() else 0.0)
    report = build_report(LlrSample(planted, "planted", n, lam, tag, seed),
                          LlrSample(null, "null", n, lam, tag, seed),
                          prior_kind=prior.kind, lambda_c=lc)
    rows = [(k, v, "planted") for k, v in enumerate(planted)] + [(k, v, "null") for k, v in enumerate(null)]
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "samples.csv").write_text(samples_to_csv(rows))
    (out / "report.json").write_text(report.to_json() + "\n")
    cfg = run_config(args)
    (out / "run_config.json").write_text(json.dumps(cfg.__dict__, indent=2, sort_keys=True) + "\n")
    print(f"kl_hat={report.kl_hat:.6f}+-{report.kl_stderr:.6f} err_hat={report.err_hat:.4f} "
          f"-> {out / 'report.json'}")
    if failures:
        print("invariant failures: " + ", ".join(failures), file=sys.stderr)
        return 1
    return 0


def cmd_overlap(args) -> int:
    prior = parse_prior(args.prior)
    lam = _lam_single(args)
    stats = []
    for k in range(args.samples):
        inst = sample_instance(args.n, lam, prior, True, args.seed, k, t=args.t)
        if args.method == "exact":
            stats.append(posterior_pair_correlations(inst, prior))
        else:
            cfg = McmcConfig(sweeps=args.sweeps or 100 * args.n, burn_in=args.burn_in or 10 * args.n,
                             thinning=args.thinning or args.n, chains=args.chains)
            stats.append(mcmc_posterior(inst, prior, cfg))
    agg = stats[0] if len(stats) == 1 else aggregate_overlaps(stats)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        b = correction_bundle(lam, prior, gauss_hermite(args.quad_order))
    try:
        theory = delta_rs(lam, args.t, b)
    except DomainError:
        theory = None
    val, err = agg.scaled_r1s_sq()
    cols = ("n", "lambda", "t", "instances", "estimator", "mean_r1s", "mean_r1s_sq", "mean_abs_r1s",
            "mean_r12", "mean_r12_sq", "n_r1s_sq", "n_r1s_sq_err", "delta_rs")
    row = (args.n, lam, args.t, len(stats), agg.estimator, agg.mean_r1s, agg.mean_r1s_sq,
           agg.mean_abs_r1s, agg.mean_r12, agg.mean_r12_sq, val, err, theory)
    _emit_table(cols, [row], args)
    return 0


def cmd_thresholds(args) -> int:
    prior = parse_prior(args.prior)
    r = lambda_c(prior, gauss_hermite(args.quad_order), bracket_tol=args.bracket_tol)
    cols = ["prior", "lambda_c", "spectral_threshold", "gap_flag", "bracket_width", "centered"]
    row = [prior.tag, r.lambda_c, r.spectral_threshold, r.gap_flag, r.bracket_width, r.centered]
    if args.rho_star:
        cols.append("rho_star")
        row.append(rho_star(gauss_hermite(args.quad_order)))
    _emit_table(cols, [row], args)
    return 0


def cmd_verify(args) -> int:
    only = None
    if args.only:
        only = [int(x) for x in args.only.split(",")]
    if args.inject_fault:
        with inject_fault(args.inject_fault):
            results = _run_verify(only, args.quick)
    else:
        results = _run_verify(only, args.quick)
    return 0 if all(r.passed for r in results) else 1


def _run_verify(only, quick):
    results = []
    numbers = only or (checks.QUICK if quick else tuple(checks.CHECKS))
    for k in numbers:
        r = checks.CHECKS[k](quick=quick)
        print(r.line(), flush=True)
        results.append(r)
    ok, worst = checks.check_cavity_corrected()
    print(f"[{'PASS' if ok else 'FAIL'}] eigenstructure with left eigenvectors (1,-2,1), (1,-3,2): "
          f"max residual {worst:.1e}", flush=True)
    results.append(checks.CheckResult(0, "eigenstructure", ok, 0.0, 1.0, {}))
    return results


# parser ---------------------------------------------------------------------

def _add_common(p, lam_range=True, sim=False):
    p.add_argument("--prior", default="rademacher",
                   help="rademacher | sparse:<rho> | point:<v> | twopoint:<p>,<v+>,<v-> | custom:<v>:<w>,...")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="single lambda value")
    if lam_range:
        p.add_argument("--lambda-min", type=float, default=0.0)
        p.add_argument("--lambda-max", type=float, default=2.0)
        p.add_argument("--lambda-steps", type=int, default=21)
    p.add_argument("--quad-order", type=int, default=100, help="Gauss-Hermite nodes")
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")
    p.add_argument("--format", choices=FORMATS, default="csv")
    if sim:
        p.add_argument("--n", type=int, default=16)
        p.add_argument("--samples", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="enumeration cap (configurations)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="spiked-wigner", description=__doc__, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rs-curve", help="q*, phi_RS and MMSE over a lambda grid", formatter_class=fmt)
    _add_common(p)
    p.add_argument("--grid-size", type=int, default=2000)
    p.set_defaults(func=cmd_rs_curve)

    p = sub.add_parser("correction-curve", help="mu1, mu2, psi_RS and Delta_RS over lambda",
                       formatter_class=fmt)
    _add_common(p)
    p.add_argument("--grid-size", type=int, default=2000)
    p.set_defaults(func=cmd_correction_curve, lambda_max=0.95, lambda_steps=20)

    p = sub.add_parser("detect-curve", help="limiting test errors below threshold", formatter_class=fmt)
    _add_common(p)
    p.set_defaults(func=cmd_detect_curve, lambda_max=0.95, lambda_steps=20)

    p = sub.add_parser("simulate", help="exact LLR samples and a detection report", formatter_class=fmt)
    _add_common(p, lam_range=False, sim=True)
    p.set_defaults(func=cmd_simulate, lam=0.5)

    p = sub.add_parser("overlap", help="overlap statistics by enumeration or MCMC", formatter_class=fmt)
    _add_common(p, lam_range=False, sim=True)
    p.add_argument("--t", type=float, default=1.0, help="interpolation parameter")
    p.add_argument("--method", choices=("exact", "mcmc"), default="exact")
    p.add_argument("--sweeps", type=int, default=0, help="0 means 100 n")
    p.add_argument("--burn-in", type=int, default=0, help="0 means 10 n")
    p.add_argument("--thinning", type=int, default=0, help="single-site updates; 0 means n")
    p.add_argument("--chains", type=int, default=4)
    p.set_defaults(func=cmd_overlap, lam=0.5, samples=20)

    p = sub.add_parser("thresholds", help="reconstruction and spectral thresholds", formatter_class=fmt)
    _add_common(p, lam_range=False)
    p.add_argument("--bracket-tol", type=float, default=1e-6)
    p.add_argument("--rho-star", action="store_true", help="also report the critical sparsity")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("verify", help="run the acceptance checks", formatter_class=fmt)
    p.add_argument("--quick", action="store_true", help="fast subset (under a minute)")
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    p.add_argument("--inject-fault", default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def _apply_env(parser: argparse.ArgumentParser, argv) -> None:
    """Turn ``SPIKED_WIGNER_*`` variables into subparser defaults."""
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in sub_action.choices.values():
        updates = {}
        for action in sp._actions:
            if not action.option_strings or action.dest == "help":
                continue
            name = action.option_strings[-1].lstrip("-").upper().replace("-", "_")
            raw = os.environ.get(ENV_PREFIX + name)
            if raw is None:
                continue
            if isinstance(action, argparse._StoreTrueAction):
                updates[action.dest] = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                conv = action.type or str
                updates[action.dest] = conv(raw)
        sp.set_defaults(**updates)


def main(argv=None) -> int:
    parser = build_parser()
    _apply_env(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
