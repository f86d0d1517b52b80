"""Command line interface.

Subcommands: simulate, kernel, estimate, mc, laplace, spectral, regression,
conditions.  Configuration precedence: CLI flags > --config file > defaults.
Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .cov import increment_covariance, simulate_path
from .estimator import drift_mle, oracle_mle
from .exceptions import NumericalError
from .grid import TimeGrid
from .harness import (
    SCHEMA_VERSION,
    format_csv,
    load_config_file,
    make_config,
    run_bracket_sweep,
    run_campaign,
    run_conditions,
    run_laplace_sweep,
    _atomic_write,
)
from .kernel import projection_kernel
from .spectral import build_operator, eigen_asymptotics, perturbed_endpoint_scaling
from .validation import check_uniform_times


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="key = value config file")
    parser.add_argument("--h", type=float, default=None, help="Hurst parameter in (0, 1)")
    parser.add_argument("--theta", type=float, default=None, help="drift parameter")
    parser.add_argument("--T", type=float, default=None, dest="horizon", help="time horizon")
    parser.add_argument("--n", type=int, default=None, help="grid steps")
    parser.add_argument("--reps", type=int, default=None, help="number of replications")
    parser.add_argument("--seed", type=int, default=None, help="campaign seed")
    parser.add_argument("--x0", type=float, default=None, help="initial condition")
    parser.add_argument("--jobs", type=int, default=None, help="parallel replications")
    parser.add_argument("--out", type=str, default=None, help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfou",
        description="Drift estimation and asymptotics for the mixed fractional "
                    "Ornstein-Uhlenbeck process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one path, write t,v,x CSV")
    _add_common(p)

    p = sub.add_parser("kernel", help="dump bracket, slope and reciprocal slope")
    _add_common(p)
    p.add_argument("--g-matrix", type=str, default=None,
                   help="also write the lower-triangular kernel weights to this file")

    p = sub.add_parser("estimate", help="estimate the drift of a path")
    _add_common(p)
    p.add_argument("--path", type=str, default=None,
                   help="CSV with t,x columns; omitted: simulate one path first")
    p.add_argument("--method", type=str, default=None, choices=("canonical", "oracle"))

    p = sub.add_parser("mc", help="Monte Carlo campaign for the drift MLE")
    _add_common(p)
    p.add_argument("--method", type=str, default=None, choices=("canonical", "oracle"))

    p = sub.add_parser("regression", help="Monte Carlo campaign for the trend MLE")
    _add_common(p)

    p = sub.add_parser("laplace", help="Riccati Laplace transform sweep")
    _add_common(p)
    p.add_argument("--mu", type=str, default=None, help="comma separated mu values")
    p.add_argument("--sweep-T", type=str, default=None, dest="sweep_horizon",
                   help="comma separated horizons")
    p.add_argument("--mc", action="store_true", help="attach Monte Carlo estimates")

    p = sub.add_parser("spectral", help="operator eigen fits and perturbed-solve sweep")
    _add_common(p)

    p = sub.add_parser("conditions", help="long-horizon condition diagnostics")
    _add_common(p)
    p.add_argument("--sweep-T", type=str, default=None, dest="sweep_horizon",
                   help="comma separated horizons for the slope table")
    return parser


def _config_from_args(args, mode: str):
    file_values = load_config_file(args.config) if args.config else None
    overrides = {
        "h": args.h,
        "theta": args.theta,
        "horizon": args.horizon,
        "n": args.n,
        "reps": args.reps,
        "seed": args.seed,
        "x0": args.x0,
        "jobs": args.jobs,
        "out": args.out,
        "mode": mode,
    }
    if getattr(args, "method", None) is not None:
        overrides["method"] = args.method
    if getattr(args, "mu", None) is not None:
        overrides["mu_list"] = tuple(float(v) for v in args.mu.split(",") if v.strip())
    if getattr(args, "sweep_horizon", None) is not None:
        overrides["horizon_list"] = tuple(
            float(v) for v in args.sweep_horizon.split(",") if v.strip()
        )
    if getattr(args, "mc", False):
        overrides["mc_laplace"] = True
    return make_config(file_values, **overrides)


def _out_dir(cfg) -> Path:
    if cfg.out is None:
        raise ValueError("--out is required for this subcommand")
    return Path(cfg.out)


def _write_meta(cfg, name: str, extra: dict | None = None) -> None:
    """Every output file set carries the full config and schema version."""
    payload = {"schema_version": SCHEMA_VERSION, "config": asdict(cfg)}
    if extra:
        payload.update(extra)
    _atomic_write(_out_dir(cfg) / f"{name}_meta.json",
                  json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _cmd_simulate(args) -> None:
    cfg = _config_from_args(args, "simulate")
    cov = increment_covariance(TimeGrid(cfg.horizon, cfg.n), cfg.h)
    sample = simulate_path(cov, cfg.theta, cfg.seed, x0=cfg.x0)
    rows = [
        {"t": t, "v": v, "x": x}
        for t, v, x in zip(cov.grid.times, sample.v, sample.x)
    ]
    _atomic_write(_out_dir(cfg) / "path.csv", format_csv(("t", "v", "x"), rows))
    _write_meta(cfg, "path")
    print(f"wrote {_out_dir(cfg) / 'path.csv'} ({cfg.n} steps, T={cfg.horizon}, h={cfg.h})")


def _cmd_kernel(args) -> None:
    cfg = _config_from_args(args, "kernel-dump")
    ck = projection_kernel(increment_covariance(TimeGrid(cfg.horizon, cfg.n), cfg.h))
    rows = [
        {"t": t, "bracket": b, "bracket_slope": s, "inv_bracket_slope": p}
        for t, b, s, p in zip(ck.grid.times, ck.bracket, ck.bracket_slope,
                              ck.inv_bracket_slope)
    ]
    _atomic_write(_out_dir(cfg) / "kernel.csv",
                  format_csv(("t", "bracket", "bracket_slope", "inv_bracket_slope"), rows))
    if args.g_matrix:
        np.savetxt(args.g_matrix, ck.weights, delimiter=",")
    _write_meta(cfg, "kernel")
    print(f"wrote {_out_dir(cfg) / 'kernel.csv'}")


def _cmd_estimate(args) -> None:
    cfg = _config_from_args(args, "estimate")
    if args.path:
        data = np.genfromtxt(args.path, delimiter=",", names=True)
        t = check_uniform_times(np.asarray(data["t"], dtype=float))
        x = np.asarray(data["x"], dtype=float)
        grid = TimeGrid.from_times(t)
        cov = increment_covariance(grid, cfg.h)
    else:
        grid = TimeGrid(cfg.horizon, cfg.n)
        cov = increment_covariance(grid, cfg.h)
        x = simulate_path(cov, cfg.theta, cfg.seed, x0=cfg.x0).x
    if cfg.method == "oracle":
        record = oracle_mle(cov, x)
    else:
        record = drift_mle(projection_kernel(cov), x)
    payload = {"schema_version": SCHEMA_VERSION, "config": asdict(cfg),
               "estimate": {k: v for k, v in asdict(record).items()}}
    print(json.dumps(payload["estimate"], indent=2, sort_keys=True))
    if cfg.out is not None:
        _atomic_write(Path(cfg.out) / "estimate.json",
                      json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _cmd_campaign(args, mode: str) -> None:
    cfg = _config_from_args(args, mode)
    _, summary = run_campaign(cfg)
    print(f"reps={summary.reps} theta_mean={summary.theta_mean:.6f} "
          f"std_var={summary.standardized_variance:.4f} "
          f"ks={summary.ks_statistic:.4f}")
    if cfg.out is None:
        print("note: no --out directory given, results were not persisted")


def _cmd_laplace(args) -> None:
    cfg = _config_from_args(args, "laplace")
    rows = run_laplace_sweep(cfg)
    header = ("mu", "horizon", "l_riccati", "l_limit", "l_mc", "mc_se")
    text = format_csv(header, rows)
    _atomic_write(_out_dir(cfg) / "laplace.csv", text)
    _write_meta(cfg, "laplace")
    print(f"wrote {_out_dir(cfg) / 'laplace.csv'} ({len(rows)} rows)")


def _cmd_spectral(args) -> None:
    cfg = _config_from_args(args, "spectral")
    # the global n default targets path grids; eigen analysis defaults to 1024
    op = build_operator(cfg.h, args.n if args.n is not None else 1024)
    spec = eigen_asymptotics(op)
    sweep = perturbed_endpoint_scaling(cfg.h)
    rows = [
        {"series": "eigenvalue", "x": float(k + 1), "y": lam}
        for k, lam in enumerate(spec.eigenvalues)
    ]
    rows += [
        {"series": "symmetric_average", "x": float(k + 1), "y": a}
        for k, a in enumerate(spec.symmetric_averages)
    ]
    rows += [
        {"series": "perturbed_endpoint", "x": e, "y": u}
        for e, u in zip(sweep.abscissae, sweep.ordinates)
    ]
    _atomic_write(_out_dir(cfg) / "spectral.csv", format_csv(("series", "x", "y"), rows))
    fits = {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(cfg),
        "eigenvalue_slope": spec.eigenvalue_fit.slope,
        "symmetric_average_slope": spec.average_fit.slope,
        "max_antisymmetric_average": spec.max_antisymmetric_average,
        "perturbed_endpoint_slope": sweep.slope,
    }
    _atomic_write(_out_dir(cfg) / "spectral_fits.json",
                  json.dumps(fits, indent=2, sort_keys=True) + "\n")
    print(f"wrote {_out_dir(cfg) / 'spectral.csv'}; eigenvalue slope "
          f"{spec.eigenvalue_fit.slope:.4f}, sweep slope {sweep.slope:.4f}")


def _cmd_conditions(args) -> None:
    cfg = _config_from_args(args, "conditions")
    rows = run_conditions(cfg)
    _atomic_write(_out_dir(cfg) / "conditions.csv",
                  format_csv(("t", "integrand", "partial_integral", "growth_ratio"), rows))
    slope_rows, fit = run_bracket_sweep(cfg)
    _atomic_write(_out_dir(cfg) / "bracket_slope.csv",
                  format_csv(("horizon", "bracket", "bracket_slope"), slope_rows))
    _write_meta(cfg, "conditions", extra={"bracket_slope_fit": fit})
    print(f"wrote {_out_dir(cfg) / 'conditions.csv'}; slope fit {fit['slope']:.4f}")


_COMMANDS = {
    "simulate": _cmd_simulate,
    "kernel": _cmd_kernel,
    "estimate": _cmd_estimate,
    "mc": lambda args: _cmd_campaign(args, "mle"),
    "regression": lambda args: _cmd_campaign(args, "regression"),
    "laplace": _cmd_laplace,
    "spectral": _cmd_spectral,
    "conditions": _cmd_conditions,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (ValueError, TypeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
