"""Command-line driver: simulate, smooth, fit, bench, diagnose, plot.

Configuration files are flat ``key = value`` text; all outputs are CSV,
key-value metadata, or SVG.  Exit codes: 0 on success, 1 on runtime or
numerical failure, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bench, prep, simulate, solver, tuning
from .basis import load_basis, raw_grid_basis, save_basis
from .fileio import (
    ConfigError,
    coerce,
    ensure_dir,
    read_keyvalue,
    read_matrix_csv,
    write_keyvalue,
    write_matrix_csv,
    write_rows_csv,
)
from .plotting import write_coefficient_svg

SCENARIO_KEYS = (
    "N", "I", "I0", "grid_points", "tau_beta", "tau_eps", "rho", "sigma2", "seed",
    "replications",
)


def load_scenario_config(path, seed_override=None, reps_override=None) -> simulate.ScenarioConfig:
    raw = read_keyvalue(path)
    cfg = dict(
        N=coerce(raw, "N", int, required=True),
        I=coerce(raw, "I", int, required=True),
        I0=coerce(raw, "I0", int, required=True),
        grid_points=coerce(raw, "grid_points", int, default=50),
        tau_beta=coerce(raw, "tau_beta", float, default=0.25),
        tau_eps=coerce(raw, "tau_eps", float, default=0.25),
        rho=coerce(raw, "rho", float, default=0.0),
        sigma2=coerce(raw, "sigma2", float, default=1.0),
        seed=coerce(raw, "seed", int, default=0),
        replications=coerce(raw, "replications", int, default=50),
    )
    if seed_override is not None:
        cfg["seed"] = seed_override
    if reps_override is not None:
        cfg["replications"] = reps_override
    try:
        return simulate.ScenarioConfig(**cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_path_config(path=None, args=None) -> tuning.PathConfig:
    raw = read_keyvalue(path) if path else {}
    cfg = dict(
        n_lambda=coerce(raw, "n_lambda", int, default=100),
        lambda_min_ratio=coerce(raw, "lambda_min_ratio", float, default=1e-3),
        criterion=coerce(raw, "criterion", str, default="bic"),
        ebic_gamma=coerce(raw, "ebic_gamma", float, default=0.2),
    )
    if args is not None:
        if getattr(args, "n_lambda", None) is not None:
            cfg["n_lambda"] = args.n_lambda
        if getattr(args, "lambda_min_ratio", None) is not None:
            cfg["lambda_min_ratio"] = args.lambda_min_ratio
        if getattr(args, "criterion", None) is not None:
            cfg["criterion"] = args.criterion
        if getattr(args, "ebic_gamma", None) is not None:
            cfg["ebic_gamma"] = args.ebic_gamma
    try:
        return tuning.PathConfig(**cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _scenario_meta(cfg: simulate.ScenarioConfig) -> dict:
    return {key: getattr(cfg, key) for key in SCENARIO_KEYS}


def cmd_simulate(args) -> int:
    cfg = load_scenario_config(args.config, args.seed)
    out = Path(args.out_dir)
    ensure_dir(out)
    ds = simulate.generate_scenario(cfg, args.rep, noise_scale=args.noise_scale)
    grid_header = [f"{g:.17g}" for g in ds.grid]
    write_matrix_csv(out / "Y.csv", ds.Y, header=grid_header)
    write_matrix_csv(out / "X.csv", ds.X, header=[f"x{i}" for i in range(cfg.I)])
    write_matrix_csv(out / "beta_true.csv", ds.beta_true, header=grid_header)
    meta = _scenario_meta(cfg)
    meta.update(replication=args.rep, noise_scale=args.noise_scale, version=__version__)
    write_keyvalue(out / "meta.txt", meta)
    return 0


def cmd_smooth(args) -> int:
    out = Path(args.out_dir)
    ensure_dir(out)
    raw, header = read_matrix_csv(args.input, has_header=True)
    grid = np.asarray([float(h) for h in header])
    cfg = prep.SmoothingConfig(n_basis=args.n_basis)
    spline_basis = prep.build_bspline_basis(grid, cfg)
    coeffs, mu = prep.smooth_curves(raw, spline_basis, cfg)
    meta = {
        "n_basis_requested": args.n_basis,
        "n_basis_effective": spline_basis.K,
        "gcv_mu": mu,
        "fpca": not args.no_fpca,
        "version": __version__,
    }
    if args.no_fpca:
        out_basis, out_coeffs = spline_basis, coeffs
    else:
        result, scores, fpc_basis = prep.fpca(coeffs, spline_basis, args.target_variance)
        out_basis, out_coeffs = fpc_basis, scores
        meta.update(
            target_variance=args.target_variance,
            n_components=result.n_components,
            variance_explained=float(result.variance_explained[-1]),
        )
    write_matrix_csv(out / "coeffs.csv", out_coeffs, header=[f"c{j}" for j in range(out_basis.K)])
    save_basis(out_basis, out / "basis.txt")
    write_keyvalue(out / "meta.txt", meta)
    return 0


def _load_fit_inputs(args):
    X, _ = read_matrix_csv(args.x, has_header=True)
    Y, header = read_matrix_csv(args.y, has_header=True)
    if args.basis:
        fit_basis = load_basis(args.basis)
        if Y.shape[1] != fit_basis.K:
            raise ConfigError("coefficient columns do not match the basis dimension")
    else:
        grid = np.asarray([float(h) for h in header])
        fit_basis = raw_grid_basis(grid)
    if X.shape[0] != Y.shape[0]:
        raise ValueError("Y and X must have the same number of rows")
    return Y, X, fit_basis


def _kkt_meta(prefix, fit) -> dict:
    return {
        f"{prefix}lambda": fit.lam,
        f"{prefix}df": int(fit.support.size),
        f"{prefix}objective": fit.objective,
        f"{prefix}kkt_active_residual": fit.kkt.max_active_residual,
        f"{prefix}kkt_inactive_slack": fit.kkt.max_inactive_slack_violation,
        f"{prefix}iterations": fit.iterations,
        f"{prefix}converged": fit.converged,
        f"{prefix}seconds": fit.wall_time,
    }


PATH_COLUMNS = ["lambda", "df", "rss", "bic", "ebic", "converged", "iterations", "wall_time"]


def cmd_fit(args) -> int:
    out = Path(args.out_dir)
    ensure_dir(out)
    Y, X, fit_basis = _load_fit_inputs(args)
    solver_kwargs = dict(eps_abs=args.eps_abs, eps_rel=args.eps_rel, max_iter=args.max_iter)
    coef_header = [f"c{j}" for j in range(fit_basis.K)]
    meta = {"mode": args.mode, "tuned": args.tune, "version": __version__}

    if args.tune:
        cfg = load_path_config(args.path_config, args)
        if args.mode == "fsl":
            path, chosen = tuning.select_model(Y, X, fit_basis, "fsl", cfg, **solver_kwargs)
            meta.update(_kkt_meta("fsl_", chosen))
        else:
            sel = tuning.select_fsl_afsl(Y, X, fit_basis, cfg, **solver_kwargs)
            path, chosen = sel.afsl_path, sel.afsl
            write_matrix_csv(out / "beta_fsl.csv", sel.fsl.B_hat, header=coef_header)
            write_rows_csv(out / "fsl_path.csv", sel.fsl_path.rows(), PATH_COLUMNS)
            meta.update(_kkt_meta("fsl_", sel.fsl))
            meta.update(_kkt_meta("afsl_", chosen))
        write_rows_csv(out / "path.csv", path.rows(), PATH_COLUMNS)
        meta.update(criterion=cfg.criterion, ebic_gamma=cfg.ebic_gamma)
    else:
        if args.lam is None:
            raise ConfigError("--lam is required unless --tune is given")
        if args.mode == "fsl":
            chosen = solver.fit_fsl(Y, X, fit_basis, args.lam, **solver_kwargs)
            meta.update(_kkt_meta("fsl_", chosen))
        else:
            lam_init = args.lam_init if args.lam_init is not None else args.lam
            fsl_fit, chosen = solver.fit_afsl(Y, X, fit_basis, lam_init, args.lam, **solver_kwargs)
            write_matrix_csv(out / "beta_fsl.csv", fsl_fit.B_hat, header=coef_header)
            meta.update(_kkt_meta("fsl_", fsl_fit))
            meta.update(_kkt_meta("afsl_", chosen))

    write_matrix_csv(out / "beta_hat.csv", chosen.B_hat, header=coef_header)
    write_keyvalue(out / "fit_meta.txt", meta)
    return 0


CAMPAIGN_COLUMNS = list(SCENARIO_KEYS) + [
    "replication", "method", "tp", "fp", "rmsp", "lambda_selected", "df", "converged",
    "seconds",
]
SUMMARY_COLUMNS = list(SCENARIO_KEYS) + [
    "method", "tp", "fp", "rmsp", "seconds", "n_replications", "n_failed", "threads",
]


def cmd_bench(args) -> int:
    out = Path(args.out_dir)
    ensure_dir(out)
    cfg = load_scenario_config(args.config, args.seed, args.reps)
    path_cfg = load_path_config(args.path_config, args)
    t0 = time.perf_counter()
    result = bench.run_campaign(cfg, path_cfg, prep=args.prep, n_jobs=args.threads)
    total = time.perf_counter() - t0
    scen = _scenario_meta(cfg)
    rows = [{**scen, **row} for row in result.rows]
    write_rows_csv(out / "campaign.csv", rows, CAMPAIGN_COLUMNS)
    summary_rows = []
    for method, metrics in (("fsl", result.fsl), ("afsl", result.afsl)):
        summary_rows.append(
            {
                **scen,
                "method": method,
                "tp": metrics.true_positives,
                "fp": metrics.false_positives,
                "rmsp": metrics.rmsp,
                "seconds": metrics.mean_wall_time,
                "n_replications": metrics.n_replications,
                "n_failed": metrics.n_failed,
                "threads": args.threads,
            }
        )
    write_rows_csv(out / "summary.csv", summary_rows, SUMMARY_COLUMNS)
    diag_columns = ["replication", "sigma_min", "sigma_max", "irrepresentable_phi", "b_N", "signal_ratio"]
    write_rows_csv(out / "diagnostics.csv", result.diagnostics_rows, diag_columns)
    write_keyvalue(
        out / "bench_meta.txt",
        {
            "prep": args.prep,
            "threads": args.threads,
            "criterion": path_cfg.criterion,
            "n_lambda": path_cfg.n_lambda,
            "lambda_min_ratio": path_cfg.lambda_min_ratio,
            "total_seconds": total,
            "kkt_max_active_scaled": result.kkt_max_active_scaled,
            "kkt_max_inactive": result.kkt_max_inactive,
            "version": __version__,
        },
    )
    return 0


def cmd_diagnose(args) -> int:
    out = Path(args.out_dir)
    ensure_dir(out)
    X, _ = read_matrix_csv(args.x, has_header=True)
    B_true, header = read_matrix_csv(args.beta_true, has_header=True)
    grid = np.asarray([float(h) for h in header])
    if args.support:
        support = np.asarray([int(s) for s in args.support.split(",")])
    else:
        support = np.arange(B_true.shape[0])
    diag = bench.diagnostics(X, support, B_true, raw_grid_basis(grid))
    write_rows_csv(
        out / "diagnostics.csv",
        [
            {
                "sigma_min": diag.sigma_min,
                "sigma_max": diag.sigma_max,
                "irrepresentable_phi": diag.irrepresentable_phi,
                "b_N": diag.b_N,
                "signal_ratio": diag.signal_ratio,
            }
        ],
        ["sigma_min", "sigma_max", "irrepresentable_phi", "b_N", "signal_ratio"],
    )
    return 0


def cmd_plot(args) -> int:
    out = Path(args.out_dir)
    ensure_dir(out)
    sources = {}
    for key, path in (("true", args.true), ("fsl", args.fsl), ("afsl", args.afsl)):
        if path:
            sources[key] = read_matrix_csv(path, has_header=True)
    if not sources:
        raise ConfigError("provide at least one of --true, --fsl, --afsl")
    if args.basis:
        plot_basis = load_basis(args.basis)
        if plot_basis.grid is None:
            raise ConfigError("basis file has no grid to evaluate on")
    else:
        first = next(iter(sources.values()))
        plot_basis = raw_grid_basis(np.asarray([float(h) for h in first[1]]))
    matrices = {}
    n_rows_max = 0
    for key, (M, _) in sources.items():
        if M.shape[1] != plot_basis.K:
            raise ConfigError(f"--{key} has {M.shape[1]} columns; basis expects {plot_basis.K}")
        matrices[key] = M
        n_rows_max = max(n_rows_max, M.shape[0])
    if args.indices:
        indices = [int(s) for s in args.indices.split(",")]
    else:
        indices = sorted(
            {
                int(i)
                for key in ("afsl", "fsl", "true")
                if key in matrices
                for i in np.flatnonzero(np.any(matrices[key] != 0, axis=1))
            }
        ) or [0]
    for idx in indices:
        curves = {}
        for key in ("true", "fsl", "afsl"):
            M = matrices.get(key)
            if M is None:
                continue
            if idx >= M.shape[0] or idx < 0:
                raise ConfigError(f"unknown coefficient index {idx} for --{key}")
            curves[key] = plot_basis.evaluate(M[idx])[0]
        write_coefficient_svg(out / f"coef_{idx:04d}.svg", plot_basis.grid, curves,
                              title=f"coefficient {idx}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fslasso",
        description="Sparse function-on-scalar regression: simulate, preprocess, fit, benchmark.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate one scenario replication as CSV files")
    p.add_argument("--config", required=True, help="scenario key=value file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--rep", type=int, default=0, help="replication index")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("smooth", help="B-spline smoothing with GCV, then FPCA rotation")
    p.add_argument("--input", required=True, help="curves CSV with a grid header row")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-basis", type=int, default=100)
    p.add_argument("--target-variance", type=float, default=0.99)
    p.add_argument("--no-fpca", action="store_true", help="stop after spline smoothing")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("fit", help="fit at a fixed penalty or tune along a path")
    p.add_argument("--y", required=True, help="outcome CSV (raw curves or coefficients)")
    p.add_argument("--x", required=True, help="design CSV")
    p.add_argument("--basis", default=None, help="basis file for coefficient outcomes")
    p.add_argument("--mode", choices=("fsl", "afsl"), default="fsl")
    p.add_argument("--lam", type=float, default=None, help="penalty level")
    p.add_argument("--lam-init", type=float, default=None, help="pilot penalty (afsl)")
    p.add_argument("--tune", action="store_true", help="select the penalty by criterion")
    p.add_argument("--path-config", default=None)
    p.add_argument("--criterion", choices=("bic", "ebic"), default=None)
    p.add_argument("--ebic-gamma", type=float, default=None)
    p.add_argument("--n-lambda", type=int, default=None)
    p.add_argument("--lambda-min-ratio", type=float, default=None)
    p.add_argument("--eps-abs", type=float, default=1e-6)
    p.add_argument("--eps-rel", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bench", help="replication campaign with summary tables")
    p.add_argument("--config", required=True, help="scenario key=value file")
    p.add_argument("--path-config", default=None)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--reps", type=int, default=None, help="override replication count")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--prep", choices=("fpc", "raw"), default="fpc")
    p.add_argument("--criterion", choices=("bic", "ebic"), default=None)
    p.add_argument("--ebic-gamma", type=float, default=None)
    p.add_argument("--n-lambda", type=int, default=None)
    p.add_argument("--lambda-min-ratio", type=float, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("diagnose", help="design-condition diagnostics for one dataset")
    p.add_argument("--x", required=True)
    p.add_argument("--beta-true", required=True)
    p.add_argument("--support", default=None, help="comma-separated true indices")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("plot", help="static SVG plots of coefficient functions")
    p.add_argument("--true", default=None)
    p.add_argument("--fsl", default=None)
    p.add_argument("--afsl", default=None)
    p.add_argument("--basis", default=None)
    p.add_argument("--indices", default=None, help="comma-separated coefficient indices")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime/numerical failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
