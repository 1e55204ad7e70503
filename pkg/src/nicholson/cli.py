"""Command-line front end.

Subcommands mirror the split between analytic results and simulation:

    bounds      derived constants and theorem bounds, as a table
    stationary  invariant distribution of the switching chain
    simulate    one trajectory to CSV
    ensemble    Monte Carlo statistics CSV plus a bound report
    figures     CSV inputs for the plotting package
    verify      like ensemble, but the exit code reflects the verdicts

All numeric output uses full round-trip decimal formatting, and files are
written atomically (temporary name, then rename).
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bounds import compute_theorem_bounds
from .config import RunConfig, load_config
from .ctmc import sample_path, stationary_distribution
from .ensemble import MAX_OUTPUT_POINTS, reference_comparison, run_ensemble, verify_bounds
from .errors import NicholsonError
from .integrators import simulate_em, simulate_voc
from .model import derived_constants, validate_model
from .noise import NoiseStream


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    return repr(float(v))


def _stride_for(n_rows: int, raw: bool) -> int:
    if raw:
        return 1
    return max(1, math.ceil(n_rows / MAX_OUTPUT_POINTS))


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    sim = cfg.simulation
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.paths is not None:
        updates["n_paths"] = args.paths
    if args.dt is not None:
        updates["dt"] = args.dt
    if args.scheme is not None:
        updates["scheme"] = args.scheme
    if updates:
        sim = replace(sim, **updates)
    out = cfg.output
    if args.out is not None:
        out = replace(out, directory=args.out)
    if getattr(args, "raw", False):
        out = replace(out, emit_raw=True)
    return replace(cfg, simulation=sim, output=out)


def _bounds_table(model, dc, bounds, reference) -> str:
    pi = bounds.pi.pi
    lines = ["analytic bounds"]
    lines.append(f"  theta = {_fmt(dc.theta)}   alpha = {_fmt(dc.alpha)}   vartheta = {_fmt(bounds.vartheta)}")
    lines.append("  pi = (" + ", ".join(f"{v:.6g}" for v in pi) + ")")
    lines.append("")
    lines.append(f"  {'regime':>6} {'beta':>10} {'gamma':>10} {'rho':>10} {'d':>10} {'mu':>10} {'M':>10} {'W':>10} {'C':>10}")
    for i in range(model.m):
        lines.append(
            f"  {i + 1:>6} "
            + " ".join(
                f"{vec[i]:>10.5g}"
                for vec in (dc.beta, dc.gamma, dc.rho, dc.d, dc.mu, dc.big_m, dc.big_w, dc.big_c)
            )
        )
    lines.append("")
    rows = [
        ("long-run moment bound (m_hat)", bounds.moment_bound),
        ("time-average bound (w_hat/alpha)", bounds.time_avg_bound),
        ("time-average bound (pi-weighted)", bounds.time_avg_bound_pi),
        ("lyapunov lower (-d_check)", bounds.lyap_lower_minmax),
        ("lyapunov upper (c_check/2)", bounds.lyap_upper_minmax),
        ("lyapunov lower (-sum pi d)", bounds.lyap_lower),
        ("lyapunov upper (sum pi C / 2)", bounds.lyap_upper),
        ("liminf bound N*", bounds.nstar),
        ("extinction rate lambda", bounds.lam),
    ]
    for label, value in rows:
        lines.append(f"  {label:<34} {value:.6g}  ({_fmt(value)})")
    if bounds.kappa is not None:
        lines.append(f"  {'decay rate kappa':<34} {bounds.kappa:.6g}  ({_fmt(bounds.kappa)})")
    else:
        lines.append(f"  decay rate kappa: not applicable ({bounds.kappa_note})")
    if reference:
        lines.append("")
        lines.append("reference cross-check (computed vs reported):")
        for r in reference:
            tag = "agrees" if r.agree else "DISAGREES"
            lines.append(
                f"  {r.name:<14} computed {r.computed:.6g}  reported {r.reported:.6g}  {tag}"
            )
    return "\n".join(lines) + "\n"


def cmd_bounds(cfg: RunConfig) -> int:
    model = validate_model(cfg.model)
    sim = cfg.simulation
    dc = derived_constants(model, sim.theta, sim.alpha)
    bounds = compute_theorem_bounds(model, dc, sim.vartheta)
    refcmp = reference_comparison(bounds, dc, cfg.reference)
    text = _bounds_table(model, dc, bounds, refcmp)
    sys.stdout.write(text)
    _atomic_write(Path(cfg.output.directory) / "bounds.txt", text)
    return 0


def cmd_stationary(cfg: RunConfig) -> int:
    model = validate_model(cfg.model)
    pi = stationary_distribution(model.q)
    text = "state,pi\n" + "".join(
        f"{i + 1},{_fmt(v)}\n" for i, v in enumerate(pi.pi)
    )
    sys.stdout.write("pi = (" + ", ".join(f"{v:.6g}" for v in pi.pi) + ")\n")
    _atomic_write(Path(cfg.output.directory) / "stationary.csv", text)
    return 0


def _single_trajectory(cfg: RunConfig):
    model = validate_model(cfg.model)
    sim = cfg.simulation
    stream = NoiseStream(sim.seed, 0)
    path = sample_path(model.q, model.initial_state, sim.horizon, stream.regime_rng())
    simulate = simulate_voc if sim.scheme == "voc" else simulate_em
    return model, path, simulate(model, path, sim.dt, sim.horizon, stream)


def cmd_simulate(cfg: RunConfig) -> int:
    _, path, traj = _single_trajectory(cfg)
    out = Path(cfg.output.directory)
    stride = _stride_for(traj.times.size, cfg.output.emit_raw)
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "trajectory.csv", stride=stride)
    if cfg.output.emit_paths:
        path.to_csv(out / "regime_path.csv")
    sys.stdout.write(f"trajectory written to {out / 'trajectory.csv'}\n")
    return 0


def cmd_figures(cfg: RunConfig) -> int:
    _, _, traj = _single_trajectory(cfg)
    ts = traj.sim_times
    xs = traj.sim_x
    rg = traj.regime[traj.n_history:]
    stride = _stride_for(ts.size, cfg.output.emit_raw)
    keep = np.zeros(ts.size, dtype=bool)
    keep[::stride] = True
    keep[-1] = True

    trajectory = ["t,x,regime"]
    path_only = ["t,x"]
    lyap = ["t,log_x_over_t"]
    for t, v, r in zip(ts[keep], xs[keep], rg[keep]):
        trajectory.append(f"{_fmt(t)},{_fmt(v)},{int(r) + 1}")
        path_only.append(f"{_fmt(t)},{_fmt(v)}")
        if t > 0.0:
            val = math.log(v) / t if v > 0.0 else float("nan")
            lyap.append(f"{_fmt(t)},{_fmt(val)}")

    out = Path(cfg.output.directory)
    _atomic_write(out / "trajectory.csv", "\n".join(trajectory) + "\n")
    _atomic_write(out / "lyapunov.csv", "\n".join(lyap) + "\n")
    _atomic_write(out / "path.csv", "\n".join(path_only) + "\n")
    sys.stdout.write(f"figure data written to {out}\n")
    return 0


def _run_verification(cfg: RunConfig, workers):
    model = validate_model(cfg.model)
    sim = cfg.simulation
    dc = derived_constants(model, sim.theta, sim.alpha)
    bounds = compute_theorem_bounds(model, dc, sim.vartheta)
    stats = run_ensemble(model, sim, workers=workers)
    report = verify_bounds(stats, bounds, dc, model, cfg.reference)
    return stats, report


def _write_ensemble_outputs(cfg: RunConfig, stats, report) -> None:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.output.emit_stats:
        buf = io.StringIO()
        buf.write("t,mean_x_theta,ci_half,time_avg,lyap_min,lyap_mean,lyap_max,runmin_mean\n")
        cols = (stats.times, stats.mean_x_theta, stats.ci_half, stats.time_avg_x_theta,
                stats.lyap_min, stats.lyap_mean, stats.lyap_max, stats.runmin_mean)
        for row in zip(*cols):
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        _atomic_write(out / "stats.csv", buf.getvalue())
    _atomic_write(out / "report.txt", report.to_text())
    _atomic_write(out / "report.kv", report.to_kv())


def cmd_ensemble(cfg: RunConfig, workers) -> int:
    stats, report = _run_verification(cfg, workers)
    _write_ensemble_outputs(cfg, stats, report)
    sys.stdout.write(report.to_text())
    return 0


def cmd_verify(cfg: RunConfig, workers) -> int:
    stats, report = _run_verification(cfg, workers)
    _write_ensemble_outputs(cfg, stats, report)
    sys.stdout.write(report.to_text())
    if report.any_violated:
        sys.stderr.write("verification FAILED: at least one bound violated\n")
        return 1
    sys.stdout.write("verification passed\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nicholson",
        description="Simulation and bound verification for the switching blowflies equation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("bounds", "compute derived constants and theorem bounds"),
        ("stationary", "invariant distribution of the switching chain"),
        ("simulate", "one trajectory to CSV"),
        ("ensemble", "Monte Carlo statistics and bound report"),
        ("figures", "emit the CSV inputs for the plotting package"),
        ("verify", "ensemble run whose exit code reflects the verdicts"),
    ):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", required=True, help="path to the YAML configuration")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--paths", type=int, help="ensemble size (overrides config)")
        p.add_argument("--dt", type=float, help="step size (overrides config)")
        p.add_argument("--scheme", choices=("voc", "em"), help="integration scheme")
        p.add_argument("--workers", type=int, help="worker threads for ensembles")
        p.add_argument("--raw", action="store_true", help="emit full-resolution single-path CSVs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "bounds":
            return cmd_bounds(cfg)
        if args.command == "stationary":
            return cmd_stationary(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "figures":
            return cmd_figures(cfg)
        if args.command == "ensemble":
            return cmd_ensemble(cfg, args.workers)
        if args.command == "verify":
            return cmd_verify(cfg, args.workers)
        raise AssertionError(f"unhandled command {args.command}")
    except NicholsonError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
