"""Parallel Monte Carlo over (regime path, noise) pairs and bound verification.

Each ensemble member owns substreams derived from (seed, path index), so the
work is embarrassingly parallel and the result depends only on the model and
configuration, never on the worker count: partial results are merged in path
index order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .bounds import TheoremBounds
from .ctmc import sample_path
from .errors import MismatchedConfigError, NonDyadicRefinementError
from .integrators import _dt_grid, build_partition, integrate_partition, simulate_em, simulate_voc
from .model import DerivedConstants, ValidatedModel
from .noise import NoiseRecord, NoiseStream, sum_groups

MAX_OUTPUT_POINTS = 10_000
VERDICT_SLACK = 0.05
DECAY_PATH_FRACTION = 0.95


@dataclass(frozen=True)
class EnsembleConfig:
    """Monte Carlo run settings.

    ``tail_window`` is the trailing fraction of [0, horizon] used for
    asymptotic statistics (running minima, tail maxima of means).
    """

    n_paths: int
    dt: float
    horizon: float
    seed: int
    scheme: str = "voc"
    theta: float = 1.0
    alpha: Optional[float] = None
    vartheta: Optional[float] = None
    tail_window: float = 0.2

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError(f"n_paths = {self.n_paths}: must be >= 1")
        if not 0.0 < self.dt <= self.horizon:
            raise ValueError(f"dt = {self.dt}: must satisfy 0 < dt <= horizon ({self.horizon})")
        if self.scheme not in ("voc", "em"):
            raise ValueError(f"scheme = {self.scheme!r}: must be 'voc' or 'em'")
        if not 0.0 < self.tail_window <= 1.0:
            raise ValueError(f"tail_window = {self.tail_window}: must be in (0, 1]")
        if self.theta < 1.0:
            raise ValueError(f"theta = {self.theta}: must be >= 1")


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Ensemble statistics on a coarsened output grid plus per-path tail values."""

    times: np.ndarray
    mean_x_theta: np.ndarray
    ci_half: np.ndarray
    time_avg_x_theta: np.ndarray
    lyap_min: np.ndarray
    lyap_mean: np.ndarray
    lyap_max: np.ndarray
    runmin_mean: np.ndarray
    lyap_at_horizon: np.ndarray
    x_theta_at_horizon: np.ndarray
    runmin_at_horizon: np.ndarray
    positivity_violations: int
    min_x: float
    theta: float
    alpha: Optional[float]
    scheme: str
    n_paths: int
    dt: float
    horizon: float
    seed: int
    tail_window: float

    def __post_init__(self):
        for name in (
            "times", "mean_x_theta", "ci_half", "time_avg_x_theta", "lyap_min",
            "lyap_mean", "lyap_max", "runmin_mean", "lyap_at_horizon",
            "x_theta_at_horizon", "runmin_at_horizon",
        ):
            getattr(self, name).setflags(write=False)

    def tail_mask(self) -> np.ndarray:
        return self.times >= (1.0 - self.tail_window) * self.horizon

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,mean_x_theta,ci_half,time_avg,lyap_min,lyap_mean,lyap_max,runmin_mean\n")
            cols = (self.times, self.mean_x_theta, self.ci_half, self.time_avg_x_theta,
                    self.lyap_min, self.lyap_mean, self.lyap_max, self.runmin_mean)
            for row in zip(*cols):
                fh.write(",".join(f"{float(v)!r}" for v in row) + "\n")


@njit(cache=True, nogil=True)
def _window_min(times, values, out_pos, keep_frac):  # pragma: no cover
    """Min of values over [t * keep_frac, t] for each output position.

    Monotonic-deque sliding window; both window ends move forward, so the
    total work is linear in the grid size.
    """
    nq = out_pos.size
    out = np.empty(nq)
    dq = np.empty(times.size, np.int64)
    head = 0
    tail = 0
    r = 0
    for q in range(nq):
        kq = out_pos[q]
        lo_t = times[kq] * keep_frac
        while r <= kq:
            while tail > head and values[dq[tail - 1]] >= values[r]:
                tail -= 1
            dq[tail] = r
            tail += 1
            r += 1
        while head < tail and times[dq[head]] < lo_t:
            head += 1
        out[q] = values[dq[head]]
    return out


def _output_grid(cfg: EnsembleConfig) -> np.ndarray:
    """Strided subset (at most MAX_OUTPUT_POINTS) of the dt grid, ending at the horizon."""
    dt_times = _dt_grid(cfg.dt, cfg.horizon)
    n_int = dt_times.size - 1
    stride = max(1, math.ceil(n_int / MAX_OUTPUT_POINTS))
    idx = np.arange(stride, n_int + 1, stride)
    if idx.size == 0 or idx[-1] != n_int:
        idx = np.append(idx, n_int)
    return dt_times[idx]


def _path_statistics(model: ValidatedModel, cfg: EnsembleConfig, j: int, out_times: np.ndarray):
    stream = NoiseStream(cfg.seed, j)
    path = sample_path(model.q, model.initial_state, cfg.horizon, stream.regime_rng())
    simulate = simulate_voc if cfg.scheme == "voc" else simulate_em
    traj = simulate(model, path, cfg.dt, cfg.horizon, stream)

    ts = traj.sim_times
    xs = traj.sim_x
    pos = np.searchsorted(ts, out_times)

    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        xt = xs if cfg.theta == 1.0 else np.power(xs, cfg.theta)
        integral = np.concatenate(
            ([0.0], np.cumsum(0.5 * (xt[1:] + xt[:-1]) * np.diff(ts)))
        )
        x_out = xs[pos]
        xt_out = xt[pos]
        timeavg_out = integral[pos] / out_times
        lyap_out = np.where(x_out > 0.0, np.log(np.abs(x_out)) / out_times, np.nan)
        lyap_final = (
            math.log(xs[-1]) / cfg.horizon if xs[-1] > 0.0 else float("nan")
        )
    runmin_out = _window_min(ts, xs, pos.astype(np.int64), 1.0 - cfg.tail_window)

    return (
        xt_out, timeavg_out, lyap_out, runmin_out,
        lyap_final, float(xt[-1]), float(runmin_out[-1]),
        bool(traj.negative_excursion), float(xs.min()),
    )


def run_ensemble(
    model: ValidatedModel, cfg: EnsembleConfig, workers: Optional[int] = None
) -> EnsembleStats:
    """Simulate cfg.n_paths independent paths and aggregate their statistics.

    Deterministic for a fixed (model, cfg): per-path substreams are derived
    from the path index and partial sums are merged in index order whatever
    the worker count.
    """
    out_times = _output_grid(cfg)
    n_out = out_times.size
    n = cfg.n_paths
    if workers is None:
        workers = min(8, os.cpu_count() or 1)
    workers = max(1, min(workers, n))

    s_xt = np.zeros(n_out)
    s_xt2 = np.zeros(n_out)
    s_tavg = np.zeros(n_out)
    s_lyap = np.zeros(n_out)
    n_lyap = np.zeros(n_out)
    lyap_lo = np.full(n_out, np.inf)
    lyap_hi = np.full(n_out, -np.inf)
    s_runmin = np.zeros(n_out)
    lyap_T = np.empty(n)
    xt_T = np.empty(n)
    runmin_T = np.empty(n)
    violations = 0
    min_x = np.inf

    def job(j: int):
        return _path_statistics(model, cfg, j, out_times)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for j, res in enumerate(pool.map(job, range(n))):
            xt_out, tavg, lyap, runmin, lyap_f, xt_f, runmin_f, neg, mn = res
            s_xt += xt_out
            s_xt2 += xt_out * xt_out
            s_tavg += tavg
            valid = ~np.isnan(lyap)
            s_lyap += np.where(valid, lyap, 0.0)
            n_lyap += valid
            lyap_lo = np.fmin(lyap_lo, lyap)
            lyap_hi = np.fmax(lyap_hi, lyap)
            s_runmin += runmin
            lyap_T[j] = lyap_f
            xt_T[j] = xt_f
            runmin_T[j] = runmin_f
            violations += int(neg)
            min_x = min(min_x, mn)

    mean = s_xt / n
    if n > 1:
        var = np.maximum(s_xt2 - n * mean * mean, 0.0) / (n - 1)
        ci = 1.96 * np.sqrt(var / n)
    else:
        ci = np.zeros(n_out)
    with np.errstate(invalid="ignore", divide="ignore"):
        lyap_mean = np.where(n_lyap > 0, s_lyap / np.maximum(n_lyap, 1), np.nan)

    return EnsembleStats(
        times=out_times,
        mean_x_theta=mean,
        ci_half=ci,
        time_avg_x_theta=s_tavg / n,
        lyap_min=lyap_lo,
        lyap_mean=lyap_mean,
        lyap_max=lyap_hi,
        runmin_mean=s_runmin / n,
        lyap_at_horizon=lyap_T,
        x_theta_at_horizon=xt_T,
        runmin_at_horizon=runmin_T,
        positivity_violations=violations,
        min_x=float(min_x),
        theta=cfg.theta,
        alpha=cfg.alpha,
        scheme=cfg.scheme,
        n_paths=n,
        dt=cfg.dt,
        horizon=cfg.horizon,
        seed=cfg.seed,
        tail_window=cfg.tail_window,
    )


# --------------------------------------------------------------------------
# Bound verification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundCheck:
    """One theorem comparison: analytic bound vs ensemble statistic."""

    name: str
    description: str
    bound: float
    empirical: float
    margin: float
    verdict: str  # consistent | violated | not-applicable
    note: str = ""


@dataclass(frozen=True)
class RefEntry:
    """One computed-vs-published value comparison."""

    name: str
    computed: float
    reported: float
    agree: bool


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Theorem-by-theorem verdicts plus the published-value cross-check block."""

    checks: tuple[BoundCheck, ...]
    reference: tuple[RefEntry, ...]
    theta: float
    alpha: float

    @property
    def any_violated(self) -> bool:
        return any(c.verdict == "violated" for c in self.checks)

    def to_text(self) -> str:
        lines = [
            f"bound report (theta={self.theta!r}, alpha={self.alpha!r})",
            f"{'check':<22} {'bound':>14} {'empirical':>14} {'margin':>12}  verdict",
        ]
        for c in self.checks:
            emp = "n/a" if math.isnan(c.empirical) else f"{c.empirical:.6g}"
            bnd = "n/a" if math.isnan(c.bound) else f"{c.bound:.6g}"
            mrg = "n/a" if math.isnan(c.margin) else f"{c.margin:.6g}"
            lines.append(f"{c.name:<22} {bnd:>14} {emp:>14} {mrg:>12}  {c.verdict}")
            if c.note:
                lines.append(f"    note: {c.note}")
        if self.reference:
            lines.append("")
            lines.append("reference cross-check (computed vs reported):")
            for r in self.reference:
                tag = "agrees" if r.agree else "DISAGREES"
                lines.append(
                    f"  {r.name:<14} computed {r.computed:.6g}  reported {r.reported:.6g}  {tag}"
                )
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        lines = [f"theta={self.theta!r}", f"alpha={self.alpha!r}"]
        for c in self.checks:
            lines.append(f"{c.name}.bound={c.bound!r}")
            lines.append(f"{c.name}.empirical={c.empirical!r}")
            lines.append(f"{c.name}.margin={c.margin!r}")
            lines.append(f"{c.name}.verdict={c.verdict}")
        for r in self.reference:
            lines.append(f"reference.{r.name}.computed={r.computed!r}")
            lines.append(f"reference.{r.name}.reported={r.reported!r}")
            lines.append(f"reference.{r.name}.agree={str(r.agree).lower()}")
        return "\n".join(lines) + "\n"


def _slack(bound: float) -> float:
    return VERDICT_SLACK * max(abs(bound), 1.0)


def reference_comparison(
    bounds: TheoremBounds, dc: DerivedConstants, reference: Optional[dict]
) -> tuple[RefEntry, ...]:
    """Compare computed quantities against published values supplied in config."""
    if not reference:
        return ()
    computed_vectors = {
        "pi": bounds.pi.pi, "d": dc.d, "c": dc.big_c, "gamma": dc.gamma, "mu": dc.mu,
    }
    computed_scalars = {
        "nstar": bounds.nstar,
        "lambda": bounds.lam,
        "lyap_lower": bounds.lyap_lower,
        "lyap_upper": bounds.lyap_upper,
        "sum_pi_d": -bounds.lyap_lower,
        "moment_bound": bounds.moment_bound,
        "kappa": bounds.kappa if bounds.kappa is not None else float("nan"),
    }
    entries: list[RefEntry] = []
    for key, reported in reference.items():
        if key in computed_vectors:
            vec = computed_vectors[key]
            for i, rep in enumerate(np.atleast_1d(reported)):
                comp = float(vec[i])
                tol = 1e-3 * max(1.0, abs(rep))
                entries.append(RefEntry(f"{key}[{i + 1}]", comp, float(rep), abs(comp - rep) <= tol))
        elif key in computed_scalars:
            comp = computed_scalars[key]
            tol = 1e-3 * max(1.0, abs(float(reported)))
            entries.append(RefEntry(key, comp, float(reported), abs(comp - float(reported)) <= tol))
        # unknown keys are ignored so configs can annotate freely
    return tuple(entries)


def verify_bounds(
    stats: EnsembleStats,
    bounds: TheoremBounds,
    dc: DerivedConstants,
    model: ValidatedModel,
    reference: Optional[dict] = None,
) -> BoundReport:
    """Compare each analytic bound against the ensemble statistics.

    A verdict is ``violated`` only when the statistic exceeds the bound by
    more than its confidence half-width plus a 5% slack; the inequalities are
    asymptotic, so a hard comparison would be wrong on finite horizons.
    """
    if stats.theta != bounds.theta:
        raise MismatchedConfigError(
            f"stats computed with theta={stats.theta}, bounds with theta={bounds.theta}"
        )
    if stats.alpha is not None and stats.alpha != bounds.alpha:
        raise MismatchedConfigError(
            f"stats computed with alpha={stats.alpha}, bounds with alpha={bounds.alpha}"
        )

    tail = stats.tail_mask()
    checks: list[BoundCheck] = []

    def upper_check(name: str, desc: str, bound: float, emp: float, ci: float, note: str = ""):
        allowed = bound + _slack(bound) + ci
        verdict = "consistent" if emp <= allowed else "violated"
        checks.append(BoundCheck(name, desc, bound, emp, allowed - emp, verdict, note))

    # Long-run moment and time-average (min/max aggregates).
    i_max = int(np.argmax(np.where(tail, stats.mean_x_theta, -np.inf)))
    upper_check(
        "moment_mhat",
        "tail max of mean X^theta vs m_hat",
        bounds.moment_bound,
        float(stats.mean_x_theta[i_max]),
        float(stats.ci_half[i_max]),
    )
    tavg_tail = float(np.max(stats.time_avg_x_theta[tail]))
    upper_check(
        "time_avg_what",
        "tail max of running time-average of mean X^theta vs w_hat/alpha",
        bounds.time_avg_bound, tavg_tail, 0.0,
    )
    upper_check(
        "time_avg_pi",
        "same statistic vs stationary-weighted bound",
        bounds.time_avg_bound_pi, tavg_tail, 0.0,
    )

    # Lyapunov exponent brackets.
    lyap_vals = stats.lyap_at_horizon[~np.isnan(stats.lyap_at_horizon)]
    lyap_mean = float(lyap_vals.mean()) if lyap_vals.size else float("nan")
    lyap_ci = (
        1.96 * float(lyap_vals.std(ddof=1)) / math.sqrt(lyap_vals.size)
        if lyap_vals.size > 1 else 0.0
    )
    for name, lo, hi in (
        ("lyap_bracket_minmax", bounds.lyap_lower_minmax, bounds.lyap_upper_minmax),
        ("lyap_bracket_pi", bounds.lyap_lower, bounds.lyap_upper),
    ):
        lo_sl = lo - _slack(lo) - lyap_ci
        hi_sl = hi + _slack(hi) + lyap_ci
        inside = lo_sl <= lyap_mean <= hi_sl
        margin = min(lyap_mean - lo_sl, hi_sl - lyap_mean)
        checks.append(BoundCheck(
            name, "mean of log X(T)/T within the exponent bracket",
            lo if abs(lyap_mean - lo) < abs(lyap_mean - hi) else hi,
            lyap_mean, margin, "consistent" if inside else "violated",
            note=f"bracket [{lo:.6g}, {hi:.6g}]",
        ))

    # Limit inferior of the population.
    upper_check(
        "liminf_nstar",
        "mean tail running-minimum vs nstar",
        bounds.nstar,
        float(stats.runmin_mean[-1]),
        1.96 * float(stats.runmin_at_horizon.std(ddof=1)) / math.sqrt(stats.n_paths)
        if stats.n_paths > 1 else 0.0,
    )

    # Extinction criteria.
    if float(model.p.max()) == 0.0:
        upper_check(
            "extinction_p_zero",
            "mean of log X(T)/T vs -sum(pi*d) for a birthless model",
            bounds.lyap_lower, lyap_mean, lyap_ci,
        )
    elif float(model.tau.max()) == 0.0:
        note = ""
        if abs(bounds.lam) < 1e-12:
            note = "lambda = 0 borderline: limsup X <= 1 recorded, not asserted"
        upper_check(
            "extinction_lambda",
            "mean of log X(T)/T vs -lambda for a zero-delay model",
            -bounds.lam, lyap_mean, lyap_ci, note=note,
        )
    else:
        checks.append(BoundCheck(
            "extinction", "extinction criteria", float("nan"), float("nan"),
            float("nan"), "not-applicable",
            note="requires p = 0 everywhere or tau = 0 everywhere",
        ))

    # Second-moment decay.
    if bounds.kappa is None:
        checks.append(BoundCheck(
            "decay_kappa", "second-moment decay rate", float("nan"), float("nan"),
            float("nan"), "not-applicable", note=bounds.kappa_note,
        ))
    else:
        kappa = bounds.kappa
        target = -kappa / 2.0
        frac = float(np.mean(stats.lyap_at_horizon <= target + _slack(target)))
        checks.append(BoundCheck(
            "decay_kappa_paths",
            "fraction of paths with log X(T)/T <= -kappa/2 (plus slack)",
            target, frac,
            frac - DECAY_PATH_FRACTION,
            "consistent" if frac >= DECAY_PATH_FRACTION else "violated",
            note=f"kappa = {kappa!r}",
        ))
        if stats.theta == 2.0:
            t_tail = stats.times[tail]
            m_tail = stats.mean_x_theta[tail]
            ok = m_tail > 0.0
            if np.count_nonzero(ok) >= 2:
                slope = float(np.polyfit(t_tail[ok], np.log(m_tail[ok]), 1)[0])
                upper_check(
                    "decay_kappa_slope",
                    "tail slope of log mean X^2 vs -kappa",
                    -kappa, slope, 0.0,
                )

    return BoundReport(
        checks=tuple(checks),
        reference=reference_comparison(bounds, dc, reference),
        theta=bounds.theta,
        alpha=bounds.alpha,
    )


# --------------------------------------------------------------------------
# Cross-scheme convergence study
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    mean_max_diff: float


def convergence_study(
    model: ValidatedModel, cfg: EnsembleConfig, dts: Sequence[float]
) -> tuple[ConvergenceRow, ...]:
    """Mean over paths of max_t |X_em - X_voc| at each step size, on shared noise.

    The step sizes must be strictly decreasing, each dividing the coarsest by
    a power of two; Brownian increments are drawn once per path on the finest
    partition and summed onto the coarser ones, so every level sees the same
    underlying path.
    """
    dts = [float(d) for d in dts]
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise NonDyadicRefinementError(f"step sizes must strictly decrease, got {dts}")
    for d in dts:
        r = dts[0] / d
        k = round(math.log2(r)) if r > 0 else -1
        if k < 0 or abs(r - 2**k) > 1e-9 * 2**k:
            raise NonDyadicRefinementError(
                f"dt = {d} does not divide the coarsest {dts[0]} by a power of two"
            )
    ratios = [round(d / dts[-1]) for d in dts]

    horizon = cfg.horizon
    n0 = round(horizon / dts[0])
    if n0 < 1 or abs(n0 * dts[0] - horizon) > 1e-9 * max(1.0, horizon):
        raise NonDyadicRefinementError(
            f"horizon {horizon} must be a whole number of coarsest steps {dts[0]}"
        )
    dt_f = dts[-1]
    n_f = n0 * round(dts[0] / dt_f)

    ts_f = dt_f * np.arange(n_f + 1)
    ts_f[-1] = horizon

    sums = np.zeros(len(dts))
    for j in range(cfg.n_paths):
        stream = NoiseStream(cfg.seed, j)
        path = sample_path(model.q, model.initial_state, horizon, stream.regime_rng())
        jumps = path.jump_times()
        jumps = jumps[(jumps > 0.0) & (jumps < horizon)]
        sim_f = np.union1d(ts_f, jumps)
        left = sim_f[:-1]
        st_f = path.states[
            np.maximum(np.searchsorted(path.times, left, side="right") - 1, 0)
        ].astype(np.int64)
        db_f = NoiseRecord.generate(stream, np.diff(sim_f)).increments

        pos = np.minimum(np.searchsorted(ts_f, sim_f), n_f)
        is_dt = ts_f[pos] == sim_f

        for lvl, r in enumerate(ratios):
            keep = (~is_dt) | (pos % r == 0)
            b_idx = np.nonzero(keep)[0]
            lt = sim_f[b_idx]
            ldb = sum_groups(db_f, b_idx[:-1])
            lst = st_f[b_idx[:-1]]
            _, x_voc, nh, _ = integrate_partition(model, lt, lst, ldb, "voc")
            _, x_em, _, _ = integrate_partition(model, lt, lst, ldb, "em")
            sums[lvl] += float(np.max(np.abs(x_em[nh:] - x_voc[nh:])))

    return tuple(
        ConvergenceRow(dt=d, mean_max_diff=float(s / cfg.n_paths))
        for d, s in zip(dts, sums)
    )
