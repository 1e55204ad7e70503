"""Trajectory integration along a fixed regime path.

Two schemes over the same substep partition (step grid split exactly at
regime jump times):

* ``voc``: per-substep variation of constants. Over [s, s+h] in regime i,

      X(s+h) = exp[(-delta_i - sigma_i^2/2) h + sigma_i dB] * (X(s) + h * G(X(s - tau_i), i)),

  with the birth term G(x, i) = p_i x exp(-a_i x) frozen at the left
  endpoint. Every factor is positive, so positivity of the output is
  structural, and the scheme is exact whenever G vanishes.

* ``em``: Euler-Maruyama,

      X_{n+1} = X_n + [-delta_i X_n + G(X(t_n - tau_i), i)] h + sigma_i X_n dB.

  Coarse steps can push values negative; those excursions are recorded, not
  repaired, since they are diagnostic.

Both schemes consume identical increment sequences from the same stream, so
their outputs are directly comparable path by path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .ctmc import RegimePath
from .errors import HistoryRangeError
from .model import ValidatedModel
from .noise import NoiseRecord, NoiseStream

GRID_REL_TOL = 1e-9


def _dt_grid(dt: float, horizon: float) -> np.ndarray:
    """Multiples of dt on [0, horizon] with the last point pinned to horizon."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if horizon <= 0.0:
        raise ValueError("horizon must be > 0")
    n = int(math.floor(horizon / dt + GRID_REL_TOL))
    ts = dt * np.arange(n + 1)
    if n >= 1 and abs(ts[-1] - horizon) <= GRID_REL_TOL * max(dt, horizon):
        ts[-1] = horizon
    else:
        ts = np.append(ts, horizon)
    return ts


def build_partition(
    model: ValidatedModel, path: RegimePath, dt: float, horizon: float
) -> tuple[np.ndarray, np.ndarray]:
    """Substep boundaries on [0, horizon] and the active state of each substep.

    The boundaries are the union of the dt grid and the path's jump times, so
    no substep straddles a regime change.
    """
    ts = _dt_grid(dt, horizon)
    jumps = path.jump_times()
    jumps = jumps[(jumps > 0.0) & (jumps < horizon)]
    sim_times = np.union1d(ts, jumps)
    left = sim_times[:-1]
    idx = np.maximum(np.searchsorted(path.times, left, side="right") - 1, 0)
    states = path.states[idx].astype(np.int64)
    return sim_times, states


def _delay_refs(
    full_times: np.ndarray, left: np.ndarray, tau_per_step: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Index/weight pairs so that X(t_n - tau) = x[lo] + w * (x[lo+1] - x[lo]).

    Exact grid hits get w = 0 and point straight at the stored value.
    """
    u = left - tau_per_step
    if u.min() < full_times[0]:
        raise HistoryRangeError(
            f"delayed lookup at t = {u.min()} precedes the history start {full_times[0]}"
        )
    j = np.searchsorted(full_times, u, side="left")
    exact = full_times[np.minimum(j, full_times.size - 1)] == u
    lo = np.where(exact, j, j - 1)
    span = full_times[np.minimum(lo + 1, full_times.size - 1)] - full_times[lo]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(exact, 0.0, (u - full_times[lo]) / span)
    return lo.astype(np.int64), w


@njit(cache=True, nogil=True)
def _voc_kernel(x, start, h, db, st, lo, w, delta, p, a, sigma):  # pragma: no cover
    for k in range(h.size):
        i = st[k]
        l = lo[k]
        if w[k] == 0.0:
            xd = x[l]
        else:
            xd = x[l] + w[k] * (x[l + 1] - x[l])
        g = p[i] * xd * np.exp(-a[i] * xd)
        grow = np.exp((-delta[i] - 0.5 * sigma[i] * sigma[i]) * h[k] + sigma[i] * db[k])
        x[start + k + 1] = grow * (x[start + k] + h[k] * g)


@njit(cache=True, nogil=True)
def _em_kernel(x, start, h, db, st, lo, w, delta, p, a, sigma):  # pragma: no cover
    # On the model's domain x >= 0 the birth term is bounded by p/(a*e); the
    # saturation below only fires on diagnostic negative excursions, where the
    # raw formula would overflow to inf and poison the whole trajectory.
    neg = False
    for k in range(h.size):
        i = st[k]
        l = lo[k]
        if w[k] == 0.0:
            xd = x[l]
        else:
            xd = x[l] + w[k] * (x[l + 1] - x[l])
        expo = -a[i] * xd
        if expo > 700.0:
            expo = 700.0
        g = p[i] * xd * np.exp(expo)
        if g > 1e100:
            g = 1e100
        elif g < -1e100:
            g = -1e100
        xn = x[start + k]
        x[start + k + 1] = xn + (-delta[i] * xn + g) * h[k] + sigma[i] * xn * db[k]
        if x[start + k + 1] <= 0.0:
            neg = True
    return neg


@dataclass(frozen=True, eq=False)
class TrajectoryGrid:
    """A computed trajectory: grid times on [-tau_max, horizon], values, regimes.

    ``times[:n_history]`` lie strictly before 0 and reproduce the initial
    history; the simulated portion starts at ``times[n_history] == 0``. The
    ``regime`` array holds the active (right-continuous) state at each grid
    time, 0-based.
    """

    times: np.ndarray
    x: np.ndarray
    regime: np.ndarray
    noise: NoiseRecord
    n_history: int
    scheme: str
    dt: float
    horizon: float
    negative_excursion: bool

    def __post_init__(self):
        for name in ("times", "x", "regime"):
            getattr(self, name).setflags(write=False)

    @property
    def sim_times(self) -> np.ndarray:
        return self.times[self.n_history:]

    @property
    def sim_x(self) -> np.ndarray:
        return self.x[self.n_history:]

    def to_csv(self, path, stride: int = 1) -> None:
        """Write ``time,x,regime`` rows (regimes 1-based), keeping the final row."""
        keep = np.zeros(self.times.size, dtype=bool)
        keep[::stride] = True
        keep[-1] = True
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("time,x,regime\n")
            for t, v, r in zip(self.times[keep], self.x[keep], self.regime[keep]):
                fh.write(f"{float(t)!r},{float(v)!r},{int(r) + 1}\n")


def history_lookup(traj: TrajectoryGrid, t: float) -> float:
    """Value at time t: exact at grid points, linear interpolation between them."""
    times = traj.times
    if t < times[0] or t > times[-1]:
        raise HistoryRangeError(f"t = {t} outside the computed range [{times[0]}, {times[-1]}]")
    j = int(np.searchsorted(times, t, side="left"))
    if times[j] == t:
        return float(traj.x[j])
    lo = j - 1
    w = (t - times[lo]) / (times[j] - times[lo])
    return float(traj.x[lo] + w * (traj.x[j] - traj.x[lo]))


def integrate_partition(
    model: ValidatedModel,
    sim_times: np.ndarray,
    states: np.ndarray,
    increments: np.ndarray,
    scheme: str,
) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """Run one scheme over an explicit substep partition.

    Returns (full_times, x, n_history, negative_excursion) with the history
    segment prepended. The partition must not straddle regime changes; the
    callers guarantee that by splitting at jump times.
    """
    if scheme not in ("voc", "em"):
        raise ValueError(f"unknown scheme {scheme!r}")
    hist_times = model.history.grid_times()
    hist_x = np.asarray(model.history.value_at(hist_times), dtype=float)
    n_hist = hist_times.size - 1
    full_times = np.concatenate([hist_times[:-1], sim_times])

    h = np.diff(sim_times)
    if increments.size != h.size:
        raise ValueError(
            f"noise record has {increments.size} increments, partition needs {h.size}"
        )
    lo, w = _delay_refs(full_times, sim_times[:-1], model.tau[states])

    x = np.zeros(full_times.size)
    x[: n_hist + 1] = hist_x
    negative = False
    if scheme == "voc":
        _voc_kernel(x, n_hist, h, increments, states, lo, w,
                    model.delta, model.p, model.a, model.sigma)
    else:
        negative = bool(
            _em_kernel(x, n_hist, h, increments, states, lo, w,
                       model.delta, model.p, model.a, model.sigma)
        )
    return full_times, x, n_hist, negative


def _run_scheme(
    model: ValidatedModel,
    path: RegimePath,
    dt: float,
    horizon: float,
    stream: NoiseStream | NoiseRecord,
    scheme: str,
) -> TrajectoryGrid:
    if path.horizon < horizon:
        raise ValueError(f"regime path covers [0, {path.horizon}], horizon {horizon} requested")

    sim_times, states = build_partition(model, path, dt, horizon)
    h = np.diff(sim_times)
    if isinstance(stream, NoiseRecord):
        record = stream
    else:
        record = NoiseRecord.generate(stream, h)

    full_times, x, n_hist, negative = integrate_partition(
        model, sim_times, states, record.increments, scheme
    )

    regime = np.empty(full_times.size, dtype=np.int64)
    regime[: n_hist + 1] = int(path.states[0])
    regime[n_hist:-1] = states
    regime[-1] = states[-1]

    return TrajectoryGrid(
        times=full_times, x=x, regime=regime, noise=record, n_history=n_hist,
        scheme=scheme, dt=float(dt), horizon=float(horizon), negative_excursion=negative,
    )


def simulate_voc(
    model: ValidatedModel,
    path: RegimePath,
    dt: float,
    horizon: float,
    stream: NoiseStream | NoiseRecord,
) -> TrajectoryGrid:
    """Positivity-preserving variation-of-constants trajectory on [0, horizon]."""
    return _run_scheme(model, path, dt, horizon, stream, "voc")


def simulate_em(
    model: ValidatedModel,
    path: RegimePath,
    dt: float,
    horizon: float,
    stream: NoiseStream | NoiseRecord,
) -> TrajectoryGrid:
    """Euler-Maruyama trajectory on [0, horizon]; negative excursions are flagged."""
    return _run_scheme(model, path, dt, horizon, stream, "em")
