"""Exact continuous-time Markov chain machinery for the switching process.

Paths are sampled event by event (exponential holding times, embedded jump
chain), so regime dwell times carry no discretization bias. The invariant
distribution comes from a direct linear solve of the balance equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ReducibleError, SingularSystemError
from .model import GeneratorMatrix

PI_RESIDUAL_TOL = 1e-10


def _as_q(q) -> np.ndarray:
    if isinstance(q, GeneratorMatrix):
        return q.as_array()
    return np.asarray(q, dtype=float)


@dataclass(frozen=True, eq=False)
class StationaryDistribution:
    """Probability vector pi with pi @ Q = 0."""

    pi: np.ndarray

    def __post_init__(self):
        self.pi.setflags(write=False)

    def __len__(self) -> int:
        return self.pi.size

    def __getitem__(self, i: int) -> float:
        return float(self.pi[i])


@dataclass(frozen=True, eq=False)
class RegimePath:
    """A realized chain trajectory on [0, horizon].

    ``times[0] == 0``, times strictly increase, consecutive states differ,
    and the path is right-continuous piecewise constant. States are 0-based.
    """

    times: np.ndarray
    states: np.ndarray
    horizon: float

    def __post_init__(self):
        if self.times[0] != 0.0:
            raise ValueError("regime path must start at time 0")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("regime path event times must strictly increase")
        if self.times[-1] > self.horizon:
            raise ValueError("regime path event beyond the horizon")
        self.times.setflags(write=False)
        self.states.setflags(write=False)

    @property
    def n_jumps(self) -> int:
        return self.times.size - 1

    def state_at(self, t: float) -> int:
        """Active state at time t (right-continuous)."""
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return int(self.states[max(idx, 0)])

    def jump_times(self) -> np.ndarray:
        return self.times[1:]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("time,state\n")
            for t, s in zip(self.times, self.states):
                fh.write(f"{float(t)!r},{int(s) + 1}\n")


def is_irreducible(q) -> bool:
    """True iff the directed graph with edges q_ij > 0 (i != j) is strongly connected."""
    qa = _as_q(q)
    m = qa.shape[0]
    if m == 1:
        return True
    adj = qa > 0.0
    np.fill_diagonal(adj, False)

    def reaches_all(edges: np.ndarray) -> bool:
        seen = np.zeros(m, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            i = stack.pop()
            for j in np.nonzero(edges[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        return bool(seen.all())

    return reaches_all(adj) and reaches_all(adj.T)


def stationary_distribution(q) -> StationaryDistribution:
    """Solve pi @ Q = 0, sum(pi) = 1 by replacing one balance row with normalization.

    Dense elimination with partial pivoting; the state space is small.
    """
    qa = _as_q(q)
    if not is_irreducible(qa):
        raise ReducibleError("generator is reducible; no unique invariant distribution")
    m = qa.shape[0]
    lhs = qa.T.copy()
    lhs[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"balance equations are singular: {exc}") from exc
    # Irreducibility gives strictly positive entries up to roundoff.
    pi = np.where(np.abs(pi) < 1e-13, np.abs(pi), pi)
    residual = float(np.max(np.abs(pi @ qa)))
    if np.any(pi < 0.0) or abs(pi.sum() - 1.0) > 1e-12 or residual > PI_RESIDUAL_TOL:
        raise SingularSystemError(
            f"invariant distribution failed checks (residual {residual!r})"
        )
    return StationaryDistribution(pi=pi)


def sample_path(q, initial_state: int, horizon: float, rng: np.random.Generator) -> RegimePath:
    """Sample an exact chain path on [0, horizon].

    The holding time in state i is Exponential(-q_ii) and the next state j is
    chosen with probability q_ij / (-q_ii). A state with q_ii = 0 is absorbing.
    Deterministic given the generator state.
    """
    qa = _as_q(q)
    m = qa.shape[0]
    if not 0 <= initial_state < m:
        raise ValueError(f"initial_state {initial_state} outside 0..{m - 1}")
    if horizon <= 0.0:
        raise ValueError("horizon must be > 0")

    times = [0.0]
    states = [int(initial_state)]
    t = 0.0
    s = int(initial_state)
    while True:
        rate = -qa[s, s]
        if rate <= 0.0:
            break  # absorbing
        t = t + rng.exponential(1.0 / rate)
        if t >= horizon:
            break
        probs = np.maximum(qa[s], 0.0)
        probs[s] = 0.0
        cdf = np.cumsum(probs) / rate
        s = int(np.searchsorted(cdf, rng.random(), side="right"))
        s = min(s, m - 1)
        times.append(t)
        states.append(s)

    return RegimePath(
        times=np.array(times), states=np.array(states, dtype=np.int64), horizon=float(horizon)
    )


def occupation_fractions(path: RegimePath, horizon: float, m: int | None = None) -> np.ndarray:
    """Fraction of [0, horizon] the path spends in each state; sums to 1.

    Time averages of any per-state vector v over the path are, by
    construction, the dot product of this vector with v.
    """
    if horizon <= 0.0:
        raise ValueError("horizon must be > 0")
    if horizon > path.horizon:
        raise ValueError(f"path covers only [0, {path.horizon}]")
    if m is None:
        m = int(path.states.max()) + 1
    out = np.zeros(m)
    bounds = np.append(path.times, max(float(path.times[-1]), horizon))
    lengths = np.maximum(np.minimum(bounds[1:], horizon) - np.minimum(bounds[:-1], horizon), 0.0)
    np.add.at(out, path.states, lengths)
    return out / horizon
