"""Model definition, validation, and the derived constants of the switching blowflies equation.

The population follows

    dX(t) = [-delta_r X(t) + p_r X(t - tau_r) exp(-a_r X(t - tau_r))] dt
            + sigma_r X(t) dB(t),

where ``r`` is a continuous-time Markov chain on ``{1..m}`` with generator Q,
independent of the Brownian motion, and the initial history is a strictly
positive continuous function on ``[-tau_max, 0]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AlphaOutOfRangeError,
    ModelValidationError,
    ThetaOutOfRangeError,
    Violation,
)

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class RegimeParams:
    """Per-regime parameters of the blowflies equation.

    delta: adult death rate (1/time, > 0)
    p:     maximum egg production rate (1/time, >= 0)
    tau:   generation delay (time, >= 0)
    a:     inverse of the population size at maximum reproduction (> 0)
    sigma: environmental noise intensity (>= 0)
    """

    delta: float
    p: float
    tau: float
    a: float
    sigma: float


@dataclass(frozen=True)
class GeneratorMatrix:
    """Infinitesimal generator of the switching chain.

    Rows sum to zero and off-diagonal entries are nonnegative; for a single
    state the only entry is 0.
    """

    rows: tuple[tuple[float, ...], ...]

    @classmethod
    def from_array(cls, q: Sequence[Sequence[float]]) -> "GeneratorMatrix":
        return cls(tuple(tuple(float(v) for v in row) for row in q))

    @property
    def m(self) -> int:
        return len(self.rows)

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)


@dataclass(frozen=True)
class InitialHistory:
    """Initial segment of the population on ``[-tau_max, 0]``.

    Either a strictly positive constant, or samples ``(t, x)`` with strictly
    increasing times (first <= -tau_max, last = 0) interpolated piecewise
    linearly. Strictly positive samples make the interpolant strictly
    positive everywhere.
    """

    tau_max: float
    constant: Optional[float] = None
    samples: Optional[tuple[tuple[float, float], ...]] = None

    @classmethod
    def from_constant(cls, value: float, tau_max: float) -> "InitialHistory":
        return cls(tau_max=float(tau_max), constant=float(value))

    @classmethod
    def from_samples(
        cls, samples: Sequence[tuple[float, float]], tau_max: float
    ) -> "InitialHistory":
        pts = tuple((float(t), float(x)) for t, x in samples)
        return cls(tau_max=float(tau_max), samples=pts)

    def grid_times(self) -> np.ndarray:
        """Times at which the history is pinned exactly onto the grid."""
        if self.samples is not None:
            return np.array([t for t, _ in self.samples], dtype=float)
        if self.tau_max > 0.0:
            return np.array([-self.tau_max, 0.0])
        return np.array([0.0])

    def value_at(self, t: float | np.ndarray):
        if self.constant is not None:
            return np.full_like(np.asarray(t, dtype=float), self.constant) if np.ndim(t) else self.constant
        ts = np.array([s for s, _ in self.samples])
        xs = np.array([x for _, x in self.samples])
        return np.interp(t, ts, xs)


@dataclass(frozen=True)
class ModelSpec:
    """Raw, possibly invalid model description as read from configuration."""

    regimes: tuple[RegimeParams, ...]
    generator: GeneratorMatrix
    history: InitialHistory
    initial_regime: int = 1  # 1-based, matching configuration files


@dataclass(frozen=True, eq=False)
class ValidatedModel:
    """A checked model with parameters unpacked into read-only arrays.

    ``initial_state`` is 0-based; configuration files and CSV outputs use
    1-based regime labels.
    """

    spec: ModelSpec
    m: int
    delta: np.ndarray
    p: np.ndarray
    tau: np.ndarray
    a: np.ndarray
    sigma: np.ndarray
    q: np.ndarray
    tau_max: float
    initial_state: int
    irreducible: bool

    @property
    def history(self) -> InitialHistory:
        return self.spec.history


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def validate_model(spec: ModelSpec) -> ValidatedModel:
    """Check every structural invariant and return the validated model.

    Violations are collected exhaustively and raised together in a single
    ``ModelValidationError`` so a bad configuration can be fixed in one pass.
    Irreducibility of the generator is recorded as a flag; it only becomes an
    error where an invariant distribution is actually required.
    """
    from .ctmc import is_irreducible

    bad: list[Violation] = []
    m = len(spec.regimes)
    if m < 1:
        bad.append(Violation("DimensionMismatch", "regimes: at least one regime required"))

    for i, r in enumerate(spec.regimes, start=1):
        if not (r.delta > 0.0):
            bad.append(Violation("InvalidParameter", f"regimes[{i}].delta = {r.delta}: must be > 0"))
        if not (r.a > 0.0):
            bad.append(Violation("InvalidParameter", f"regimes[{i}].a = {r.a}: must be > 0"))
        if r.p < 0.0:
            bad.append(Violation("InvalidParameter", f"regimes[{i}].p = {r.p}: must be >= 0"))
        if r.tau < 0.0:
            bad.append(Violation("InvalidParameter", f"regimes[{i}].tau = {r.tau}: must be >= 0"))
        if r.sigma < 0.0:
            bad.append(Violation("InvalidParameter", f"regimes[{i}].sigma = {r.sigma}: must be >= 0"))

    try:
        q = spec.generator.as_array()
    except ValueError:
        bad.append(Violation("NonGenerator", "q_matrix: rows have unequal lengths"))
        q = np.zeros((m, m)) if m >= 1 else np.zeros((1, 1))
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        bad.append(Violation("NonGenerator", f"q_matrix: shape {q.shape} is not square"))
    else:
        if m >= 1 and q.shape[0] != m:
            bad.append(
                Violation(
                    "DimensionMismatch",
                    f"q_matrix: dimension {q.shape[0]} does not match {m} regimes",
                )
            )
        for i in range(q.shape[0]):
            row_sum = float(np.sum(q[i]))
            if abs(row_sum) > ROW_SUM_TOL:
                bad.append(Violation("NonGenerator", f"q_matrix row {i + 1} sums to {row_sum!r}, not 0"))
            for j in range(q.shape[1]):
                if i != j and q[i, j] < 0.0:
                    bad.append(
                        Violation("NonGenerator", f"q_matrix[{i + 1}][{j + 1}] = {q[i, j]} is negative")
                    )

    h = spec.history
    tau_needed = max((r.tau for r in spec.regimes), default=0.0)
    if h.tau_max < 0.0:
        bad.append(Violation("NonPositiveHistory", f"history.tau_max = {h.tau_max}: must be >= 0"))
    if h.tau_max < tau_needed:
        bad.append(
            Violation(
                "NonPositiveHistory",
                f"history.tau_max = {h.tau_max} does not cover the largest delay {tau_needed}",
            )
        )
    if (h.constant is None) == (h.samples is None):
        bad.append(Violation("NonPositiveHistory", "history: exactly one of constant/samples required"))
    elif h.constant is not None:
        if not (h.constant > 0.0):
            bad.append(Violation("NonPositiveHistory", f"history.constant = {h.constant}: must be > 0"))
    else:
        ts = [t for t, _ in h.samples]
        xs = [x for _, x in h.samples]
        if any(x <= 0.0 for x in xs):
            bad.append(Violation("NonPositiveHistory", "history.samples: all values must be > 0"))
        if any(t1 >= t2 for t1, t2 in zip(ts, ts[1:])):
            bad.append(Violation("NonPositiveHistory", "history.samples: times must be strictly increasing"))
        if not ts or ts[-1] != 0.0:
            bad.append(Violation("NonPositiveHistory", "history.samples: last sample time must be 0"))
        if not ts or ts[0] > -h.tau_max:
            bad.append(
                Violation(
                    "NonPositiveHistory",
                    f"history.samples: first sample time {ts[0] if ts else None} must be <= {-h.tau_max}",
                )
            )

    if not (1 <= spec.initial_regime <= m):
        bad.append(
            Violation("InvalidParameter", f"initial_regime = {spec.initial_regime}: must be in 1..{m}")
        )

    if bad:
        raise ModelValidationError(bad)

    return ValidatedModel(
        spec=spec,
        m=m,
        delta=_freeze(np.array([r.delta for r in spec.regimes])),
        p=_freeze(np.array([r.p for r in spec.regimes])),
        tau=_freeze(np.array([r.tau for r in spec.regimes])),
        a=_freeze(np.array([r.a for r in spec.regimes])),
        sigma=_freeze(np.array([r.sigma for r in spec.regimes])),
        q=_freeze(q),
        tau_max=float(h.tau_max),
        initial_state=spec.initial_regime - 1,
        irreducible=is_irreducible(q),
    )


def theta_upper_bound(model: ValidatedModel) -> float:
    """Supremum of admissible moment orders, ``1 + 2 * min_i(delta_i / sigma_i^2)``.

    Regimes with sigma = 0 impose no restriction; if every regime is
    noise-free the bound is +inf.
    """
    with np.errstate(divide="ignore"):
        rho = np.where(model.sigma > 0.0, model.delta / model.sigma**2, np.inf)
    return float(1.0 + 2.0 * rho.min())


@dataclass(frozen=True, eq=False)
class DerivedConstants:
    """Every per-regime constant and its min (hat) / max (check) aggregate.

    beta  = theta * (delta + (1 - theta) * sigma^2 / 2)
    gamma = p / (a * e)
    rho   = delta / sigma^2            (+inf when sigma = 0)
    d     = delta + sigma^2 / 2
    mu    = 2*delta - p - sigma^2
    big_m = max_{x >= 0} theta*gamma*x^(theta-1) - beta*x^theta
    big_w = max_{x >= 0} theta*gamma*x^(theta-1) - (beta - alpha)*x^theta
    big_c = (sigma^2 - 2*delta + sqrt((sigma^2 - 2*delta)^2 + 4*gamma^2)) / 2
            when delta <= sigma^2/2, else gamma^2 / (2*delta - sigma^2)
    """

    theta: float
    alpha: float
    beta: np.ndarray
    gamma: np.ndarray
    rho: np.ndarray
    d: np.ndarray
    mu: np.ndarray
    big_m: np.ndarray
    big_w: np.ndarray
    big_c: np.ndarray
    p: np.ndarray  # raw birth rates, carried along for the extinction rate
    beta_hat: float = field(init=False)
    beta_check: float = field(init=False)
    gamma_hat: float = field(init=False)
    gamma_check: float = field(init=False)
    rho_hat: float = field(init=False)
    rho_check: float = field(init=False)
    d_hat: float = field(init=False)
    d_check: float = field(init=False)
    mu_hat: float = field(init=False)
    mu_check: float = field(init=False)
    m_hat: float = field(init=False)
    m_check: float = field(init=False)
    w_hat: float = field(init=False)
    w_check: float = field(init=False)
    c_hat: float = field(init=False)
    c_check: float = field(init=False)

    def __post_init__(self):
        for name in ("beta", "gamma", "rho", "d", "mu", "big_m", "big_w", "big_c", "p"):
            _freeze(getattr(self, name))
        pairs = {
            "beta": self.beta, "gamma": self.gamma, "rho": self.rho, "d": self.d,
            "mu": self.mu, "m": self.big_m, "w": self.big_w, "c": self.big_c,
        }
        for key, vec in pairs.items():
            object.__setattr__(self, f"{key}_hat", float(np.min(vec)))
            object.__setattr__(self, f"{key}_check", float(np.max(vec)))


def _peak_value(theta: float, gamma: np.ndarray, coeff: np.ndarray) -> np.ndarray:
    """Maximum of ``theta*gamma*x^(theta-1) - coeff*x^theta`` over x >= 0.

    For theta > 1 the maximum sits at x* = (theta-1)*gamma/coeff and equals
    gamma * x*^(theta-1); for theta = 1 the supremum gamma is attained at the
    boundary x = 0. Zero gamma gives a zero maximum.
    """
    if theta == 1.0:
        return gamma.copy()
    xstar = (theta - 1.0) * gamma / coeff
    return np.where(gamma > 0.0, gamma * xstar ** (theta - 1.0), 0.0)


def derived_constants(
    model: ValidatedModel, theta: float = 1.0, alpha: Optional[float] = None
) -> DerivedConstants:
    """Evaluate all derived constants for a moment order and rate constant.

    ``theta`` must lie in ``[1, theta_upper_bound(model))`` and ``alpha`` in
    ``(0, beta_hat)``; ``alpha=None`` selects ``beta_hat / 2``. Pure function:
    identical inputs give bit-identical outputs.
    """
    ub = theta_upper_bound(model)
    if not (1.0 <= theta < ub):
        raise ThetaOutOfRangeError(f"theta = {theta} outside [1, {ub})")

    delta, p, a, sigma = model.delta, model.p, model.a, model.sigma
    beta = theta * (delta + (1.0 - theta) * sigma**2 / 2.0)
    gamma = p / (a * math.e)
    with np.errstate(divide="ignore"):
        rho = np.where(sigma > 0.0, delta / sigma**2, np.inf)
    d = delta + sigma**2 / 2.0
    mu = 2.0 * delta - p - sigma**2

    beta_hat = float(beta.min())
    if alpha is None:
        alpha = beta_hat / 2.0
    if not (0.0 < alpha < beta_hat):
        raise AlphaOutOfRangeError(f"alpha = {alpha} outside (0, {beta_hat})")

    big_m = _peak_value(theta, gamma, beta)
    big_w = _peak_value(theta, gamma, beta - alpha)

    diff = sigma**2 - 2.0 * delta
    big_c = np.where(
        delta <= sigma**2 / 2.0,
        (diff + np.sqrt(diff**2 + 4.0 * gamma**2)) / 2.0,
        gamma**2 / np.where(diff < 0.0, -diff, 1.0),  # guarded denominator, branch unused otherwise
    )

    return DerivedConstants(
        theta=float(theta), alpha=float(alpha), beta=beta, gamma=gamma, rho=rho,
        d=d, mu=mu, big_m=big_m, big_w=big_w, big_c=big_c, p=p.copy(),
    )
