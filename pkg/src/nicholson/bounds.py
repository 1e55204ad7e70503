"""Analytic bounds on the solution: moments, Lyapunov exponent bracket, and decay rates.

All quantities are closed-form functions of the derived constants except the
decay rate kappa, which is the unique root of ``k*vt*tau*exp(k*tau) + k = mu_hat``
on (0, mu_hat] and is found by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ctmc import StationaryDistribution, stationary_distribution
from .errors import NonPositiveMuError, NonUniformDelayError
from .model import DerivedConstants, ValidatedModel

KAPPA_RESIDUAL_TOL = 1e-12


def lemma1_bound(a: float) -> float:
    """Upper bound (a*e)^-1 for x * exp(-a*x) over x >= 0; requires a > 0."""
    if not a > 0.0:
        raise ValueError(f"a = {a}: must be > 0")
    return 1.0 / (a * math.e)


def lemma2_c(a: float, b: float) -> float:
    """Upper bound for (a*x^2 + b*x) / (1 + x^2) over all real x; requires b > 0.

    Equals (a + sqrt(a^2 + b^2)) / 2 for a >= 0 and -b^2 / (4*a) for a < 0.
    """
    if not b > 0.0:
        raise ValueError(f"b = {b}: must be > 0")
    if a >= 0.0:
        return (a + math.hypot(a, b)) / 2.0
    return -b * b / (4.0 * a)


def theorem22_bounds(dc: DerivedConstants) -> tuple[float, float, float, float]:
    """Min/max-aggregated bounds: (m_hat, w_hat/alpha, -d_check, c_check/2).

    m_hat bounds the long-run moment E[X^theta], w_hat/alpha the long-run
    time average of it, and [-d_check, c_check/2] brackets the sample
    Lyapunov exponent.
    """
    return dc.m_hat, dc.w_hat / dc.alpha, -dc.d_check, dc.c_check / 2.0


def theorem23_bounds(
    dc: DerivedConstants, pi: StationaryDistribution
) -> tuple[float, float, float]:
    """Stationary-weighted bounds: (sum pi_i W_i / alpha, -sum pi_i d_i, sum pi_i C_i / 2)."""
    w = float(pi.pi @ dc.big_w) / dc.alpha
    lower = -float(pi.pi @ dc.d)
    upper = float(pi.pi @ dc.big_c) / 2.0
    return w, lower, upper


def nstar(dc: DerivedConstants, pi: StationaryDistribution) -> float:
    """Upper bound sum(pi*gamma) / sum(pi*d) for the limit inferior of the population."""
    return float(pi.pi @ dc.gamma) / float(pi.pi @ dc.d)


def lambda_rate(dc: DerivedConstants, pi: StationaryDistribution) -> float:
    """Extinction rate sum(pi_i * (d_i - p_i)) for the zero-delay criterion."""
    return float(pi.pi @ (dc.d - dc.p))


def kappa_root(mu_hat: float, vartheta: float, tau: float) -> float:
    """Unique root of ``k*vartheta*tau*exp(k*tau) + k = mu_hat`` in (0, mu_hat].

    The left side is continuous, strictly increasing, 0 at k = 0 and at least
    mu_hat at k = mu_hat, so bisection on [0, mu_hat] converges; tau = 0
    degenerates to k = mu_hat exactly.
    """
    if not mu_hat > 0.0:
        raise NonPositiveMuError(f"mu_hat = {mu_hat}: must be > 0")
    if not vartheta > 0.0:
        raise ValueError(f"vartheta = {vartheta}: must be > 0")
    if tau < 0.0:
        raise ValueError(f"tau = {tau}: must be >= 0")
    if tau == 0.0:
        return float(mu_hat)

    def f(k: float) -> float:
        return k * vartheta * tau * math.exp(k * tau) + k - mu_hat

    lo, hi = 0.0, float(mu_hat)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    root = hi if abs(f(hi)) < abs(f(lo)) else lo
    if abs(f(root)) >= KAPPA_RESIDUAL_TOL:
        raise NonPositiveMuError(
            f"bisection failed to reach residual {KAPPA_RESIDUAL_TOL} (got {f(root)!r})"
        )
    return root


def kappa_for_model(
    model: ValidatedModel, dc: DerivedConstants, vartheta: Optional[float] = None
) -> float:
    """Decay rate for a model with a single delay and saturation constant.

    Requires every regime to share tau and a, mu_hat > 0, and
    vartheta > max_i p_i. ``vartheta=None`` selects 1.05 * max_i p_i.
    """
    if np.ptp(model.tau) != 0.0:
        raise NonUniformDelayError(f"delays {model.tau.tolist()} differ across regimes")
    if np.ptp(model.a) != 0.0:
        raise NonUniformDelayError(
            f"saturation constants {model.a.tolist()} differ across regimes"
        )
    p_check = float(model.p.max())
    if vartheta is None:
        vartheta = 1.05 * p_check if p_check > 0.0 else 1.0
    if not vartheta > p_check:
        raise ValueError(f"vartheta = {vartheta} must exceed max_i p_i = {p_check}")
    return kappa_root(dc.mu_hat, vartheta, float(model.tau[0]))


@dataclass(frozen=True, eq=False)
class TheoremBounds:
    """Every analytic estimate for one (model, theta, alpha, vartheta) choice.

    ``kappa`` is present only when the decay hypotheses hold (uniform delay
    and saturation, mu_hat > 0, vartheta > max p); ``kappa_note`` says why it
    is absent otherwise. ``lam`` is the zero-delay extinction rate, with the
    borderline lam = 0 case recorded as a note rather than asserted.
    """

    theta: float
    alpha: float
    vartheta: float
    pi: StationaryDistribution
    moment_bound: float
    time_avg_bound: float
    lyap_lower_minmax: float
    lyap_upper_minmax: float
    time_avg_bound_pi: float
    lyap_lower: float
    lyap_upper: float
    nstar: float
    lam: float
    kappa: Optional[float]
    kappa_note: str = ""


def compute_theorem_bounds(
    model: ValidatedModel, dc: DerivedConstants, vartheta: Optional[float] = None
) -> TheoremBounds:
    """Assemble all bounds; requires an irreducible chain for the pi-weighted ones."""
    pi = stationary_distribution(model.q)
    m_hat, w_over_alpha, low_mm, up_mm = theorem22_bounds(dc)
    w_pi, low_pi, up_pi = theorem23_bounds(dc, pi)

    p_check = float(model.p.max())
    if vartheta is None:
        vartheta = 1.05 * p_check if p_check > 0.0 else 1.0

    kappa: Optional[float] = None
    note = ""
    if np.ptp(model.tau) != 0.0 or np.ptp(model.a) != 0.0:
        note = "delay or saturation constant varies across regimes"
    elif dc.mu_hat <= 0.0:
        note = f"mu_hat = {dc.mu_hat!r} is not positive"
    elif not vartheta > p_check:
        note = f"vartheta = {vartheta!r} does not exceed max p = {p_check!r}"
    else:
        kappa = kappa_root(dc.mu_hat, vartheta, float(model.tau[0]))

    return TheoremBounds(
        theta=dc.theta,
        alpha=dc.alpha,
        vartheta=float(vartheta),
        pi=pi,
        moment_bound=m_hat,
        time_avg_bound=w_over_alpha,
        lyap_lower_minmax=low_mm,
        lyap_upper_minmax=up_mm,
        time_avg_bound_pi=w_pi,
        lyap_lower=low_pi,
        lyap_upper=up_pi,
        nstar=nstar(dc, pi),
        lam=lambda_rate(dc, pi),
        kappa=kappa,
        kappa_note=note,
    )
