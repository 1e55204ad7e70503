"""Model validation and derived-constant tests."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nicholson import (
    AlphaOutOfRangeError,
    GeneratorMatrix,
    InitialHistory,
    ModelSpec,
    ModelValidationError,
    RegimeParams,
    ThetaOutOfRangeError,
    derived_constants,
    theta_upper_bound,
    validate_model,
)

from conftest import CANONICAL_Q, canonical_spec, make_spec, single_regime_spec
from oracles import grid_peak_many

GAMMA_CANONICAL = np.array([10.0 / math.e, 10.0 / math.e, 80.0 / (3.0 * math.e)])


def test_canonical_model_validates(canonical_model):
    assert canonical_model.m == 3
    assert canonical_model.irreducible
    assert canonical_model.initial_state == 2
    assert canonical_model.tau_max == 1.0


def test_single_regime_degenerate_chain_is_valid():
    model = validate_model(single_regime_spec(1.0, 5.0, 1.0, 1.0, 2.0))
    assert model.m == 1
    assert model.irreducible


def test_bad_row_sum_is_rejected():
    spec = make_spec([1.0, 1.0, 1.0], [0.0] * 3, [0.0] * 3, [1.0] * 3, [0.0] * 3,
                     [[-10.0, 4.0, 5.0], [2.0, -3.0, 1.0], [3.0, 5.0, -8.0]])
    with pytest.raises(ModelValidationError) as err:
        validate_model(spec)
    assert any(v.code == "NonGenerator" for v in err.value.violations)


def test_violations_are_collected_exhaustively():
    spec = ModelSpec(
        regimes=(RegimeParams(delta=-1.0, p=-2.0, tau=1.0, a=0.5, sigma=1.0),),
        generator=GeneratorMatrix.from_array([[-1.0, 1.0], [1.0, -1.0]]),
        history=InitialHistory.from_constant(-3.0, 1.0),
        initial_regime=7,
    )
    with pytest.raises(ModelValidationError) as err:
        validate_model(spec)
    codes = {v.code for v in err.value.violations}
    assert {"InvalidParameter", "DimensionMismatch", "NonPositiveHistory"} <= codes
    assert len(err.value.violations) >= 4


def test_negative_offdiagonal_is_rejected():
    spec = make_spec([1.0, 1.0], [0.0] * 2, [0.0] * 2, [1.0] * 2, [0.0] * 2,
                     [[1.0, -1.0], [1.0, -1.0]])
    with pytest.raises(ModelValidationError) as err:
        validate_model(spec)
    assert any(v.code == "NonGenerator" for v in err.value.violations)


def test_history_sample_checks():
    bad = ModelSpec(
        regimes=(RegimeParams(1.0, 1.0, 1.0, 1.0, 0.0),),
        generator=GeneratorMatrix.from_array([[0.0]]),
        history=InitialHistory.from_samples([(-0.5, 1.0), (0.0, 2.0)], tau_max=1.0),
        initial_regime=1,
    )
    with pytest.raises(ModelValidationError) as err:
        validate_model(bad)
    assert any("first sample" in v.message for v in err.value.violations)

    good = ModelSpec(
        regimes=(RegimeParams(1.0, 1.0, 1.0, 1.0, 0.0),),
        generator=GeneratorMatrix.from_array([[0.0]]),
        history=InitialHistory.from_samples([(-1.0, 1.0), (-0.25, 2.0), (0.0, 0.5)], tau_max=1.0),
        initial_regime=1,
    )
    model = validate_model(good)
    assert model.history.value_at(-0.25) == 2.0
    assert model.history.value_at(-0.625) == pytest.approx(1.5)


def test_theta_upper_bound_canonical(canonical_model):
    rho = canonical_model.delta / canonical_model.sigma**2
    assert rho == pytest.approx([0.8889, 0.25, 0.4444], abs=1e-4)
    assert theta_upper_bound(canonical_model) == pytest.approx(1.5, abs=1e-12)


def test_theta_upper_bound_deterministic_limit():
    model = validate_model(make_spec([1.0, 2.0], [0.0] * 2, [0.0] * 2, [1.0] * 2,
                                     [0.0, 0.0], [[-1.0, 1.0], [1.0, -1.0]]))
    assert theta_upper_bound(model) == math.inf


def test_theta_upper_bound_single_regime():
    model = validate_model(single_regime_spec(1.0, 5.0, 1.0, 1.0, 2.0))
    assert theta_upper_bound(model) == pytest.approx(1.5, abs=1e-12)


def test_derived_constants_canonical(canonical_model):
    dc = derived_constants(canonical_model, theta=1.0)
    assert np.array_equal(dc.d, [3.125, 3.0, 8.5])
    assert dc.gamma == pytest.approx(GAMMA_CANONICAL, rel=1e-12)
    assert dc.mu == pytest.approx([-2.25, -4.0, -9.0], abs=1e-12)
    # Two-branch split: regime 1 has delta > sigma^2/2, regimes 2 and 3 do not.
    assert dc.big_c[0] == pytest.approx(GAMMA_CANONICAL[0] ** 2 / 1.75, rel=1e-12)
    assert dc.big_c[0] == pytest.approx(7.7334, abs=1e-4)
    assert dc.big_c[1] == pytest.approx(4.8123, abs=1e-4)
    assert dc.big_c[2] == pytest.approx(10.3229, abs=1e-3)
    # theta = 1 closed forms collapse to gamma.
    assert np.array_equal(dc.big_m, dc.gamma)
    assert np.array_equal(dc.big_w, dc.gamma)
    assert dc.beta == pytest.approx([2.0, 1.0, 4.0], abs=1e-15)


def test_zero_birth_rate_zeroes_the_peaks():
    model = validate_model(make_spec([1.0, 2.0], [0.0, 0.0], [0.0] * 2, [1.0] * 2,
                                     [1.0, 1.0], [[-1.0, 1.0], [1.0, -1.0]]))
    dc = derived_constants(model, theta=1.2)
    assert np.array_equal(dc.gamma, [0.0, 0.0])
    assert np.array_equal(dc.big_m, [0.0, 0.0])
    assert np.array_equal(dc.big_w, [0.0, 0.0])


def test_sigma_zero_conventions():
    model = validate_model(single_regime_spec(1.0, 2.0, 0.0, 1.0, 0.0))
    dc = derived_constants(model, theta=1.5, alpha=0.5)
    assert dc.rho[0] == math.inf
    assert dc.d[0] == 1.0  # equality with delta iff sigma = 0
    assert dc.big_c[0] == pytest.approx(dc.gamma[0] ** 2 / 2.0, rel=1e-12)


def test_theta_and_alpha_range_errors(canonical_model):
    with pytest.raises(ThetaOutOfRangeError):
        derived_constants(canonical_model, theta=1.5)
    with pytest.raises(ThetaOutOfRangeError):
        derived_constants(canonical_model, theta=0.9)
    with pytest.raises(AlphaOutOfRangeError):
        derived_constants(canonical_model, theta=1.0, alpha=1.0)  # beta_hat = 1
    with pytest.raises(AlphaOutOfRangeError):
        derived_constants(canonical_model, theta=1.0, alpha=0.0)


def test_derived_constants_is_pure(canonical_model):
    a = derived_constants(canonical_model, theta=1.2, alpha=0.3)
    b = derived_constants(canonical_model, theta=1.2, alpha=0.3)
    for name in ("beta", "gamma", "rho", "d", "mu", "big_m", "big_w", "big_c"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_permutation_invariance():
    rng = np.random.default_rng(5)
    perm = np.array([2, 0, 1])
    spec = canonical_spec()
    regs = spec.regimes
    q = np.array(CANONICAL_Q)
    spec_p = ModelSpec(
        regimes=tuple(regs[i] for i in perm),
        generator=GeneratorMatrix.from_array(q[np.ix_(perm, perm)]),
        history=spec.history,
        initial_regime=1,
    )
    dc = derived_constants(validate_model(spec), theta=1.2, alpha=0.4)
    dcp = derived_constants(validate_model(spec_p), theta=1.2, alpha=0.4)
    for name in ("beta", "gamma", "d", "mu", "big_m", "big_w", "big_c"):
        assert np.array_equal(getattr(dc, name)[perm], getattr(dcp, name))
    for agg in ("beta_hat", "beta_check", "m_hat", "m_check", "w_hat", "w_check",
                "c_hat", "c_check", "d_hat", "d_check"):
        assert getattr(dc, agg) == getattr(dcp, agg)


@st.composite
def random_regime(draw):
    delta = draw(st.floats(0.1, 5.0))
    sigma = draw(st.floats(0.1, 3.0))
    p = draw(st.floats(0.0, 10.0))
    a = draw(st.floats(0.05, 5.0))
    return RegimeParams(delta=delta, p=p, tau=0.0, a=a, sigma=sigma)


@given(regime=random_regime(), frac=st.floats(1e-6, 1.0 - 1e-9))
@settings(max_examples=100, deadline=None)
def test_beta_positive_inside_admissible_range(regime, frac):
    model = validate_model(ModelSpec(
        regimes=(regime,),
        generator=GeneratorMatrix.from_array([[0.0]]),
        history=InitialHistory.from_constant(1.0, 0.0),
        initial_regime=1,
    ))
    ub = theta_upper_bound(model)
    theta = 1.0 + frac * (min(ub, 4.0) - 1.0) * 0.999999
    dc = derived_constants(model, theta=theta, alpha=None)
    assert np.all(dc.beta > 0.0)
    assert np.all(dc.d >= model.delta)


def test_closed_form_peaks_match_grid_oracle():
    # Spot version; the full 1000-draw sweep runs in the acceptance suite.
    rng = np.random.default_rng(42)
    n = 50
    delta = rng.uniform(0.1, 5.0, n)
    sigma = rng.uniform(0.1, 3.0, n)
    p = rng.uniform(0.1, 10.0, n)
    a = rng.uniform(0.05, 5.0, n)
    # Admissible orders capped at 4 so double-precision powers stay meaningful.
    ub = np.minimum(1.0 + 2.0 * delta / sigma**2, 4.0)
    theta = 1.0 + rng.uniform(0.01, 0.999, n) * (ub - 1.0)
    beta = theta * (delta + (1.0 - theta) * sigma**2 / 2.0)
    gamma = p / (a * math.e)
    alpha_frac = rng.uniform(0.05, 0.95, n)

    for coeff in (beta, beta - alpha_frac * beta):
        closed = gamma * ((theta - 1.0) * gamma / coeff) ** (theta - 1.0)
        gridmax = grid_peak_many(theta, gamma, coeff, 200_000)
        assert np.all(np.abs(closed - gridmax) <= 1e-6 * np.maximum(np.abs(closed), 1e-300))
