"""Shared fixtures: the canonical three-regime benchmark and its variants."""

from __future__ import annotations

import numpy as np
import pytest

from nicholson import (
    EnsembleConfig,
    GeneratorMatrix,
    InitialHistory,
    ModelSpec,
    RegimeParams,
    validate_model,
)

CANONICAL_Q = [[-10.0, 4.0, 6.0], [2.0, -3.0, 1.0], [3.0, 5.0, -8.0]]
CANONICAL_PI = np.array([0.1845, 0.6019, 0.2136])


def make_spec(deltas, ps, taus, avals, sigmas, q, x0=1.0, initial_regime=1) -> ModelSpec:
    regimes = tuple(
        RegimeParams(delta=d, p=p, tau=t, a=a, sigma=s)
        for d, p, t, a, s in zip(deltas, ps, taus, avals, sigmas)
    )
    tau_max = max(taus)
    return ModelSpec(
        regimes=regimes,
        generator=GeneratorMatrix.from_array(q),
        history=InitialHistory.from_constant(x0, tau_max),
        initial_regime=initial_regime,
    )


def canonical_spec() -> ModelSpec:
    return make_spec(
        deltas=[2.0, 1.0, 4.0],
        ps=[4.0, 2.0, 8.0],
        taus=[1.0, 1.0, 1.0],
        avals=[0.4, 0.2, 0.3],
        sigmas=[1.5, 2.0, 3.0],
        q=CANONICAL_Q,
        initial_regime=3,
    )


def extinct_spec() -> ModelSpec:
    return make_spec(
        deltas=[2.0, 1.0, 4.0],
        ps=[0.0, 0.0, 0.0],
        taus=[1.0, 1.0, 1.0],
        avals=[0.4, 0.2, 0.3],
        sigmas=[1.5, 2.0, 3.0],
        q=CANONICAL_Q,
        initial_regime=3,
    )


def decay_spec() -> ModelSpec:
    # Uniform delay and saturation so the decay-rate hypotheses hold; mu_hat = 0.8.
    return make_spec(
        deltas=[2.0, 1.0, 4.0],
        ps=[0.2, 0.2, 0.4],
        taus=[1.0, 1.0, 1.0],
        avals=[0.4, 0.4, 0.4],
        sigmas=[1.5, 1.0, 2.5],
        q=CANONICAL_Q,
        initial_regime=3,
    )


def single_regime_spec(delta, p, tau, a, sigma, x0=1.0) -> ModelSpec:
    return make_spec([delta], [p], [tau], [a], [sigma], [[0.0]], x0=x0)


@pytest.fixture(scope="session")
def canonical_model():
    return validate_model(canonical_spec())


@pytest.fixture(scope="session")
def extinct_model():
    return validate_model(extinct_spec())


@pytest.fixture(scope="session")
def decay_model():
    return validate_model(decay_spec())


def small_ensemble_config(**overrides) -> EnsembleConfig:
    base = dict(n_paths=16, dt=1e-2, horizon=10.0, seed=1234)
    base.update(overrides)
    return EnsembleConfig(**base)
