"""Substream reproducibility and Brownian increment statistics."""

from __future__ import annotations

import numpy as np
import pytest

from nicholson import NoiseRecord, NoiseStream, substream
from nicholson.noise import sum_groups


def test_record_regenerates_bit_identically():
    lengths = np.full(1000, 1e-3)
    a = NoiseRecord.generate(NoiseStream(42, 7), lengths)
    b = NoiseRecord.generate(NoiseStream(42, 7), lengths)
    assert a == b
    c = NoiseRecord.generate(NoiseStream(42, 8), lengths)
    assert not (a == c)


def test_roles_are_independent_streams():
    a = substream(1, 0, 0).standard_normal(8)
    b = substream(1, 0, 1).standard_normal(8)
    assert not np.allclose(a, b)


def test_increment_variance_matches_substep_length():
    # 1e5 draws split across two substep lengths; sample variance of a chi^2
    # mean with n = 5e4 fluctuates by ~0.6%, so 3% is a wide gate.
    lengths = np.concatenate([np.full(50_000, 4e-3), np.full(50_000, 2.5e-1)])
    rec = NoiseRecord.generate(NoiseStream(9, 0), lengths)
    first = rec.increments[:50_000]
    second = rec.increments[50_000:]
    assert np.var(first) == pytest.approx(4e-3, rel=0.03)
    assert np.var(second) == pytest.approx(2.5e-1, rel=0.03)
    assert np.mean(rec.increments[:50_000]) == pytest.approx(0.0, abs=3 * np.sqrt(4e-3 / 50_000) + 1e-4)


def test_sum_groups_coarsens_increments():
    vals = np.arange(10.0)
    starts = np.array([0, 3, 4, 8])
    assert sum_groups(vals, starts).tolist() == [0 + 1 + 2, 3.0, 4 + 5 + 6 + 7, 8 + 9]


def test_increments_are_readonly():
    rec = NoiseRecord.generate(NoiseStream(0, 0), np.full(4, 0.5))
    with pytest.raises(ValueError):
        rec.increments[0] = 1.0
