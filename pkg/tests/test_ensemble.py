"""Ensemble runner: determinism, statistics, verdicts, convergence study."""

from __future__ import annotations

import numpy as np
import pytest

from nicholson import (
    EnsembleConfig,
    MismatchedConfigError,
    NonDyadicRefinementError,
    compute_theorem_bounds,
    convergence_study,
    derived_constants,
    run_ensemble,
    validate_model,
    verify_bounds,
)

from conftest import extinct_spec, make_spec

STATS_FIELDS = (
    "times", "mean_x_theta", "ci_half", "time_avg_x_theta", "lyap_min",
    "lyap_mean", "lyap_max", "runmin_mean", "lyap_at_horizon",
    "x_theta_at_horizon", "runmin_at_horizon",
)


def _stats_equal(a, b) -> bool:
    return all(np.array_equal(getattr(a, f), getattr(b, f)) for f in STATS_FIELDS)


def test_config_validation():
    with pytest.raises(ValueError):
        EnsembleConfig(n_paths=0, dt=1e-2, horizon=1.0, seed=0)
    with pytest.raises(ValueError):
        EnsembleConfig(n_paths=1, dt=2.0, horizon=1.0, seed=0)  # dt > horizon
    with pytest.raises(ValueError):
        EnsembleConfig(n_paths=1, dt=1e-2, horizon=1.0, seed=0, scheme="milstein")
    with pytest.raises(ValueError):
        EnsembleConfig(n_paths=1, dt=1e-2, horizon=1.0, seed=0, tail_window=0.0)


def test_determinism_across_runs_and_worker_counts(canonical_model):
    cfg = EnsembleConfig(n_paths=24, dt=5e-3, horizon=10.0, seed=99)
    one = run_ensemble(canonical_model, cfg, workers=1)
    again = run_ensemble(canonical_model, cfg, workers=1)
    eight = run_ensemble(canonical_model, cfg, workers=8)
    assert _stats_equal(one, again)
    assert _stats_equal(one, eight)
    assert one.positivity_violations == eight.positivity_violations
    assert one.min_x == eight.min_x


def test_voc_ensembles_never_report_violations(canonical_model):
    cfg = EnsembleConfig(n_paths=16, dt=1e-2, horizon=5.0, seed=4, scheme="voc")
    stats = run_ensemble(canonical_model, cfg, workers=2)
    assert stats.positivity_violations == 0
    assert stats.min_x > 0.0


def test_em_ensemble_counts_negative_excursions(canonical_model):
    cfg = EnsembleConfig(n_paths=16, dt=2.5e-2, horizon=10.0, seed=1, scheme="em")
    stats = run_ensemble(canonical_model, cfg, workers=2)
    assert stats.positivity_violations > 0


def test_ci_halfwidth_shrinks_like_inverse_sqrt_n():
    model = validate_model(make_spec([1.0], [2.0], [0.5], [1.0], [0.3], [[0.0]]))
    small = run_ensemble(model, EnsembleConfig(n_paths=64, dt=5e-3, horizon=20.0, seed=1), workers=2)
    large = run_ensemble(model, EnsembleConfig(n_paths=256, dt=5e-3, horizon=20.0, seed=1001), workers=2)
    ratio = float(np.mean(small.ci_half) / np.mean(large.ci_half))
    assert 1.8 <= ratio <= 2.2


def test_deterministic_single_regime_collapses():
    model = validate_model(make_spec([1.0], [3.0], [1.0], [1.0], [0.0], [[0.0]]))
    stats = run_ensemble(model, EnsembleConfig(n_paths=8, dt=1e-2, horizon=10.0, seed=3), workers=2)
    assert np.array_equal(stats.lyap_min, stats.lyap_max)
    assert np.allclose(stats.lyap_mean, stats.lyap_min, rtol=0, atol=1e-12)
    assert np.all(stats.ci_half <= 1e-6 * np.maximum(np.abs(stats.mean_x_theta), 1e-30))
    assert np.ptp(stats.lyap_at_horizon) == 0.0


def test_summaries_are_ordered(canonical_model):
    stats = run_ensemble(
        canonical_model, EnsembleConfig(n_paths=12, dt=1e-2, horizon=8.0, seed=6), workers=2
    )
    assert np.all(stats.lyap_min <= stats.lyap_mean + 1e-12)
    assert np.all(stats.lyap_mean <= stats.lyap_max + 1e-12)
    assert np.all(stats.ci_half >= 0.0)
    assert stats.times[-1] == 8.0
    assert stats.times.size <= 10_000


def test_output_grid_coarsening(canonical_model):
    stats = run_ensemble(
        canonical_model, EnsembleConfig(n_paths=2, dt=1e-4, horizon=5.0, seed=0), workers=2
    )
    assert stats.times.size <= 10_000
    assert stats.times[-1] == 5.0


def test_stats_csv_format(tmp_path, canonical_model):
    stats = run_ensemble(
        canonical_model, EnsembleConfig(n_paths=4, dt=1e-2, horizon=2.0, seed=5), workers=2
    )
    out = tmp_path / "stats.csv"
    stats.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "t,mean_x_theta,ci_half,time_avg,lyap_min,lyap_mean,lyap_max,runmin_mean"
    assert len(lines) == stats.times.size + 1
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == stats.times[0]


def test_verify_bounds_verdicts_stable_across_seeds(canonical_model):
    dc = derived_constants(canonical_model, 1.0)
    bounds = compute_theorem_bounds(canonical_model, dc)
    verdicts = []
    for seed in (1, 2, 3):
        stats = run_ensemble(
            canonical_model,
            EnsembleConfig(n_paths=48, dt=2e-3, horizon=40.0, seed=seed),
            workers=2,
        )
        rep = verify_bounds(stats, bounds, dc, canonical_model)
        verdicts.append(tuple((c.name, c.verdict) for c in rep.checks))
    assert verdicts[0] == verdicts[1] == verdicts[2]
    assert all(v in ("consistent", "not-applicable") for _, v in verdicts[0])


def test_verify_bounds_theta_mismatch(canonical_model):
    dc = derived_constants(canonical_model, 1.0)
    bounds = compute_theorem_bounds(canonical_model, dc)
    stats = run_ensemble(
        canonical_model,
        EnsembleConfig(n_paths=4, dt=1e-2, horizon=2.0, seed=1, theta=1.2),
        workers=1,
    )
    with pytest.raises(MismatchedConfigError):
        verify_bounds(stats, bounds, dc, canonical_model)


def test_verify_bounds_extinction_branch(extinct_model):
    dc = derived_constants(extinct_model, 1.0)
    bounds = compute_theorem_bounds(extinct_model, dc)
    stats = run_ensemble(
        extinct_model, EnsembleConfig(n_paths=16, dt=2e-3, horizon=30.0, seed=2), workers=2
    )
    rep = verify_bounds(stats, bounds, dc, extinct_model)
    by_name = {c.name: c for c in rep.checks}
    assert by_name["extinction_p_zero"].verdict == "consistent"
    assert by_name["decay_kappa"].verdict == "not-applicable"


def test_verify_bounds_zero_delay_branch():
    spec = make_spec([1.0, 2.0], [0.2, 0.1], [0.0, 0.0], [1.0, 1.0], [0.4, 0.6],
                     [[-1.0, 1.0], [1.0, -1.0]])
    model = validate_model(spec)
    dc = derived_constants(model, 1.0)
    bounds = compute_theorem_bounds(model, dc)
    stats = run_ensemble(model, EnsembleConfig(n_paths=16, dt=2e-3, horizon=30.0, seed=2), workers=2)
    rep = verify_bounds(stats, bounds, dc, model)
    by_name = {c.name: c for c in rep.checks}
    assert by_name["extinction_lambda"].verdict == "consistent"


def test_verify_bounds_reports_violation_when_bound_is_wrong(canonical_model, extinct_model):
    # Bounds computed for the birthless model (moment bound 0) cannot hold for
    # canonical-ensemble statistics; the verdict machinery must say so.
    stats = run_ensemble(
        canonical_model, EnsembleConfig(n_paths=16, dt=5e-3, horizon=10.0, seed=8), workers=2
    )
    dc0 = derived_constants(extinct_model, 1.0)
    bounds0 = compute_theorem_bounds(extinct_model, dc0)
    rep = verify_bounds(stats, bounds0, dc0, extinct_model)
    by_name = {c.name: c for c in rep.checks}
    assert by_name["moment_mhat"].verdict == "violated"
    assert by_name["moment_mhat"].margin < 0.0
    assert rep.any_violated


def test_reference_comparison_flags_disagreements(canonical_model):
    dc = derived_constants(canonical_model, 1.0)
    bounds = compute_theorem_bounds(canonical_model, dc)
    stats = run_ensemble(
        canonical_model, EnsembleConfig(n_paths=4, dt=1e-2, horizon=2.0, seed=1), workers=1
    )
    rep = verify_bounds(
        stats, bounds, dc, canonical_model,
        reference={"c": [2.1022, 3.6788, 10.3229], "d": [3.125, 3.0, 8.5], "nstar": 1.1883},
    )
    by_name = {r.name: r for r in rep.reference}
    assert not by_name["c[1]"].agree
    assert not by_name["c[2]"].agree
    assert by_name["c[3]"].agree
    assert by_name["d[1]"].agree and by_name["d[2]"].agree and by_name["d[3]"].agree
    assert by_name["nstar"].agree
    text = rep.to_text()
    assert "DISAGREES" in text
    kv = rep.to_kv()
    assert "reference.c[1].agree=false" in kv


def test_convergence_study_canonical_strictly_decreases(canonical_model):
    cfg = EnsembleConfig(n_paths=32, dt=1e-2, horizon=10.0, seed=3)
    rows = convergence_study(canonical_model, cfg, [1e-2, 5e-3, 2.5e-3])
    errs = [r.mean_max_diff for r in rows]
    assert [r.dt for r in rows] == [1e-2, 5e-3, 2.5e-3]
    assert errs[0] > errs[1] > errs[2]
    assert all(np.isfinite(errs))


def test_convergence_study_strong_order_for_linear_case():
    model = validate_model(make_spec([1.0], [0.0], [0.0], [1.0], [0.1], [[0.0]]))
    cfg = EnsembleConfig(n_paths=32, dt=1e-2, horizon=10.0, seed=1)
    rows = convergence_study(model, cfg, [1e-2, 5e-3, 2.5e-3])
    errs = [r.mean_max_diff for r in rows]
    for k in range(2):
        assert 1.6 <= errs[k] / errs[k + 1] <= 2.4


def test_convergence_study_single_level(canonical_model):
    cfg = EnsembleConfig(n_paths=4, dt=1e-2, horizon=2.0, seed=1)
    rows = convergence_study(canonical_model, cfg, [1e-2])
    assert len(rows) == 1
    assert rows[0].mean_max_diff >= 0.0


def test_convergence_study_rejects_bad_levels(canonical_model):
    cfg = EnsembleConfig(n_paths=2, dt=1e-2, horizon=2.0, seed=1)
    with pytest.raises(NonDyadicRefinementError):
        convergence_study(canonical_model, cfg, [1e-2, 3e-3])
    with pytest.raises(NonDyadicRefinementError):
        convergence_study(canonical_model, cfg, [5e-3, 1e-2])
    with pytest.raises(NonDyadicRefinementError):
        convergence_study(
            canonical_model,
            EnsembleConfig(n_paths=2, dt=3e-3, horizon=1.0, seed=1),
            [3e-3, 1.5e-3],
        )
