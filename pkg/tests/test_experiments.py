import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfs_cauchy import (
    AlphaGrid,
    BoundaryGeometry,
    CauchyProblem,
    ExactSolution,
    MfsError,
    NoCornerError,
    NoiseSpec,
    add_noise,
    boundary_error,
    collocation_sweep,
    noise_sweep,
    param_scan,
    prepare,
    solve_cauchy,
)
from mfs_cauchy.experiments import interior_error

DISK = BoundaryGeometry.unit_disk()
EXP = ExactSolution.exp_trig()


# ------------------------------------------------------------------ noise

def test_zero_noise_is_bit_exact(rng):
    v = rng.normal(size=50)
    out = add_noise(v, NoiseSpec(0.0, 3))
    assert out.tobytes() == v.tobytes() and out is not v


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.integers(0, 2 ** 64 - 1))
def test_noise_bounds(delta, seed):
    v = np.random.default_rng(1).normal(size=40)
    out = add_noise(v, NoiseSpec(delta, seed))
    lo = np.minimum((1 - delta) * v, (1 + delta) * v)
    hi = np.maximum((1 - delta) * v, (1 + delta) * v)
    assert np.all((out >= lo - 1e-15 * abs(v)) & (out <= hi + 1e-15 * abs(v)))


def test_noise_is_reproducible_and_seed_dependent():
    v = np.ones(100)
    a = add_noise(v, NoiseSpec(0.05, 7))
    assert a.tobytes() == add_noise(v, NoiseSpec(0.05, 7)).tobytes()
    assert not np.array_equal(a, add_noise(v, NoiseSpec(0.05, 8)))


def test_noise_channels_are_independent():
    # identical f and g halves receive different multipliers
    out = add_noise(np.ones(20), NoiseSpec(0.1, 0))
    assert not np.array_equal(out[:10], out[10:])


@pytest.mark.parametrize("kw", [{"delta": -0.1}, {"delta": math.nan}, {"seed": -1}, {"seed": 2 ** 64}])
def test_noise_spec_validation(kw):
    with pytest.raises(ValueError):
        NoiseSpec(**kw)


# ------------------------------------------------------------------ error metric

def test_boundary_error_examples(rng):
    u = rng.normal(size=30)
    assert boundary_error(u, u) == 0.0
    assert boundary_error(2 * u, u) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        boundary_error(u, np.zeros(30))


# ------------------------------------------------------------------ single solve

TABLE_ALPHAS = (2.12e-4, 2.12e-3, 2.12e-2, 0.0)


@pytest.fixture(scope="module")
def headline(disk_prep):
    return solve_cauchy(disk_prep, NoiseSpec(0.05, 0), extra_alphas=TABLE_ALPHAS)


def test_headline_run(headline, disk_prep):
    e = headline.error_at
    assert e[2.12e-3] < min(e[2.12e-4], e[2.12e-2])
    assert 0.01 <= e[2.12e-3] <= 0.2
    assert headline.max_relative_error == headline.error_at_suitable
    assert headline.alpha == headline.suitable_alpha
    assert headline.trace_theta.size == disk_prep.problem.eval_points
    np.testing.assert_allclose(headline.trace_exact, disk_prep.eval_exact)
    assert boundary_error(headline.trace_approx, headline.trace_exact) == pytest.approx(
        headline.max_relative_error, rel=1e-12)


def test_unregularised_run_is_unstable(headline):
    assert headline.error_at[0.0] >= 10 * headline.error_at_suitable


def test_alpha_override(disk_prep, headline):
    rep = solve_cauchy(disk_prep, NoiseSpec(0.05, 0), alpha=0.0)
    assert rep.alpha == 0.0
    assert rep.max_relative_error == pytest.approx(headline.error_at[0.0], rel=1e-12)
    assert rep.suitable_alpha == headline.suitable_alpha


def test_solve_is_deterministic(disk_prep, headline):
    again = solve_cauchy(disk_prep, NoiseSpec(0.05, 0), extra_alphas=TABLE_ALPHAS)
    assert again.summary() == headline.summary()
    assert again.weights.tobytes() == headline.weights.tobytes()


def test_summary_fields(headline):
    s = headline.summary()
    for key in ("max_relative_error", "suitable_alpha", "optimal_alpha", "residual_norm", "solution_norm",
                "numerical_rank", "seed", "delta"):
        assert key in s
    assert s["max_relative_error"] >= 0


def test_solve_from_problem_matches_prepared(disk_problem, headline):
    rep = solve_cauchy(disk_problem, NoiseSpec(0.05, 0))
    assert rep.max_relative_error == headline.max_relative_error


@pytest.fixture(scope="module")
def dipole_exact():
    return prepare(CauchyProblem(BoundaryGeometry.annulus(0.5, 1.0), ExactSolution.dipole(0.2), 600, 60,
                                 (3.2, 0.4)))


def test_noise_free_dipole(dipole_exact):
    rep = solve_cauchy(dipole_exact, NoiseSpec(0.0, 0), alpha=0.0)
    assert rep.max_relative_error <= 0.05
    assert math.isnan(rep.suitable_alpha) and math.isnan(rep.error_at_suitable)
    assert set(rep.trace_component) == {"outer", "inner"}
    assert rep.trace_theta.size == 2 * 2000


def test_noise_free_dipole_without_override_reports_no_corner(dipole_exact):
    with pytest.raises(NoCornerError):
        solve_cauchy(dipole_exact, NoiseSpec(0.0, 0))


def test_maximum_principle_noise_free_disk(disk_prep):
    rep = solve_cauchy(disk_prep, NoiseSpec(0.0, 0), alpha=0.0)
    assert interior_error(disk_prep, rep.weights) <= rep.max_relative_error + 1e-6


def test_prepare_rejects_underdetermined():
    with pytest.raises(MfsError):
        prepare(CauchyProblem(DISK, EXP, 5, 12, (3.2,)))


def test_problem_describe(disk_problem):
    d = disk_problem.describe()
    assert d["M"] == 600 and d["radii"] == [3.2] and d["geometry"]["kind"] == "disk"


# ------------------------------------------------------------------ noise sweep

SMALL = CauchyProblem(DISK, EXP, 100, 20, (3.2,), eval_points=400)


@pytest.fixture(scope="module")
def small_prep():
    return prepare(SMALL)


def test_sweep_repeated_delta_gives_identical_rows(small_prep):
    rep = noise_sweep(small_prep, [0.01, 0.01], [0, 1])
    a = [r for r in rep.rows[:2]]
    b = [r for r in rep.rows[2:]]
    assert a == b


def test_sweep_single_delta_has_no_fit(small_prep, caplog):
    with caplog.at_level(logging.WARNING):
        rep = noise_sweep(small_prep, [0.01], [0, 1])
    assert rep.error_fit is None and rep.alpha_fit is None
    assert "regression" in caplog.text
    assert len(rep.rows) == 2 and len(rep.medians) == 1


def test_sweep_fits_and_medians(small_prep):
    deltas = [1e-4, 1e-3, 1e-2, 1e-1]
    rep = noise_sweep(small_prep, deltas, [0, 1, 2])
    assert [m["delta"] for m in rep.medians] == deltas
    for m in rep.medians:
        sel = [r[3] for r in rep.rows if r[0] == m["delta"]]
        assert m["error_at_optimal"] == float(np.median(sel))
    assert rep.error_fit["slope"] > 0 and rep.alpha_fit["slope"] > 0


@pytest.mark.parametrize("deltas,seeds", [([], [0]), ([0.1], []), ([0.0, 0.1], [0])])
def test_sweep_validation(small_prep, deltas, seeds):
    with pytest.raises(ValueError):
        noise_sweep(small_prep, deltas, seeds)


def test_sweep_parallel_matches_serial(small_prep):
    serial = noise_sweep(small_prep, [1e-3, 1e-2], [0, 1], jobs=1)
    parallel = noise_sweep(small_prep, [1e-3, 1e-2], [0, 1], jobs=2)
    assert serial.rows == parallel.rows


# ------------------------------------------------------------------ parameter scan

def test_scan_two_by_two():
    rep = param_scan(DISK, EXP, 100, [15, 20], [2.5, 3.2], NoiseSpec(0.05, 0), eval_points=200)
    assert len(rep.rows) == 4
    Ns, Rs, table = rep.error_table()
    assert Ns == [15, 20] and Rs == [2.5, 3.2] and table.shape == (2, 2)


def test_scan_single_cell():
    rep = param_scan(DISK, EXP, 100, [20], [3.2], NoiseSpec(0.05, 0), eval_points=200)
    assert len(rep.rows) == 1 and math.isfinite(rep.rows[0][2])


def test_scan_isolates_invalid_cells():
    rep = param_scan(DISK, EXP, 100, [20], [0.5, 3.2], NoiseSpec(0.05, 0), eval_points=200)
    bad, good = rep.rows
    assert math.isnan(bad[2]) and "GeometryError" in bad[4]
    assert math.isfinite(good[2]) and good[4] == ""


def test_scan_annulus_pairs():
    rep = param_scan(BoundaryGeometry.annulus(0.5, 1.0), ExactSolution.dipole(0.2), 100, [20], [(3.2, 0.2)],
                     NoiseSpec(0.05, 0), eval_points=200)
    assert rep.rows[0][1] == (3.2, 0.2)


# ------------------------------------------------------------------ collocation sweep

def test_collocation_single_m_matches_solve():
    grid = AlphaGrid()
    rep = collocation_sweep(DISK, EXP, [100], 20, (3.2,), NoiseSpec(0.05, 4), grid, eval_points=400)
    direct = solve_cauchy(SMALL, NoiseSpec(0.05, 4), grid)
    assert len(rep.rows) == 1
    assert rep.rows[0] == (100, direct.max_relative_error, direct.suitable_alpha)


def test_collocation_sweep_requires_increasing_m():
    with pytest.raises(ValueError):
        collocation_sweep(DISK, EXP, [100, 50], 20, (3.2,), NoiseSpec(0.05, 0))


def test_collocation_sweep_records_failures():
    rep = collocation_sweep(DISK, EXP, [5, 100], 20, (3.2,), NoiseSpec(0.05, 0), eval_points=200)
    assert math.isnan(rep.rows[0][1]) and math.isfinite(rep.rows[1][1])


def test_more_collocation_points_help():
    errs = {}
    for seed in range(5):
        rep = collocation_sweep(DISK, EXP, [20, 600], 28, (3.2,), NoiseSpec(0.05, seed), eval_points=1000)
        for m, e, _ in rep.rows:
            errs.setdefault(m, []).append(e)
    assert np.median(errs[600]) <= np.median(errs[20])
