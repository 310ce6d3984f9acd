import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planeparts.bulkgeom import LatticePoint, Pattern, in_region_A, translate_grid
from planeparts.errors import PreconditionError
from planeparts.kernels import DEFAULT_QUAD
from planeparts.lln import (FAMILIES, ExperimentReport, SigmaEvaluator, TestFunction,
                            _midpoint, convergence_rate_check, covariance_decay_scan,
                            density_weighted_integral, empirical_sigma, integral_I,
                            run_lln_experiment)
from planeparts.sampler import PlanePartition, RngStream, sample_plane_partition, sample_plane_partitions

F = TestFunction("cosine-bump", (0.5, 0.5), 0.3)
M1 = Pattern.parse("0:1")
# ∫ cos^2(pi s / 2 rho) over the disk
BUMP_INTEGRAL = math.pi * 0.3**2 * (0.5 - 2 / math.pi**2)


@pytest.fixture(scope="module")
def I_single():
    return integral_I(F, M1)


def test_support_inside_A():
    th = np.linspace(0, 2 * np.pi, 200)
    assert np.all(in_region_A(0.5 + 0.3 * np.cos(th), 0.5 + 0.3 * np.sin(th)))


@pytest.mark.parametrize("family", FAMILIES)
def test_test_functions(family):
    f = TestFunction(family, (0.1, -0.2), 0.4, 2.0)
    assert f(0.1, -0.2) == pytest.approx(2.0)
    assert f(0.1 + 0.41, -0.2) == 0 and f(0.1, 0.21) == 0
    # continuity at the support edge
    assert f(0.1 + 0.4 - 1e-7, -0.2) < 1e-5
    xs = np.linspace(-0.5, 0.7, 7)
    assert f(xs, xs).shape == (7,)


def test_bad_test_function():
    with pytest.raises(PreconditionError):
        TestFunction("gaussian")
    with pytest.raises(PreconditionError):
        TestFunction(radius=0)


def test_zero_function():
    f0 = TestFunction(amplitude=0.0)
    pi = sample_plane_partition(math.exp(-0.2), rng=RngStream(1))
    assert empirical_sigma(pi, f0, M1, 0.2) == 0
    assert integral_I(f0, M1, grid_step=0.1) == 0


def test_empty_pattern_riemann_sum():
    r = 0.05
    pi = sample_plane_partition(math.exp(-0.4), rng=RngStream(3))
    t, h2 = translate_grid(F.support, r)
    direct = r**2 * math.fsum(F(r * t, r * h2 / 2).tolist())
    assert empirical_sigma(pi, F, Pattern(), r) == direct
    assert direct == pytest.approx(BUMP_INTEGRAL, rel=0.02)


@settings(max_examples=15, deadline=None)
@given(idx=st.integers(0, 1000), pat=st.sampled_from(["0:1", "0:1,1:0", "-1:0,0:-1", "1:2"]))
def test_sigma_matches_pointwise_occupancy(idx, pat):
    r = 0.2
    m = Pattern.parse(pat)
    pi = sample_plane_partition(math.exp(-r), rng=RngStream(8, idx))
    t, h2 = translate_grid(F.support, r)
    terms = [F(r * a, r * b / 2) for a, b in zip(t, h2)
             if all(pi.is_occupied(a + p.t, b + p.h2) for p in m)]
    assert empirical_sigma(pi, F, m, r) == pytest.approx(r**2 * math.fsum(terms), abs=1e-15)


def test_integral_empty_pattern():
    assert integral_I(F, Pattern(), grid_step=0.02) == pytest.approx(BUMP_INTEGRAL, rel=5e-3)


def test_integral_two_paths_agree():
    step = 0.04
    assert abs(_midpoint(F, M1, step, DEFAULT_QUAD) - density_weighted_integral(F, step)) < 1e-8


def test_integral_richardson(I_single):
    res = integral_I(F, M1, detail=True)
    assert res.value == I_single
    assert abs(res.value - res.coarse) < 5e-3 * abs(res.value)
    assert 0 < I_single < BUMP_INTEGRAL


def test_integral_bad_step():
    with pytest.raises(PreconditionError):
        integral_I(F, M1, grid_step=0)


def test_mean_sigma_near_integral(I_single):
    r = 0.1
    vals = [empirical_sigma(p, F, M1, r) for p in sample_plane_partitions(math.exp(-r), 200, seed=21)]
    ci = 1.96 * np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - I_single) < 3 * ci + 0.02 * I_single


def test_experiment_preconditions():
    with pytest.raises(PreconditionError):
        run_lln_experiment(F, M1, [0.2, 0.4], 60, seed=1)
    with pytest.raises(PreconditionError):
        run_lln_experiment(F, M1, [0.4, 0.2], 49, seed=1)


def test_experiment_empty_pattern_deterministic(tmp_path):
    rep = run_lln_experiment(F, Pattern(), [0.4, 0.3], 50, seed=4, grid_step=0.05)
    for rec in rep.records:
        assert rec["var_sigma"] == 0
        assert rec["mean_sigma"] == rec["riemann_sum"]
    text = rep.to_text()
    back = ExperimentReport.from_text(text)
    assert back.records == rep.records and back.to_text() == text
    path = tmp_path / "s.csv"
    rep.write_sigmas_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "r,replica,sigma" and len(lines) == 101


def test_experiment_thread_independent():
    a = run_lln_experiment(F, M1, [0.4], 64, seed=5, grid_step=0.1, threads=1)
    b = run_lln_experiment(F, M1, [0.4], 64, seed=5, grid_step=0.1, threads=2)
    assert a.to_text() == b.to_text()


def test_covariance_scan_rejects_coincident():
    with pytest.raises(PreconditionError):
        covariance_decay_scan(M1, [((0.0, 0.0), (0.0, 0.0))], r_list=(0.2,))
    with pytest.raises(PreconditionError):
        covariance_decay_scan(M1, [((0.0, 0.0), (0.0, 0.02))], r_list=(0.2,))


def test_convergence_check_empty_pattern():
    rows, summary = convergence_rate_check(Pattern(), [(0.0, 0.0)], r_list=(0.5, 0.25))
    assert all(row["err"] == 0 for row in rows)


def test_convergence_check_reports_rounding():
    rows, _ = convergence_rate_check(M1, [(0.33, 0.1)], r_list=(0.5,))
    assert rows[0]["rounding"] > 0
    assert LatticePoint(*map(int, rows[0]["base"].split(":"))).is_admissible_base
