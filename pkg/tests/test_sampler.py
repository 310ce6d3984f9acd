import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from _oracles import all_matrices

from planeparts.bulkgeom import LatticePoint, Pattern
from planeparts.errors import LimitExceededError, PreconditionError, WindowError
from planeparts.qspecial import macmahon_constant
from planeparts.sampler import (GeometricMatrix, PlanePartition, RngStream, Window,
                                enumerate_plane_partitions, exact_pattern_probability,
                                pattern_indicator, plane_partition_counts, read_partitions,
                                rsk_bijection, sample_geometric_matrix, sample_plane_partition,
                                sample_plane_partitions, to_point_configuration, truncation_size,
                                volume_tail_bound, write_configuration_csv, write_partitions)

PP = [1, 1, 3, 6, 13, 24, 48, 86, 160, 282, 500]


def test_counts_two_generators_agree():
    _, counts = enumerate_plane_partitions(10)
    assert counts == PP
    assert plane_partition_counts(10) == PP


def test_enumeration_limit():
    with pytest.raises(LimitExceededError):
        enumerate_plane_partitions(15)


def test_partition_validation():
    p = PlanePartition([[3, 2, 0], [2, 1], [], []])
    assert p.rows == ((3, 2), (2, 1)) and p.volume == 8
    assert p[1, 1] == 3 and p[3, 1] == 0
    assert p.diagonal_slice(0) == [3, 1] and p.diagonal_slice(-1) == [2] and p.diagonal_slice(1) == [2]
    with pytest.raises(PreconditionError):
        PlanePartition([[1, 2]])
    with pytest.raises(PreconditionError):
        PlanePartition([[1], [2]])


def test_bijection_exhaustive():
    parts, counts = enumerate_plane_partitions(8)
    images = {}
    for a in all_matrices(8):
        pi = rsk_bijection(a)
        w = GeometricMatrix(a, 8).weight
        assert pi.volume == w
        assert pi not in images
        images[pi] = w
    assert set(images) == set(parts)
    assert len(images) == sum(counts)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(1, 3)), max_size=6),
       st.integers(0, 4))
def test_bijection_padding_independent(entries, pad):
    a = np.zeros((6, 6), dtype=np.int64)
    for i, j, v in entries:
        a[i, j] += v
    big = np.zeros((6 + pad, 6 + pad), dtype=np.int64)
    big[:6, :6] = a
    pi = rsk_bijection(a)
    assert rsk_bijection(big) == pi
    assert pi.volume == GeometricMatrix(a, 6).weight


def test_truncation_size_minimal():
    q, delta = 0.3, 1e-8
    N = truncation_size(q, delta)
    tail = lambda N: math.fsum(n * q**n for n in range(N + 1, 400))
    assert tail(N) < delta <= tail(N - 1)


def test_geometric_entries_law():
    gen = np.random.default_rng(3)
    vals = np.concatenate([sample_geometric_matrix(0.5, 1e-8, gen).a[0, 0:1] for _ in range(20000)])
    # P(a >= k) = q^k at (1,1)
    for k in (1, 2, 3):
        assert np.mean(vals >= k) == pytest.approx(0.5**k, abs=4 * math.sqrt(0.25 / 20000))


def test_sampler_chi_square():
    q, n = 0.3, 20000
    vols = np.array([p.volume for p in sample_plane_partitions(q, n, seed=11)])
    M = macmahon_constant(q)
    probs = [M * PP[v] * q**v for v in range(9)]
    probs.append(1 - sum(probs))
    obs = [np.sum(vols == v) for v in range(9)] + [np.sum(vols > 8)]
    assert chisquare(obs, n * np.array(probs)).pvalue > 0.01


def test_determinism_and_threads():
    a = sample_plane_partition(0.4, 1e-8, RngStream(5, 17))
    b = sample_plane_partition(0.4, 1e-8, RngStream(5, 17))
    assert a == b
    one = sample_plane_partitions(0.4, 150, seed=2, threads=1)
    two = sample_plane_partitions(0.4, 150, seed=2, threads=2)
    assert one == two
    assert sample_plane_partitions(0.4, 50, seed=2, start=100) == one[100:150]


def test_empty_configuration_is_frozen_sea():
    cfg = to_point_configuration(PlanePartition(), Window(-3, 3, -10, 4))
    for t, h2, o in cfg.triples():
        assert o == int(h2 <= -(abs(t) + 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_configuration_matches_pointwise(idx):
    pi = sample_plane_partition(0.6, 1e-8, RngStream(99, idx))
    w = Window(-4, 4, -12, 12)
    cfg = to_point_configuration(pi, w)
    for t, h2, o in cfg.triples():
        assert bool(o) == pi.is_occupied(t, h2)
    # each column has exactly one particle per row index j: count above the sea
    assert not cfg.occ[~cfg.valid].any()


def test_configuration_window_errors():
    cfg = to_point_configuration(PlanePartition([[1]]), Window(0, 0, -3, 3))
    assert cfg[LatticePoint(0, 1)] and not cfg[LatticePoint(0, -1)]
    with pytest.raises(WindowError):
        cfg[LatticePoint(2, 1)]
    assert pattern_indicator(cfg, LatticePoint(0, 0), Pattern.parse("0:1")) == 1


def test_exact_pattern_probability_one_point():
    q = 0.2
    # (0, 1/2) is occupied iff pi[j,j] = j for some j; below volume 13 only j <= 2 can occur
    val, tail = exact_pattern_probability(q, Pattern.parse("0:1"))
    parts, _ = enumerate_plane_partitions(12)
    direct = macmahon_constant(q) * math.fsum(q**p.volume for p in parts if p[1, 1] == 1 or p[2, 2] == 2)
    assert tail < 1e-5
    assert val == pytest.approx(direct, abs=1e-15)


def test_volume_tail_bound_is_bound():
    q, V = 0.3, 8
    M = macmahon_constant(q)
    pp = plane_partition_counts(60)
    true_tail = 1 - M * math.fsum(pp[n] * q**n for n in range(V + 1))
    assert true_tail <= volume_tail_bound(q, V) <= 1.01 * true_tail


def test_serialization_roundtrip(tmp_path):
    parts = sample_plane_partitions(0.5, 20, seed=1)
    path = tmp_path / "p.jsonl"
    write_partitions(path, parts, {"q": 0.5})
    header, back = read_partitions(path)
    assert back == parts and header["q"] == 0.5
    csv_path = tmp_path / "c.csv"
    write_configuration_csv(csv_path, to_point_configuration(parts[0], Window(-1, 1, -2, 2)))
    assert csv_path.read_text().startswith("t,h2,occupied\n")
