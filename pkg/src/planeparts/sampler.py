"""Exact sampling from the q^volume measure on plane partitions.

A sample is produced by drawing a matrix of independent geometric entries
``a[i,j] ~ Geom(q^{i+j-1})`` and pushing it through a volume-preserving
bijection onto plane partitions (RSK, then reading the two tableaux as the
diagonal slices of the partition).  The matrix is truncated to the triangle
``i + j - 1 <= N`` where the neglected mass is below ``delta``.

Also here: the particle configuration map, pattern indicators, and a
brute-force enumeration of all plane partitions of small volume used as an
oracle throughout the test-suite.
"""
from __future__ import annotations

import bisect
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .bulkgeom import LatticePoint, Pattern
from .errors import LimitExceededError, PreconditionError, WindowError
from .qspecial import as_q, log_macmahon, macmahon_constant, macmahon_cutoff

DEFAULT_DELTA = 1e-8
MAX_ENUM_VOLUME = 14


class PlanePartition:
    """Finitely supported array with non-increasing rows and columns.

    Stored as a tuple of rows with trailing zeros (and empty rows) stripped.
    """

    __slots__ = ("rows", "volume")

    def __init__(self, rows: Iterable[Iterable[int]] = ()):
        clean = []
        for row in rows:
            row = [int(v) for v in row]
            while row and row[-1] == 0:
                row.pop()
            clean.append(tuple(row))
        while clean and not clean[-1]:
            clean.pop()
        for i, row in enumerate(clean):
            if any(v < 0 for v in row):
                raise PreconditionError("plane partition entries must be non-negative")
            if any(row[j + 1] > row[j] for j in range(len(row) - 1)):
                raise PreconditionError(f"row {i + 1} is not non-increasing")
            if i and any(row[j] > (clean[i - 1][j] if j < len(clean[i - 1]) else 0)
                         for j in range(len(row))):
                raise PreconditionError(f"column condition fails at row {i + 1}")
        self.rows = tuple(clean)
        self.volume = sum(map(sum, self.rows))

    def __getitem__(self, ij: tuple[int, int]) -> int:
        """1-based entry ``pi[i, j]``; zero outside the support."""
        i, j = ij
        if i < 1 or j < 1 or i > len(self.rows):
            return 0
        row = self.rows[i - 1]
        return row[j - 1] if j <= len(row) else 0

    def __eq__(self, other):
        return isinstance(other, PlanePartition) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"PlanePartition({[list(r) for r in self.rows]})"

    def diagonal_slice(self, t: int) -> list[int]:
        """Non-zero part of ``(pi[j+t, j])_j`` for ``t >= 0`` or ``(pi[j, j-t])_j`` for ``t < 0``."""
        out = []
        j = 1
        while True:
            v = self[j + t, j] if t >= 0 else self[j, j - t]
            if v == 0:
                return out
            out.append(v)
            j += 1

    def is_occupied(self, t: int, h2: int) -> bool:
        """Whether ``(t, h2/2)`` belongs to the configuration of this partition."""
        a = abs(t)
        sl = self.diagonal_slice(t)
        j = 1
        while True:
            v = sl[j - 1] if j <= len(sl) else 0
            pos = 2 * v - (2 * j + a - 1)
            if pos == h2:
                return True
            if pos < h2:  # positions strictly decrease in j
                return False
            j += 1


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream identified by ``(seed, stream_index)``."""

    seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))


class GeometricMatrix(NamedTuple):
    """Non-negative integer matrix ``a`` (0-based storage of 1-based indices)."""

    a: np.ndarray
    N: int

    @property
    def weight(self) -> int:
        n = np.add.outer(np.arange(1, self.a.shape[0] + 1), np.arange(1, self.a.shape[1] + 1)) - 1
        return int(np.sum(n * self.a))


@lru_cache(maxsize=64)
def _triangle(N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    i, j = np.meshgrid(np.arange(1, N + 1), np.arange(1, N + 1), indexing="ij")
    keep = i + j - 1 <= N
    return i[keep] - 1, j[keep] - 1, (i + j - 1)[keep]


def truncation_size(q, delta: float = DEFAULT_DELTA) -> int:
    """Minimal ``N`` with ``sum_{n>N} n q^n < delta``."""
    return macmahon_cutoff(as_q(q), delta)


def sample_geometric_matrix(q, delta: float = DEFAULT_DELTA,
                            rng: RngStream | np.random.Generator | None = None) -> GeometricMatrix:
    """Independent entries with ``P(a[i,j] >= k) = q^{(i+j-1) k}`` on ``i + j - 1 <= N``."""
    q = as_q(q)
    if not 0 < delta < 1:
        raise PreconditionError("delta must lie in (0, 1)")
    gen = rng.generator() if isinstance(rng, RngStream) else (rng or np.random.default_rng())
    N = truncation_size(q, delta)
    a = np.zeros((N, N), dtype=np.int64)
    if N:
        ii, jj, n = _triangle(N)
        a[ii, jj] = gen.geometric(-np.expm1(n * math.log(q))) - 1
    return GeometricMatrix(a, N)


def _rsk(pairs: Iterable[tuple[int, int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Row-insertion RSK on a lexicographically ordered two-line array."""
    P: list[list[int]] = []
    Q: list[list[int]] = []
    for top, x in pairs:
        row = 0
        while True:
            if row == len(P):
                P.append([x])
                Q.append([top])
                break
            prow = P[row]
            k = bisect.bisect_right(prow, x)
            if k == len(prow):
                prow.append(x)
                Q[row].append(top)
                break
            prow[k], x = x, prow[k]
            row += 1
    return P, Q


def _gt_slices(T: list[list[int]], N: int) -> list[list[int]]:
    """Shapes of ``T`` restricted to entries ``<= N - k`` for ``k = 0, 1, ...``."""
    out = []
    for k in range(N):
        cap = N - k
        lam = [bisect.bisect_right(row, cap) for row in T]
        lam = [v for v in lam if v]
        if not lam:
            break
        out.append(lam)
    return out


def rsk_bijection(a: GeometricMatrix | np.ndarray) -> PlanePartition:
    """Map a finitely supported matrix to a plane partition of volume ``sum (i+j-1) a[i,j]``.

    Indices are reversed (``i -> N+1-i``) before RSK so that the Gelfand-Tsetlin
    slices of the insertion tableau ``P`` give the diagonals ``pi[i, i+k]`` and
    those of the recording tableau ``Q`` give ``pi[i+k, i]``.  The result does
    not depend on the padding ``N``.
    """
    arr = a.a if isinstance(a, GeometricMatrix) else np.asarray(a)
    if arr.size == 0 or not arr.any():
        return PlanePartition()
    N = max(arr.shape)
    nz_i, nz_j = np.nonzero(arr)
    pairs = []
    # lexicographic order in the reversed indices (i', j') = (N+1-i, N+1-j)
    order = sorted(zip(N - nz_i, N - nz_j, arr[nz_i, nz_j]))
    for ip, jp, mult in order:
        pairs.extend([(int(ip), int(jp))] * int(mult))
    P, Q = _rsk(pairs)
    upper = _gt_slices(P, N)
    lower = _gt_slices(Q, N)
    n_rows = len(lower[0]) + len(lower) - 1
    n_cols = len(upper[0]) + len(upper) - 1
    pi = np.zeros((n_rows, n_cols), dtype=np.int64)
    for k, lam in enumerate(upper):
        for i, v in enumerate(lam):
            pi[i, i + k] = v
    for k, mu in enumerate(lower[1:], start=1):
        for i, v in enumerate(mu):
            pi[i + k, i] = v
    return PlanePartition(pi.tolist())


def sample_plane_partition(q, delta: float = DEFAULT_DELTA,
                           rng: RngStream | np.random.Generator | None = None) -> PlanePartition:
    """One exact draw from ``P(pi) = M q^{|pi|}``, up to total variation ``delta``."""
    return rsk_bijection(sample_geometric_matrix(q, delta, rng))


def _sample_chunk(args):
    q, delta, seed, indices = args
    return [sample_plane_partition(q, delta, RngStream(seed, i)) for i in indices]


def map_replicas(fn: Callable, chunks: Sequence, threads: int = 1) -> list:
    """Apply ``fn`` to every chunk, preserving order; ``threads > 1`` uses processes."""
    if threads <= 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, chunks))


def split_indices(n: int, start: int = 0, chunk: int = 64) -> list[range]:
    return [range(start + k, start + min(k + chunk, n)) for k in range(0, n, chunk)]


def sample_plane_partitions(q, n: int, seed: int, delta: float = DEFAULT_DELTA,
                            threads: int = 1, start: int = 0) -> list[PlanePartition]:
    """``n`` replicas using streams ``(seed, start), ..., (seed, start + n - 1)``.

    The output is independent of ``threads``.
    """
    q = as_q(q)
    chunks = [(q, delta, seed, idx) for idx in split_indices(n, start)]
    out = []
    for part in map_replicas(_sample_chunk, chunks, threads):
        out.extend(part)
    return out


def resolve_threads(threads: int | None) -> int:
    """Explicit value, else ``$PLANEPARTS_THREADS``, else 1."""
    if threads is None:
        threads = int(os.environ.get("PLANEPARTS_THREADS", "1"))
    return max(int(threads), 1)


# ---------------------------------------------------------------------------
# Particle configurations
# ---------------------------------------------------------------------------

class Window(NamedTuple):
    """Inclusive lattice window ``t_min..t_max`` x ``h2_min..h2_max``."""

    t_min: int
    t_max: int
    h2_min: int
    h2_max: int

    def contains(self, p: LatticePoint) -> bool:
        return self.t_min <= p.t <= self.t_max and self.h2_min <= p.h2 <= self.h2_max


class PointConfiguration:
    """Occupancies of every occupancy-valid point of a window.

    ``occ[t - t_min, h2 - h2_min]`` is True for occupied points; parity-dead
    points are always False and flagged in ``valid``.
    """

    def __init__(self, window: Window, occ: np.ndarray):
        self.window = window
        self.occ = occ
        tt, hh = np.meshgrid(np.arange(window.t_min, window.t_max + 1),
                             np.arange(window.h2_min, window.h2_max + 1), indexing="ij")
        self.valid = (hh + np.abs(tt) + 1) % 2 == 0

    def __getitem__(self, p: LatticePoint) -> bool:
        if not self.window.contains(p):
            raise WindowError(f"{p} outside window {self.window}")
        return bool(self.occ[p.t - self.window.t_min, p.h2 - self.window.h2_min])

    def triples(self) -> list[tuple[int, int, int]]:
        """``(t, 2h, occupancy)`` for every valid point, lexicographic."""
        w = self.window
        out = []
        for a in range(w.t_max - w.t_min + 1):
            for b in range(w.h2_max - w.h2_min + 1):
                if self.valid[a, b]:
                    out.append((w.t_min + a, w.h2_min + b, int(self.occ[a, b])))
        return out


def to_point_configuration(pi: PlanePartition, window: Window) -> PointConfiguration:
    """Materialize ``{(i-j, pi[i,j] - (i+j-1)/2)}`` inside ``window``, frozen sea included."""
    w = Window(*map(int, window))
    if w.t_min > w.t_max or w.h2_min > w.h2_max:
        raise PreconditionError("empty window")
    occ = np.zeros((w.t_max - w.t_min + 1, w.h2_max - w.h2_min + 1), dtype=bool)
    for t in range(w.t_min, w.t_max + 1):
        a = abs(t)
        sl = pi.diagonal_slice(t)
        # position of the j-th particle in column t: 2 pi_j - (2j + |t| - 1)
        j_max = max((2 * max(sl, default=0) - a + 1 - w.h2_min) // 2, 0)
        if j_max == 0:
            continue
        j = np.arange(1, j_max + 1)
        vals = np.zeros(j_max, dtype=np.int64)
        k = min(len(sl), j_max)
        vals[:k] = sl[:k]
        pos = 2 * vals - (2 * j + a - 1)
        pos = pos[(pos >= w.h2_min) & (pos <= w.h2_max)]
        occ[t - w.t_min, pos - w.h2_min] = True
    return PointConfiguration(w, occ)


def pattern_indicator(cfg: PointConfiguration, base: LatticePoint, m: Pattern) -> int:
    """1 iff every point of ``base + m`` is occupied."""
    for p in m.translate(base):
        if not cfg[p]:
            return 0
    return 1


# ---------------------------------------------------------------------------
# Enumeration oracle
# ---------------------------------------------------------------------------

def _bounded_partitions(bound: Sequence[int], budget: int):
    """Non-empty partitions ``lam`` with ``lam[i] <= bound[i]`` and ``|lam| <= budget``."""
    def rec(i, prev, remaining, acc):
        if acc:
            yield tuple(acc)
        if i >= len(bound):
            return
        for v in range(min(bound[i], prev, remaining), 0, -1):
            acc.append(v)
            yield from rec(i + 1, v, remaining - v, acc)
            acc.pop()
    yield from rec(0, budget, budget, [])


@lru_cache(maxsize=8)
def _enumerate(max_volume: int) -> tuple[PlanePartition, ...]:
    out = []

    def rec(rows, bound, remaining):
        out.append(PlanePartition(rows))
        for row in _bounded_partitions(bound, remaining):
            rec(rows + [row], row, remaining - sum(row))

    rec([], [max_volume] * max_volume, max_volume)
    return tuple(sorted(out, key=lambda p: (p.volume, p.rows)))


def enumerate_plane_partitions(max_volume: int) -> tuple[list[PlanePartition], list[int]]:
    """All plane partitions of volume ``<= max_volume`` and their counts by volume."""
    if max_volume < 0:
        raise PreconditionError("max_volume must be non-negative")
    if max_volume > MAX_ENUM_VOLUME:
        raise LimitExceededError(f"enumeration limited to volume {MAX_ENUM_VOLUME}")
    parts = list(_enumerate(max_volume))
    counts = [0] * (max_volume + 1)
    for p in parts:
        counts[p.volume] += 1
    return parts, counts


def plane_partition_counts(max_volume: int) -> list[int]:
    """Coefficients of ``prod_n (1 - x^n)^{-n}`` up to ``x^max_volume`` (exact integers)."""
    c = [1] + [0] * max_volume
    for n in range(1, max_volume + 1):
        # multiply by (1 - x^n)^{-n} = sum_k C(n+k-1, k) x^{nk}
        new = [0] * (max_volume + 1)
        for d, cd in enumerate(c):
            if not cd:
                continue
            k = 0
            while d + n * k <= max_volume:
                new[d + n * k] += cd * math.comb(n + k - 1, k)
                k += 1
        c = new
    return c


def volume_tail_bound(q, max_volume: int, exact_upto: int = 150) -> float:
    """Rigorous bound on ``P(|pi| > max_volume) = M sum_{n>V} pp(n) q^n``.

    Exact counts ``pp(n)`` are summed up to ``exact_upto``; beyond that
    ``pp(n) <= q'^{-n} / M(q')`` for any ``q' in (q, 1)``, optimised over a grid.
    """
    q = as_q(q)
    L = max(exact_upto, max_volume)
    pp = _pp_counts(L)
    head = math.fsum(float(pp[n]) * q**n for n in range(max_volume + 1, L + 1))
    best = math.inf
    for qp in np.linspace(q, 1, 402)[1:-1]:
        ratio = q / qp
        b = (L + 1) * math.log(ratio) - math.log1p(-ratio) - log_macmahon(qp, 1e-12)
        best = min(best, b)
    return macmahon_constant(q) * (head + math.exp(best)) * (1 + 1e-12)


@lru_cache(maxsize=4)
def _pp_counts(n: int) -> tuple[int, ...]:
    return tuple(plane_partition_counts(n))


def exact_pattern_probability(q, m: Pattern, base: LatticePoint = LatticePoint(0, 0),
                              max_volume: int = 12) -> tuple[float, float]:
    """``P_q(base + m ⊂ configuration)`` by enumeration, with a rigorous tail bound.

    The true value lies in ``[value, value + tail_bound]``.
    """
    q = as_q(q)
    parts, _ = enumerate_plane_partitions(max_volume)
    pts = m.translate(base)
    for p in pts:
        p.require_valid()
    M = macmahon_constant(q)
    acc = math.fsum(q**p.volume for p in parts if all(p.is_occupied(x.t, x.h2) for x in pts))
    return M * acc, volume_tail_bound(q, max_volume)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

PARTITION_FORMAT = "planeparts.partitions/1"


def format_partitions(partitions: Sequence[PlanePartition], header: dict) -> str:
    """JSON-lines text: a header object, then one ``[[row], ...]`` array per partition."""
    lines = [json.dumps({"format": PARTITION_FORMAT, **header}, sort_keys=True)]
    lines += [json.dumps([list(r) for r in p.rows], separators=(",", ":")) for p in partitions]
    return "\n".join(lines) + "\n"


def write_partitions(path, partitions: Sequence[PlanePartition], header: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_partitions(partitions, header))


def read_partitions(path) -> tuple[dict, list[PlanePartition]]:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != PARTITION_FORMAT:
            raise PreconditionError(f"{path} is not a partition file")
        return header, [PlanePartition(json.loads(line)) for line in fh if line.strip()]


def write_configuration_csv(path, cfg: PointConfiguration) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,h2,occupied\n")
        for t, h2, o in cfg.triples():
            fh.write(f"{t},{h2},{o}\n")
