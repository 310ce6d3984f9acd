"""Law-of-large-numbers experiment for local patterns.

For a test function ``f`` and a pattern ``m`` the random variable

    Sigma(f, m, r) = r^2 * sum_{(t,h)} f(r t, r h) * 1[(t,h) + m occupied]

is compared with ``I(f, m) = ∫_A f(tau, chi) P_{(tau,chi)}(m occupied)``.
The sum runs over admissible translates only (``h + t/2`` integral); all
other translates never contribute for non-empty ``m``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bulkgeom import (BulkPoint, LatticePoint, Pattern, Rect, density, in_region_A,
                       nearest_admissible, translate_grid)
from .errors import ConvergenceError, PreconditionError
from .kernels import (DEFAULT_QUAD, FiniteQKernel, QuadratureConfig, SineKernel,
                      correlation, covariance)
from .sampler import (DEFAULT_DELTA, PlanePartition, RngStream, Window, map_replicas,
                      sample_plane_partition, split_indices, to_point_configuration)

FAMILIES = ("cosine-bump", "tensor-hat", "constant-on-disk-mollified")
I_BOUNDARY_MARGIN = 1e-9


@dataclass(frozen=True)
class TestFunction:
    """Continuous, compactly supported weight on the macroscopic plane.

    * ``cosine-bump``: ``a cos^2(pi s / 2 rho)`` for ``s = |x - c| <= rho``
    * ``tensor-hat``: ``a (1 - |dtau|/rho)_+ (1 - |dchi|/rho)_+``
    * ``constant-on-disk-mollified``: ``a`` on ``s <= rho/2``, cosine taper to 0 at ``s = rho``
    """

    __test__ = False  # not a pytest class

    family: str = "cosine-bump"
    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.3
    amplitude: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown test function family {self.family!r}")
        if not self.radius > 0:
            raise PreconditionError("radius must be positive")

    def __call__(self, tau, chi):
        dt = np.asarray(tau, float) - self.center[0]
        dc = np.asarray(chi, float) - self.center[1]
        rho = self.radius
        if self.family == "tensor-hat":
            val = np.clip(1 - np.abs(dt) / rho, 0, None) * np.clip(1 - np.abs(dc) / rho, 0, None)
        else:
            s = np.hypot(dt, dc)
            if self.family == "cosine-bump":
                val = np.where(s <= rho, np.cos(np.pi * s / (2 * rho)) ** 2, 0.0)
            else:
                taper = np.cos(np.pi * (s - rho / 2) / rho) ** 2
                val = np.where(s <= rho / 2, 1.0, np.where(s <= rho, taper, 0.0))
        out = self.amplitude * val
        return float(out) if np.ndim(out) == 0 else out

    @property
    def support(self) -> Rect:
        (a, b), rho = self.center, self.radius
        return Rect(a - rho, a + rho, b - rho, b + rho)

    def describe(self) -> str:
        return (f"{self.family}(center=({self.center[0]!r}, {self.center[1]!r}), "
                f"radius={self.radius!r}, amplitude={self.amplitude!r})")


# ---------------------------------------------------------------------------
# Sigma
# ---------------------------------------------------------------------------

class SigmaEvaluator:
    """Precomputed translates and weights for repeated evaluation of Sigma."""

    def __init__(self, f: TestFunction, m: Pattern, r: float):
        if not r > 0:
            raise PreconditionError("r must be positive")
        self.f, self.m, self.r = f, m, r
        self.t, self.h2 = translate_grid(f.support, r)
        self.weights = f(r * self.t, r * self.h2 / 2) if self.t.size else np.empty(0)
        pad = int(math.ceil(m.sup_norm))
        if self.t.size:
            self.window = Window(int(self.t.min()) - pad, int(self.t.max()) + pad,
                                 int(self.h2.min()) - 2 * pad, int(self.h2.max()) + 2 * pad)
        else:
            self.window = None

    @property
    def n_translates(self) -> int:
        return int(self.t.size)

    def indicators(self, pi: PlanePartition) -> np.ndarray:
        if self.window is None:
            return np.empty(0, dtype=bool)
        cfg = to_point_configuration(pi, self.window)
        ind = np.ones(self.t.size, dtype=bool)
        w = self.window
        for p in self.m:
            ind &= cfg.occ[self.t + p.t - w.t_min, self.h2 + p.h2 - w.h2_min]
        return ind

    def __call__(self, pi: PlanePartition) -> float:
        if self.window is None:
            return 0.0
        ind = self.indicators(pi)
        return self.r**2 * math.fsum(self.weights[ind].tolist())

    def riemann_sum(self) -> float:
        """``r^2 sum f`` over the translates, i.e. Sigma for the empty pattern."""
        return self.r**2 * math.fsum(self.weights.tolist())


def empirical_sigma(pi: PlanePartition, f: TestFunction, m: Pattern, r: float) -> float:
    """``Sigma(f, m, r)`` for one plane partition."""
    return SigmaEvaluator(f, m, r)(pi)


# ---------------------------------------------------------------------------
# limit integral
# ---------------------------------------------------------------------------

def _bulk_correlation(m: Pattern, tau: float, chi: float, cfg: QuadratureConfig) -> float:
    if not len(m):
        return 1.0
    kernel = SineKernel(BulkPoint.at(tau, chi), cfg)
    return correlation(kernel, list(m))


def _midpoint(f: TestFunction, m: Pattern, step: float, cfg: QuadratureConfig) -> float:
    box = f.support
    nt = max(int(math.ceil((box.tau_max - box.tau_min) / step)), 1)
    nc = max(int(math.ceil((box.chi_max - box.chi_min) / step)), 1)
    ht = (box.tau_max - box.tau_min) / nt
    hc = (box.chi_max - box.chi_min) / nc
    taus = box.tau_min + ht * (np.arange(nt) + 0.5)
    chis = box.chi_min + hc * (np.arange(nc) + 0.5)
    T, C = np.meshgrid(taus, chis, indexing="ij")
    fv = f(T, C)
    inside = in_region_A(T, C, margin=I_BOUNDARY_MARGIN) & (fv != 0)
    terms = [fv[i, j] * _bulk_correlation(m, T[i, j], C[i, j], cfg)
             for i, j in zip(*np.nonzero(inside))]
    return ht * hc * math.fsum(terms)


def density_weighted_integral(f: TestFunction, step: float) -> float:
    """``∫ f * density`` on the same midpoint grid, via the closed-form density.

    Independent integrand path for the single-point pattern.
    """
    box = f.support
    nt = max(int(math.ceil((box.tau_max - box.tau_min) / step)), 1)
    nc = max(int(math.ceil((box.chi_max - box.chi_min) / step)), 1)
    ht = (box.tau_max - box.tau_min) / nt
    hc = (box.chi_max - box.chi_min) / nc
    terms = []
    for i in range(nt):
        for j in range(nc):
            tau, chi = box.tau_min + ht * (i + 0.5), box.chi_min + hc * (j + 0.5)
            fv = f(tau, chi)
            if fv != 0 and in_region_A(tau, chi, margin=I_BOUNDARY_MARGIN):
                terms.append(fv * density(tau, chi))
    return ht * hc * math.fsum(terms)


@dataclass
class IntegralResult:
    value: float
    coarse: float
    step: float


def integral_I(f: TestFunction, m: Pattern, grid_step: float = 0.02,
               cfg: QuadratureConfig = DEFAULT_QUAD, rel_tol: float = 5e-3,
               min_step: float | None = None, detail: bool = False):
    """``∫_{A ∩ supp f} f(tau, chi) det[S_{z(tau,chi)}(m_i - m_j)]`` by the midpoint rule.

    The step is halved until two successive grids agree to ``rel_tol``;
    :class:`ConvergenceError` if that fails before ``min_step``.
    """
    if not grid_step > 0:
        raise PreconditionError("grid_step must be positive")
    min_step = grid_step / 16 if min_step is None else min_step
    step = grid_step
    coarse = _midpoint(f, m, step, cfg)
    while True:
        fine = _midpoint(f, m, step / 2, cfg)
        if abs(fine - coarse) <= rel_tol * abs(fine) or abs(fine - coarse) < 1e-15:
            res = IntegralResult(fine, coarse, step / 2)
            return res if detail else res.value
        step /= 2
        if step / 2 < min_step:
            raise ConvergenceError("midpoint rule did not stabilise")
        coarse = fine


# ---------------------------------------------------------------------------
# Monte Carlo experiment
# ---------------------------------------------------------------------------

STREAM_STRIDE = 1 << 32


@dataclass
class ExperimentReport:
    """Per-``r`` statistics of Sigma against the limit integral."""

    records: list[dict]
    fit_slope: float
    provenance: dict
    sigmas: dict = field(default_factory=dict)  # r -> array of replica values

    def to_text(self) -> str:
        """Key-value text: ``[provenance]``, ``[fit]``, then one ``[r.k]`` section per level."""
        lines = ["# planeparts experiment report", "[provenance]"]
        lines += [f"{k} = {_fmt(v)}" for k, v in self.provenance.items()]
        lines += ["", "[fit]", f"loglog_slope = {_fmt(self.fit_slope)}"]
        for k, rec in enumerate(self.records):
            lines += ["", f"[r.{k}]"]
            lines += [f"{key} = {_fmt(v)}" for key, v in rec.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentReport":
        sections: dict[str, dict] = {}
        cur = None
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("["):
                cur = sections.setdefault(line[1:-1], {})
                continue
            key, _, val = line.partition("=")
            cur[key.strip()] = _parse(val.strip())
        records = [sections[k] for k in sorted((k for k in sections if k.startswith("r.")),
                                               key=lambda k: int(k[2:]))]
        return cls(records, sections.get("fit", {}).get("loglog_slope", math.nan),
                   sections.get("provenance", {}))

    def write_sigmas_csv(self, path) -> None:
        """Per-replica values, columns ``r, replica, sigma``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "replica", "sigma"])
            for r, vals in self.sigmas.items():
                for i, v in enumerate(vals):
                    w.writerow([_fmt(r), i, _fmt(float(v))])


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        out = format(v, ".17g")
        return out if any(c in out for c in ".en") else out + ".0"
    return str(v)


def _parse(s: str):
    if s in ("true", "false"):
        return s == "true"
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def _sigma_chunk(args):
    f, m, r, q, delta, seed, level, indices = args
    ev = SigmaEvaluator(f, m, r)
    return [ev(sample_plane_partition(q, delta, RngStream(seed, level * STREAM_STRIDE + i)))
            for i in indices]


def _lattice_defect(f: TestFunction, ev: SigmaEvaluator, ref_area: float) -> float:
    """Relative mismatch of the lattice count ``r^2 |index set|`` against the area."""
    if ref_area == 0:
        return 0.0
    return abs(ev.r**2 * ev.n_translates - ref_area) / ref_area


def run_lln_experiment(f: TestFunction, m: Pattern, r_list: Sequence[float], n_samples: int,
                       seed: int, delta: float = DEFAULT_DELTA, grid_step: float = 0.02,
                       cfg: QuadratureConfig = DEFAULT_QUAD, threads: int = 1) -> ExperimentReport:
    """Sample ``n_samples`` partitions at each ``q = e^{-r}`` and summarise Sigma vs I.

    Replica ``i`` at level ``k`` uses stream ``(seed, k * 2^32 + i)``; results do
    not depend on ``threads``.
    """
    r_list = [float(r) for r in r_list]
    if any(b >= a for a, b in zip(r_list, r_list[1:])):
        raise PreconditionError("r_list must be strictly decreasing")
    if n_samples < 50:
        raise PreconditionError("n_samples must be at least 50")
    I_val = integral_I(f, m, grid_step, cfg)
    area = integral_I(f, Pattern(), grid_step, cfg) if f.amplitude else 0.0
    support_area = _support_area(f, grid_step)
    records, sigmas = [], {}
    for level, r in enumerate(r_list):
        q = math.exp(-r)
        chunks = [(f, m, r, q, delta, seed, level, idx) for idx in split_indices(n_samples)]
        vals = np.array([v for part in map_replicas(_sigma_chunk, chunks, threads) for v in part])
        sigmas[r] = vals
        mean = math.fsum(vals.tolist()) / n_samples
        var = math.fsum(((vals - mean) ** 2).tolist()) / (n_samples - 1)
        ci = 1.96 * math.sqrt(var / n_samples)
        ev = SigmaEvaluator(f, m, r)
        records.append({
            "r": r,
            "n_samples": n_samples,
            "n_translates": ev.n_translates,
            "mean_sigma": mean,
            "var_sigma": var,
            "I": I_val,
            "abs_err": abs(mean - I_val),
            "ci_halfwidth": ci,
            "exceed_10pct": float(np.mean(np.abs(vals - I_val) > 0.1 * abs(I_val))),
            "exceed_5pct": float(np.mean(np.abs(vals - I_val) > 0.05 * abs(I_val))),
            "riemann_sum": ev.riemann_sum(),
            "lattice_defect": _lattice_defect(f, ev, support_area),
        })
    errs = np.array([rec["abs_err"] for rec in records])
    rs = np.array(r_list)
    slope = float(np.polyfit(np.log(rs), np.log(errs), 1)[0]) if len(rs) > 1 and np.all(errs > 0) else math.nan
    provenance = {
        "seed": seed,
        "delta": delta,
        "grid_step": grid_step,
        "quadrature": f"n_nodes={cfg.n_nodes} max_doublings={cfg.max_doublings} tol={cfg.tol!r}",
        "f": f.describe(),
        "pattern": str(m) or "-",
        "I_empty_pattern": area,
        "stream_rule": "replica i at level k uses (seed, k*2^32 + i)",
    }
    return ExperimentReport(records, slope, provenance, sigmas)


def _support_area(f: TestFunction, step: float) -> float:
    """Area of ``A ∩ box(supp f)``, midpoint rule on a fine grid."""
    box = f.support
    h = step / 8
    taus = np.arange(box.tau_min + h / 2, box.tau_max, h)
    chis = np.arange(box.chi_min + h / 2, box.chi_max, h)
    T, C = np.meshgrid(taus, chis, indexing="ij")
    return float(np.count_nonzero(in_region_A(T, C)) * h * h)


# ---------------------------------------------------------------------------
# kernel-based scans
# ---------------------------------------------------------------------------

def covariance_decay_scan(m: Pattern, pairs: Sequence[tuple[tuple[float, float], tuple[float, float]]],
                          r_list: Sequence[float] = (0.2, 0.1, 0.05),
                          cfg: QuadratureConfig = DEFAULT_QUAD) -> tuple[list[dict], list[dict]]:
    """Finite-q covariances of two translated copies of ``m`` along an ``r`` sweep.

    Returns ``(rows, summary)``.  Rows hold the raw covariance per pair and ``r``
    plus ``C(r) = |cov| |chi1 - chi2| / r`` for equal-tau pairs or
    ``|cov| |tau1 - tau2|^2`` otherwise.  The summary has one entry per pair:
    ``C_ratio = max C / min C`` (equal tau) or the successive decay ratios
    compared with ``(r_{k+1}/r_k)^2`` (distinct tau).
    """
    rows, summary = [], []
    mbar = m.sup_norm
    for k, ((t1, c1), (t2, c2)) in enumerate(pairs):
        for tau, chi in ((t1, c1), (t2, c2)):
            if not in_region_A(tau, chi):
                raise PreconditionError(f"({tau}, {chi}) is outside A")
        sep = max(abs(t1 - t2), abs(c1 - c2))
        for r in r_list:
            if not sep > mbar * r:
                raise PreconditionError(f"pair {k} violates the separation condition at r={r}")
        equal_tau = t1 == t2
        covs = []
        for r in r_list:
            b1, d1 = nearest_admissible(t1, c1, r)
            b2, d2 = nearest_admissible(t2, c2, r)
            if b1 == b2:
                raise PreconditionError(f"pair {k} collapses to one lattice point at r={r}")
            kern = FiniteQKernel(math.exp(-r), cfg)
            cov = covariance(kern, b1, b2, m)
            covs.append(cov)
            scaled = abs(cov) * abs(c1 - c2) / r if equal_tau else abs(cov) * (t1 - t2) ** 2
            rows.append({"pair": k, "tau1": t1, "chi1": c1, "tau2": t2, "chi2": c2, "r": r,
                         "base1": str(b1), "base2": str(b2), "rounding": max(d1, d2),
                         "cov": cov, "scaled": scaled, "equal_tau": equal_tau})
        entry = {"pair": k, "equal_tau": equal_tau, "covs": covs}
        if equal_tau:
            C = [abs(c) * abs(c1 - c2) / r for c, r in zip(covs, r_list)]
            entry["C"] = C
            entry["C_ratio"] = max(C) / min(C) if min(C) > 0 else math.inf
        else:
            entry["decay_ratios"] = [abs(b) / abs(a) if a else math.nan
                                     for a, b in zip(covs, covs[1:])]
            entry["r2_ratios"] = [(b / a) ** 2 for a, b in zip(r_list, r_list[1:])]
        summary.append(entry)
    return rows, summary


def convergence_rate_check(m: Pattern, bulk_pts: Sequence[tuple[float, float]],
                           r_list: Sequence[float] = (0.5, 0.25, 0.125, 0.0625),
                           cfg: QuadratureConfig = DEFAULT_QUAD) -> tuple[list[dict], list[dict]]:
    """``|E_r[c_{(tau,chi)/r + m}] - E_{(tau,chi)}[c_m]|`` along an ``r`` sweep.

    ``(tau, chi)/r`` is rounded to the nearest admissible lattice point and the
    rounding distance reported.  Summary entries carry the log-log slope.
    """
    rows, summary = [], []
    for tau, chi in bulk_pts:
        if not in_region_A(tau, chi):
            raise PreconditionError(f"({tau}, {chi}) is outside A")
        limit = _bulk_correlation(m, tau, chi, cfg)
        errs = []
        for r in r_list:
            base, dist = nearest_admissible(tau, chi, r)
            finite = correlation(FiniteQKernel(math.exp(-r), cfg), m.translate(base)) if len(m) else 1.0
            err = abs(finite - limit)
            errs.append(err)
            rows.append({"tau": tau, "chi": chi, "r": r, "base": str(base), "rounding": dist,
                         "finite": finite, "limit": limit, "err": err})
        errs_a = np.array(errs)
        slope = (float(np.polyfit(np.log(r_list), np.log(errs_a), 1)[0])
                 if len(errs_a) > 1 and np.all(errs_a > 0) else math.nan)
        summary.append({"tau": tau, "chi": chi, "errs": errs, "slope": slope,
                        "decreasing": bool(np.all(np.diff(errs_a) < 0))})
    return rows, summary
