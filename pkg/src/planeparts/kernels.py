"""Correlation kernels and determinantal correlation functions.

``kernel_Kq`` evaluates the finite-q kernel as a double contour integral by
the trapezoid rule on two concentric circles; ``kernel_sine`` evaluates the
extended sine kernel by Gauss-Legendre quadrature along a two-segment path.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bulkgeom import BulkPoint, LatticePoint, Pattern
from .errors import (ConvergenceError, DuplicatePointError, LimitExceededError, ParityError,
                     PoleError)
from .qspecial import as_q, phi

log = logging.getLogger(__name__)

IMAG_TOL = 1e-9
CLAMP_TOL = 1e-9
# cost grows like r^-2; below this the contour sum is not attempted
MIN_R = 5e-3


@dataclass(frozen=True)
class QuadratureConfig:
    n_nodes: int = 64
    max_doublings: int = 12
    tol: float = 1e-12

    def __post_init__(self):
        if self.n_nodes < 16 or self.n_nodes & (self.n_nodes - 1):
            raise ValueError("n_nodes must be a power of two >= 16")


DEFAULT_QUAD = QuadratureConfig()


# ---------------------------------------------------------------------------
# finite-q kernel
# ---------------------------------------------------------------------------

def contour_radii(t1: int, t2: int, r: float) -> tuple[float, float]:
    """Log-radii ``(log|z|, log|w|)`` of the two integration circles.

    Each circle sits near ``log|.| = r t / 2`` (where the integrand has no
    exponential growth), shifted outward or inward by a third of the distance
    to the nearest singular radius so that ``|z| > |w|`` iff ``t1 >= t2``.
    The z-integrand is analytic for ``log|z| < r/2 + r max(t1, 0)``; the
    w-integrand for ``log|w| > -r/2 - r max(-t2, 0)``.
    """
    d1 = r * (1 + abs(t1)) / 6
    d2 = r * (1 + abs(t2)) / 6
    c1, c2 = r * t1 / 2, r * t2 / 2
    if t1 >= t2:
        return c1 + d1, c2 - d2
    return c1 - d1, c2 + d2


def _exponent(p: LatticePoint) -> int:
    return (p.h2 + abs(p.t) + 1) // 2


def _kq_trapezoid(p1: LatticePoint, p2: LatticePoint, q: float, n: int,
                  lr1: float, lr2: float) -> complex:
    theta = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * theta)
    R1, R2 = math.exp(lr1), math.exp(lr2)
    z, w = R1 * e, R2 * e
    e1, e2 = _exponent(p1), _exponent(p2)
    # F(z) dz/(2 pi i) -> F z / n ; G(w) dw/(2 pi i) -> G w / n
    F = phi(p1.t, z, q) * R1 ** (-e1) * e ** (-e1)
    G = R2 ** e2 * e ** e2 / phi(p2.t, w, q)
    # 1/(z_a - w_b) = e^{-i theta_a} c_{b-a},  c_k = 1/(R1 - R2 e^{i theta_k});
    # the double sum is then a circular correlation, done exactly with FFTs.
    c = 1.0 / (R1 - R2 * e)
    c_rev = np.roll(c[::-1], 1)  # c_rev[k] = c[-k mod n]
    corr = np.fft.ifft(np.fft.fft(c_rev) * np.fft.fft(G))
    return complex(np.sum(F * R1 * corr)) / (n * n)


def kernel_Kq(p1: LatticePoint, p2: LatticePoint, q, cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Finite-q correlation kernel ``K_q(t1, h1; t2, h2)``.

    ``(2 pi i)^{-2} ∮∮ Phi(t1, z) / Phi(t2, w) z^{-(h1 + (|t1|+1)/2)}
    w^{h2 + (|t2|+1)/2 - 1} dz dw / (z - w)`` with ``|z| > |w|`` for ``t1 >= t2``.

    Node counts double from ``cfg.n_nodes`` until successive values agree to
    ``cfg.tol`` (relative to ``max(1, |K|)``).
    """
    for p in (p1, p2):
        if not p.is_valid:
            raise ParityError(f"({p.t}, {p.h}) is never occupied")
    q = as_q(q)
    r = -math.log(q)
    if r < MIN_R:
        raise LimitExceededError(f"r = {r:.3g} is below the supported minimum {MIN_R}")
    lr1, lr2 = contour_radii(p1.t, p2.t, r)
    _check_contours(p1.t, p2.t, r, lr1, lr2)
    n = cfg.n_nodes
    prev = _kq_trapezoid(p1, p2, q, n, lr1, lr2)
    for _ in range(cfg.max_doublings):
        n *= 2
        cur = _kq_trapezoid(p1, p2, q, n, lr1, lr2)
        if not cmath.isfinite(cur):
            raise ConvergenceError(f"K_q{(p1, p2)} overflowed")
        if abs(cur - prev) < cfg.tol * max(1.0, abs(cur)):
            if abs(cur.imag) > IMAG_TOL * max(1.0, abs(cur.real)):
                raise ConvergenceError(f"kernel has imaginary part {cur.imag:.3e}")
            return cur.real
        prev = cur
    raise ConvergenceError(f"K_q{(p1, p2)} did not converge with {n} nodes")


def _check_contours(t1, t2, r, lr1, lr2):
    z_sing = r / 2 + r * max(t1, 0)
    w_sing = -r / 2 - r * max(-t2, 0)
    eps = min(abs(lr1 - lr2), z_sing - lr1, lr2 - w_sing)
    if eps <= 0 or z_sing - lr1 < eps / 2 or lr2 - w_sing < eps / 2:
        raise PoleError("a Phi pole is too close to an integration contour")


# ---------------------------------------------------------------------------
# extended sine kernel
# ---------------------------------------------------------------------------

def sine_path_anchor(dt: int, bp: BulkPoint) -> float:
    """Real-axis crossing of the integration path."""
    if dt >= 0:
        return min(max(math.exp(-bp.tau / 2), 0.1), 0.9)
    return -max(1.0, 2 * math.exp(-bp.tau / 2))


def _gl_segment(a: complex, b: complex, dt: int, n_exp: int, n: int) -> complex:
    x, wts = np.polynomial.legendre.leggauss(n)
    w = (a + b) / 2 + (b - a) / 2 * x
    f = (1 - w) ** dt * w ** n_exp
    return complex(np.sum(wts * f)) * (b - a) / 2


def kernel_sine(dt: int, dh2: int, bp: BulkPoint, cfg: QuadratureConfig = DEFAULT_QUAD) -> complex:
    """Extended sine kernel ``S(dt, dh)`` with ``dh = dh2 / 2``.

    ``(2 pi i)^{-1} ∫_{conj z}^{z} (1-w)^dt w^{-dh-dt/2} dw / w`` along
    ``conj z -> x0 -> z``, where ``x0`` is in (0, 1) for ``dt >= 0`` and
    negative otherwise.
    """
    if (dh2 + dt) % 2:
        raise ParityError("dh + dt/2 must be an integer")
    n_exp = -(dh2 + dt) // 2 - 1
    x0 = sine_path_anchor(dt, bp)
    if x0 in (0.0, 1.0):
        raise PoleError("sine-kernel path passes through a pole")
    z, zb = bp.z, bp.z.conjugate()
    n = 16
    prev = None
    for _ in range(cfg.max_doublings + 1):
        val = (_gl_segment(zb, x0, dt, n_exp, n) + _gl_segment(x0, z, dt, n_exp, n)) / (2j * math.pi)
        if prev is not None and abs(val - prev) < cfg.tol * max(1.0, abs(val)):
            return val
        prev = val
        n *= 2
    raise ConvergenceError(f"sine kernel ({dt}, {dh2 / 2}) did not converge")


def kernel_sine_equal_time(dh: float, bp: BulkPoint) -> float:
    """Closed form ``e^{tau dh / 2} sin(phi dh) / (pi dh)``; ``phi/pi`` at ``dh = 0``."""
    if dh != int(dh):
        raise ParityError("equal-time height differences are integers")
    if dh == 0:
        return bp.phi / math.pi
    return math.exp(bp.tau * dh / 2) * math.sin(bp.phi * dh) / (math.pi * dh)


# ---------------------------------------------------------------------------
# correlation kernels and determinants
# ---------------------------------------------------------------------------

class CorrelationKernel:
    """Two-point evaluator feeding determinantal correlations.

    Values are memoised per instance; share an instance only within one worker.
    """

    kind = "abstract"

    def __init__(self):
        self._cache: dict = {}

    def evaluate(self, p1: LatticePoint, p2: LatticePoint) -> float:
        key = self._key(p1, p2)
        val = self._cache.get(key)
        if val is None:
            val = self._cache[key] = self._compute(p1, p2)
        return val

    __call__ = evaluate

    def matrix(self, pts: Sequence[LatticePoint]) -> np.ndarray:
        return np.array([[self.evaluate(a, b) for b in pts] for a in pts], dtype=complex)

    def _key(self, p1, p2):
        return (p1, p2)

    def _compute(self, p1, p2):
        raise NotImplementedError


class FiniteQKernel(CorrelationKernel):
    kind = "finite-q"

    def __init__(self, q, cfg: QuadratureConfig = DEFAULT_QUAD):
        super().__init__()
        self.q = as_q(q)
        self.cfg = cfg

    def _compute(self, p1, p2):
        return kernel_Kq(p1, p2, self.q, self.cfg)


class SineKernel(CorrelationKernel):
    """Bulk kernel; translation invariant, so only differences are cached."""

    kind = "bulk"

    def __init__(self, bp: BulkPoint, cfg: QuadratureConfig = DEFAULT_QUAD):
        super().__init__()
        self.bp = bp
        self.cfg = cfg

    def _key(self, p1, p2):
        return (p1.t - p2.t, p1.h2 - p2.h2)

    def _compute(self, p1, p2):
        return kernel_sine(p1.t - p2.t, p1.h2 - p2.h2, self.bp, self.cfg)


def correlation(kernel: CorrelationKernel, pts: Sequence[LatticePoint]) -> float:
    """``P(all pts occupied) = det[K(p_i, p_j)]`` (LU with partial pivoting)."""
    pts = list(pts)
    if len(set(pts)) != len(pts):
        raise DuplicatePointError("correlation points must be distinct")
    if not pts:
        return 1.0
    for p in pts:
        p.require_valid()
    d = complex(np.linalg.det(kernel.matrix(pts)))
    if abs(d.imag) > IMAG_TOL:
        raise ConvergenceError(f"determinant has imaginary part {d.imag:.3e}")
    val = d.real
    if -CLAMP_TOL <= val < 0:
        log.warning("clamping correlation %.3e to 0", val)
        val = 0.0
    return val


def covariance(kernel: CorrelationKernel, base1: LatticePoint, base2: LatticePoint,
               m: Pattern) -> float:
    """``E[c_{base1+m} c_{base2+m}] - E[c_{base1+m}] E[c_{base2+m}]``."""
    s1, s2 = m.translate(base1), m.translate(base2)
    union = list(dict.fromkeys(s1 + s2))
    return correlation(kernel, union) - correlation(kernel, s1) * correlation(kernel, s2)


def gauge_check(kernel: CorrelationKernel, pts: Sequence[LatticePoint], g: Sequence[float]) -> float:
    """``|det K - det(diag(g) K diag(g)^{-1})|``; zero up to rounding for any positive g."""
    pts = list(pts)
    if len(set(pts)) != len(pts):
        raise DuplicatePointError("gauge check needs distinct points")
    g = np.asarray(g, dtype=float)
    K = kernel.matrix(pts)
    Kg = g[:, None] * K / g[None, :]
    return abs(np.linalg.det(K) - np.linalg.det(Kg)) if pts else 0.0
