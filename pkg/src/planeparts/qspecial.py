"""Special functions: q-Pochhammer symbol, MacMahon constant, dilogarithm,
the ratio Phi entering the finite-q kernel, and the action S.

The dilogarithm follows the convention ``dilog(1 - z) = sum_{n>=1} z**n / n**2``
for ``|z| < 1``, i.e. ``dilog(w) = Li2(1 - w)``.  Its branch cut is
``w in (-inf, 0)``, which makes ``dilog(1 - z)`` analytic off ``z in (1, inf)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import bernoulli, factorial

from .errors import BranchCutError, PoleError, PreconditionError

DEFAULT_TOL = 1e-15
PI2_6 = math.pi**2 / 6


@dataclass(frozen=True)
class QParameter:
    """Geometric weight ``q = exp(-r)`` with ``0 < q < 1``."""

    q: float

    def __post_init__(self):
        if not (0.0 < self.q < 1.0):
            raise PreconditionError(f"q must lie in (0, 1), got {self.q!r}")

    @classmethod
    def from_r(cls, r: float) -> "QParameter":
        if not r > 0:
            raise PreconditionError(f"r must be positive, got {r!r}")
        return cls(math.exp(-r))

    @property
    def r(self) -> float:
        return -math.log(self.q)


def as_q(q) -> float:
    """Accept a float or a :class:`QParameter`; return the validated float."""
    if isinstance(q, QParameter):
        return q.q
    return QParameter(float(q)).q


# ---------------------------------------------------------------------------
# q-Pochhammer
# ---------------------------------------------------------------------------

def pochhammer_terms(xmax: float, q: float, tol: float = DEFAULT_TOL) -> int:
    """Number of factors ``K`` kept in ``prod_{k<K} (1 - x q^k)``.

    ``K`` is the first index with ``|x| q^K < tol (1 - q)``, so that the
    neglected tail ``sum_{k>=K} |x| q^k`` is below ``tol``.
    """
    if xmax <= 0:
        return 0
    K = math.ceil(math.log(tol * (1 - q) / xmax) / math.log(q))
    return max(K, 0)


def pochhammer_tail_bound(xmax: float, q: float, K: int) -> float:
    """Bound on ``|prod_{k>=K}(1 - x q^k) - 1|`` for ``|x| <= xmax``."""
    u = xmax * q**K
    if u >= 1:
        return math.inf
    return math.expm1(u / ((1 - q) * (1 - u)))


def qpochhammer(x, q, tol: float = DEFAULT_TOL, return_bound: bool = False):
    """``(x; q)_inf = prod_{k>=0} (1 - x q^k)``, elementwise over ``x``.

    With ``return_bound=True`` also returns the relative truncation bound.
    """
    q = as_q(q)
    x = np.asarray(x, dtype=complex)
    xmax = float(np.max(np.abs(x))) if x.size else 0.0
    K = pochhammer_terms(xmax, q, tol)
    out = np.ones_like(x)
    term = x.copy()
    for _ in range(K):
        out *= 1 - term
        term *= q
    if out.ndim == 0:
        out = complex(out)
    if return_bound:
        return out, pochhammer_tail_bound(xmax, q, K)
    return out


def log_qpochhammer(x, q, tol: float = DEFAULT_TOL):
    """``sum_k Log(1 - x q^k)`` with principal logs; the analytic branch of
    ``log (x; q)_inf`` on ``|x| < 1``."""
    q = as_q(q)
    x = np.asarray(x, dtype=complex)
    xmax = float(np.max(np.abs(x))) if x.size else 0.0
    K = pochhammer_terms(xmax, q, tol)
    k = np.arange(K)
    terms = np.multiply.outer(x, q**k)
    out = np.sum(np.log1p(-terms), axis=-1)
    return complex(out) if out.ndim == 0 else out


def macmahon_constant(q, tol: float = DEFAULT_TOL) -> float:
    """``M = prod_{n>=1} (1 - q^n)^n``, the normalisation of the q^volume measure.

    Truncated at the first ``N`` whose tail ``sum_{n>N} n q^n`` is below ``tol``.
    """
    return math.exp(log_macmahon(q, tol))


def log_macmahon(q, tol: float = DEFAULT_TOL) -> float:
    """``log M``; finite even where ``M`` itself underflows."""
    q = as_q(q)
    N = macmahon_cutoff(q, tol)
    n = np.arange(1, N + 1, dtype=float)
    return float(np.sum(n * np.log1p(-(q**n))))


def macmahon_tail(q: float, N: int) -> float:
    """Closed form of ``sum_{n>N} n q^n``."""
    return q ** (N + 1) * ((N + 1) - N * q) / (1 - q) ** 2


def macmahon_cutoff(q: float, tol: float) -> int:
    """Smallest ``N >= 0`` with ``sum_{n>N} n q^n < tol``."""
    N = 0
    # jump close to the answer, then walk
    guess = math.log(tol * (1 - q) ** 2) / math.log(q) - 1
    if guess > 0:
        N = max(int(guess) - 1, 0)
    while macmahon_tail(q, N) >= tol:
        N += 1
    while N > 0 and macmahon_tail(q, N - 1) < tol:
        N -= 1
    return N


# ---------------------------------------------------------------------------
# Dilogarithm
# ---------------------------------------------------------------------------

_NB = 40
_BERN = bernoulli(_NB) / factorial(np.arange(1, _NB + 2))  # B_n / (n+1)!


def _li2_series(x: complex) -> complex:
    # |x| <= 0.5: 0.5**n / n**2 < 1e-17 by n = 50
    s = 0j
    p = x
    for n in range(1, 60):
        s += p / (n * n)
        p *= x
        if abs(p) < 1e-18:
            break
    return s


def _li2_bernoulli(x: complex) -> complex:
    u = -cmath.log(1 - x)
    s = 0j
    p = u
    for n in range(_NB + 1):
        s += _BERN[n] * p
        p *= u
    return s


def li2(x: complex, cut_tol: float = 1e-14) -> complex:
    """Classical dilogarithm ``Li2(x)`` with the cut on ``(1, inf)``."""
    x = complex(x)
    if x.real > 1 and abs(x.imag) <= cut_tol * max(1.0, x.real):
        raise BranchCutError(f"Li2 argument {x} lies on the cut (1, inf)")
    if x == 0:
        return 0j
    if x == 1:
        return complex(PI2_6)
    ax = abs(x)
    if ax <= 0.5:
        return _li2_series(x)
    if ax > 1:
        # inversion: maps to |1/x| < 1
        return -PI2_6 - 0.5 * cmath.log(-x) ** 2 - li2(1 / x)
    if abs(1 - x) <= 0.5:
        return PI2_6 - cmath.log(x) * cmath.log(1 - x) - _li2_series(1 - x)
    if x.real > 0.5:
        # keep the Bernoulli expansion variable small
        return PI2_6 - cmath.log(x) * cmath.log(1 - x) - li2(1 - x)
    return _li2_bernoulli(x)


def dilog(w, cut_tol: float = 1e-14):
    """``dilog(w) = Li2(1 - w)``; cut along ``w in (-inf, 0)``.

    Scalars give a complex; array input is evaluated elementwise.
    """
    if np.ndim(w) == 0:
        return li2(1 - complex(w), cut_tol)
    flat = [li2(1 - complex(v), cut_tol) for v in np.ravel(w)]
    return np.asarray(flat, dtype=complex).reshape(np.shape(w))


def dilog_series(w, nterms: int = 200) -> complex:
    """Direct truncated series ``sum z^n / n^2`` with ``z = 1 - w``; only for ``|1 - w| < 1``."""
    z = 1 - complex(w)
    if abs(z) >= 1:
        raise PreconditionError("series needs |1 - w| < 1")
    n = np.arange(1, nterms + 1)
    return complex(np.sum(z**n / n**2))


# ---------------------------------------------------------------------------
# Phi and the action
# ---------------------------------------------------------------------------

def phi(t: int, z, q, tol: float = DEFAULT_TOL, pole_tol: float = 1e-12):
    """Ratio of q-Pochhammer symbols entering the finite-q kernel.

    ``Phi(t, z) = (q^{1/2}/z; q) / (q^{1/2+t} z; q)`` for ``t >= 0`` and
    ``(q^{1/2-t}/z; q) / (q^{1/2} z; q)`` for ``t < 0``.
    Raises :class:`PoleError` if a denominator factor is within ``pole_tol`` of 0.
    """
    q = as_q(q)
    t = int(t)
    z = np.asarray(z, dtype=complex)
    sq = math.sqrt(q)
    if t >= 0:
        num_arg, den_arg = sq / z, sq * q**t * z
    else:
        num_arg, den_arg = sq * q ** (-t) / z, sq * z
    _check_pole(den_arg, q, pole_tol)
    out = qpochhammer(num_arg, q, tol) / qpochhammer(den_arg, q, tol)
    return complex(out) if np.ndim(out) == 0 else out


def _check_pole(x, q: float, pole_tol: float):
    # factors 1 - x q^k vanish at x = q^{-k}; only k with q^{-k} near |x| matter
    x = np.atleast_1d(x)
    ax = np.abs(x)
    ok = ax > 0
    if not np.any(ok):
        return
    k = np.rint(-np.log(ax[ok]) / -math.log(q))
    k = np.maximum(k, 0)
    for dk in (-1, 0, 1):
        kk = np.maximum(k + dk, 0)
        if np.any(np.abs(1 - x[ok] * q**kk) < pole_tol):
            raise PoleError("Phi denominator vanishes on the evaluation set")


def action_S(z, tau: float, chi: float) -> complex:
    """Action governing the kernel asymptotics.

    For ``tau >= 0``: ``S = -(tau/2 + chi) log z - dilog(1 - 1/z) + dilog(1 - e^{-tau} z)``.
    For ``tau < 0`` the mirrored form
    ``-(|tau|/2 + chi) log z - dilog(1 - z) + dilog(1 - e^{-|tau|}/z)`` is used.
    Principal logarithm throughout.
    """
    z = complex(z)
    if z == 0:
        raise BranchCutError("log z is singular at z = 0")
    if z.real < 0 and z.imag == 0:
        raise BranchCutError(f"log z evaluated on its cut at z = {z}")
    if tau >= 0:
        return (-(tau / 2 + chi) * cmath.log(z)
                - dilog(1 - 1 / z) + dilog(1 - math.exp(-tau) * z))
    a = abs(tau)
    return (-(a / 2 + chi) * cmath.log(z)
            - dilog(1 - z) + dilog(1 - math.exp(-a) / z))


def dilog_estimate_check(z, r: float, tol: float = DEFAULT_TOL) -> float:
    """``|-log (z; e^{-r})_inf - dilog(1 - z)/r|``, which stays O(1) as ``r -> 0``."""
    if abs(z) >= 1:
        raise PreconditionError("dilog estimate needs |z| < 1")
    lhs = -log_qpochhammer(complex(z), math.exp(-r), tol)
    return abs(lhs - dilog(1 - complex(z)) / r)
