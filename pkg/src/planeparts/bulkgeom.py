"""Lattice points, patterns, and the macroscopic geometry of the liquid region.

Lattice points live in ``E = Z x (1/2)Z``; heights are stored doubled
(``h2 = 2h``) so everything stays integral.  A point can carry a particle of
some plane partition only if ``h + (|t|+1)/2`` is an integer.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import OutsideRegionError, ParityError, PreconditionError

BOUNDARY_MARGIN = 1e-12


@dataclass(frozen=True, order=True)
class LatticePoint:
    t: int
    h2: int

    @property
    def h(self) -> float:
        return self.h2 / 2

    @property
    def is_valid(self) -> bool:
        """True iff some plane partition can occupy this point."""
        return (self.h2 + abs(self.t) + 1) % 2 == 0

    @property
    def is_admissible_base(self) -> bool:
        """True iff translating a valid pattern by this point keeps it valid."""
        return (self.h2 + self.t) % 2 == 0

    def __add__(self, other: "LatticePoint") -> "LatticePoint":
        return LatticePoint(self.t + other.t, self.h2 + other.h2)

    def __sub__(self, other: "LatticePoint") -> "LatticePoint":
        return LatticePoint(self.t - other.t, self.h2 - other.h2)

    def require_valid(self) -> "LatticePoint":
        if not self.is_valid:
            raise ParityError(f"({self.t}, {self.h}) is never occupied: "
                              "h + (|t|+1)/2 is not an integer")
        return self

    @classmethod
    def parse(cls, text: str) -> "LatticePoint":
        """Parse the doubled-height syntax ``"t:2h"``, e.g. ``"0:1"`` is (0, 1/2)."""
        try:
            t, h2 = text.split(":")
            return cls(int(t), int(h2))
        except ValueError:
            raise PreconditionError(f"bad lattice point {text!r}; expected 't:2h'") from None

    def __str__(self):
        return f"{self.t}:{self.h2}"


class Pattern:
    """A finite set of occupancy-valid offsets ``m``."""

    def __init__(self, offsets: Iterable[LatticePoint] = ()):
        pts = [p if isinstance(p, LatticePoint) else LatticePoint(*p) for p in offsets]
        if len(set(pts)) != len(pts):
            raise PreconditionError("pattern offsets must be distinct")
        for p in pts:
            p.require_valid()
        self.offsets = tuple(sorted(pts))

    @classmethod
    def parse(cls, text: str) -> "Pattern":
        """Comma-separated ``t:2h`` list; the empty string gives the empty pattern."""
        text = text.strip()
        if not text or text == "-":
            return cls()
        return cls(LatticePoint.parse(s) for s in text.split(","))

    def __len__(self):
        return len(self.offsets)

    def __iter__(self):
        return iter(self.offsets)

    def __eq__(self, other):
        return isinstance(other, Pattern) and self.offsets == other.offsets

    def __hash__(self):
        return hash(self.offsets)

    def __repr__(self):
        return f"Pattern({','.join(map(str, self.offsets))})"

    def __str__(self):
        return ",".join(map(str, self.offsets))

    @property
    def sup_norm(self) -> float:
        """``max(|t|, |h|)`` over the offsets; 0 for the empty pattern."""
        return max((max(abs(p.t), abs(p.h)) for p in self.offsets), default=0.0)

    def translate(self, base: LatticePoint) -> list[LatticePoint]:
        return [base + p for p in self.offsets]


class Rect(NamedTuple):
    """Axis-aligned box ``[tau_min, tau_max] x [chi_min, chi_max]``."""

    tau_min: float
    tau_max: float
    chi_min: float
    chi_max: float

    def contains(self, tau, chi):
        return ((tau >= self.tau_min) & (tau <= self.tau_max)
                & (chi >= self.chi_min) & (chi <= self.chi_max))


def in_region_A(tau, chi, margin: float = BOUNDARY_MARGIN):
    """Membership in the liquid region ``|2 cosh(tau/2) - e^{-chi}| < 2``.

    Points within ``margin`` of the boundary are rejected.  Works elementwise.
    """
    val = np.abs(2 * np.cosh(np.asarray(tau, float) / 2) - np.exp(-np.asarray(chi, float)))
    out = val < 2 - margin
    return bool(out) if np.ndim(out) == 0 else out


def chi_bounds(tau: float) -> tuple[float, float]:
    """Open interval of ``chi`` with ``(tau, chi)`` in A; the upper end is inf at tau = 0."""
    c = 2 * math.cosh(tau / 2)
    lo = -math.log(c + 2)
    hi = math.inf if c - 2 <= 0 else -math.log(c - 2)
    return lo, hi


def saddle_z(tau: float, chi: float) -> complex:
    """Upper intersection of the circles ``C(0, e^{-tau/2})`` and ``C(1, e^{-tau/4-chi/2})``."""
    if not in_region_A(tau, chi):
        raise OutsideRegionError(f"({tau}, {chi}) is outside the liquid region")
    rho2 = math.exp(-tau)
    d2 = math.exp(-tau / 2 - chi)
    x = (1 + rho2 - d2) / 2
    y2 = rho2 - x * x
    if y2 <= 0:
        raise OutsideRegionError(f"circles do not cross at ({tau}, {chi})")
    return complex(x, math.sqrt(y2))


@dataclass(frozen=True)
class BulkPoint:
    """A point ``(tau, chi)`` of A with its saddle ``z = e^{-tau/2 + i phi}``."""

    tau: float
    chi: float
    z: complex
    phi: float

    @classmethod
    def at(cls, tau: float, chi: float) -> "BulkPoint":
        z = saddle_z(tau, chi)
        return cls(float(tau), float(chi), z, cmath.phase(z))

    @property
    def density(self) -> float:
        return self.phi / math.pi


def density(tau: float, chi: float) -> float:
    """Limit one-point density ``phi/pi`` with ``phi = arg z(tau, chi)``."""
    z = saddle_z(tau, chi)
    return cmath.phase(z * math.exp(tau / 2)) / math.pi


def critical_quadratic_residual(tau: float, chi: float) -> float:
    """Residual of ``(1 - 1/w)(1 - e^{-tau} w) = e^{-tau/2 - chi}`` at ``w = e^tau z(tau, chi)``."""
    w = math.exp(tau) * saddle_z(tau, chi)
    return abs((1 - 1 / w) * (1 - math.exp(-tau) * w) - math.exp(-tau / 2 - chi))


def translate_grid(K: Rect, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(t, h2)`` of admissible translates with ``(r t, r h)`` in ``A ∩ K``.

    Admissible means ``h + t/2`` is an integer, i.e. ``h2 + t`` even; only
    those translates keep a valid pattern valid.  Lexicographic order.
    """
    if not r > 0:
        raise PreconditionError("r must be positive")
    t_lo, t_hi = math.ceil(K.tau_min / r), math.floor(K.tau_max / r)
    h_lo, h_hi = math.ceil(2 * K.chi_min / r), math.floor(2 * K.chi_max / r)
    if t_lo > t_hi or h_lo > h_hi:
        return np.empty(0, int), np.empty(0, int)
    t, h2 = np.meshgrid(np.arange(t_lo, t_hi + 1), np.arange(h_lo, h_hi + 1), indexing="ij")
    t, h2 = t.ravel(), h2.ravel()
    tau, chi = r * t, r * h2 / 2
    keep = ((t + h2) % 2 == 0) & K.contains(tau, chi) & in_region_A(tau, chi)
    return t[keep], h2[keep]


def enumerate_translates(K: Rect, r: float, m: Pattern | None = None) -> list[LatticePoint]:
    """Admissible translates inside ``r^{-1}(A ∩ K)``, as lattice points.

    ``m`` is accepted for symmetry with the sum it indexes; admissibility does
    not depend on it.
    """
    t, h2 = translate_grid(K, r)
    return [LatticePoint(int(a), int(b)) for a, b in zip(t, h2)]


def nearest_admissible(tau: float, chi: float, r: float) -> tuple[LatticePoint, float]:
    """Round ``(tau, chi)/r`` to the closest admissible lattice point.

    Returns the point and the rounding distance in macroscopic units.
    """
    t = round(tau / r)
    h2 = round(2 * chi / r)
    best = None
    for dh in (0, -1, 1):
        cand = LatticePoint(t, h2 + dh)
        if cand.is_admissible_base:
            dist = math.hypot(r * cand.t - tau, r * cand.h - chi)
            if best is None or dist < best[1]:
                best = (cand, dist)
    return best
