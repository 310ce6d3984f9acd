"""Exception hierarchy shared by all modules."""


class PlanePartsError(ValueError):
    """Base class for every error raised by :mod:`planeparts`."""


class BranchCutError(PlanePartsError):
    """A dilogarithm or logarithm argument lies on its branch cut."""


class PoleError(PlanePartsError):
    """A q-Pochhammer denominator vanishes (or nearly so) at the given point."""


class OutsideRegionError(PlanePartsError):
    """A macroscopic point lies outside the liquid region A."""


class ParityError(PlanePartsError):
    """A lattice point cannot be occupied by any plane partition."""


class ConvergenceError(PlanePartsError):
    """An adaptive quadrature did not reach its tolerance."""


class DuplicatePointError(PlanePartsError):
    """A correlation was requested for a point set with repeated points."""


class LimitExceededError(PlanePartsError):
    """A brute-force enumeration was asked for more than it can handle."""


class WindowError(PlanePartsError):
    """A pattern lookup fell outside a materialized configuration window."""


class PreconditionError(PlanePartsError):
    """Input violates a documented precondition."""
