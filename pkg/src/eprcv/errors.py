"""Exception types raised by eprcv."""


class EprcvError(Exception):
    """Base class for all package errors."""


class InvalidStateError(EprcvError, ValueError):
    """A state violates one of its physical invariants.

    ``invariant`` names the violated property (``"hermitian"``, ``"trace"``,
    ``"positivity"``, ``"symmetry"``, ``"uncertainty"``, ``"weights"``, ...).
    """

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class TruncationError(EprcvError, ValueError):
    """Fock cutoff too small for the requested tail tolerance."""

    def __init__(self, tail_mass, tolerance, message=""):
        text = f"Fock truncation tail mass {tail_mass:.3e} exceeds tolerance {tolerance:.1e}"
        if message:
            text = f"{text} ({message})"
        super().__init__(text)
        self.tail_mass = tail_mass
        self.tolerance = tolerance


class GridError(EprcvError, ValueError):
    """Quadrature grid does not capture enough probability mass."""

    def __init__(self, deficit, message=""):
        text = f"grid too narrow: captured-mass deficit {deficit:.3e}"
        if message:
            text = f"{text} ({message})"
        super().__init__(text)
        self.deficit = deficit


class DegenerateStateError(EprcvError, ValueError):
    """Estimator undefined for the given state, e.g. zero partner variance."""


class UnsupportedStateError(EprcvError, TypeError):
    """Operation not available for this state representation."""
