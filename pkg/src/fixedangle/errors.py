"""Exception types shared across the toolkit."""

from __future__ import annotations


class FixedAngleError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(FixedAngleError):
    """Invalid grid, recipe, or run configuration."""


class GridMismatch(FixedAngleError):
    """Two grid-resident objects do not live on the same grid."""


class InvalidWavenumber(FixedAngleError):
    """Wavenumber outside the admissible range (k must be > 0)."""


class ResonantLattice(FixedAngleError):
    """An exact-resonance multiplier was requested while a lattice
    frequency sits on the sphere |xi| = k."""


class DegenerateFrequency(FixedAngleError):
    """Frequency on the zero-measure set where the Ewald decomposition
    is undefined (xi = 0 or xi orthogonal to the incident direction)."""


class NoContraction(FixedAngleError):
    """The Born-series (Neumann) iteration failed to contract.

    Signals that the coupling is too strong at this wavenumber for the
    small-potential regime the pipeline lives in.
    """

    def __init__(self, message, *, k=None, sign=None, residuals=None):
        super().__init__(message)
        self.k = k
        self.sign = sign
        self.residuals = list(residuals) if residuals is not None else []


class DenseTooLarge(FixedAngleError):
    """Dense direct solve requested beyond the N^d size cap."""


class OracleFailure(FixedAngleError):
    """A far-field oracle could not serve a query (solver failure or
    dataset coverage hole)."""


class NotConverged(FixedAngleError):
    """Fixed-point reconstruction hit the iteration cap above tolerance.

    Carries the trace accumulated so far and, when available, the last
    iterate.
    """

    def __init__(self, message, *, trace=None, last_iterate=None):
        super().__init__(message)
        self.trace = trace
        self.last_iterate = last_iterate
