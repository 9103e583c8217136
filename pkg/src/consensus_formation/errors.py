"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class FormationError(Exception):
    """Base class for all package errors."""


class DimensionError(FormationError, ValueError):
    pass


class SymmetryError(FormationError, ValueError):
    pass


class CertificateError(FormationError):
    """A positive-definiteness or gain-certificate requirement was violated."""


class ConfigurationError(FormationError, ValueError):
    pass


class ConnectivityError(FormationError):
    pass


class TopologyError(FormationError):
    pass


class GeometryError(FormationError, ValueError):
    pass


class SingularityError(FormationError):
    """Euler-angle pitch reached the +-pi/2 singularity."""


class NumericError(FormationError):
    """Non-finite values appeared during integration.

    ``step`` carries the index of the failing step when known.
    """

    def __init__(self, message: str, step: int | None = None) -> None:
        super().__init__(message)
        self.step = step
