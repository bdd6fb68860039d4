"""Exception types shared across the package."""


class CorralwalkError(Exception):
    """Base class for all corralwalk errors."""


class ParameterError(CorralwalkError):
    """A numeric argument is outside its allowed range."""


class SizingError(CorralwalkError):
    """A lattice is too small for the state or displacement it must hold."""


class EdgeOverflowError(CorralwalkError):
    """Walker amplitude shifted past the lattice edge beyond tolerance."""


class ShapeError(CorralwalkError):
    """Two objects live on incompatible lattices."""


class PlanError(CorralwalkError):
    """A corral plan or gate schedule is internally inconsistent."""


class PlanParseError(PlanError):
    """A plan document failed validation; carries field context."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class OracleDomainError(CorralwalkError):
    """State support too close to the lattice edge for the periodic evolver."""
