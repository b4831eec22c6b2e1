"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class MisalignmentError(ValueError):
    """Subdomain boundaries do not fall on mesh lines."""


class OutOfDomainError(ValueError):
    """A stencil or query reaches outside the unit square."""


class ConstructionError(RuntimeError):
    """An internal construction produced an inconsistent object."""


class NotSPDError(ArithmeticError):
    """A matrix or operator expected to be SPD is not."""


class SymmetryError(ArithmeticError):
    """An operator pencil produced complex or negative eigenvalues."""
