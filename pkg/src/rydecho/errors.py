"""Exception hierarchy shared by all modules."""


class RydechoError(Exception):
    """Base class for package errors."""


class InvalidInputError(RydechoError, ValueError):
    pass


class CapacityError(RydechoError):
    """Raised when a system exceeds the exact-simulation cap."""

    def __init__(self, n_atoms, cap):
        super().__init__(f"{n_atoms} atoms exceeds the exact-simulation cap of {cap}")
        self.n_atoms = n_atoms
        self.cap = cap


class NumericalError(RydechoError, ArithmeticError):
    pass


class ConfigError(RydechoError, ValueError):
    pass


class DegenerateDataError(RydechoError, ValueError):
    pass


class UndefinedVisibilityError(RydechoError, ValueError):
    pass
