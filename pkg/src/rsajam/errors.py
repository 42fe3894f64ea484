"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its admissible range."""


class DomainError(ValueError):
    """A quantity is undefined at the requested point."""


class StateError(RuntimeError):
    """An object is not in a state that permits the operation."""


class BracketError(ValueError):
    """A root-finding bracket does not contain a sign change."""


class CouplingError(RuntimeError):
    """A coupled run disagrees with the graph it was supposed to reproduce."""
