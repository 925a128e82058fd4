"""Exception types shared across the package."""

from __future__ import annotations


class TauberGamesError(Exception):
    """Base class for all package-specific errors."""


class DomainError(TauberGamesError, ValueError):
    """An argument is outside the domain a routine supports."""


class UnreachableQuantileError(TauberGamesError):
    """Requested mass level exceeds the total mass of the density."""

    def __init__(self, level: float, total: float):
        self.level = level
        self.total = total
        super().__init__(
            f"quantile level {level!r} exceeds available mass {total!r}"
        )


class ConcatenationError(TauberGamesError):
    """Processes or strategies cannot be glued at the requested switch time."""


class ModelFormatError(TauberGamesError):
    """A model or family file does not parse."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        elif line is not None:
            loc = f"line {line}: "
        super().__init__(loc + message)


class CapExceededError(TauberGamesError):
    """An enumeration would exceed the configured resource cap."""

    def __init__(self, needed: int, cap: int, what: str = "enumeration"):
        self.needed = needed
        self.cap = cap
        super().__init__(f"{what} needs {needed} items, cap is {cap}")


class HorizonOverflowError(TauberGamesError):
    """No finite horizon reaches the requested mass coverage."""


class UnsupportedFamilyError(TauberGamesError):
    """The named density family is not available."""


class InfeasibleScheduleError(TauberGamesError):
    """No schedule parameters satisfy the stated constraints."""

    def __init__(self, message: str, *, constraint: str | None = None):
        self.constraint = constraint
        super().__init__(message)
