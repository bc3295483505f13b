"""Exception hierarchy shared by all nsft modules."""

from __future__ import annotations


class NSFTError(Exception):
    """Base class for every error raised by nsft."""


class SpecParseError(NSFTError, ValueError):
    """A spec document does not conform to the schema.

    ``path`` is a JSON-pointer-like location such as ``$.matrices.G[0][1]``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class HorizonError(NSFTError, IndexError):
    """An index lies outside the range a generator or chain can serve."""


class FiniteShiftError(NSFTError):
    """Word counts stayed bounded up to the scan cap (finite shift, or cap too small)."""

    def __init__(self, n: int, eps: float, cap: int, last_count: int):
        self.n = n
        self.eps = eps
        self.cap = cap
        self.last_count = last_count
        super().__init__(
            f"w({n},{n}+m) <= 1/eps={1 / eps:.6g} for all m <= {cap} "
            f"(last count {last_count}); finite shift or cap too small"
        )


class EnumerationCapError(NSFTError):
    """Brute-force enumeration refused because the word count exceeds the cap."""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"refusing to enumerate {count} words (cap {cap})")


class UndecidableError(NSFTError):
    """Two finite prefixes agree on their whole common length."""


class PrimitivityError(NSFTError):
    """No entrywise-positive block product exists in the searched window."""


class ConvergenceError(NSFTError):
    """Tail iteration did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")
