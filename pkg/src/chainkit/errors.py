"""Exception hierarchy shared by all chainkit modules."""

from __future__ import annotations


class ChainkitError(Exception):
    """Base class for every error raised by chainkit."""


# --- metric spaces and measures -------------------------------------------

class MetricError(ChainkitError, ValueError):
    """The distance matrix does not describe a finite metric space."""


class NotSquare(MetricError):
    pass


class NonFiniteDistance(MetricError):
    pass


class AsymmetricDistance(MetricError):
    def __init__(self, i: int, j: int):
        super().__init__(f"dist[{i}][{j}] != dist[{j}][{i}]")
        self.witness = (i, j)


class NegativeDistance(MetricError):
    def __init__(self, i: int, j: int):
        super().__init__(f"dist[{i}][{j}] < 0")
        self.witness = (i, j)


class NonZeroDiagonal(MetricError):
    def __init__(self, i: int):
        super().__init__(f"dist[{i}][{i}] must be 0")
        self.witness = (i, i)


class ZeroOffDiagonal(MetricError):
    def __init__(self, i: int, j: int):
        super().__init__(
            f"points {i} and {j} are at distance 0; merge duplicates before building the space"
        )
        self.witness = (i, j)


class TriangleViolation(MetricError):
    def __init__(self, i: int, j: int, k: int, excess: float):
        super().__init__(
            f"d({i},{k}) exceeds d({i},{j}) + d({j},{k}) by {excess:.3g}"
        )
        self.witness = (i, j, k)
        self.excess = excess


class InvalidMeasure(ChainkitError, ValueError):
    pass


class InvalidSpec(ChainkitError, ValueError):
    pass


# --- Orlicz functions and constants ---------------------------------------

class DomainError(ChainkitError, ValueError):
    pass


class InvalidR(ChainkitError, ValueError):
    pass


class NotYoung(ChainkitError, ValueError):
    pass


# --- chaining structure ---------------------------------------------------

class LevelBelowBase(ChainkitError, ValueError):
    pass


class InvalidLevels(ChainkitError, ValueError):
    pass


class DimensionMismatch(ChainkitError, ValueError):
    pass


class DegenerateSpace(ChainkitError, ValueError):
    pass


# --- verification ---------------------------------------------------------

class DegenerateK(ChainkitError, ValueError):
    pass


class PsiConditionUnmet(ChainkitError, ValueError):
    """(alpha, beta, psi) failed the growth comparison against phi."""


class NotPSD(ChainkitError, ValueError):
    pass


class IncrementConditionUnmet(ChainkitError):
    """The process does not satisfy E phi(|X(s)-X(t)|/d(s,t)) <= 1."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class EmptySubset(ChainkitError, ValueError):
    pass


class VersionMismatch(ChainkitError, UserWarning):
    pass
