# errors.py
# Exception hierarchy shared by the library layers and the CLI.
from __future__ import annotations

from typing import List, Optional, Sequence, Tuple


class DefectLabError(Exception):
    """Base class for every error raised by defectlab."""


class DimensionError(DefectLabError, ValueError):
    """Operand shapes do not fit together."""


class IndexRangeError(DefectLabError, IndexError):
    pass


class PoleProximityError(DefectLabError, ArithmeticError):
    """An evaluation point sits within epsilon of a pole."""

    def __init__(self, what: str, argument: complex, distance: float):
        self.what = what
        self.argument = argument
        self.distance = distance
        super().__init__(f"{what}: argument {argument!r} within {distance:.3g} of a pole")


class DimensionCapError(DefectLabError):
    def __init__(self, dimension: int, cap: int):
        self.dimension = dimension
        self.cap = cap
        super().__init__(f"total dimension {dimension} exceeds cap {cap}")


class CalibrationError(DefectLabError):
    """No ordering convention passed the calibration scan."""


class BetheError(DefectLabError):
    pass


class RootCollisionError(BetheError):
    def __init__(self, level: int, pair: Tuple[int, int], distance: float, delta: float):
        self.level = level
        self.pair = pair
        self.distance = distance
        self.delta = delta
        super().__init__(
            f"Jacobian singular: roots {pair[0]},{pair[1]} at distance < {delta:g}"
            f" (level {level}, distance {distance:.3g})"
        )


class SingularJacobianError(BetheError):
    pass


class ConvergenceError(BetheError):
    def __init__(self, message: str, trace: Optional[Sequence[float]] = None):
        self.trace: List[float] = list(trace or [])
        super().__init__(message)


class BranchTrackingError(BetheError):
    pass


class QuadratureError(DefectLabError):
    pass


class TailBoundError(QuadratureError):
    def __init__(self, what: str, bound: float, tolerance: float):
        self.bound = bound
        self.tolerance = tolerance
        super().__init__(f"{what}: tail bound {bound:.3g} above tolerance {tolerance:.3g}")


class ConfigError(DefectLabError, ValueError):
    """Bad configuration or CLI usage (exit code 2)."""


class StateFormatError(DefectLabError, ValueError):
    """Malformed BetheState document."""
