"""
Exception hierarchy with stable error codes
"""
from typing import Optional, Tuple


class GrushinChoquardError(Exception):
    """Base error; `code` is stable across releases"""

    code = 100

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ParameterError(GrushinChoquardError, ValueError):
    """Invalid problem parameters, points or grid sizes"""
    code = 101


class NonadmissibleExponentError(GrushinChoquardError):
    """p outside the open existence window"""
    code = 102

    def __init__(self, p: float, interval: Tuple[float, float]):
        lo, hi = interval
        super().__init__(
            f"nonadmissible exponent: p={p:g} not in admissible interval ({lo:.6g}, {hi:.6g})"
        )
        self.p = p
        self.interval = interval


class DegenerateFieldError(GrushinChoquardError):
    """Field is identically zero or has vanishing Choquard term"""
    code = 103

    def __init__(self, message: str = "degenerate field"):
        super().__init__(message)


class SingularEvaluationError(GrushinChoquardError):
    """Kernel evaluated at coincident points"""
    code = 104

    def __init__(self, message: str = "singular evaluation"):
        super().__init__(message)


class KernelMemoryError(GrushinChoquardError):
    """Dense kernel exceeds the configured memory cap"""
    code = 105


class SupportViolationError(GrushinChoquardError):
    """Dilated field escapes the computational box or shrinks below grid resolution"""
    code = 106

    def __init__(self, message: str = "support violation"):
        super().__init__(message)


class GridMismatchError(GrushinChoquardError, ValueError):
    """Operands live on different grids"""
    code = 107


class SolverDivergedError(GrushinChoquardError):
    """Iterates left the admissible norm window"""
    code = 201

    def __init__(self, message: str, direction: str = 'escape'):
        super().__init__(message)
        self.direction = direction


class MaxIterationsError(GrushinChoquardError):
    """Iteration budget exhausted before convergence"""
    code = 202

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ConfigError(GrushinChoquardError):
    """Configuration could not be parsed or validated"""
    code = 301

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class FormatError(GrushinChoquardError):
    """Field or kernel file does not match its format or the expected parameters"""
    code = 302

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class PathEndpointError(GrushinChoquardError):
    """Automatic mountain-pass endpoint does not reach negative energy"""
    code = 203

    def __init__(self, message: str = "path endpoint not negative"):
        super().__init__(message)
