"""
Error types for the TPE solver

Every failure the package raises on purpose derives from TpeError so the
command line can map it to an exit code and a machine-readable report.
"""

from typing import Any, Dict, Optional


class TpeError(Exception):
    """Base class for all solver errors"""

    exit_code = 3

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form written by the CLI on failure"""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class MeshError(TpeError):
    """Invalid geometry, topology or mesh file"""


class QuadratureError(TpeError):
    """Unsupported quadrature order or degenerate integration domain"""


class SpaceError(TpeError):
    """Invalid polynomial degrees or a rank-deficient local basis"""


class CoefficientError(TpeError):
    """Model coefficients violating the admissibility relations"""


class AssemblyError(TpeError):
    """Missing data while assembling a discrete form"""


class LinearSolveError(TpeError):
    """Factorization failure or iterative non-convergence"""


class AnalysisError(TpeError, ValueError):
    """Invalid input to a norm, rate or convergence computation"""


class FixedPointError(TpeError):
    """Fixed-point linearization did not reach the tolerance"""

    def __init__(self, message: str, iterations: int, increment: float,
                 details: Optional[Dict[str, Any]] = None):
        merged = {"iterations": iterations, "increment": increment}
        merged.update(details or {})
        super().__init__(message, merged)
        self.iterations = iterations
        self.increment = increment


class ConfigError(TpeError):
    """Run configuration rejected before any computation"""

    exit_code = 2
