"""Exception hierarchy shared by the symbolic and numeric layers.

Every error raised on purpose by the package derives from ``HarnackError`` so the
command line can map it to a stable exit code. The concrete classes also derive
from the builtin they refine (``ValueError``, ``ArithmeticError``, ``IOError``) so
callers that only know the builtins keep working.
"""

from typing import Optional


class HarnackError(Exception):
    """Base class for every error raised deliberately by harnack_verify."""


class ExpressionSyntaxError(HarnackError, ValueError):
    """Malformed derivation-DSL text.

    Attributes:
        line: 1-based line of the offending token (None when unknown).
        column: 1-based column of the offending token (None when unknown).
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class UnknownSymbolError(ExpressionSyntaxError):
    """A tensor name that is not in the symbol catalog."""


class ArityError(ExpressionSyntaxError):
    """A symbol applied to the wrong number of indices or labels."""


class IndexStructureError(HarnackError, ValueError):
    """Index appearing 3+ times, mixed-class dummy pair or inhomogeneous sum."""


class FreeIndexMismatchError(HarnackError, ValueError):
    """Two expressions compared or combined with different free-index sets."""


class RuleError(HarnackError, ValueError):
    """Unknown or uninstalled rewrite rule."""


class RuleApplicationError(HarnackError, ValueError):
    """A rule found no match at its selector or did not terminate."""


class SideConditionError(RuleApplicationError):
    """A rule matched structurally but its side condition does not hold."""


class ScriptError(ExpressionSyntaxError):
    """Malformed derivation script file."""


class DependencyError(HarnackError, ValueError):
    """A derivation step uses a derived rule before the step that installs it."""


class EvaluationError(HarnackError, ValueError):
    """An expression cannot be evaluated on the given numeric model."""


class UnboundSymbolError(EvaluationError):
    """The numeric model has no array bound to a symbol used in the expression."""


class SingularCurvatureOperator(HarnackError, ArithmeticError):
    """The curvature operator on 2-forms is (numerically) singular.

    Attributes:
        eigenvalue: The eigenvalue of smallest magnitude that triggered the error.
    """

    def __init__(self, message: str, eigenvalue: float):
        self.eigenvalue = eigenvalue
        super().__init__(message)


class SingularRicci(HarnackError, ArithmeticError):
    """The Ricci tensor is singular, so the optimal-vector trace form is undefined."""


class IntervalError(HarnackError, ValueError):
    """A time outside the valid interval of the shrinking-sphere family."""


class FrameConstructionError(HarnackError, ArithmeticError):
    """The block quadratic form is not positive semidefinite, so no frame exists."""
