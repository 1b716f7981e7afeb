"""Exception types shared across the package.

``ConstraintError`` marks rejected inputs (precondition violations); the CLI
maps it to exit code 3, or 2 for argument-level checks.  ``DiagnosticError``
marks a run whose numerical health checks failed (bad acceptance rate,
non-finite values, no quadrature convergence); the CLI maps it to exit 4.
"""


class ConstraintError(ValueError):
    """An input violates a documented precondition."""


class DiagnosticError(RuntimeError):
    """A computation ran but failed its health checks."""


class ConvergenceError(DiagnosticError):
    """Grid refinement did not stabilize within the allowed budget."""
