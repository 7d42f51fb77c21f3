"""Exception types raised by the solver and its helpers."""


class ContractViolation(ValueError):
    """An input violates a documented precondition."""


class DegenerateInputError(ValueError):
    """The input describes a degenerate configuration (e.g. coincident Diracs)."""


class StencilRangeError(IndexError):
    """A stencil step left the padded grid."""


class SolverError(RuntimeError):
    """The linear or nonlinear solver failed."""

    def __init__(self, message, iteration=None, residual_norm=None):
        super().__init__(message)
        self.iteration = iteration
        self.residual_norm = residual_norm


class StagnationError(SolverError):
    """Backtracking could not reduce the residual."""


class NonConvergenceError(RuntimeError):
    """An iterative procedure hit its iteration limit.

    ``details`` carries whatever the procedure had at the time (e.g. the
    final per-cell area errors of the height oracle).
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details


class ConfigError(ContractViolation):
    """An experiment configuration is malformed."""
