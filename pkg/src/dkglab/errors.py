"""Exception types shared across the package."""


class DomainError(ValueError):
    """Raised when a function argument lies outside the mathematical domain."""


class ValidationError(ValueError):
    """Raised when a parameter record violates its invariants."""


class ConvergenceError(RuntimeError):
    """Raised when a series or quadrature fails its convergence contract."""


class GridConfigError(ValueError):
    """Raised for unusable grids: CFL violations, domains that miss the
    light cone, or stencils that do not fit the evaluated region."""
