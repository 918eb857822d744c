class ConfigurationError(ValueError):
    """Invalid problem, grid or run configuration."""


class NonpositiveDenominator(ArithmeticError):
    """The Nehari scaling does not exist: the self plus coupling term is <= 0."""

    def __init__(self, denominator, message=None):
        self.denominator = float(denominator)
        super().__init__(
            message
            or f"Nehari denominator is nonpositive ({self.denominator:.6g}); "
            "no positive scaling puts this field on the Nehari set"
        )


class ConvergenceError(RuntimeError):
    """An iterative solve stopped without meeting its tolerance."""

    def __init__(self, message, report=None, beta=None):
        super().__init__(message)
        self.report = report
        self.beta = beta


class OverlapError(ValueError):
    """Supports that must be disjoint intersect."""
