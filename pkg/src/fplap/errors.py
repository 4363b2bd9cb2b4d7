class ValidationError(ValueError):
    """Bad input: parameters out of range, malformed config, shape mismatch."""


class NumericalError(RuntimeError):
    """Instability, non-finite values or a solver that failed to converge."""

    def __init__(self, message, index=None, history=None):
        super().__init__(message)
        self.index = index
        self.history = history
