"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """Raised on precondition violations (bad time values, bad hyperparameters, ...)."""


class DivergenceSuspected(RuntimeError):
    """A partial-sum / partial-integral sequence did not settle before its horizon cap.

    ``history`` holds the ``(horizon, value)`` pairs that were observed.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class NumericalFailure(RuntimeError):
    """A factorization or solve failed even after regularization."""
