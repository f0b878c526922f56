"""Exception hierarchy.

Each class carries the process exit status the command line maps it to.
"""


class NLMarkovError(Exception):
    exit_code = 1


class UsageError(NLMarkovError, ValueError):
    exit_code = 2


class DimensionError(NLMarkovError, ValueError):
    exit_code = 2


class GridTooLargeError(NLMarkovError, ValueError):
    exit_code = 2


class InvalidKernelError(NLMarkovError, ValueError):
    """Raised when a kernel fails validation; ``violations`` holds the details."""

    exit_code = 3

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class SpecSyntaxError(NLMarkovError, ValueError):
    exit_code = 3

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class HypothesisError(NLMarkovError):
    """Contraction hypotheses (lambda_2 <= alpha_2) are not certified."""

    exit_code = 4


class NonConvergenceError(NLMarkovError):
    """Fixed-point iteration did not settle within the iteration budget."""

    exit_code = 5

    def __init__(self, message, last=None, delta=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.delta = delta
        self.iterations = iterations
