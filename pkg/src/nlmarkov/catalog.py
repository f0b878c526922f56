"""Built-in four-state example kernels, generated from the parameter ``gamma``.

Each entry also records the published coefficient values so that analysis
output can flag agreement or disagreement with them.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .kernels import AffineKernel


@dataclass(frozen=True)
class PublishedClaim:
    """A published statement about a coefficient of a built-in example.

    ``relation`` is one of ``"=="`` (value within ``tol``), ``"<="`` or
    ``"in"`` (``value`` is then a ``(low, high)`` pair).
    """

    quantity: str  # "alpha" or "lambda"
    steps: int
    relation: str
    value: object
    text: str
    tol: float = 1e-9

    def holds(self, lower, upper):
        """Whether the bracket ``[lower, upper]`` is compatible with the claim."""
        if self.relation == "==":
            return lower - self.tol <= self.value <= upper + self.tol
        if self.relation == "<=":
            return lower <= self.value + self.tol
        if self.relation == "in":
            lo, hi = self.value
            return upper >= lo - self.tol and lower <= hi + self.tol
        raise ValueError(self.relation)


def example1(gamma):
    """Kernel with alpha = 0.004 whose first row shifts mass by ``gamma * mu_1``."""
    base = np.array([
        [0.001, 0.001, 0.499, 0.499],
        [0.499, 0.499, 0.001, 0.001],
        [0.499, 0.001, 0.499, 0.001],
        [0.001, 0.499, 0.001, 0.499],
    ])
    entries = [(0, 0, 0, gamma), (0, 1, 0, gamma), (0, 2, 0, -gamma), (0, 3, 0, -gamma)]
    return AffineKernel.from_sparse(base, entries, name=f"example1(gamma={gamma!r})")


def example2(gamma):
    """Kernel with alpha = 0 that still contracts over two steps."""
    base = np.array([
        [0.0, 0.0, 0.5, 0.5],
        [0.5, 0.5, 0.0, 0.0],
        [0.5, 0.0, 0.5, 0.0],
        [0.0, 0.5, 0.0, 0.5],
    ])
    entries = [(0, 1, 0, gamma), (0, 2, 0, -gamma)]
    return AffineKernel.from_sparse(base, entries, name=f"example2(gamma={gamma!r})")


def _claims1(g):
    return [
        PublishedClaim("alpha", 1, "==", 0.004, "alpha = 0.004"),
        PublishedClaim("lambda", 1, "==", g, "lambda = gamma"),
        PublishedClaim("alpha", 2, "==", 0.503992, "alpha_2 = 0.503992", tol=5e-3),
        PublishedClaim("lambda", 2, "<=", g, "lambda_2 <= gamma"),
    ]


def _claims2(g):
    return [
        PublishedClaim("alpha", 1, "==", 0.0, "alpha = 0"),
        PublishedClaim("lambda", 1, "==", g, "lambda = gamma"),
        PublishedClaim("alpha", 2, "in", (0.5, 0.5 + 0.25 * g), "alpha_2 in [0.5, 0.5 + 0.25 gamma]"),
        PublishedClaim("lambda", 2, "==", g / 2, "lambda_2 = gamma / 2"),
    ]


EXAMPLES = {
    # name: (builder, open gamma interval, default gamma, claims)
    "example1": (example1, (0.0, 0.25), 0.2, _claims1),
    "example2": (example2, (0.0, 0.5), 0.4, _claims2),
}


def check_gamma(name, gamma):
    if name not in EXAMPLES:
        raise UsageError(f"unknown builtin {name!r}; choose from {sorted(EXAMPLES)}")
    lo, hi = EXAMPLES[name][1]
    if not lo < gamma < hi:
        raise UsageError(f"{name} requires {lo} < gamma < {hi}, got {gamma}")


def builtin(name, gamma=None):
    """Return ``(kernel, claims)`` for a built-in example."""
    if name not in EXAMPLES:
        raise UsageError(f"unknown builtin {name!r}; choose from {sorted(EXAMPLES)}")
    build, _, default, claims = EXAMPLES[name]
    gamma = default if gamma is None else float(gamma)
    check_gamma(name, gamma)
    return build(gamma), claims(gamma)
