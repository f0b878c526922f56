"""Law-dependent transition kernels with affine dependence on the current law.

A kernel is ``P_mu[x, j] = base[x, j] + sum_k coeff[x, j, k] * mu[k]``. All
functions here accept a single law of shape ``(m,)`` or a stack of laws of
shape ``(..., m)`` and broadcast accordingly.
"""

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionError, InvalidKernelError
from .measures import StateSpace

KERNEL_TOL = 1e-12
DROP_BELOW = 1e-15


@dataclass(frozen=True)
class Violation:
    kind: str
    index: tuple
    magnitude: float

    def describe(self):
        labels = {
            "base-row-sum": ("x",),
            "row-sum dependence": ("x", "k"),
            "negative entry": ("x", "j", "k"),
        }[self.kind]
        where = ", ".join(f"{n}={i + 1}" for n, i in zip(labels, self.index))
        return f"{self.kind} at ({where}): {self.magnitude:.3e}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


@dataclass(frozen=True, eq=False)
class AffineKernel:
    """Affine law-dependent kernel on ``base.shape[0]`` states.

    ``coeff[x, j, k]`` is the sensitivity of ``P(x, j)`` to the mass on state
    ``k``. Entries with magnitude below ``1e-15`` are dropped on construction.
    Construction does not validate; see :func:`validate`.
    """

    base: np.ndarray
    coeff: np.ndarray
    name: str = field(default="kernel")

    def __post_init__(self):
        base = np.array(self.base, dtype=float)
        m = base.shape[0]
        if base.shape != (m, m):
            raise DimensionError(f"base must be square, got shape {base.shape}")
        coeff = np.array(self.coeff, dtype=float) if self.coeff is not None else np.zeros((m, m, m))
        if coeff.shape != (m, m, m):
            raise DimensionError(f"coeff must have shape {(m, m, m)}, got {coeff.shape}")
        coeff[np.abs(coeff) < DROP_BELOW] = 0.0
        base.setflags(write=False)
        coeff.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "coeff", coeff)

    @classmethod
    def from_sparse(cls, base, entries, name="kernel"):
        """Build from ``(x, j, k, value)`` tuples with 0-based indices."""
        base = np.asarray(base, dtype=float)
        m = base.shape[0]
        coeff = np.zeros((m, m, m))
        for x, j, k, value in entries:
            coeff[x, j, k] += value
        return cls(base, coeff, name)

    @property
    def size(self):
        return self.base.shape[0]

    @property
    def space(self):
        return StateSpace(self.size)

    def sparse_entries(self):
        """Nonzero coefficients as ``(x, j, k, value)`` with 0-based indices, in index order."""
        return [(int(x), int(j), int(k), float(self.coeff[x, j, k]))
                for x, j, k in zip(*np.nonzero(self.coeff))]

    @property
    def law_independent(self):
        return not np.any(self.coeff)

    @cached_property
    def fingerprint(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.base).tobytes())
        h.update(np.ascontiguousarray(self.coeff).tobytes())
        return h.hexdigest()[:16]

    @cached_property
    def report(self):
        return validate(self)

    def require_valid(self):
        if not self.report.ok:
            details = "; ".join(v.describe() for v in self.report.violations[:5])
            raise InvalidKernelError(f"invalid kernel {self.name!r}: {details}",
                                     self.report.violations)
        return self


def validate(kernel):
    """Check that ``P_mu`` is a transition matrix for every law ``mu``.

    Three conditions are checked, all at tolerance ``1e-12``: base rows sum to
    one, coefficient rows sum to zero for each ``(x, k)``, and every entry is
    nonnegative at every vertex of the simplex (which suffices by affinity).
    """
    b, c = kernel.base, kernel.coeff
    found = []
    for x in np.flatnonzero(np.abs(b.sum(axis=1) - 1.0) > KERNEL_TOL):
        found.append(Violation("base-row-sum", (int(x),), float(b[x].sum() - 1.0)))
    col = c.sum(axis=1)
    for x, k in zip(*np.nonzero(np.abs(col) > KERNEL_TOL)):
        found.append(Violation("row-sum dependence", (int(x), int(k)), float(col[x, k])))
    at_vertices = b[:, :, None] + c
    for x, j, k in zip(*np.nonzero(at_vertices < -KERNEL_TOL)):
        found.append(Violation("negative entry", (int(x), int(j), int(k)),
                               float(at_vertices[x, j, k])))
    return ValidationReport(tuple(found))


def _check_law(kernel, mu):
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1] != kernel.size:
        raise DimensionError(f"law has {mu.shape[-1]} states, kernel has {kernel.size}")
    return mu


def evaluate(kernel, mu):
    """Transition matrix ``P_mu``; shape ``(..., m, m)``."""
    mu = _check_law(kernel, mu)
    return kernel.base + np.einsum("xjk,...k->...xj", kernel.coeff, mu)


def step(kernel, mu):
    """Law after one step, ``mu P_mu``."""
    mu = _check_law(kernel, mu)
    return np.einsum("...x,...xj->...j", mu, evaluate(kernel, mu))


def k_step(kernel, mu, steps):
    """Composed kernel over ``steps`` steps.

    ``Q_mu = P_mu Q'_{mu P_mu}``: the later factors are evaluated at the
    evolved laws, so for two steps this is ``P_mu @ P_{mu P_mu}``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    mu = _check_law(kernel, mu)
    out = evaluate(kernel, mu)
    law = mu
    for _ in range(steps - 1):
        law = np.einsum("...x,...xj->...j", law, evaluate(kernel, law))
        out = out @ evaluate(kernel, law)
    return out


def two_step(kernel, mu):
    return k_step(kernel, mu, 2)


def law_after(kernel, mu, steps):
    """Law after ``steps`` applications of :func:`step`."""
    law = _check_law(kernel, mu)
    for _ in range(steps):
        law = step(kernel, law)
    return law
