"""Probability vectors on a finite state space.

Total variation uses the factor-two convention throughout the package:
``tv(a, b) = sum_i |a_i - b_i|``, which lies in ``[0, 2]``.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .errors import DimensionError, GridTooLargeError

NORM_TOL = 1e-12
NORM_FAIL = 1e-6
DEFAULT_GRID_CAP = 10**7


@dataclass(frozen=True)
class StateSpace:
    """States ``0 .. size-1`` (state ``i`` is labelled ``i+1`` in files and reports)."""

    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValueError(f"state space size must be a positive integer, got {self.size!r}")

    def vertex(self, k):
        e = np.zeros(self.size)
        e[k] = 1.0
        return e

    def vertices(self):
        return np.eye(self.size)

    def uniform(self):
        return np.full(self.size, 1.0 / self.size)


def as_distribution(weights, size=None):
    """Validate ``weights`` as a probability vector and return a float copy.

    Mass drift up to ``NORM_TOL`` is accepted as is, drift up to ``NORM_FAIL``
    is renormalised away, anything larger raises ``ValueError``. Negative
    entries within ``NORM_TOL`` of zero are clipped.
    """
    w = np.array(weights, dtype=float)
    if w.ndim != 1:
        raise DimensionError(f"distribution must be one-dimensional, got shape {w.shape}")
    if size is not None and w.shape[0] != size:
        raise DimensionError(f"distribution has {w.shape[0]} states, expected {size}")
    if not np.all(np.isfinite(w)):
        raise ValueError("distribution contains non-finite weights")
    if w.min() < -NORM_TOL:
        raise ValueError(f"negative weight {w.min():.3e} in distribution")
    w = np.clip(w, 0.0, None)
    drift = abs(w.sum() - 1.0)
    if drift > NORM_FAIL:
        raise ValueError(f"weights sum to {w.sum():.12g}, not 1")
    if drift > NORM_TOL:
        w = w / w.sum()
    return w


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]} states")
    return a, b


def tv_distance(a, b):
    """Total variation distance ``sum |a - b|`` over the last axis (broadcasts)."""
    a, b = _pair(a, b)
    return np.abs(a - b).sum(axis=-1)


def meet_measure(a, b):
    """Coordinate-wise minimum of two laws.

    Its total mass is ``1 - tv_distance(a, b) / 2``.
    """
    a, b = _pair(a, b)
    return np.minimum(a, b)


def grid_size(size, denominator):
    return comb(denominator + size - 1, size - 1)


def simplex_lattice(size, denominator, cap=DEFAULT_GRID_CAP):
    """Integer compositions of ``denominator`` into ``size`` parts.

    Rows come in descending lexicographic order, so ``(D, 0, ..., 0)`` is
    first and ``(0, ..., 0, D)`` last.
    """
    if denominator < 1:
        raise ValueError("denominator must be >= 1")
    count = grid_size(size, denominator)
    if count > cap:
        raise GridTooLargeError(
            f"simplex grid with denominator {denominator} on {size} states has "
            f"{count} points, above the cap of {cap}")
    if size == 1:
        return np.array([[denominator]], dtype=np.int64)
    # stars and bars: bar positions in ascending lex order give ascending first part
    bars = np.fromiter(
        (b for bs in combinations(range(denominator + size - 1), size - 1) for b in bs),
        dtype=np.int64, count=count * (size - 1)).reshape(count, size - 1)
    edges = np.hstack([np.full((count, 1), -1), bars, np.full((count, 1), denominator + size - 1)])
    parts = np.diff(edges, axis=1) - 1
    return parts[::-1].copy()


def simplex_grid(space, denominator, cap=DEFAULT_GRID_CAP):
    """All laws whose weights are multiples of ``1/denominator``.

    >>> simplex_grid(StateSpace(2), 2).tolist()
    [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]
    """
    size = space.size if isinstance(space, StateSpace) else int(space)
    return simplex_lattice(size, denominator, cap) / denominator


def covering_radius(size, denominator):
    """TV radius within which every law has a grid point of the given denominator.

    Largest-remainder rounding moves a law by at most ``2 k (m - k) / m``
    grid units, where ``k`` is the number of rounded-up coordinates.
    """
    m = size
    return 2.0 * (m // 2) * (m - m // 2) / m / denominator


def random_distributions(rng, size, count, concentration=1.0):
    """Dirichlet samples; used by property checks and the particle tests."""
    return rng.dirichlet(np.full(size, concentration), count)
