"""Certified maximisation of a polynomial over the probability simplex.

The search keeps a set of lattice points whose TV balls cover every part of
the simplex that could still hold the maximum. For a point ``g`` with cover
radius ``rho`` the objective is bounded on the ball by the second-order
Taylor estimate::

    f(g) + rho/2 * (max_i grad_i - min_i grad_i) + curvature * rho**2 / 2

where ``curvature`` bounds every Hessian entry on the simplex. Balls whose
bound cannot beat the incumbent by more than ``slack`` are dropped (their
bound is remembered), the rest are replaced by the points of the lattice with
twice the denominator that lie within ``rho_D + rho_2D``. The incumbent itself
comes from the lattice values followed by a coordinate-pair polish.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .measures import covering_radius, simplex_lattice

AFFINE_TOL = 1e-12
ROUNDOFF = 1e-12
EVAL_CHUNK = 100_000
MAX_OFFSETS = 20_000


@dataclass(frozen=True)
class Bracket:
    """Enclosure ``lower <= value <= upper``."""

    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"empty bracket [{self.lower}, {self.upper}]")

    @classmethod
    def exact(cls, value):
        return cls(float(value), float(value))

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def is_exact(self):
        return self.lower == self.upper

    def contains(self, value, tol=0.0):
        return self.lower - tol <= value <= self.upper + tol

    def as_list(self):
        return [self.lower, self.upper]


@lru_cache(maxsize=None)
def lattice_offsets(nvars):
    """Integer steps ``o`` with ``sum(o) == 0`` and ``|o|_1 <= 3 * c_m``.

    Returns ``None`` when the set is too large for adaptive refinement.
    """
    reach = int(np.floor(3 * covering_radius(nvars, 1) + 1e-9))
    if (2 * reach + 1) ** (nvars - 1) > 5_000_000:
        return None
    axes = [np.arange(-reach, reach + 1)] * (nvars - 1)
    head = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, nvars - 1)
    offs = np.hstack([head, -head.sum(axis=1, keepdims=True)])
    offs = offs[np.abs(offs).sum(axis=1) <= reach]
    if len(offs) > MAX_OFFSETS:
        return None
    return offs.astype(np.int64)


def _unique_rows(points, denominator):
    m = points.shape[1]
    radix = denominator + 1
    if radix ** (m - 1) < 2**62:
        keys = points[:, :-1] @ (radix ** np.arange(m - 1, dtype=np.int64))
        _, idx = np.unique(keys, return_index=True)
        return points[np.sort(idx)]
    return np.unique(points, axis=0)


class SimplexMaximizer:
    """Lower and upper bounds for ``max f`` over the simplex, refined on demand.

    Parameters
    ----------
    basis : MonomialBasis
    coeffs : (M,) ndarray
        Polynomial to maximise.
    denominator : int
        Starting lattice denominator.
    slack : float
        Cover balls whose bound exceeds the incumbent by at most ``slack`` are
        retired; the final bracket width cannot drop below it.
    min_step : float
        Finest lattice spacing (``1 / denominator``) and polish step.
    lattice, monomials : ndarray, optional
        Precomputed starting lattice and its monomial values, shared between
        many objectives on the same basis.
    """

    def __init__(self, basis, coeffs, denominator, slack, min_step=1e-6,
                 lattice=None, monomials=None):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.slack = float(slack)
        self.min_step = float(min_step)
        m = basis.nvars
        self.nvars = m
        grads = np.stack([basis.deriv(self.coeffs, i) for i in range(m)])
        self._value_grad = np.vstack([self.coeffs, grads]).T
        self.curvature = max(
            (basis.simplex_bound(basis.deriv(grads[i], j)) for i in range(m) for j in range(i, m)),
            default=0.0)
        self.evaluations = 0
        self.pruned_upper = -np.inf

        high = basis.degrees > 1
        rest = float(np.abs(self.coeffs[high]).sum())
        affine = np.where(high, 0.0, self.coeffs)
        vertices = np.eye(m)
        affine_at_vertices = basis.evaluate(affine, vertices)
        self._clamp = float(affine_at_vertices.max()) + rest + ROUNDOFF

        if rest <= AFFINE_TOL:
            # max of an affine function is attained at a vertex
            values = basis.evaluate(self.coeffs, vertices)
            k = int(np.argmax(values))
            self.lower = float(values[k])
            self.argmax = vertices[k]
            self.evaluations += m
            self.denominator = denominator
            self.active = np.empty((0, m), dtype=np.int64)
            self.active_upper = np.empty(0)
            return

        if lattice is None:
            lattice = simplex_lattice(m, denominator)
        if monomials is None:
            monomials = basis.monomials(lattice / denominator)
        vg = monomials @ self._value_grad
        self.evaluations += len(lattice)
        self.denominator = denominator
        k = int(np.argmax(vg[:, 0]))
        self.lower = float(vg[k, 0])
        self.argmax = lattice[k] / denominator
        self._polish(1.0 / denominator)
        upper = self._cell_upper(vg, covering_radius(m, denominator))
        self._retire(lattice, upper)

    # -- bounds -----------------------------------------------------------

    def _cell_upper(self, vg, rho):
        spread = vg[:, 1:].max(axis=1) - vg[:, 1:].min(axis=1)
        return vg[:, 0] + 0.5 * rho * spread + 0.5 * self.curvature * rho**2 + ROUNDOFF

    def _retire(self, points, upper):
        keep = upper > self.lower + self.slack
        if (~keep).any():
            self.pruned_upper = max(self.pruned_upper, float(upper[~keep].max()))
        self.active = points[keep]
        self.active_upper = upper[keep]

    @property
    def upper(self):
        best = max(self.lower, self.pruned_upper)
        if len(self.active_upper):
            best = max(best, float(self.active_upper.max()))
        return max(self.lower, min(best, self._clamp))

    @property
    def width(self):
        return self.upper - self.lower

    @property
    def refinable(self):
        return (len(self.active) > 0
                and 1.0 / (2 * self.denominator) >= self.min_step
                and lattice_offsets(self.nvars) is not None)

    # -- search -----------------------------------------------------------

    def values(self, X):
        return self.basis.evaluate(self.coeffs, X)

    def _polish(self, start):
        """Coordinate-pair ascent from the incumbent with step halving."""
        m = self.nvars
        pairs = [(a, b) for a in range(m) for b in range(m) if a != b]
        dirs = np.zeros((len(pairs), m))
        for i, (a, b) in enumerate(pairs):
            dirs[i, a] += 1.0
            dirs[i, b] -= 1.0
        x, fx, delta = self.argmax.astype(float), self.lower, start
        moves = 0
        while delta >= self.min_step and moves < 10_000:
            cand = x + delta * dirs
            cand = cand[(cand >= 0.0).all(axis=1)]
            if len(cand) == 0:
                delta /= 2
                continue
            vals = self.values(cand)
            self.evaluations += len(cand)
            k = int(np.argmax(vals))
            if vals[k] > fx + 1e-15:
                x, fx = cand[k], float(vals[k])
                moves += 1
            else:
                delta /= 2
        if fx > self.lower:
            self.lower, self.argmax = fx, x

    def refine(self):
        """Halve the lattice spacing over the surviving cover; returns False if impossible."""
        if not self.refinable:
            return False
        offsets = lattice_offsets(self.nvars)
        D2 = 2 * self.denominator
        parts = []
        per_block = max(1, EVAL_CHUNK // len(offsets))
        for start in range(0, len(self.active), per_block):
            block = 2 * self.active[start:start + per_block]
            cand = (block[:, None, :] + offsets[None, :, :]).reshape(-1, self.nvars)
            cand = cand[(cand >= 0).all(axis=1)]
            parts.append(_unique_rows(cand, D2))
        cand = _unique_rows(np.vstack(parts), D2)

        vg = np.empty((len(cand), self.nvars + 1))
        for start in range(0, len(cand), EVAL_CHUNK):
            chunk = cand[start:start + EVAL_CHUNK]
            vg[start:start + len(chunk)] = self.basis.monomials(chunk / D2) @ self._value_grad
        self.evaluations += len(cand)
        self.denominator = D2
        k = int(np.argmax(vg[:, 0]))
        if vg[k, 0] > self.lower:
            self.lower = float(vg[k, 0])
            self.argmax = cand[k] / D2
        self._polish(1.0 / D2)
        self._retire(cand, self._cell_upper(vg, covering_radius(self.nvars, D2)))
        return True

    def bracket(self):
        return Bracket(self.lower, self.upper)


def refine_combinations(problems, combos, target, budget):
    """Refine until ``max`` over combinations of summed objectives is pinned down.

    Each row of ``combos`` lists problem indices whose maxima add up to one
    candidate value; the quantity of interest is the largest such sum.
    Refinement targets only problems in combinations whose upper bound could
    still exceed the best lower bound by more than ``target``.

    Returns ``(lower, upper, converged)`` arrays/flags for the combinations.
    """
    combos = np.asarray(combos, dtype=np.int64)
    while True:
        lo = np.array([p.lower for p in problems])
        hi = np.array([p.upper for p in problems])
        lo_c = lo[combos].sum(axis=1)
        hi_c = hi[combos].sum(axis=1)
        best_lo = lo_c.max()
        if hi_c.max() - best_lo <= target:
            return lo_c, hi_c, True
        used = sum(p.evaluations for p in problems)
        if used >= budget:
            return lo_c, hi_c, False
        critical = np.unique(combos[hi_c > best_lo + target])
        todo = [i for i in critical if problems[i].refinable and hi[i] > lo[i]]
        if not todo:
            return lo_c, hi_c, False
        # widest first, so the budget goes where it matters
        todo.sort(key=lambda i: -(hi[i] - lo[i]))
        for i in todo:
            problems[i].refine()
            if sum(p.evaluations for p in problems) >= budget:
                break
