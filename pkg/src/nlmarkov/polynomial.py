"""Dense multivariate polynomials in the law coordinates.

The entries of a composed kernel over ``k`` steps are polynomials of degree
at most ``2**k - 1`` in ``mu``. Representing them exactly gives gradients and
curvature bounds that the certified simplex search relies on.

Polynomials are coefficient vectors over a :class:`MonomialBasis`; a matrix of
polynomials is an array whose last axis indexes monomials.
"""

from functools import cached_property
from itertools import combinations

import numpy as np

MAX_MONOMIALS = 20000


def _exponents(nvars, degree):
    out = []
    for d in range(degree + 1):
        # compositions of d into nvars parts, descending lex
        for bars in combinations(range(d + nvars - 1), nvars - 1):
            prev = -1
            parts = []
            for b in bars:
                parts.append(b - prev - 1)
                prev = b
            parts.append(d + nvars - 1 - prev - 1)
            out.append(tuple(parts))
    return out


class MonomialBasis:
    """All monomials in ``nvars`` variables of total degree at most ``degree``."""

    def __init__(self, nvars, degree):
        self.nvars = nvars
        self.degree = degree
        exps = _exponents(nvars, degree)
        if len(exps) > MAX_MONOMIALS:
            raise ValueError(
                f"{len(exps)} monomials for degree {degree} in {nvars} variables exceeds {MAX_MONOMIALS}")
        self.exponents = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.degrees = self.exponents.sum(axis=1)
        self._radix = degree + 1
        self._keys = self._encode(self.exponents)
        self._order = np.argsort(self._keys)
        self._sorted_keys = self._keys[self._order]

    def __len__(self):
        return len(self.exponents)

    def _encode(self, exps):
        weights = self._radix ** np.arange(self.nvars, dtype=np.int64)
        return exps @ weights

    def lookup(self, exps):
        pos = np.searchsorted(self._sorted_keys, self._encode(exps))
        return self._order[pos]

    def constant(self, value=1.0):
        a = np.zeros(len(self))
        a[0] = value
        return a

    def variable(self, i):
        e = np.zeros((1, self.nvars), dtype=np.int64)
        e[0, i] = 1
        a = np.zeros(len(self))
        a[self.lookup(e)[0]] = 1.0
        return a

    def mul(self, a, b):
        ia = np.flatnonzero(a)
        ib = np.flatnonzero(b)
        out = np.zeros(len(self))
        if ia.size == 0 or ib.size == 0:
            return out
        exps = self.exponents[ia][:, None, :] + self.exponents[ib][None, :, :]
        if exps.sum(axis=-1).max() > self.degree:
            raise ValueError("product degree exceeds basis degree")
        idx = self.lookup(exps.reshape(-1, self.nvars))
        np.add.at(out, idx, (a[ia][:, None] * b[ib][None, :]).ravel())
        return out

    def matmul(self, A, B):
        """Product of two polynomial matrices of shapes ``(p, q, M)`` and ``(q, r, M)``."""
        p, q, _ = A.shape
        r = B.shape[1]
        out = np.zeros((p, r, len(self)))
        for x in range(p):
            for y in range(q):
                if not A[x, y].any():
                    continue
                for j in range(r):
                    out[x, j] += self.mul(A[x, y], B[y, j])
        return out

    @cached_property
    def _deriv_maps(self):
        maps = []
        for i in range(self.nvars):
            src = np.flatnonzero(self.exponents[:, i] > 0)
            lowered = self.exponents[src].copy()
            lowered[:, i] -= 1
            maps.append((src, self.lookup(lowered), self.exponents[src, i].astype(float)))
        return maps

    def deriv(self, a, i):
        """Partial derivative along variable ``i``; works on the last axis of ``a``."""
        src, dst, factor = self._deriv_maps[i]
        out = np.zeros_like(a)
        out[..., dst] = a[..., src] * factor
        return out

    def monomials(self, X):
        """Monomial values at points ``X`` of shape ``(N, nvars)``; returns ``(N, M)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        powers = X[:, :, None] ** np.arange(self.degree + 1)
        vals = np.ones((X.shape[0], len(self)))
        for i in range(self.nvars):
            vals *= powers[:, i, self.exponents[:, i]]
        return vals

    def evaluate(self, a, X):
        return self.monomials(X) @ np.asarray(a).T

    @staticmethod
    def simplex_bound(a):
        """Upper bound on ``|a(mu)|`` over the simplex (every monomial is at most 1 there)."""
        return float(np.abs(a).sum(axis=-1).max()) if np.ndim(a) > 1 else float(np.abs(a).sum())


def kernel_polynomials(kernel, steps):
    """Exact polynomial entries of the composed kernel over ``steps`` steps.

    Returns ``(basis, K)`` with ``K`` of shape ``(m, m, M)``.
    """
    m = kernel.size
    basis = MonomialBasis(m, 2**steps - 1)
    one = basis.constant()
    law = np.array([basis.variable(k) for k in range(m)])
    K = None
    for t in range(steps):
        P = kernel.base[:, :, None] * one + np.einsum("xjk,kM->xjM", kernel.coeff, law)
        K = P if K is None else basis.matmul(K, P)
        if t < steps - 1:
            law = basis.matmul(law[None, :, :], P)[0]
    return basis, K
