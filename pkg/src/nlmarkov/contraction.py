"""Ergodicity coefficient ``alpha`` and law-Lipschitz coefficient ``lambda``.

For a kernel ``K`` (one step, or composed over several steps)::

    alpha  = 1 - 1/2 * sup_{mu, nu, x, y} tv(K_mu(x, .), K_nu(y, .))
    lambda = sup_{x, mu != nu} tv(K_mu(x, .), K_nu(x, .)) / tv(mu, nu)

One-step values are exact: ``P_mu`` is affine in ``mu``, so the convex
objective for ``alpha`` peaks at simplex vertices and the ratio for
``lambda`` peaks along an edge direction ``(e_a - e_b) / 2``. Composed
kernels are polynomial in ``mu`` and get certified brackets instead.

Composed-kernel brackets use two reductions. For ``alpha``, writing
``tv(u, v) = max_s s.(u - v)`` over sign vectors ``s`` splits the supremum
into ``max_{x, y, s} U(x, s) + U(y, -s)`` with ``U(x, s) = max_mu s.K_mu(x)``,
each a maximisation over a single simplex. For ``lambda``, the mean value
theorem gives ``lambda = sup_mu max_{x, a, b, s} 1/2 s.(d_a - d_b) K_mu(x)``:
the supremum of the ratio is a supremum of directional derivatives.
"""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import UsageError
from .kernels import k_step
from .measures import simplex_lattice, tv_distance
from .optimize import Bracket, SimplexMaximizer, refine_combinations
from .polynomial import kernel_polynomials

EQUALITY_TOL = 1e-9
TIE_TOL = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the composed-kernel search.

    ``tolerance`` is the target bracket width for each coefficient; the
    search stops early (and reports ``converged=False``) if ``eval_cap``
    objective evaluations are spent first.
    """

    denominator: int = 20
    min_step: float = 1e-6
    pair_floor: float = 1e-9
    eval_cap: int = 10**7
    tolerance: float = 2.5e-4

    def __post_init__(self):
        if self.denominator < 1:
            raise UsageError("grid denominator must be >= 1")
        if not 0 < self.min_step <= 1:
            raise UsageError("min_step must lie in (0, 1]")
        if self.pair_floor <= 0:
            raise UsageError("pair_floor must be positive")
        if self.tolerance <= 0:
            raise UsageError("tolerance must be positive")


@dataclass(frozen=True)
class AlphaWitness:
    mu: np.ndarray
    nu: np.ndarray
    x: int
    y: int
    tv: float


@dataclass(frozen=True)
class LambdaWitness:
    mu: np.ndarray
    nu: np.ndarray
    x: int
    ratio: float


def regime(alpha, lam, tol=EQUALITY_TOL):
    """``exponential`` if lam < alpha, ``linear`` if equal, else ``uncovered``.

    A vanishing ``alpha`` leaves nothing to contract with, so it is always
    ``uncovered``.
    """
    if alpha <= tol:
        return "uncovered"
    if lam < alpha - tol:
        return "exponential"
    if lam <= alpha + tol:
        return "linear"
    return "uncovered"


@dataclass(frozen=True)
class CoefficientReport:
    steps: int
    alpha: Bracket
    lam: Bracket
    alpha_witness: AlphaWitness
    lambda_witness: LambdaWitness
    kernel_id: str
    lipschitz: float
    converged: bool = True
    evaluations: int = 0
    notes: tuple = field(default=())

    @property
    def certification(self):
        return "exact" if self.alpha.is_exact and self.lam.is_exact else "bracketed"

    @property
    def regime(self):
        """Regime from the pessimistic ends (lower alpha, upper lambda)."""
        return regime(self.alpha.lower, self.lam.upper)

    @property
    def indicative_regime(self):
        return regime(self.alpha.upper, self.lam.lower)


# -- one step: exact -----------------------------------------------------


def _rows_at_vertices(kernel):
    # V[a, x, :] = row x of P at the vertex e_a
    return kernel.base[None, :, :] + kernel.coeff.transpose(2, 0, 1)


def _first_max(values, tol=TIE_TOL):
    flat = values.ravel()
    best = flat.max()
    k = int(np.flatnonzero(flat >= best - tol)[0])
    return float(best), np.unravel_index(k, values.shape)


def alpha_one_step(kernel):
    """Exact one-step ``alpha`` by enumerating vertex pairs; returns ``(alpha, witness)``."""
    kernel.require_valid()
    V = _rows_at_vertices(kernel)
    # dist[x, y, a, b] = tv(P_{e_a}(x), P_{e_b}(y))
    dist = np.abs(V.transpose(1, 0, 2)[:, None, :, None, :]
                  - V.transpose(1, 0, 2)[None, :, None, :, :]).sum(axis=-1)
    best, (x, y, a, b) = _first_max(dist)
    space = kernel.space
    witness = AlphaWitness(space.vertex(a), space.vertex(b), int(x), int(y), best)
    return 1.0 - best / 2.0, witness


def lambda_one_step(kernel):
    """Exact one-step ``lambda``; returns ``(lambda, witness)``.

    The difference ``P_mu(x) - P_nu(x)`` is linear in ``d = mu - nu`` and the
    unit TV ball of zero-sum vectors has extreme points ``(e_a - e_b) / 2``.
    """
    kernel.require_valid()
    c = kernel.coeff
    m = kernel.size
    # ratio[x, a, b] = 1/2 sum_j |c[x, j, a] - c[x, j, b]|
    ratio = 0.5 * np.abs(c[:, :, :, None] - c[:, :, None, :]).sum(axis=1)
    if m == 1:
        return 0.0, LambdaWitness(np.ones(1), np.ones(1), 0, 0.0)
    ratio[:, np.arange(m), np.arange(m)] = -np.inf
    best, (x, a, b) = _first_max(ratio)
    space = kernel.space
    return best, LambdaWitness(space.vertex(a), space.vertex(b), int(x), best)


def one_step_report(kernel):
    alpha, aw = alpha_one_step(kernel)
    lam, lw = lambda_one_step(kernel)
    return CoefficientReport(
        steps=1, alpha=Bracket.exact(alpha), lam=Bracket.exact(lam),
        alpha_witness=aw, lambda_witness=lw, kernel_id=kernel.fingerprint,
        lipschitz=lam, evaluations=kernel.size**2)


# -- several steps: certified brackets -----------------------------------


def sign_vectors(m):
    """All vectors in ``{+1, -1}^m``, ``+1`` first in lexicographic order."""
    return np.array(list(product((1.0, -1.0), repeat=m)))


def lipschitz_bound(basis, K):
    """Global TV Lipschitz constant of ``mu -> K_mu(x, .)``, worst row.

    Uses coefficient magnitudes: each partial derivative of an entry is at
    most the sum of its absolute coefficients on the simplex.
    """
    m = K.shape[0]
    if m == 1:
        return 0.0
    grads = np.stack([basis.deriv(K, a) for a in range(m)])  # (a, x, j, M)
    worst = 0.0
    for a in range(m):
        for b in range(a + 1, m):
            per_row = 0.5 * np.abs(grads[a] - grads[b]).sum(axis=-1).sum(axis=-1)
            worst = max(worst, float(per_row.max()))
    return worst


def certified_coefficients(kernel, steps, search=None):
    """Bracketed ``alpha`` and ``lambda`` for the kernel composed over ``steps`` steps.

    Works for any ``steps >= 1``; for one step the objectives are affine and
    the brackets collapse to the exact values.
    """
    search = search or SearchConfig()
    kernel.require_valid()
    if steps < 1:
        raise UsageError("steps must be >= 1")
    m = kernel.size
    D = search.denominator
    basis, K = kernel_polynomials(kernel, steps)
    lattice = simplex_lattice(m, D, cap=search.eval_cap)
    mono = basis.monomials(lattice / D)
    signs = sign_vectors(m)
    neg = {tuple(s): i for i, s in enumerate(signs)}
    opposite = np.array([neg[tuple(-s)] for s in signs])

    def maximizer(coeffs, slack):
        return SimplexMaximizer(basis, coeffs, D, slack, search.min_step, lattice, mono)

    # alpha: U(x, s) problems, combined as U(x, s) + U(y, -s)
    tv_target = 2.0 * search.tolerance
    row_sums = np.einsum("sj,xjM->xsM", signs, K)
    alpha_problems = [maximizer(row_sums[x, si], tv_target / 4)
                      for x in range(m) for si in range(len(signs))]
    ns = len(signs)
    alpha_combos = [(x * ns + si, y * ns + opposite[si])
                    for x in range(m) for y in range(m) for si in range(ns)]
    half_budget = search.eval_cap // 2
    a_lo, a_hi, a_conv = refine_combinations(alpha_problems, alpha_combos, tv_target, half_budget)

    sup_lo = float(a_lo.max())
    ties = np.flatnonzero(a_lo >= sup_lo - TIE_TOL)  # combos are in (x, y, s) order
    i, j = alpha_combos[int(ties[0])]
    x, y = i // ns, j // ns
    mu_w, nu_w = alpha_problems[i].argmax, alpha_problems[j].argmax
    tv_w = float(tv_distance(k_step(kernel, mu_w, steps)[x], k_step(kernel, nu_w, steps)[y]))
    sup_lo = max(sup_lo, tv_w)
    sup_hi = min(2.0, max(float(a_hi.max()), sup_lo))
    alpha = Bracket(max(0.0, 1.0 - sup_hi / 2.0), 1.0 - sup_lo / 2.0)
    alpha_witness = AlphaWitness(mu_w, nu_w, int(x), int(y), tv_w)

    # lambda: directional-derivative problems
    lip = lipschitz_bound(basis, K)
    grads = np.stack([basis.deriv(K, a) for a in range(m)])
    lam_keys, lam_problems = [], []
    for x in range(m):
        for a in range(m):
            for b in range(a + 1, m):
                directional = 0.5 * (grads[a, x] - grads[b, x])  # (j, M)
                for si, s in enumerate(signs):
                    lam_keys.append((x, a, b, si))
                    lam_problems.append(maximizer(s @ directional, search.tolerance / 2))
    if lam_problems:
        l_lo, l_hi, l_conv = refine_combinations(
            lam_problems, [(i,) for i in range(len(lam_problems))], search.tolerance,
            search.eval_cap - sum(p.evaluations for p in alpha_problems))
        lam_lo = float(l_lo.max())
        k = int(np.flatnonzero(l_lo >= lam_lo - TIE_TOL)[0])
        x, a, b, _ = lam_keys[k]
        lambda_witness = _ratio_witness(kernel, steps, lam_problems[k].argmax, x, a, b,
                                        search.pair_floor)
        lam_lo = max(lam_lo, lambda_witness.ratio)
        lam_hi = min(lip, float(l_hi.max())) + 1e-12
        lam = Bracket(max(0.0, lam_lo), max(lam_lo, lam_hi))
    else:
        l_conv = True
        lam = Bracket.exact(0.0)
        lambda_witness = LambdaWitness(np.ones(1), np.ones(1), 0, 0.0)

    evaluations = sum(p.evaluations for p in alpha_problems + lam_problems)
    return CoefficientReport(
        steps=steps, alpha=alpha, lam=lam, alpha_witness=alpha_witness,
        lambda_witness=lambda_witness, kernel_id=kernel.fingerprint, lipschitz=lip,
        converged=bool(a_conv and l_conv), evaluations=int(evaluations))


def _ratio_witness(kernel, steps, mu, x, a, b, pair_floor):
    """A concrete pair realising (nearly) the derivative value at ``mu``.

    ``mu`` is pulled slightly inside the simplex so that a step along
    ``(e_a - e_b) / 2`` stays feasible.
    """
    m = kernel.size
    sep = max(pair_floor, 1e-4 / m)
    pull = min(1.0, sep * m)
    center = (1.0 - pull) * np.asarray(mu, dtype=float) + pull / m
    d = np.zeros(m)
    d[a], d[b] = 0.5, -0.5
    nu = center + sep * d
    mats = k_step(kernel, np.stack([center, nu]), steps)
    ratio = float(tv_distance(mats[0, x], mats[1, x]) / tv_distance(center, nu))
    return LambdaWitness(center, nu, int(x), ratio)


def coefficients_k_step(kernel, steps, search=None):
    """Coefficient report for the kernel over ``steps`` steps.

    ``steps == 1`` uses the exact vertex enumeration; larger values run the
    certified search.
    """
    if steps < 1:
        raise UsageError("steps must be >= 1")
    if steps == 1:
        return one_step_report(kernel)
    return certified_coefficients(kernel, steps, search)


@dataclass(frozen=True)
class RegimeSummary:
    one_step: str
    two_step: str
    two_step_indicative: str
    label: str  # "certified" when the two-step regime comes from pessimistic bracket ends
    applies: tuple

    @property
    def summary(self):
        return ", ".join(self.applies) if self.applies else "no guarantee from either"


def classify(report1, report2):
    """Which contraction guarantee applies: one-step, two-step, both or neither."""
    if report1.steps != 1 or report2.steps != 2:
        raise ValueError("classify expects a one-step and a two-step report")
    if report1.kernel_id != report2.kernel_id:
        raise ValueError("reports come from different kernels")
    one = report1.regime
    two = report2.regime
    applies = []
    if one != "uncovered":
        applies.append(f"one-step {one}")
    if two != "uncovered":
        applies.append(f"two-step {two}")
    label = "exact" if report2.certification == "exact" else "certified"
    return RegimeSummary(one, two, report2.indicative_regime, label, tuple(applies))
