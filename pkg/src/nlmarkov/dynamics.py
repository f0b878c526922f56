"""Law trajectories, invariant measures and convergence-bound audits.

The bounds audited here take the two-step coefficients ``alpha_2`` and
``lambda_2`` together with the one-step ``lambda_1``::

    tv(mu_n, pi) <= d0 * (1 - alpha_2 + lambda_2) ** (n // 2) * odd(n)          (lambda_2 < alpha_2)
    tv(mu_n, pi) <= d0 / (1 + lambda_2 * n / 2 * d0) * odd(n)                 (lambda_2 = alpha_2)

with ``d0 = tv(mu_0, pi)`` and ``odd(n) = 1 + lambda_1`` for odd ``n``, 1 otherwise.
The same bounds hold for two trajectories with ``d0 = tv(mu_0, nu_0)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import HypothesisError, NonConvergenceError, UsageError
from .kernels import step
from .measures import as_distribution, tv_distance

EQUALITY_TOL = 1e-12
AUDIT_TOL = 1e-9


@dataclass(frozen=True)
class Trajectory:
    laws: np.ndarray  # (n + 1, m)
    tv_deltas: np.ndarray  # (n,), tv(mu_n, mu_{n+1})

    def __len__(self):
        return len(self.laws)


def iterate(kernel, mu0, n):
    """Laws ``mu_0 .. mu_n`` of the nonlinear chain started from ``mu0``."""
    kernel.require_valid()
    if n < 0:
        raise UsageError("number of steps must be >= 0")
    laws = np.empty((n + 1, kernel.size))
    laws[0] = as_distribution(mu0, kernel.size)
    for i in range(n):
        laws[i + 1] = as_distribution(step(kernel, laws[i]))
    return Trajectory(laws, tv_distance(laws[:-1], laws[1:]))


@dataclass(frozen=True)
class InvariantResult:
    pi: np.ndarray
    residual: float
    iterations: int
    starts: np.ndarray
    limits: np.ndarray
    max_pairwise_gap: float


def default_starts(size):
    """All vertices followed by the uniform law."""
    return np.vstack([np.eye(size), np.full((1, size), 1.0 / size)])


def invariant(kernel, starts=None, tol=1e-13, max_iters=100_000):
    """Fixed point ``pi = pi P_pi`` by iteration from several starts.

    Each start is iterated until successive laws are within ``tol`` in TV.
    The first start's limit is returned; ``max_pairwise_gap`` over all limits
    probes uniqueness.

    Raises
    ------
    NonConvergenceError
        If some start has not settled after ``max_iters`` steps; the error
        carries the last iterate and its step size.
    """
    kernel.require_valid()
    if tol <= 0:
        raise UsageError("tol must be positive")
    starts = default_starts(kernel.size) if starts is None else np.atleast_2d(starts)
    if len(starts) == 0:
        raise UsageError("at least one start is required")
    starts = np.array([as_distribution(s, kernel.size) for s in starts])
    limits = np.empty_like(starts)
    total = 0
    for i, mu in enumerate(starts):
        delta = np.inf
        for it in range(1, max_iters + 1):
            nxt = as_distribution(step(kernel, mu))
            delta = float(tv_distance(mu, nxt))
            mu = nxt
            if delta <= tol:
                break
        else:
            raise NonConvergenceError(
                f"start {i} did not converge within {max_iters} iterations "
                f"(last step {delta:.3e})", last=mu, delta=delta, iterations=max_iters)
        limits[i] = mu
        total += it
    gaps = tv_distance(limits[:, None, :], limits[None, :, :])
    pi = limits[0]
    residual = float(tv_distance(step(kernel, pi), pi))
    return InvariantResult(pi, residual, total, starts, limits, float(gaps.max()))


def _odd_factor(n, lambda1):
    return (1.0 + lambda1) if n % 2 else 1.0


def bound_value(alpha2, lambda2, lambda1, d0, n):
    """Upper bound on ``tv(mu_n, pi)`` (or ``tv(mu_n, nu_n)``) after ``n`` steps.

    >>> round(bound_value(0.5, 0.2, 0.4, 2.0, 5), 12)
    1.372
    """
    if lambda2 > alpha2 + EQUALITY_TOL:
        raise HypothesisError(
            f"contraction hypotheses violated: lambda_2 = {lambda2} exceeds alpha_2 = {alpha2}")
    if n < 0:
        raise UsageError("n must be >= 0")
    odd = _odd_factor(n, lambda1)
    if abs(lambda2 - alpha2) <= EQUALITY_TOL:
        return d0 / (1.0 + lambda2 * n / 2.0 * d0) * odd
    return d0 * (1.0 - alpha2 + lambda2) ** (n // 2) * odd


@dataclass(frozen=True)
class BoundAudit:
    n: int
    observed: float
    bound: float
    branch: str

    @property
    def slack(self):
        return self.bound - self.observed

    @property
    def satisfied(self):
        return self.slack >= -AUDIT_TOL


def certified_rates(report2, report1):
    """Pessimistic ``(alpha_2, lambda_2, lambda_1, branches)`` from coefficient reports.

    When the lambda_2 and alpha_2 brackets touch within ``1e-12`` both bound
    branches are evaluated and the weaker one is binding.
    """
    alpha2 = report2.alpha.lower
    lambda2 = report2.lam.upper
    lambda1 = report1.lam.upper
    if lambda2 > alpha2 + EQUALITY_TOL:
        raise HypothesisError(
            f"contraction not certified: lambda_2 <= {lambda2:.6g} vs alpha_2 >= {alpha2:.6g}")
    if alpha2 <= 0:
        raise HypothesisError("contraction not certified: alpha_2 lower bound is 0")
    if lambda2 < alpha2 - EQUALITY_TOL:
        branches = ("exponential",)
    else:
        branches = ("exponential", "linear")
    return alpha2, lambda2, lambda1, branches


def _bound(alpha2, lambda2, lambda1, d0, n, branches):
    values = {}
    if "exponential" in branches:
        values["exponential"] = d0 * (1.0 - alpha2 + min(lambda2, alpha2)) ** (n // 2) \
            * _odd_factor(n, lambda1)
    if "linear" in branches:
        values["linear"] = bound_value(alpha2, alpha2, lambda1, d0, n)
    branch = max(values, key=values.get)
    return values[branch], branch


def audit_convergence(kernel, mu0, report2, report1, n_max, pi=None, nu0=None):
    """Compare observed TV distances with the certified bound for ``n = 0 .. n_max``.

    With ``nu0`` the audit follows two trajectories and checks
    ``tv(mu_n, nu_n)``; otherwise it measures ``tv(mu_n, pi)``, solving for
    ``pi`` if it is not supplied.
    """
    if report1.kernel_id != kernel.fingerprint or report2.kernel_id != kernel.fingerprint:
        raise UsageError("coefficient reports do not belong to this kernel")
    alpha2, lambda2, lambda1, branches = certified_rates(report2, report1)
    traj = iterate(kernel, mu0, n_max)
    if nu0 is not None:
        other = iterate(kernel, nu0, n_max).laws
    else:
        target = invariant(kernel).pi if pi is None else as_distribution(pi, kernel.size)
        other = np.broadcast_to(target, traj.laws.shape)
    observed = tv_distance(traj.laws, other)
    d0 = float(observed[0])
    out = []
    for n in range(n_max + 1):
        bound, branch = _bound(alpha2, lambda2, lambda1, d0, n, branches)
        out.append(BoundAudit(n, float(observed[n]), bound, branch))
    return out


def odd_step_check(kernel, mu0, nu0, n_max, lambda1):
    """Check ``tv(mu_{2k+1}, nu_{2k+1}) <= (1 + lambda_1) tv(mu_{2k}, nu_{2k})``.

    Returns a list of ``(k, lhs, rhs)`` for every odd step up to ``n_max``.
    """
    a = iterate(kernel, mu0, n_max).laws
    b = iterate(kernel, nu0, n_max).laws
    d = tv_distance(a, b)
    return [(k, float(d[2 * k + 1]), float((1.0 + lambda1) * d[2 * k]))
            for k in range((n_max + 1) // 2)]


def lemma_bound_sequence(a0, lam, n):
    """Closed-form bound ``a0 / (1 + a0 * lam * n)`` on ``a_n`` when ``a_{k+1} <= a_k (1 - lam a_k)``.

    This is ``g^{-1}(n)`` for ``g(x) = int_x^{a0} dt / (lam t^2)``.
    """
    if not 0 < a0 <= 1:
        raise UsageError(f"a0 must lie in (0, 1], got {a0}")
    if lam <= 0:
        raise UsageError(f"lambda must be positive, got {lam}")
    if n < 0:
        raise UsageError("n must be >= 0")
    return a0 / (1.0 + a0 * lam * n)
