"""Mean-field particle approximation of the nonlinear chain.

``N`` particles move independently given the kernel evaluated at their
current empirical law, which is frozen for the duration of each step.

Random streams: an ensemble carries a 64-bit seed and every draw it makes at
time ``t`` comes from ``default_rng([seed, t])``, so a step can be replayed
from the ensemble alone. Replica ``r`` of an experiment with ``N`` particles
uses the seed ``derive_seed(master, N, r)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .kernels import evaluate
from .dynamics import iterate
from .measures import as_distribution, tv_distance


def derive_seed(master, *keys):
    """Mix integer keys into a master seed (64-bit result)."""
    seq = np.random.SeedSequence([int(master) % 2**64, *map(int, keys)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _histogram(states, size):
    return np.bincount(states, minlength=size) / len(states)


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    states: np.ndarray
    empirical: np.ndarray
    rng_seed: int
    time: int = 0

    @property
    def size(self):
        return len(self.states)


def _sample_rows(cdf_rows, u):
    # inverse CDF: first j with cdf[j] > u
    nxt = (u[:, None] >= cdf_rows).sum(axis=1)
    return np.minimum(nxt, cdf_rows.shape[1] - 1)


def init_ensemble(n, mu0, seed):
    """``n`` independent draws from ``mu0``."""
    if n < 1:
        raise UsageError("an ensemble needs at least one particle")
    mu0 = as_distribution(mu0)
    rng = np.random.default_rng([int(seed) % 2**64, 0])
    cdf = np.cumsum(mu0)
    states = _sample_rows(np.broadcast_to(cdf, (n, len(cdf))), rng.random(n))
    return ParticleEnsemble(states, _histogram(states, len(mu0)), int(seed), 0)


def advance(ensemble, kernel):
    """One synchronous step: every particle moves by its row of ``P`` at the empirical law."""
    kernel.require_valid()
    m = kernel.size
    P = evaluate(kernel, ensemble.empirical)
    cdf = np.cumsum(np.clip(P, 0.0, None), axis=1)
    t = ensemble.time + 1
    rng = np.random.default_rng([ensemble.rng_seed % 2**64, t])
    states = _sample_rows(cdf[ensemble.states], rng.random(ensemble.size))
    return ParticleEnsemble(states, _histogram(states, m), ensemble.rng_seed, t)


def run_ensemble(kernel, mu0, n, steps, seed):
    e = init_ensemble(n, mu0, seed)
    for _ in range(steps):
        e = advance(e, kernel)
    return e


@dataclass(frozen=True)
class ErrorCurveRow:
    N: int
    steps: int
    mean_tv: float
    std_tv: float
    replicas: int
    seed: int


def law_error_curve(kernel, mu0, n_list, steps, replicas, seed):
    """TV error between the empirical law and the exact law after ``steps`` steps.

    For each particle count, ``replicas`` independent ensembles are run and
    the mean and (population) standard deviation of the error are reported.
    """
    kernel.require_valid()
    if replicas < 1:
        raise UsageError("replicas must be >= 1")
    if any(n < 1 for n in n_list):
        raise UsageError("particle counts must be >= 1")
    exact = iterate(kernel, mu0, steps).laws[-1]
    rows = []
    for n in n_list:
        errors = np.array([
            tv_distance(run_ensemble(kernel, mu0, n, steps, derive_seed(seed, n, r)).empirical, exact)
            for r in range(replicas)])
        rows.append(ErrorCurveRow(int(n), int(steps), float(errors.mean()), float(errors.std()),
                                  int(replicas), int(seed)))
    return rows
