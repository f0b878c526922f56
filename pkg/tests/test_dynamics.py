import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlmarkov.catalog import example2
from nlmarkov.contraction import coefficients_k_step, one_step_report
from nlmarkov.dynamics import (
    audit_convergence,
    bound_value,
    certified_rates,
    invariant,
    iterate,
    lemma_bound_sequence,
    odd_step_check,
)
from nlmarkov.errors import HypothesisError, NonConvergenceError, UsageError
from nlmarkov.kernels import AffineKernel
from nlmarkov.optimize import Bracket

PI2 = np.array([0.25, 0.3, 0.2, 0.25])


@pytest.fixture(scope="module")
def ex2_reports():
    k = example2(0.4)
    return one_step_report(k), coefficients_k_step(k, 2)


class TestIterate:
    def test_first_step(self, ex2):
        traj = iterate(ex2, [1, 0, 0, 0], 1)
        np.testing.assert_allclose(traj.laws[1], [0, 0.4, 0.1, 0.5], atol=1e-15)
        assert traj.tv_deltas[0] == pytest.approx(2.0)

    def test_fixed_point_is_constant(self, ex2):
        traj = iterate(ex2, PI2, 25)
        assert np.abs(traj.laws - PI2).max() <= 1e-14

    def test_law_independent_matches_powers(self, frozen_kernel):
        mu0 = np.array([0.7, 0.2, 0.1])
        traj = iterate(frozen_kernel, mu0, 6)
        for n, law in enumerate(traj.laws):
            np.testing.assert_allclose(law, mu0 @ np.linalg.matrix_power(frozen_kernel.base, n),
                                       atol=1e-15)

    def test_negative_steps(self, ex2):
        with pytest.raises(UsageError):
            iterate(ex2, PI2, -1)


class TestInvariant:
    @pytest.mark.parametrize("g", [0.1, 0.25, 0.4])
    def test_example2_closed_form(self, g):
        res = invariant(example2(g), starts=np.eye(4), tol=1e-13)
        expected = [0.25, 0.25 + g / 8, 0.25 - g / 8, 0.25]
        np.testing.assert_allclose(res.pi, expected, atol=1e-12)
        assert res.max_pairwise_gap <= 1e-12
        assert res.residual <= 10 * 1e-13

    def test_example1_starts_agree(self, ex1):
        res = invariant(ex1, starts=np.eye(4))
        assert res.max_pairwise_gap <= 1e-12
        assert res.residual <= 1e-12

    def test_doubly_stochastic(self, frozen_kernel):
        np.testing.assert_allclose(invariant(frozen_kernel).pi, np.full(3, 1 / 3), atol=1e-12)

    def test_non_convergence(self):
        flip = AffineKernel([[0.0, 1.0], [1.0, 0.0]], None, name="flip")
        with pytest.raises(NonConvergenceError) as info:
            invariant(flip, starts=[[1.0, 0.0]], max_iters=50)
        assert info.value.iterations == 50
        assert info.value.delta == pytest.approx(2.0)
        np.testing.assert_array_equal(info.value.last, [1.0, 0.0])

    def test_bad_tol(self, ex2):
        with pytest.raises(UsageError):
            invariant(ex2, tol=0)


class TestBoundValue:
    def test_exponential(self):
        assert bound_value(0.5, 0.2, 0.4, 2.0, 5) == pytest.approx(2 * 0.7**2 * 1.4)

    def test_linear(self):
        assert bound_value(0.2, 0.2, 0.4, 2.0, 10) == pytest.approx(2 / 3)

    @pytest.mark.parametrize("lam2", [0.2, 0.5])
    def test_zero_steps(self, lam2):
        assert bound_value(0.5, lam2, 0.3, 1.3, 0) == 1.3

    def test_hypothesis_violation(self):
        with pytest.raises(HypothesisError):
            bound_value(0.2, 0.3, 0.1, 1.0, 4)

    @settings(max_examples=200)
    @given(st.floats(0.01, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 2))
    def test_non_increasing_over_even_n(self, alpha2, frac, lam1, d0):
        lam2 = alpha2 * frac
        vals = [bound_value(alpha2, lam2, lam1, d0, n) for n in range(0, 40, 2)]
        assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


class TestAudit:
    def test_example2_all_satisfied(self, ex2, ex2_reports):
        r1, r2 = ex2_reports
        rows = audit_convergence(ex2, [1, 0, 0, 0], r2, r1, 40)
        assert len(rows) == 41 and all(r.satisfied for r in rows)
        assert rows[0].bound == rows[0].observed == pytest.approx(1.5)

    def test_start_at_pi(self, ex2, ex2_reports):
        r1, r2 = ex2_reports
        rows = audit_convergence(ex2, PI2, r2, r1, 10, pi=PI2)
        assert all(r.observed <= 1e-14 and r.bound >= 0 for r in rows)

    def test_two_trajectories(self, ex2, ex2_reports):
        r1, r2 = ex2_reports
        rows = audit_convergence(ex2, [1, 0, 0, 0], r2, r1, 30, nu0=[0, 0, 1, 0])
        assert all(r.satisfied for r in rows)

    def test_foreign_reports(self, ex1, ex2_reports):
        r1, r2 = ex2_reports
        with pytest.raises(UsageError):
            audit_convergence(ex1, [1, 0, 0, 0], r2, r1, 5)

    def test_uncertified_raises(self, ex2_reports):
        r1, r2 = ex2_reports
        bad = dataclasses.replace(r2, lam=Bracket(0.2, 0.6))
        with pytest.raises(HypothesisError):
            certified_rates(bad, r1)

    def test_straddle_runs_both_branches(self, ex2, ex2_reports):
        r1, r2 = ex2_reports
        touching = dataclasses.replace(r2, alpha=Bracket(0.2, 0.5), lam=Bracket(0.19, 0.2))
        assert certified_rates(touching, r1)[3] == ("exponential", "linear")
        rows = audit_convergence(ex2, [1, 0, 0, 0], touching, r1, 20)
        for r in rows:
            linear = bound_value(0.2, 0.2, r1.lam.upper, rows[0].observed, r.n)
            assert r.bound >= linear - 1e-15
        assert {r.branch for r in rows[1:]} <= {"exponential", "linear"}


def test_odd_step_inequality(ex2, rng):
    lam1 = one_step_report(ex2).lam.upper
    for _ in range(20):
        mu0, nu0 = rng.dirichlet(np.ones(4), 2)
        for k, lhs, rhs in odd_step_check(ex2, mu0, nu0, 20, lam1):
            assert lhs <= rhs + 1e-12


class TestRecursionBound:
    def test_examples(self):
        assert lemma_bound_sequence(0.7, 0.3, 0) == 0.7
        assert lemma_bound_sequence(1.0, 1.0, 3) == 0.25

    def test_recursion_oracle(self):
        a = 0.8
        for m in range(10_001):
            assert a <= lemma_bound_sequence(0.8, 0.5, m)
            a = a * (1 - 0.5 * a)

    @pytest.mark.parametrize("a0, lam", [(0, 0.5), (1.5, 0.5), (0.5, 0)])
    def test_domain(self, a0, lam):
        with pytest.raises(UsageError):
            lemma_bound_sequence(a0, lam, 3)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0))
    def test_recursion_property(self, a0, lam):
        # each recursion step rounds once; when a0 * lam is tiny the true gap is
        # below that accumulated error, so allow a few ulps per step
        eps = np.finfo(float).eps
        a = a0
        for m in range(2000):
            assert a <= lemma_bound_sequence(a0, lam, m) * (1 + 4 * (m + 1) * eps)
            a = a * (1 - lam * a)
