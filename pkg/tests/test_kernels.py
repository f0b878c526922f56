import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlmarkov.catalog import example1, example2
from nlmarkov.errors import DimensionError, InvalidKernelError
from nlmarkov.kernels import (
    AffineKernel,
    evaluate,
    k_step,
    law_after,
    step,
    two_step,
    validate,
)
from nlmarkov.measures import StateSpace, simplex_grid

from strategies import distributions

PI2 = np.array([0.25, 0.3, 0.2, 0.25])


class TestValidate:
    def test_examples_ok(self, ex1, ex2):
        assert validate(ex2).ok
        assert validate(ex1).ok

    def test_bad_base_row(self):
        base = np.array([[0.5, 0.6, -0.1, 0.0], [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]])
        found = validate(AffineKernel(base, None)).violations
        # the row still sums to one, so only the sign is flagged (once per vertex)
        assert {v.kind for v in found} == {"negative entry"}
        assert {v.index[:2] for v in found} == {(0, 2)}

    def test_base_row_sum(self):
        [v] = validate(AffineKernel([[0.5, 0.4], [0, 1]], None)).violations
        assert v.kind == "base-row-sum" and v.magnitude == pytest.approx(-0.1)

    def test_row_sum_dependence(self):
        k = AffineKernel.from_sparse(np.eye(2), [(0, 0, 0, 0.2)])
        v = [v for v in validate(k).violations if v.kind == "row-sum dependence"]
        assert len(v) == 1 and v[0].index == (0, 0)
        assert "x=1, k=1" in v[0].describe()

    def test_require_valid(self):
        k = AffineKernel.from_sparse(np.eye(2), [(0, 0, 0, 0.2)])
        with pytest.raises(InvalidKernelError) as info:
            k.require_valid()
        assert info.value.violations

    def test_negative_only_at_some_vertex(self):
        # P(1, 1) = 0.1 - 0.2 mu_2 is negative at e_2
        k = AffineKernel.from_sparse(
            [[0.1, 0.9], [0.5, 0.5]], [(0, 0, 1, -0.2), (0, 1, 1, 0.2)])
        [v] = validate(k).violations
        assert v.kind == "negative entry" and v.index == (0, 0, 1)


class TestConstruction:
    def test_shapes(self):
        with pytest.raises(DimensionError):
            AffineKernel(np.ones((2, 3)), None)
        with pytest.raises(DimensionError):
            AffineKernel(np.eye(2), np.zeros((2, 2, 3)))

    def test_tiny_entries_dropped(self):
        k = AffineKernel.from_sparse(np.eye(2), [(0, 0, 0, 1e-17), (0, 1, 0, -1e-17)])
        assert k.law_independent and k.sparse_entries() == []

    def test_read_only(self, ex2):
        with pytest.raises(ValueError):
            ex2.base[0, 0] = 1.0

    def test_fingerprint(self):
        assert example2(0.4).fingerprint == example2(0.4).fingerprint
        assert example2(0.4).fingerprint != example2(0.3).fingerprint


class TestEvaluate:
    def test_row1_at_vertex(self, ex2):
        np.testing.assert_allclose(evaluate(ex2, [1, 0, 0, 0])[0], [0, 0.4, 0.1, 0.5], atol=1e-15)

    def test_constant_row(self, ex2, rng):
        for mu in rng.dirichlet(np.ones(4), 20):
            np.testing.assert_array_equal(evaluate(ex2, mu)[3], [0, 0.5, 0, 0.5])

    def test_law_independent(self, frozen_kernel, rng):
        mus = rng.dirichlet(np.ones(3), 5)
        for P in evaluate(frozen_kernel, mus):
            np.testing.assert_array_equal(P, frozen_kernel.base)

    def test_dimension(self, ex2):
        with pytest.raises(DimensionError):
            evaluate(ex2, [0.5, 0.5])


class TestStep:
    def test_from_vertex(self, ex2):
        np.testing.assert_allclose(step(ex2, [1, 0, 0, 0]), [0, 0.4, 0.1, 0.5], atol=1e-15)

    def test_fixed_point(self, ex2):
        np.testing.assert_allclose(step(ex2, PI2), PI2, atol=1e-15)

    def test_vertex_selects_row(self, ex1):
        for x in range(4):
            e = StateSpace(4).vertex(x)
            np.testing.assert_allclose(step(ex1, e), evaluate(ex1, e)[x], atol=1e-15)


class TestTwoStep:
    def test_example2_rows(self, ex2, rng):
        g = 0.4
        for mu in rng.dirichlet(np.ones(4), 50):
            Q = two_step(ex2, mu)
            np.testing.assert_allclose(Q[3], [0.25, 0.5, 0, 0.25], atol=1e-15)
            m1 = mu[0]
            np.testing.assert_allclose(
                Q[0], [0.25, 0.5 * g * m1 + 0.25, -0.5 * g * m1 + 0.25, 0.25], atol=1e-15)

    def test_example1_constant_terms(self):
        Q = two_step(example1(1e-12), np.full(4, 0.25))
        np.testing.assert_allclose(Q[2], [0.25, 0.001996, 0.498004, 0.25], atol=1e-10)
        np.testing.assert_allclose(Q[3], [0.25, 0.498004, 0.001996, 0.25], atol=1e-10)

    def test_k_step_base_cases(self, ex1, rng):
        mu = rng.dirichlet(np.ones(4))
        np.testing.assert_array_equal(k_step(ex1, mu, 1), evaluate(ex1, mu))
        P0, P1 = evaluate(ex1, mu), evaluate(ex1, step(ex1, mu))
        np.testing.assert_allclose(k_step(ex1, mu, 2), P0 @ P1, atol=1e-14)

    def test_law_independent_cube(self, frozen_kernel):
        P = frozen_kernel.base
        np.testing.assert_allclose(k_step(frozen_kernel, [1, 0, 0], 3), P @ P @ P, atol=1e-15)

    def test_rejects_zero_steps(self, ex1):
        with pytest.raises(ValueError):
            k_step(ex1, [1, 0, 0, 0], 0)


@pytest.mark.parametrize("make, gammas", [
    (example1, (0.1, 0.2)), (example2, (0.1, 0.25, 0.4))])
def test_rows_are_distributions_on_grid(make, gammas):
    grid = simplex_grid(StateSpace(4), 7)
    for g in gammas:
        k = make(g)
        for mats in (evaluate(k, grid), two_step(k, grid), k_step(k, grid, 3)):
            assert mats.min() >= -1e-15
            np.testing.assert_allclose(mats.sum(axis=-1), 1.0, atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(distributions(4), st.sampled_from([example1(0.2), example2(0.4)]))
def test_law_propagation(mu, k):
    np.testing.assert_allclose(step(k, step(k, mu)), mu @ two_step(k, mu), atol=1e-13)
    np.testing.assert_allclose(law_after(k, mu, 3), mu @ k_step(k, mu, 3), atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(distributions(4), st.integers(1, 3), st.integers(1, 3))
def test_k_step_semigroup(mu, a, b):
    k = example1(0.2)
    lhs = k_step(k, mu, a + b)
    rhs = k_step(k, mu, a) @ k_step(k, law_after(k, mu, a), b)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(distributions(4), distributions(4), st.floats(0, 1))
def test_affinity(mu, nu, t):
    k = example2(0.4)
    mix = t * mu + (1 - t) * nu
    np.testing.assert_allclose(
        evaluate(k, mix), t * evaluate(k, mu) + (1 - t) * evaluate(k, nu), atol=1e-14)
