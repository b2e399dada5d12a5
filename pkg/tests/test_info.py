"""Exact information measures against hand values and enumeration."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corex.info import (
    JointTable,
    conditional_total_correlation,
    entropy,
    joint_from_codes,
    mutual_information,
    tc_explained,
    total_correlation,
)

LN2 = math.log(2)


def table(arr):
    return JointTable(np.asarray(arr, dtype=float))


def random_joint(draw_dims, rng):
    p = rng.random(size=draw_dims)
    return JointTable(p / p.sum())


class TestEntropy:
    def test_uniform_two_states(self):
        assert entropy(table([0.5, 0.5])) == pytest.approx(LN2, abs=1e-12)

    def test_point_mass(self):
        assert entropy(table([1.0, 0.0])) == 0.0

    def test_three_one_split(self):
        # -(0.75 ln 0.75 + 0.25 ln 0.25)
        assert entropy(table([0.75, 0.25])) == pytest.approx(
            0.5623351446188083, abs=1e-12
        )


class TestMutualInformation:
    def test_independent_fair_bits(self):
        t = table([[0.25, 0.25], [0.25, 0.25]])
        assert mutual_information(t) == pytest.approx(0.0, abs=1e-12)

    def test_perfectly_correlated_bits(self):
        t = table([[0.5, 0.0], [0.0, 0.5]])
        assert mutual_information(t) == pytest.approx(LN2, abs=1e-12)

    def test_erasure_channel_capacity(self):
        # fair input through an erasure channel with rate 0.75: the
        # surviving fraction of the input entropy is 0.25 ln 2
        delta = 0.75
        t = table([
            [0.5 * (1 - delta), 0.5 * delta, 0.0],
            [0.0, 0.5 * delta, 0.5 * (1 - delta)],
        ])
        assert mutual_information(t) == pytest.approx(0.25 * LN2, abs=1e-12)

    def test_wrong_arity(self):
        with pytest.raises(ValueError):
            mutual_information(table([0.5, 0.5]))
        with pytest.raises(ValueError):
            mutual_information(table(np.full((2, 2, 2), 0.125)))


class TestTotalCorrelation:
    def test_product_distribution(self):
        px = np.array([0.3, 0.7])
        qy = np.array([0.2, 0.5, 0.3])
        t = table(np.einsum("i,j->ij", px, qy))
        assert total_correlation(t) == pytest.approx(0.0, abs=1e-12)

    def test_two_variables_equals_mi(self):
        rng = np.random.default_rng(7)
        t = random_joint((3, 4), rng)
        assert total_correlation(t) == pytest.approx(
            mutual_information(t), abs=1e-12
        )

    def test_three_identical_fair_bits(self):
        p = np.zeros((2, 2, 2))
        p[0, 0, 0] = p[1, 1, 1] = 0.5
        assert total_correlation(table(p)) == pytest.approx(2 * LN2, abs=1e-12)


def _naive_bayes_triple(flip=0.1):
    """Y fair; X1, X2 independent noisy copies of Y. Axes (x1, x2, y)."""
    p = np.zeros((2, 2, 2))
    for y in (0, 1):
        for x1 in (0, 1):
            for x2 in (0, 1):
                p1 = 1 - flip if x1 == y else flip
                p2 = 1 - flip if x2 == y else flip
                p[x1, x2, y] = 0.5 * p1 * p2
    return table(p)


class TestConditionalTotalCorrelation:
    def test_deterministic_children(self):
        # X1 = X2 = Y exactly
        p = np.zeros((2, 2, 2))
        p[0, 0, 0] = p[1, 1, 1] = 0.5
        assert conditional_total_correlation(table(p), cond_axis=2) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_independent_condition_leaves_tc(self):
        rng = np.random.default_rng(3)
        txy = random_joint((2, 3), rng)
        pz = np.array([0.4, 0.6])
        t = table(np.einsum("ij,z->ijz", txy.probs, pz))
        assert conditional_total_correlation(t, cond_axis=2) == pytest.approx(
            total_correlation(txy), abs=1e-12
        )

    def test_naive_bayes_conditional_independence(self):
        t = _naive_bayes_triple()
        assert conditional_total_correlation(t, cond_axis=2) <= 1e-12


class TestTcExplained:
    def test_independent_condition_explains_nothing(self):
        rng = np.random.default_rng(11)
        txy = random_joint((2, 3), rng)
        pz = np.array([0.4, 0.6])
        t = table(np.einsum("ij,z->ijz", txy.probs, pz))
        assert tc_explained(t, cond_axis=2) == pytest.approx(0.0, abs=1e-12)

    def test_copied_fair_bit(self):
        # Y = X1 = X2: both identities give ln 2
        p = np.zeros((2, 2, 2))
        p[0, 0, 0] = p[1, 1, 1] = 0.5
        t = table(p)
        assert tc_explained(t, cond_axis=2) == pytest.approx(LN2, abs=1e-12)

    def test_naive_bayes_explains_everything(self):
        t = _naive_bayes_triple()
        marg_x = t.marginal((0, 1))
        assert tc_explained(t, cond_axis=2) == pytest.approx(
            total_correlation(marg_x), abs=1e-10
        )


def _mi_with_axis(t, i, cond_axis):
    return mutual_information(t.marginal((i, cond_axis)))


def _i_x_y(t, cond_axis):
    rest = tuple(a for a in range(t.n_vars) if a != cond_axis)
    hx = entropy(t.marginal(rest))
    hy = entropy(t.marginal(cond_axis))
    return hx + hy - entropy(t)


@st.composite
def small_joints(draw):
    shape = draw(st.sampled_from([(2, 2, 2), (2, 3, 2), (3, 2, 2), (2, 2, 3, 2)]))
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    p = rng.random(size=shape) ** draw(st.sampled_from([1, 3]))
    return JointTable(p / p.sum())


class TestIdentities:
    @settings(max_examples=60, deadline=None)
    @given(small_joints())
    def test_both_explained_forms_agree(self, t):
        """TC(X) - TC(X|Y) must equal sum_i I(X_i:Y) - I(X:Y)."""
        cond = t.n_vars - 1
        lhs = tc_explained(t, cond_axis=cond)
        rhs = sum(_mi_with_axis(t, i, cond) for i in range(cond)) - _i_x_y(t, cond)
        assert lhs == pytest.approx(rhs, abs=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(small_joints())
    def test_tc_nonnegative(self, t):
        assert total_correlation(t) >= 0.0

    @settings(max_examples=40, deadline=None)
    @given(small_joints(), st.integers(0, 10))
    def test_tc_invariant_under_relabeling(self, t, seed):
        rng = np.random.default_rng(seed)
        p = t.probs
        for axis in range(p.ndim):
            perm = rng.permutation(p.shape[axis])
            p = np.take(p, perm, axis=axis)
        assert total_correlation(JointTable(p)) == pytest.approx(
            total_correlation(t), abs=1e-10
        )

    def test_tc_zero_only_on_products(self):
        rng = np.random.default_rng(5)
        t = random_joint((2, 2), rng)
        if total_correlation(t) <= 1e-12:
            # random table essentially factorized; perturb to be safe
            p = t.probs.copy()
            p[0, 0] += 0.1
            t = JointTable(p / p.sum())
        assert total_correlation(t) > 1e-12


class TestGuards:
    def test_state_space_guard(self):
        cells = np.zeros((4, 4), dtype=np.int64)
        cards = np.full(4, 100, dtype=np.int64)  # 10^8 states
        with pytest.raises(ValueError, match="sampled estimate"):
            joint_from_codes(cells, cards)

    def test_invalid_probabilities(self):
        with pytest.raises(ValueError):
            JointTable(np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            JointTable(np.array([-0.1, 1.1]))


class TestEmpiricalJoint:
    def test_counts_match_direct_tally(self):
        from oracles import empirical_joint_direct

        rng = np.random.default_rng(0)
        cells = rng.integers(0, 3, size=(50, 3))
        cards = np.array([3, 3, 3])
        t = joint_from_codes(cells, cards)
        np.testing.assert_allclose(
            t.probs, empirical_joint_direct(cells, cards), atol=1e-15
        )

    def test_missing_rows_dropped(self):
        cells = np.array([[0, 1], [1, 0], [-1, 1]])
        t = joint_from_codes(cells, [2, 2])
        assert t.probs[0, 1] == pytest.approx(0.5)
        assert t.probs.sum() == pytest.approx(1.0)
