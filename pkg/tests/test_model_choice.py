import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spherescore.design import Design
from spherescore.errors import EmptyInput
from spherescore.linalg import RankDeficiencyWarning, center, sums_of_products
from spherescore.model_choice import (
    build_gene_sets,
    column_sum_order,
    gene_set_weights,
    kropf_diagonal_order,
    pca_weights,
    run_sequential,
    select_scores,
    sequential_from_pvalues,
    sequential_rule,
)
from spherescore.verify import replay_gene_sets


def centered_with(ss, R, n=12, seed=0):
    """Centered n x p matrix with exact column sums of squares ``ss`` and
    correlation matrix ``R`` (orthonormal centered basis times a Cholesky factor)."""
    rng = np.random.default_rng(seed)
    p = len(ss)
    A = rng.standard_normal((n, p))
    A -= A.mean(axis=0)
    U, _ = np.linalg.qr(A)
    L = np.linalg.cholesky(np.asarray(R, dtype=float))
    return U @ L.T * np.sqrt(np.asarray(ss, dtype=float))


# -- PCA weights --------------------------------------------------------------

def test_pca_identical_columns():
    c = np.array([1.0, -2.0, 0.5, 0.5])
    W = pca_weights(sums_of_products(np.column_stack([c, c])), 1)
    np.testing.assert_allclose(W.columns[:, 0], np.ones(2) / np.sqrt(2))


def test_pca_diagonal_gives_ordered_coordinates():
    W = pca_weights(sums_of_products(np.diag(np.sqrt([2.0, 7.0, 4.0]))))
    np.testing.assert_array_equal(W.columns, np.eye(3)[:, [1, 2, 0]])
    np.testing.assert_allclose(W.eigenvalues, [7.0, 4.0, 2.0])


def test_pca_dual_route_matches_primal():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((8, 30))
    dual = pca_weights(M, 5)
    primal = pca_weights(sums_of_products(M), 5)
    np.testing.assert_allclose(dual.eigenvalues, primal.eigenvalues, rtol=1e-10)
    np.testing.assert_allclose(dual.columns, primal.columns, atol=1e-9)
    assert dual.derived_from == primal.derived_from


def test_pca_rank_warning():
    M = center(np.random.default_rng(0).standard_normal((5, 12))).values
    with pytest.warns(RankDeficiencyWarning):
        W = pca_weights(M, 5)
    assert W.q == 4
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert pca_weights(M).q == 4


# -- single-variable orderings ------------------------------------------------

def test_diagonal_order():
    assert kropf_diagonal_order(np.diag([5.0, 9.0, 2.0])).permutation.tolist() == [1, 0, 2]
    assert kropf_diagonal_order(np.eye(4)).permutation.tolist() == [0, 1, 2, 3]


def test_column_sum_order():
    key = column_sum_order(np.array([[4.0, 1.0], [1.0, 3.0]]))
    np.testing.assert_array_equal(key.values, [5.0, 4.0])
    assert key.permutation.tolist() == [0, 1]
    D = np.diag([1.0, 6.0, 3.0, 6.0])
    assert column_sum_order(D).permutation.tolist() == kropf_diagonal_order(D).permutation.tolist()


def test_column_sum_uses_absolute_values():
    W = np.array([[3.0, -2.0, 0.0], [-2.0, 3.0, 0.0], [0.0, 0.0, 4.0]])
    assert column_sum_order(W).permutation.tolist() == [0, 1, 2]


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.permutations(range(5)))
def test_orderings_equivariant_under_permutation(seed, perm):
    X = np.random.default_rng(seed).standard_normal((6, 5))
    perm = np.array(perm)
    S = X.T @ X
    Sp = X[:, perm].T @ X[:, perm]
    for rule in (kropf_diagonal_order, column_sum_order):
        assert perm[rule(Sp).permutation].tolist() == rule(S).permutation.tolist()


# -- gene sets ----------------------------------------------------------------

def test_gene_sets_three_variable_example():
    R = [[1.0, 0.9, 0.3], [0.9, 1.0, 0.3], [0.3, 0.3, 1.0]]
    C = centered_with([4.0, 2.0, 1.0], R)
    sets = build_gene_sets(C)
    assert [gs.members for gs in sets] == [(0, 1), (2,)]
    assert sets[0].measure == pytest.approx(4 * 1.9)
    assert sets[1].measure == pytest.approx(1.0)


def test_gene_sets_three_variable_candidates():
    # the center-2 candidate {2} (O = 2) only disappears through the overlap rule
    R = [[1.0, 0.9, 0.3], [0.9, 1.0, 0.3], [0.3, 0.3, 1.0]]
    C = centered_with([4.0, 2.0, 1.0], R)
    alone = build_gene_sets(C[:, 1:])
    assert alone[0].members == (0,) and alone[0].measure == pytest.approx(2.0)


def test_gene_sets_cap_twenty():
    p = 25
    R = np.full((p, p), 0.9) + 0.1 * np.eye(p)
    C = centered_with(np.full(p, 3.0), R, n=40)
    sets = build_gene_sets(C)
    assert len(sets) == 1
    gs = sets[0]
    # sums of squares tie only up to rounding, so the largest one is the center
    ss = (C * C).sum(axis=0)
    assert gs.center == int(np.argmax(ss)) and gs.size == 25 and len(gs.top20) == 20
    assert gs.measure == pytest.approx(3.0 * (1 + 19 * 0.9), rel=1e-10)
    alt = build_gene_sets(C, include_center=False)[0]
    assert alt.measure == pytest.approx(3.0 * 20 * 0.9, rel=1e-10)


def test_gene_sets_replay_and_determinism():
    rng = np.random.default_rng(7)
    for _ in range(5):
        F = rng.standard_normal((30, 8))
        X = F @ rng.standard_normal((8, 200)) * 0.7 + rng.standard_normal((30, 200))
        C = center(X).values
        first = build_gene_sets(C)
        again = build_gene_sets(np.array(C))
        assert first == again
        assert replay_gene_sets(C, first) == []
        measures = [gs.measure for gs in first]
        assert measures == sorted(measures, reverse=True)


def test_gene_sets_skip_constant_columns():
    C = center(np.column_stack([np.arange(5.0), np.ones(5), np.arange(5.0) ** 2])).values
    with pytest.warns(RuntimeWarning):
        sets = build_gene_sets(C)
    assert all(1 not in gs.members for gs in sets)


def test_gene_set_weights_single_member():
    C = centered_with([4.0, 1.0], [[1.0, 0.0], [0.0, 1.0]])
    sets = build_gene_sets(C)
    W = gene_set_weights(sets, C)
    assert W.columns[0, 0] == pytest.approx(0.5)
    np.testing.assert_allclose(W.scores(C)[:, 0], C[:, 0] / 2)


def test_gene_set_weights_identical_members():
    c = np.array([1.0, -1.0, 2.0, -2.0])
    C = np.column_stack([c, c])
    sets = build_gene_sets(C)
    assert sets[0].members == (0, 1)
    z = gene_set_weights(sets, C).scores(C)[:, 0]
    np.testing.assert_allclose(z, 2 * c / np.linalg.norm(c))


def test_gene_set_score_invariant_to_member_scale():
    rng = np.random.default_rng(3)
    base = rng.standard_normal(10)
    C = center(np.column_stack([base + 0.1 * rng.standard_normal(10) for _ in range(4)])).values
    sets = build_gene_sets(C)
    z = gene_set_weights(sets, C).scores(C)[:, 0]
    scaled = C * np.array([1.0, 5.0, 1.0, 1.0])
    z2 = gene_set_weights(sets, scaled).scores(scaled)[:, 0]
    np.testing.assert_allclose(z, z2, atol=1e-12)


def test_gene_set_weight_locality():
    rng = np.random.default_rng(5)
    C = center(rng.standard_normal((15, 40)) + np.outer(rng.standard_normal(15), np.r_[np.ones(6), np.zeros(34)] * 2)).values
    sets = build_gene_sets(C)
    W = gene_set_weights(sets, C)
    for h, gs in enumerate(sets):
        assert set(np.flatnonzero(W.columns[:, h]).tolist()) == set(gs.members)


# -- sequential procedures ----------------------------------------------------

def test_simple_procedure_example():
    out = sequential_from_pvalues([0.01, 0.2, 0.001], 0.05)
    assert out.significant_indices == (0,)
    assert out.stop_index == 2


def test_hommel_kropf_example():
    out = sequential_from_pvalues([0.001, 0.2, 0.0005, 0.3, 0.4], 0.05, "hommel-kropf", 2)
    assert out.level_used == pytest.approx(0.025)
    assert out.significant_indices == (0, 2)
    assert out.stop_index == 4


def test_simple_first_nonsignificant():
    out = sequential_from_pvalues([0.2, 0.001], 0.05)
    assert out.significant_indices == () and out.stop_index == 1
    assert not out.any_significant


def test_empty_input():
    with pytest.raises(EmptyInput):
        sequential_from_pvalues([], 0.05)
    with pytest.raises(ValueError):
        sequential_from_pvalues([0.1], 0.05, "hommel-kropf", 0)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.sampled_from([0.01, 0.05, 0.1]))
def test_simple_prefix_property(pvalues, alpha):
    out = sequential_from_pvalues(pvalues, alpha)
    s = len(out.significant_indices)
    assert out.significant_indices == tuple(range(s))
    assert out.stop_index == min(s + 1, len(pvalues))


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.integers(1, 5))
def test_hommel_kropf_stops_at_kth_miss(pvalues, k):
    out = sequential_from_pvalues(pvalues, 0.05, "hommel-kropf", k)
    misses = [h for h in range(out.stop_index) if h not in out.significant_indices]
    assert all(pvalues[h] <= 0.05 / k for h in out.significant_indices)
    assert len(misses) == k or out.stop_index == len(pvalues)


def test_tests_are_evaluated_lazily():
    calls = []

    class R:
        def __init__(self, sig):
            self.significant = sig

    def make(h, sig):
        def run(level):
            calls.append(h)
            return R(sig)
        return run

    sequential_rule((make(h, h == 0) for h in range(10)), 0.05)
    assert calls == [0, 1]


def test_run_sequential_on_scores():
    Z = np.column_stack([np.ones(6) + 0.01 * np.arange(6), np.array([1.0, -1, 1, -1, 1, -1])])
    out = run_sequential(Z, Design.one_group(), 0.05)
    assert out.significant_indices == (0,)
    assert out.stop_index == 2
    assert out.results[1].statistic == 0.0


# -- end-to-end score selection -----------------------------------------------

@pytest.mark.parametrize("method", ["pca", "gene-sets", "column-order", "diagonal-order"])
def test_weights_depend_only_on_sums_of_products(method):
    # rotating individuals by an orthogonal C keeps X'X, so the weights must not move
    rng = np.random.default_rng(9)
    X = rng.standard_normal((8, 12)) + np.r_[np.ones(3) * 2, np.zeros(9)]
    C, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    a = select_scores(X, Design.one_group(), method)
    b = select_scores(C @ X, Design.one_group(), method)
    assert a.weights.q == b.weights.q
    np.testing.assert_allclose(a.weights.columns, b.weights.columns, atol=1e-8)


def test_select_scores_two_group_uses_centered_data():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((10, 6))
    sel = select_scores(X, Design.two_group((5, 5)), "column-order", q=3)
    assert sel.scores.shape == (10, 3)
    np.testing.assert_allclose(sel.scores.sum(axis=0), 0, atol=1e-12)
    with pytest.raises(ValueError):
        select_scores(X, Design.one_group(), "bogus")
