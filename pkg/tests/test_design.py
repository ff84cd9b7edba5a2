import numpy as np
import pytest

from spherescore.design import Design, ProjectionPair, group_mask, make_design_projections
from spherescore.errors import DesignError
from spherescore.scoretests import score_test_general
from spherescore.verify import general_projections


def test_one_group_traces():
    pair = make_design_projections(Design.one_group(), 4)
    assert (pair.f, pair.f_H) == (4, 1)
    assert np.trace(pair.Q) == pytest.approx(4)
    assert np.trace(pair.Q_H) == pytest.approx(1)


def test_two_group_separated_scores_give_one():
    pair = make_design_projections(Design.two_group((2, 2)), 4)
    assert (pair.f, pair.f_H) == (3, 1)
    res = score_test_general(np.array([1.0, 1.0, -1.0, -1.0]), pair)
    assert res.statistic == pytest.approx(1.0)


def test_two_group_projection_equals_group_contrast():
    # Q_H from the centered indicator equals the between-group projection minus J/n
    mask = np.array([True, False, True, True, False])
    pair = make_design_projections(Design.two_group(mask), 5)
    G = np.column_stack([mask, ~mask]).astype(float)
    P = G @ np.linalg.inv(G.T @ G) @ G.T
    np.testing.assert_allclose(pair.Q_H, P - np.full((5, 5), 0.2), atol=1e-14)


def test_correlation_projection():
    pair = make_design_projections(Design.correlation([1.0, -1.0, 0.0]), 3)
    y = np.array([1.0, -1.0, 0.0])
    np.testing.assert_allclose(pair.Q_H, np.outer(y, y) / 2)


def test_correlation_target_centered():
    d = Design.correlation([1.0, 2.0, 6.0])
    assert d.target.sum() == pytest.approx(0.0)
    with pytest.raises(DesignError):
        Design.correlation([2.0, 2.0, 2.0])


def test_group_labels_first_value_is_group_one():
    mask = group_mask(np.array(["b", "a", "b", "a"], dtype=object))
    np.testing.assert_array_equal(mask, [True, False, True, False])
    d = Design.two_group(["x", "x", "y"])
    assert d.sizes == (2, 1)


def test_group_labels_need_two_values():
    with pytest.raises(DesignError, match="a.*b.*c"):
        group_mask(["a", "b", "c"])
    with pytest.raises(DesignError):
        group_mask((0, 3))


def test_general_validation():
    Q, Q_H = general_projections(12)
    pair = ProjectionPair.from_matrices(Q, Q_H)
    assert (pair.f, pair.f_H) == (10, 2)
    with pytest.raises(DesignError, match="idempotent"):
        ProjectionPair.from_matrices(2 * Q, Q_H)
    with pytest.raises(DesignError, match="symmetric"):
        A = Q.copy()
        A[0, 1] += 0.1
        ProjectionPair.from_matrices(A, Q_H)
    with pytest.raises(DesignError, match="semidefinite"):
        # Q_H outside the range of Q
        e = np.zeros(12)
        e[:] = 1 / np.sqrt(12)
        ProjectionPair.from_matrices(Q, np.outer(e, e))
    with pytest.raises(DesignError):
        ProjectionPair.from_matrices(Q, Q)  # f_H = f


def test_design_size_mismatch():
    with pytest.raises(DesignError):
        make_design_projections(Design.two_group((2, 3)), 6)


def test_data_for_scores():
    X = np.arange(12, dtype=float).reshape(4, 3) ** 1.5
    np.testing.assert_array_equal(Design.one_group().data_for_scores(X), X)
    C = Design.two_group((2, 2)).data_for_scores(X)
    np.testing.assert_allclose(C.sum(axis=0), 0, atol=1e-12)
