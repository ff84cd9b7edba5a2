"""Data-driven weights, score orderings and sequential testing.

Every weight rule here is a deterministic function of a total sums of
products matrix ``M'M`` (``M`` being the design's score-space data, see
:meth:`Design.data_for_scores`).  That is all the exactness of the
downstream beta tests needs; the rules are otherwise free to use every
entry of the matrix.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .design import Design
from .errors import EmptyInput, ShapeError
from .beta import BetaParams
from .linalg import (
    RankDeficiencyWarning,
    SumsOfProducts,
    as_matrix,
    dual_eigen_scores,
    eigh_descending,
    numerical_rank,
    sums_of_products,
)
from .scoretests import BetaTestResult, score_test

CORR_THRESHOLD = math.sqrt(0.5)
TOP_CAP = 20

SOURCES = ("pca", "kropf-diagonal", "column-sum", "gene-set", "regression")


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Weight vectors ``d_h`` as the columns of a p x q array."""

    columns: np.ndarray
    source: str
    derived_from: str
    labels: tuple = ()
    eigenvalues: np.ndarray | None = None

    @property
    def q(self) -> int:
        return self.columns.shape[1]

    def scores(self, M) -> np.ndarray:
        """Score matrix ``Z = M D`` (n x q)."""
        return as_matrix(M) @ self.columns


@dataclass(frozen=True)
class OrderingKey:
    values: np.ndarray
    rule: str  # "diagonal" | "column-abs-sum"
    permutation: np.ndarray = field(default=None)


@dataclass(frozen=True)
class GeneSet:
    center: int
    members: tuple[int, ...]
    correlations: tuple[float, ...]
    measure: float
    top20: tuple[int, ...]
    center_ss: float

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class SequentialOutcome:
    results: tuple[BetaTestResult, ...]
    #: number of tests performed = index of the first untested score
    stop_index: int
    significant_indices: tuple[int, ...]
    procedure: str
    k: int
    level_used: float

    @property
    def any_significant(self) -> bool:
        return bool(self.significant_indices)


def _sop(S) -> SumsOfProducts:
    if isinstance(S, SumsOfProducts):
        return S
    A = np.asarray(S, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"sums of products matrix must be square, got {A.shape}")
    return SumsOfProducts(values=0.5 * (A + A.T))


# -- principal components ---------------------------------------------------

def pca_weights(S, q: int | None = None) -> WeightMatrix:
    """Leading eigenvectors of a sums of products matrix.

    ``S`` may be a :class:`SumsOfProducts` (primal p x p solve) or the data
    matrix ``M`` itself, in which case the n x n dual problem is used when
    n < p.  Requests beyond the numerical rank are cut with a
    :class:`RankDeficiencyWarning`.
    """
    if isinstance(S, SumsOfProducts):
        sop = S
        w, V = eigh_descending(sop.values)
        limit = numerical_rank(w)
        q = limit if q is None else q
        if q > limit:
            warnings.warn(f"requested {q} components, rank is {limit}", RankDeficiencyWarning, stacklevel=2)
            q = limit
        D, lam = V[:, :q], w[:q]
    else:
        M = as_matrix(S)
        n, p = M.shape
        sop = sums_of_products(M)
        if n < p:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", RankDeficiencyWarning)
                pairs = dual_eigen_scores(M, min(n, p) if q is None else q)
            if q is not None:
                for w in caught:
                    warnings.warn(str(w.message), RankDeficiencyWarning, stacklevel=2)
            D = np.column_stack([pr.primal for pr in pairs]) if pairs else np.zeros((p, 0))
            lam = np.array([pr.value for pr in pairs])
        else:
            return pca_weights(sop, q)
    D = np.ascontiguousarray(D)
    return WeightMatrix(
        columns=D,
        source="pca",
        derived_from=sop.fingerprint(),
        labels=tuple(f"PC{h + 1}" for h in range(D.shape[1])),
        eigenvalues=np.asarray(lam, dtype=float),
    )


# -- single-variable orderings ----------------------------------------------

def _descending(keys: np.ndarray) -> np.ndarray:
    # stable sort on -key: ties keep the lower original index first
    return np.argsort(-keys, kind="stable")


def kropf_diagonal_order(S) -> OrderingKey:
    """Variables ordered by decreasing diagonal of the sums of products."""
    keys = np.diag(_sop(S).values).copy()
    return OrderingKey(values=keys, rule="diagonal", permutation=_descending(keys))


def column_sum_order(W) -> OrderingKey:
    """Variables ordered by decreasing absolute column sums ``s_i``."""
    keys = np.abs(_sop(W).values).sum(axis=0)
    return OrderingKey(values=keys, rule="column-abs-sum", permutation=_descending(keys))


def indicator_weights(order: OrderingKey, S, col_ids: Sequence[str] | None = None) -> WeightMatrix:
    """Unit-vector weights picking single columns in ``order``."""
    perm = order.permutation
    p = len(order.values)
    D = np.zeros((p, p))
    D[perm, np.arange(p)] = 1.0
    source = "kropf-diagonal" if order.rule == "diagonal" else "column-sum"
    names = col_ids if col_ids is not None else [f"V{i + 1}" for i in range(p)]
    return WeightMatrix(
        columns=D,
        source=source,
        derived_from=_sop(S).fingerprint(),
        labels=tuple(names[i] for i in perm),
    )


# -- gene sets --------------------------------------------------------------

def build_gene_sets(
    C,
    *,
    threshold: float = CORR_THRESHOLD,
    cap: int = TOP_CAP,
    include_center: bool = True,
    block: int = 256,
) -> list[GeneSet]:
    """Correlation-based variable sets, ordered and pruned.

    Columns of ``C`` are used exactly as given, so pass ``center(X)`` for
    the centered rule.  Each non-constant variable spawns a candidate set
    of all variables with no larger sum of squares and correlation at
    least ``threshold``.  Candidates are ranked by
    ``O_m = ss(center) * sum(top cap correlations)`` and kept greedily when
    their top-``cap`` members are disjoint from those of every kept set.

    With ``include_center=False`` the center's own ``r = 1`` is left out of
    ``O_m`` and the ``cap`` largest partner correlations are summed.
    """
    A = as_matrix(C)
    n, p = A.shape
    ss = np.einsum("ij,ij->j", A, A)
    smax = ss.max() if p else 0.0
    valid = ss > 1e-24 * smax if smax > 0 else np.zeros(p, dtype=bool)
    if not valid.all():
        warnings.warn(
            f"skipping {int((~valid).sum())} zero-variance column(s)", RuntimeWarning, stacklevel=2
        )
    norms = np.sqrt(np.where(valid, ss, 1.0))

    candidates = []
    centers = np.flatnonzero(valid)
    for start in range(0, len(centers), block):
        idx = centers[start:start + block]
        R = (A[:, idx].T @ A) / (norms[idx, None] * norms[None, :])
        np.clip(R, -1.0, 1.0, out=R)
        rows = np.arange(len(idx))
        R[rows, idx] = 1.0
        eligible = (ss[None, :] <= ss[idx, None]) & (R >= threshold) & valid[None, :]
        eligible[rows, idx] = True
        key = np.where(eligible, R, -np.inf)
        key[rows, idx] = 2.0  # center always leads
        order = np.argsort(-key, axis=1, kind="stable")
        counts = eligible.sum(axis=1)
        for k, i1 in enumerate(idx):
            members = order[k, :counts[k]]
            r = R[k, members]
            r[0] = 1.0
            if include_center:
                corr_sum = r[:cap].sum()
            else:
                corr_sum = r[1:cap + 1].sum()
            member_list = members.tolist()
            candidates.append(
                GeneSet(
                    center=int(i1),
                    members=tuple(member_list),
                    correlations=tuple(r.tolist()),
                    measure=float(ss[i1] * corr_sum),
                    top20=tuple(member_list[:cap]),
                    center_ss=float(ss[i1]),
                )
            )

    measures = np.array([c.measure for c in candidates])
    ids = np.array([c.center for c in candidates])
    ranked = np.lexsort((ids, -measures)) if candidates else []
    used: set[int] = set()
    retained = []
    for j in ranked:
        cand = candidates[j]
        if used.isdisjoint(cand.top20):
            retained.append(cand)
            used.update(cand.top20)
    return retained


def gene_set_weights(sets: Sequence[GeneSet], C, col_ids: Sequence[str] | None = None) -> WeightMatrix:
    """Standardizing weights ``1/sqrt(ss_i)`` on each set's members."""
    A = as_matrix(C)
    p = A.shape[1]
    ss = np.einsum("ij,ij->j", A, A)
    D = np.zeros((p, len(sets)))
    for h, gs in enumerate(sets):
        members = np.asarray(gs.members)
        D[members, h] = 1.0 / np.sqrt(ss[members])
    names = col_ids if col_ids is not None else [f"V{i + 1}" for i in range(p)]
    return WeightMatrix(
        columns=D,
        source="gene-set",
        derived_from=sums_of_products(A).fingerprint(),
        labels=tuple(names[gs.center] for gs in sets),
    )


# -- sequential procedures --------------------------------------------------

def _procedure_params(procedure: str, k: int | None) -> tuple[str, int]:
    if procedure == "simple":
        return procedure, 1
    if procedure in ("hommel-kropf", "hk"):
        if k is None or int(k) < 1:
            raise ValueError("hommel-kropf needs k >= 1")
        return "hommel-kropf", int(k)
    raise ValueError(f"unknown procedure {procedure!r}")


def sequential_rule(tests, alpha: float, procedure: str = "simple", k: int | None = None) -> SequentialOutcome:
    """Run ordered tests until the stopping rule fires.

    ``tests`` yields callables ``level -> result`` in the fixed order, where
    a result is anything with a boolean ``significant`` attribute; only the ones actually needed are evaluated.  The simple rule
    stops at the first non-significance; Hommel-Kropf tests at
    ``alpha/k`` and stops at the k-th non-significance.
    """
    procedure, k = _procedure_params(procedure, k)
    level = alpha / k
    results = []
    significant = []
    misses = 0
    for h, run in enumerate(tests):
        res = run(level)
        results.append(res)
        if res.significant:
            significant.append(h)
        else:
            misses += 1
            if misses >= k:
                break
    if not results:
        raise EmptyInput("no scores to test")
    return SequentialOutcome(
        results=tuple(results),
        stop_index=len(results),
        significant_indices=tuple(significant),
        procedure=procedure,
        k=k,
        level_used=level,
    )


def _score_columns(scores) -> Iterable[np.ndarray]:
    if isinstance(scores, np.ndarray) and scores.ndim == 2:
        return (scores[:, h] for h in range(scores.shape[1]))
    return iter(scores)


def run_sequential(
    scores,
    design: Design,
    alpha: float = 0.05,
    procedure: str = "simple",
    k: int | None = None,
) -> SequentialOutcome:
    """Sequential beta tests of ordered scores under ``design``.

    ``scores`` is an n x q matrix (columns in test order) or an iterable of
    score vectors.
    """
    def make(z):
        return lambda level: score_test(z, design, level)

    return sequential_rule((make(z) for z in _score_columns(scores)), alpha, procedure, k)


def sequential_from_pvalues(pvalues, alpha: float = 0.05, procedure: str = "simple", k: int | None = None) -> SequentialOutcome:
    """Same stopping rules applied to precomputed p-values."""
    dummy = BetaParams(0.5, 0.5)

    def make(p):
        return lambda level: BetaTestResult(
            statistic=float("nan"), params=dummy, p_value=float(p), alpha=level, significant=bool(p <= level)
        )

    return sequential_rule((make(p) for p in pvalues), alpha, procedure, k)


# -- end-to-end score construction ------------------------------------------

METHODS = ("pca", "gene-sets", "column-order", "diagonal-order")


@dataclass(frozen=True, eq=False)
class ScoreSelection:
    weights: WeightMatrix
    scores: np.ndarray  # n x q, in test order
    gene_sets: tuple[GeneSet, ...] = ()


def select_scores(
    X,
    design: Design,
    method: str,
    q: int | None = None,
    col_ids: Sequence[str] | None = None,
) -> ScoreSelection:
    """Weights and ordered scores for one of the data-driven ``METHODS``.

    Only ``M'M`` enters the weights, where ``M = design.data_for_scores(X)``;
    the group labels / target are never looked at here.
    """
    M = design.data_for_scores(X)
    if method == "pca":
        weights = pca_weights(M, q)
        sets = ()
    elif method == "gene-sets":
        sets = tuple(build_gene_sets(M))
        if q is not None:
            sets = sets[:q]
        weights = gene_set_weights(sets, M, col_ids)
    elif method in ("column-order", "diagonal-order"):
        S = sums_of_products(M)
        order = column_sum_order(S) if method == "column-order" else kropf_diagonal_order(S)
        weights = indicator_weights(order, S, col_ids)
        if q is not None:
            weights = WeightMatrix(
                columns=weights.columns[:, :q],
                source=weights.source,
                derived_from=weights.derived_from,
                labels=weights.labels[:q],
            )
        sets = ()
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return ScoreSelection(weights=weights, scores=weights.scores(M), gene_sets=sets)


__all__ = [
    "GeneSet",
    "OrderingKey",
    "ScoreSelection",
    "SequentialOutcome",
    "WeightMatrix",
    "build_gene_sets",
    "column_sum_order",
    "gene_set_weights",
    "indicator_weights",
    "kropf_diagonal_order",
    "pca_weights",
    "run_sequential",
    "select_scores",
    "sequential_from_pvalues",
    "sequential_rule",
]
