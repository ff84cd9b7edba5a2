"""Dense matrix primitives: centering, sums of products and eigensolves.

All heavy lifting goes through LAPACK via :mod:`numpy.linalg`; this module
adds the deterministic ordering/sign conventions and the dual (Gram-side)
route used when there are far more variables than individuals.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EigenError, InvalidData, ShapeError

#: eigenvalues below ``RANK_TOL * lambda_1`` count as zero
RANK_TOL = 1e-10
#: relative gap under which two eigenvalues are treated as tied
TIE_TOL = 1e-12
#: entries below this magnitude are skipped by the sign convention
SIGN_TOL = 1e-12


class RankDeficiencyWarning(UserWarning):
    """Fewer usable components than requested."""


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """n individuals x p variables, with labels."""

    values: np.ndarray
    row_ids: tuple = ()
    col_ids: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ShapeError(f"data matrix must be 2-D, got shape {values.shape}")
        n, p = values.shape
        if n < 2 or p < 1:
            raise InvalidData(f"need n >= 2 and p >= 1, got {n}x{p}")
        if not np.all(np.isfinite(values)):
            raise InvalidData("data matrix contains non-finite values")
        row_ids = tuple(self.row_ids) if len(self.row_ids) else tuple(str(i + 1) for i in range(n))
        col_ids = tuple(self.col_ids) if len(self.col_ids) else tuple(f"V{i + 1}" for i in range(p))
        if len(row_ids) != n or len(col_ids) != p:
            raise ShapeError("label counts do not match matrix shape")
        if len(set(row_ids)) != n:
            raise InvalidData("row ids are not unique")
        if len(set(col_ids)) != p:
            raise InvalidData("column ids are not unique")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_ids", row_ids)
        object.__setattr__(self, "col_ids", col_ids)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class CenteredMatrix:
    values: np.ndarray
    column_means: np.ndarray

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class SumsOfProducts:
    values: np.ndarray
    kind: str = "total"

    def fingerprint(self) -> str:
        """Hex digest identifying this exact matrix (bitwise)."""
        a = np.ascontiguousarray(self.values, dtype=np.float64)
        h = hashlib.sha256()
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
        return h.hexdigest()[:16]

    @property
    def diagonal(self):
        return np.diag(self.values).copy()


@dataclass(frozen=True, eq=False)
class EigenPair:
    """One eigenvalue with its vector.

    For primal pairs ``vector`` is the unit-norm weight vector d.  For dual
    pairs ``vector`` is the score z with ``z @ z == value`` and ``primal``
    holds the matching unit weight vector.
    """

    value: float
    vector: np.ndarray
    primal: np.ndarray | None = field(default=None)


def as_matrix(X) -> np.ndarray:
    """Plain float array view of a DataMatrix / CenteredMatrix / array."""
    values = getattr(X, "values", X)
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def center(X) -> CenteredMatrix:
    """Subtract column means: ``X - 1 xbar'``."""
    A = as_matrix(X)
    if A.shape[0] < 2:
        raise InvalidData("centering needs at least two rows")
    if not np.all(np.isfinite(A)):
        raise InvalidData("data matrix contains non-finite values")
    means = A.mean(axis=0)
    values = A - means
    values.setflags(write=False)
    means.setflags(write=False)
    return CenteredMatrix(values=values, column_means=means)


def sums_of_products(M, Q=None, kind: str | None = None) -> SumsOfProducts:
    """``M'M`` or ``M'QM``, symmetrized."""
    A = as_matrix(M)
    if Q is None:
        S = A.T @ A
        kind = kind or ("residual" if isinstance(M, CenteredMatrix) else "total")
    else:
        Q = np.asarray(getattr(Q, "Q", Q), dtype=float)
        if Q.shape != (A.shape[0], A.shape[0]):
            raise ShapeError(f"projection is {Q.shape}, data has {A.shape[0]} rows")
        S = A.T @ (Q @ A)
        kind = kind or "projected"
    S = 0.5 * (S + S.T)
    S.setflags(write=False)
    return SumsOfProducts(values=S, kind=kind)


def _order_and_sign(values, vectors):
    """Descending order, deterministic tie-break and sign convention.

    ``vectors`` columns are the eigenvectors matching ``values``.
    """
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]

    # ties: order by position of the largest-magnitude entry
    scale = max(abs(values[0]), np.finfo(float).tiny) if len(values) else 1.0
    m = len(values)
    start = 0 if np.any(np.abs(np.diff(values)) <= TIE_TOL * scale) else m
    while start < m:
        stop = start + 1
        while stop < m and abs(values[start] - values[stop]) <= TIE_TOL * scale:
            stop += 1
        if stop - start > 1:
            keys = np.argmax(np.abs(vectors[:, start:stop]), axis=0)
            sub = start + np.argsort(keys, kind="stable")
            vectors[:, start:stop] = vectors[:, sub]
            values[start:stop] = values[sub]
        start = stop

    vectors = vectors * _sign_flips(vectors)
    return values, vectors


def _sign_flips(vectors):
    """+1/-1 per column so the first non-negligible entry is positive."""
    big = np.abs(vectors) > SIGN_TOL
    first = np.argmax(big, axis=0)
    lead = vectors[first, np.arange(vectors.shape[1])]
    return np.where(lead < 0, -1.0, 1.0)


def eigh_descending(S) -> tuple[np.ndarray, np.ndarray]:
    """Full eigensystem of a symmetric matrix, largest eigenvalue first.

    Returns ``(values, vectors)`` with unit columns under the package sign
    convention.
    """
    S = np.asarray(getattr(S, "values", S), dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeError(f"expected a square matrix, got {S.shape}")
    if not np.all(np.isfinite(S)):
        raise EigenError("matrix has non-finite entries")
    try:
        w, V = np.linalg.eigh(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenError(str(exc)) from exc
    return _order_and_sign(w, V)


def symmetric_eigen(S, count: int | None = None) -> list[EigenPair]:
    """Top ``count`` eigenpairs of a symmetric matrix, descending."""
    A = np.asarray(getattr(S, "values", S), dtype=float)
    m = A.shape[0]
    count = m if count is None else int(count)
    if not 1 <= count <= m:
        raise ValueError(f"count must lie in [1, {m}], got {count}")
    w, V = eigh_descending(A)
    norm = np.linalg.norm(A)
    resid = np.linalg.norm(A @ V[:, :count] - V[:, :count] * w[:count], axis=0)
    if np.any(resid > 1e-8 * max(norm, 1e-300)):
        raise EigenError(f"eigen residual {resid.max():.3g} too large")
    return [EigenPair(value=float(w[h]), vector=V[:, h].copy()) for h in range(count)]


def numerical_rank(values: Sequence[float], tol: float = RANK_TOL) -> int:
    values = np.asarray(values, dtype=float)
    if len(values) == 0 or values[0] <= 0:
        return 0
    return int(np.sum(values > tol * values[0]))


def dual_eigen_scores(M, count: int | None = None) -> list[EigenPair]:
    """Principal scores from the n x n Gram matrix ``M M'``.

    Each returned pair has ``vector = z`` with ``z'z = lambda`` and
    ``primal = d`` (unit norm, sign convention applied) such that
    ``z = M d``.  Components beyond the numerical rank are dropped with a
    :class:`RankDeficiencyWarning`.
    """
    A = as_matrix(M)
    n, p = A.shape
    limit = min(n, p)
    count = limit if count is None else int(count)
    if not 1 <= count <= limit:
        raise ValueError(f"count must lie in [1, {limit}], got {count}")
    G = A @ A.T
    w, U = eigh_descending(G)
    rank = numerical_rank(w)
    if count > rank:
        warnings.warn(
            f"requested {count} components but numerical rank is {rank}",
            RankDeficiencyWarning,
            stacklevel=2,
        )
        count = rank
    if count == 0:
        return []
    lam = w[:count]
    D = A.T @ U[:, :count] / np.sqrt(lam)
    D /= np.linalg.norm(D, axis=0)
    D *= _sign_flips(D)
    Z = A @ D
    # z'z equals lambda up to rounding; pin it exactly
    Z *= np.sqrt(lam) / np.linalg.norm(Z, axis=0)
    return [
        EigenPair(value=float(lam[h]), vector=Z[:, h].copy(), primal=D[:, h].copy())
        for h in range(count)
    ]
