"""Beta and Wilks tests on linear scores.

The score tests all share one shape: a ratio ``B = z'Q_H z / z'z`` of the
hypothesis quadratic form to the total one, referred to
``Beta(f_H/2, (f - f_H)/2)``.  Under sphericity of ``z`` inside the range
of ``Q`` the rejection probability is exactly ``alpha``, whatever rule
produced the weights, provided the rule only looked at the total sums of
products.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaincc

from .beta import TAIL_FLOOR, BetaParams, beta_sf
from .design import Design, ProjectionPair, group_mask, make_design_projections
from .errors import (
    DegenerateScore,
    DegenerateTarget,
    DesignError,
    DimensionError,
    InvalidScore,
    ShapeError,
    SingularError,
)
from .linalg import as_matrix, eigh_descending

#: relative tolerance for "z lies in the range of Q" and centering checks
RANGE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """A score ``z = M d`` together with where it came from."""

    values: np.ndarray
    design: Design | None = None
    weight_id: str | None = None

    def __post_init__(self):
        z = np.array(self.values, dtype=float).ravel()
        if self.design is not None:
            expected = self.design.expected_n()
            if expected is not None and expected != len(z):
                raise ShapeError(f"score has length {len(z)}, design expects {expected}")
            if self.design.kind in ("two-group", "correlation"):
                _require_centered(z)
        z.setflags(write=False)
        object.__setattr__(self, "values", z)


@dataclass(frozen=True, eq=False)
class TargetVector:
    values: np.ndarray
    centered: bool = False

    @classmethod
    def from_raw(cls, y) -> "TargetVector":
        y = np.asarray(y, dtype=float).ravel()
        return cls(values=y - y.mean(), centered=True)


@dataclass(frozen=True)
class BetaTestResult:
    statistic: float
    params: BetaParams
    p_value: float
    alpha: float
    significant: bool
    #: "sphericity" for score-distribution tests, "mean-value" for the
    #: classical and spherical mean tests
    interpretation: str = "sphericity"
    weight_id: str | None = None
    tail_clamped: bool = False


@dataclass(frozen=True)
class WilksResult:
    lambda_: float
    dims: tuple[int, int, int]  # (q, f_H, f - f_H)
    chi2: float
    p_value: float
    alpha: float
    significant: bool
    approximate: bool = True


@dataclass(frozen=True)
class ClassicalResult:
    beta: BetaTestResult
    f_statistic: float
    f_dfs: tuple[int, int]


def _vector(z) -> np.ndarray:
    z = np.asarray(getattr(z, "values", z), dtype=float)
    if z.ndim == 2 and 1 in z.shape:
        z = z.ravel()
    if z.ndim != 1:
        raise ShapeError(f"score must be a vector, got shape {z.shape}")
    return z


def _weight_id(z):
    return getattr(z, "weight_id", None)


def _require_centered(z: np.ndarray):
    scale = np.max(np.abs(z)) if len(z) else 0.0
    if abs(z.sum()) > RANGE_TOL * len(z) * scale:
        raise InvalidScore(f"score is not centered (sum = {z.sum():.3g})")


def _total_ss(z: np.ndarray) -> float:
    ss = float(z @ z)
    if not ss > 0.0:
        raise DegenerateScore("score vector is zero")
    return ss


def beta_decision(B: float, params: BetaParams, alpha: float, **meta) -> BetaTestResult:
    """Wrap a beta statistic into a :class:`BetaTestResult`."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    B = min(max(float(B), 0.0), 1.0)
    raw = beta_sf(B, params)
    p = max(raw, TAIL_FLOOR)
    return BetaTestResult(
        statistic=B,
        params=params,
        p_value=p,
        alpha=alpha,
        significant=bool(p <= alpha),
        tail_clamped=raw < TAIL_FLOOR,
        **meta,
    )


# -- classical and spherical mean-value tests -------------------------------

def classical_one_group(X, alpha: float = 0.05) -> ClassicalResult:
    """Hotelling-type one-group test of ``mu = 0`` (beta and F forms)."""
    A = as_matrix(X)
    n, p = A.shape
    if n - 1 < p:
        raise DimensionError(f"need n - 1 >= p, got n={n}, p={p}")
    xbar = A.mean(axis=0)
    S = A.T @ A
    if np.linalg.matrix_rank(S) < p:
        raise SingularError("X'X is singular")
    B = float(n * xbar @ np.linalg.solve(S, xbar))
    result = beta_decision(B, BetaParams(p / 2, (n - p) / 2), alpha, interpretation="mean-value")
    G = S - n * np.outer(xbar, xbar)
    if np.linalg.matrix_rank(G) < p:
        F = np.inf
    else:
        F = float((n - p) / p * n * xbar @ np.linalg.solve(G, xbar))
    return ClassicalResult(beta=result, f_statistic=F, f_dfs=(p, n - p))


def spherical_mean_test(Z, alpha: float = 0.05) -> BetaTestResult:
    """``B = n zbar'(Z'Z)^{-1} zbar`` against ``Beta(q/2, (n-q)/2)``."""
    Z = as_matrix(Z)
    n, q = Z.shape
    if n - 1 < q:
        raise DimensionError(f"need n - 1 >= q, got n={n}, q={q}")
    if np.linalg.matrix_rank(Z) < q:
        raise SingularError("score matrix is rank deficient")
    zbar = Z.mean(axis=0)
    B = float(n * zbar @ np.linalg.solve(Z.T @ Z, zbar))
    return beta_decision(B, BetaParams(q / 2, (n - q) / 2), alpha, interpretation="mean-value")


def wilks_test(Z, proj: ProjectionPair, alpha: float = 0.05) -> WilksResult:
    """Wilks determinant ratio ``|Z'(Q - Q_H)Z| / |Z'Z|``.

    The p-value uses Bartlett's chi-square approximation and is marked
    approximate.  For a single score ``lambda_ == 1 - B`` exactly.
    """
    Z = as_matrix(Z)
    n, q = Z.shape
    if n != proj.n:
        raise ShapeError(f"score matrix has {n} rows, projections are {proj.n}x{proj.n}")
    if q > proj.error_df:
        raise DimensionError(f"need q <= f - f_H = {proj.error_df}, got q={q}")
    for j in range(q):
        _require_in_range(Z[:, j], proj.Q)
    T = Z.T @ Z
    E = Z.T @ ((proj.Q - proj.Q_H) @ Z)
    sign_t, logdet_t = np.linalg.slogdet(T)
    if sign_t <= 0 or np.linalg.matrix_rank(T) < q:
        raise SingularError("Z'Z is singular")
    if q == 1:
        lam = float(E[0, 0] / T[0, 0])
    else:
        sign_e, logdet_e = np.linalg.slogdet(0.5 * (E + E.T))
        lam = float(np.exp(logdet_e - logdet_t)) if sign_e > 0 else 0.0
    lam = min(max(lam, 0.0), 1.0)
    f_H, f_E = proj.f_H, proj.error_df
    chi2 = -(f_E - (q - f_H + 1) / 2.0) * np.log(lam) if lam > 0 else np.inf
    p = float(gammaincc(q * f_H / 2.0, chi2 / 2.0)) if np.isfinite(chi2) else 0.0
    return WilksResult(
        lambda_=lam,
        dims=(q, f_H, f_E),
        chi2=float(chi2),
        p_value=p,
        alpha=alpha,
        significant=bool(p <= alpha),
    )


# -- score-distribution (sphericity) tests ----------------------------------

def score_test_one_group(z, alpha: float = 0.05) -> BetaTestResult:
    """``B = n zbar^2 / z'z`` against ``Beta(1/2, (n-1)/2)``."""
    v = _vector(z)
    n = len(v)
    ss = _total_ss(v)
    B = n * v.mean() ** 2 / ss
    return beta_decision(B, BetaParams(0.5, (n - 1) / 2), alpha, weight_id=_weight_id(z))


def score_test_two_group(z, groups, alpha: float = 0.05) -> BetaTestResult:
    """Group-separation test of a centered score.

    ``groups`` is ``(n1, n2)`` for stacked data or a label vector.
    """
    v = _vector(z)
    mask = group_mask(groups)
    n = len(v)
    if len(mask) != n:
        raise DesignError(f"groups cover {len(mask)} individuals, score has {n}")
    _require_centered(v)
    ss = _total_ss(v)
    n1 = int(mask.sum())
    n2 = n - n1
    diff = v[mask].mean() - v[~mask].mean()
    B = n1 * n2 / n * diff**2 / ss
    return beta_decision(B, BetaParams(0.5, (n - 2) / 2), alpha, weight_id=_weight_id(z))


def score_test_correlation(z, y, alpha: float = 0.05) -> BetaTestResult:
    """Squared (origin) correlation of score and centered target."""
    v = _vector(z)
    yv = _vector(y)
    n = len(v)
    if len(yv) != n:
        raise ShapeError(f"target has length {len(yv)}, score has {n}")
    scale = np.max(np.abs(yv))
    if not scale > 0:
        raise DegenerateTarget("target vector is zero")
    if abs(yv.sum()) > RANGE_TOL * n * scale:
        raise DesignError("target vector must be centered")
    ss = _total_ss(v)
    B = (v @ yv) ** 2 / (ss * (yv @ yv))
    return beta_decision(B, BetaParams(0.5, (n - 2) / 2), alpha, weight_id=_weight_id(z))


def _require_in_range(z: np.ndarray, Q: np.ndarray):
    off = np.linalg.norm(z - Q @ z)
    if off > RANGE_TOL * np.linalg.norm(z):
        raise InvalidScore(f"score leaves the range of Q (residual {off:.3g})")


def score_test_general(z, proj: ProjectionPair, alpha: float = 0.05) -> BetaTestResult:
    """``B = z'Q_H z / z'z`` against ``Beta(f_H/2, (f - f_H)/2)``."""
    v = _vector(z)
    if len(v) != proj.n:
        raise ShapeError(f"score has length {len(v)}, projections are {proj.n}x{proj.n}")
    ss = _total_ss(v)
    _require_in_range(v, proj.Q)
    B = float(v @ proj.Q_H @ v) / ss
    return beta_decision(B, BetaParams.for_design(proj.f, proj.f_H), alpha, weight_id=_weight_id(z))


def score_test(z, design: Design, alpha: float = 0.05) -> BetaTestResult:
    """Dispatch to the test matching ``design``."""
    if design.kind == "one-group":
        return score_test_one_group(z, alpha)
    if design.kind == "two-group":
        return score_test_two_group(z, design.groups, alpha)
    if design.kind == "correlation":
        return score_test_correlation(z, design.target, alpha)
    return score_test_general(z, design.projections, alpha)


def score_statistics(Z, design) -> np.ndarray:
    """Beta statistics of every column of ``Z`` (no range checks).

    ``design`` is a :class:`Design` or a ready :class:`ProjectionPair`.
    """
    Z = as_matrix(Z)
    proj = design if isinstance(design, ProjectionPair) else make_design_projections(design, Z.shape[0])
    ss = np.einsum("ij,ij->j", Z, Z)
    hyp = np.einsum("ij,ij->j", Z, proj.Q_H @ Z)
    return hyp / ss


def pc_mean_test(X, component: int = 0, alpha: float = 0.05) -> BetaTestResult:
    """Principal-component mean-value test in the one-group design.

    Same arithmetic as :func:`score_test_one_group` on the score of the
    ``component``-th eigenvector of ``X'X``; significance supports
    ``mu'd != 0`` for that component, hence the ``mean-value`` tag.
    """
    A = as_matrix(X)
    _, V = eigh_descending(A.T @ A)
    d = V[:, component]
    res = score_test_one_group(A @ d, alpha)
    return replace(res, interpretation="mean-value", weight_id=f"PC{component + 1}")


def regression_score(x_target, X1, weight_id: str | None = "regression") -> ScoreVector:
    """Residual of ``x_target`` after least-squares regression on ``X1``.

    Residuals that vanish to rounding (``x_target`` in the span of ``X1``)
    are returned as the exact zero vector.
    """
    x = _vector(x_target)
    A = as_matrix(X1)
    if A.shape[0] != len(x):
        raise ShapeError(f"X1 has {A.shape[0]} rows, target has {len(x)}")
    G = A.T @ A
    if np.linalg.matrix_rank(G) < A.shape[1]:
        raise SingularError("X1'X1 is singular")
    z = x - A @ np.linalg.solve(G, A.T @ x)
    if np.linalg.norm(z) <= 1e-10 * max(np.linalg.norm(x), 1e-300):
        z = np.zeros_like(z)
    return ScoreVector(values=z, weight_id=weight_id)
