"""Linear testing designs and their projection pairs (Q, Q_H)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DesignError, ShapeError
from .linalg import as_matrix, center

PROJ_TOL = 1e-10

KINDS = ("one-group", "two-group", "correlation", "general")


@dataclass(frozen=True, eq=False)
class ProjectionPair:
    """Decision-space projection ``Q`` (rank f) and hypothesis ``Q_H`` (rank f_H)."""

    Q: np.ndarray
    Q_H: np.ndarray
    f: int
    f_H: int

    @classmethod
    def from_matrices(cls, Q, Q_H, tol: float = PROJ_TOL) -> "ProjectionPair":
        Q = np.array(Q, dtype=float)
        Q_H = np.array(Q_H, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape != Q_H.shape:
            raise DesignError(f"projection shapes {Q.shape} and {Q_H.shape} are invalid")
        for name, P in (("Q", Q), ("Q_H", Q_H)):
            if not np.all(np.isfinite(P)):
                raise DesignError(f"{name} has non-finite entries")
            if np.max(np.abs(P - P.T)) > tol:
                raise DesignError(f"{name} is not symmetric")
            if np.max(np.abs(P @ P - P)) > tol:
                raise DesignError(f"{name} is not idempotent")
        Q = 0.5 * (Q + Q.T)
        Q_H = 0.5 * (Q_H + Q_H.T)
        if np.linalg.eigvalsh(Q - Q_H).min() < -tol:
            raise DesignError("Q - Q_H is not positive semidefinite")
        f = int(round(np.trace(Q)))
        f_H = int(round(np.trace(Q_H)))
        if not 1 <= f_H < f <= Q.shape[0]:
            raise DesignError(f"ranks must satisfy 1 <= f_H < f <= n, got f={f}, f_H={f_H}")
        Q.setflags(write=False)
        Q_H.setflags(write=False)
        return cls(Q=Q, Q_H=Q_H, f=f, f_H=f_H)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def error_df(self) -> int:
        return self.f - self.f_H


@dataclass(frozen=True, eq=False)
class Design:
    """Which linear design the scores are tested under.

    Use the ``one_group``/``two_group``/``correlation``/``general``
    constructors rather than instantiating directly.
    """

    kind: str
    groups: np.ndarray | None = None  # bool, True = group 1
    target: np.ndarray | None = None  # centered y
    projections: ProjectionPair | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DesignError(f"unknown design kind {self.kind!r}")

    @classmethod
    def one_group(cls) -> "Design":
        return cls("one-group")

    @classmethod
    def two_group(cls, groups) -> "Design":
        """``groups`` is either ``(n1, n2)`` (rows stacked group 1 first) or a
        length-n label vector whose first distinct value marks group 1."""
        mask = group_mask(groups)
        return cls("two-group", groups=mask)

    @classmethod
    def correlation(cls, y) -> "Design":
        y = np.asarray(y, dtype=float).ravel()
        if len(y) < 2 or not np.all(np.isfinite(y)):
            raise DesignError("target must be a finite vector of length >= 2")
        y = y - y.mean()
        if not np.any(y):
            raise DesignError("target vector is constant")
        y.setflags(write=False)
        return cls("correlation", target=y)

    @classmethod
    def general(cls, Q, Q_H) -> "Design":
        return cls("general", projections=ProjectionPair.from_matrices(Q, Q_H))

    @property
    def sizes(self):
        if self.groups is None:
            return None
        n1 = int(self.groups.sum())
        return n1, len(self.groups) - n1

    def expected_n(self) -> int | None:
        if self.groups is not None:
            return len(self.groups)
        if self.target is not None:
            return len(self.target)
        if self.projections is not None:
            return self.projections.n
        return None

    def projection_pair(self, n: int) -> ProjectionPair:
        return make_design_projections(self, n)

    def data_for_scores(self, X) -> np.ndarray:
        """The matrix M whose sums of products ``M'M`` drive the weights.

        Scores for this design are ``z = M d``: raw data for one group,
        column-centered data for two-group/correlation, ``QX`` in general.
        """
        A = as_matrix(X)
        self._check_n(A.shape[0])
        if self.kind == "one-group":
            return A
        if self.kind in ("two-group", "correlation"):
            return np.asarray(center(A).values)
        return self.projections.Q @ A

    def _check_n(self, n: int):
        expected = self.expected_n()
        if expected is not None and expected != n:
            raise DesignError(f"design is for n={expected} individuals, data has {n}")


def group_mask(groups) -> np.ndarray:
    if isinstance(groups, np.ndarray) and groups.dtype == bool and groups.ndim == 1:
        if groups.all() or not groups.any():
            raise DesignError("both groups need at least one individual")
        return groups
    if isinstance(groups, tuple) and len(groups) == 2 and all(np.isscalar(g) for g in groups):
        n1, n2 = (int(g) for g in groups)
        if n1 < 1 or n2 < 1:
            raise DesignError(f"both groups need at least one individual, got sizes {groups}")
        mask = np.zeros(n1 + n2, dtype=bool)
        mask[:n1] = True
    else:
        labels = list(np.asarray(groups).ravel())
        distinct = list(dict.fromkeys(labels))
        if len(distinct) != 2:
            raise DesignError(f"two-group labels need exactly 2 distinct values, got {distinct}")
        mask = np.array([lab == distinct[0] for lab in labels], dtype=bool)
    mask.setflags(write=False)
    return mask


def make_design_projections(design: Design, n: int) -> ProjectionPair:
    """Build and validate (Q, Q_H) for ``design`` with ``n`` individuals."""
    design._check_n(n)
    if n < 2:
        raise DesignError("need at least two individuals")
    ones = np.full((n, n), 1.0 / n)
    if design.kind == "one-group":
        return ProjectionPair.from_matrices(np.eye(n), ones)
    if design.kind == "two-group":
        c = design.groups.astype(float)
        c -= c.mean()
        return ProjectionPair.from_matrices(np.eye(n) - ones, np.outer(c, c) / (c @ c))
    if design.kind == "correlation":
        y = design.target
        return ProjectionPair.from_matrices(np.eye(n) - ones, np.outer(y, y) / (y @ y))
    pair = design.projections
    if pair.n != n:
        raise ShapeError(f"projections are {pair.n}x{pair.n}, data has {n} rows")
    return pair
