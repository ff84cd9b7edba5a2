"""Quick invariant checks, small enough to run on every install.

Each check returns a :class:`CheckResult`; ``run_all`` runs them in a
fixed order with a fixed seed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .beta import beta_quantile
from .design import Design, make_design_projections
from .linalg import dual_eigen_scores, symmetric_eigen, sums_of_products
from .mc_verify import SimConfig, chunk_rng, simulate_example2, simulate_null_level, three_sigma
from .model_choice import CORR_THRESHOLD, TOP_CAP, build_gene_sets
from .scoretests import score_statistics, wilks_test


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def check_quantiles(seed: int = 0) -> CheckResult:
    worst = 0.0
    for m in range(1, 201):
        for alpha in (0.1, 0.05, 0.01, 0.00125):
            t = stats.t.ppf(1 - alpha / 2, m)
            worst = max(worst, abs(beta_quantile(1 - alpha, 0.5, m / 2) - t * t / (t * t + m)))
    return CheckResult("beta quantile vs t", worst <= 1e-9, f"max abs error {worst:.2e}")


def check_dual_primal(seed: int = 0, instances: int = 40) -> CheckResult:
    rng = chunk_rng(seed, 101)
    worst_val = worst_vec = 0.0
    for _ in range(instances):
        n = int(rng.integers(3, 12))
        p = int(rng.integers(n + 1, 3 * n + 2))
        M = rng.standard_normal((n, p))
        q = n - 1
        dual = dual_eigen_scores(M, q)
        primal = symmetric_eigen(sums_of_products(M), q)
        for d, e in zip(dual, primal):
            worst_val = max(worst_val, abs(d.value - e.value) / e.value)
            z = M @ e.vector
            worst_vec = max(worst_vec, min(np.abs(d.vector - z).max(), np.abs(d.vector + z).max()) / np.abs(z).max())
    ok = worst_val <= 1e-8 and worst_vec <= 1e-8
    return CheckResult("dual/primal eigen", ok, f"eigenvalue rel {worst_val:.1e}, score {worst_vec:.1e}")


def _designs(n: int, rng) -> list[Design]:
    y = rng.standard_normal(n)
    return [
        Design.one_group(),
        Design.two_group((n // 2, n - n // 2)),
        Design.correlation(y),
        Design.general(*general_projections(n)),
    ]


def general_projections(n: int, groups: int = 3):
    """Q removes a mean and a linear trend; Q_H spans between-group contrasts
    orthogonal to both (rank ``groups - 1``)."""
    t = np.arange(n, dtype=float)
    A = np.column_stack([np.ones(n), t])
    P0 = A @ np.linalg.pinv(A)
    Q = np.eye(n) - P0
    G = np.zeros((n, groups))
    G[np.arange(n), np.arange(n) % groups] = 1.0
    C = Q @ G
    U, s, _ = np.linalg.svd(C, full_matrices=False)
    U = U[:, s > 1e-10 * s[0]]
    return Q, U @ U.T


def check_lambda_identity(seed: int = 0, instances: int = 30) -> CheckResult:
    rng = chunk_rng(seed, 102)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(8, 20))
        X = rng.standard_normal((n, 1))
        for design in _designs(n, rng):
            proj = make_design_projections(design, n)
            z = proj.Q @ X
            B = score_statistics(z, proj)[0]
            lam = wilks_test(z, proj).lambda_
            worst = max(worst, abs(lam - (1 - B)))
    return CheckResult("Wilks lambda = 1 - B (q=1)", worst <= 1e-12, f"max deviation {worst:.1e}")


def replay_gene_sets(C, sets, threshold: float = CORR_THRESHOLD, cap: int = TOP_CAP) -> list[str]:
    """Independently re-verify emitted sets; returns a list of violations."""
    A = np.asarray(C, dtype=float)
    ss = (A * A).sum(axis=0)
    problems = []
    seen: set[int] = set()
    for h, gs in enumerate(sets):
        c = gs.center
        if gs.members[0] != c:
            problems.append(f"set {h}: center not first")
        for i in gs.members[1:]:
            r = A[:, c] @ A[:, i] / np.sqrt(ss[c] * ss[i])
            if ss[i] > ss[c]:
                problems.append(f"set {h}: member {i} has larger sum of squares")
            if r < threshold - 1e-12:
                problems.append(f"set {h}: member {i} correlation {r:.4f} below threshold")
        if len(gs.top20) != min(cap, gs.size) or tuple(gs.members[:cap]) != gs.top20:
            problems.append(f"set {h}: top list is not the first {cap} members")
        if seen.intersection(gs.top20):
            problems.append(f"set {h}: top list overlaps an earlier set")
        seen.update(gs.top20)
    return problems


def check_gene_sets(seed: int = 0, instances: int = 5) -> CheckResult:
    rng = chunk_rng(seed, 103)
    issues = 0
    deterministic = True
    for _ in range(instances):
        F = rng.standard_normal((30, 10))
        X = F @ rng.standard_normal((10, 200)) * 0.6 + rng.standard_normal((30, 200))
        C = X - X.mean(axis=0)
        a = build_gene_sets(C)
        b = build_gene_sets(C.copy())
        deterministic &= a == b
        issues += len(replay_gene_sets(C, a))
    return CheckResult(
        "gene-set replay", issues == 0 and deterministic, f"{issues} violations, deterministic={deterministic}"
    )


def check_null_level(seed: int = 0, runs: int = 4000) -> CheckResult:
    cfg = SimConfig(n=10, p=5, runs=runs, alpha=0.05, seed=seed, method="pca")
    rep = simulate_null_level(cfg)
    f = rep.frequencies[0]
    hw = three_sigma(0.05, runs)
    return CheckResult(
        "null level, one-group PCA", abs(f - 0.05) <= hw, f"frequency {f:.4f}, 0.05 +- {hw:.4f}"
    )


def check_example2(seed: int = 0, runs: int = 200_000) -> CheckResult:
    rep = simulate_example2(runs=runs, seed=seed)
    f1, f2 = rep.frequencies[0], rep.frequencies[1]
    hw = three_sigma(0.0834, runs)
    ok = f1 >= 0.999 and abs(f2 - 0.0834) <= hw
    return CheckResult("column-sum ordering example", ok, f"score 1 {f1:.4f}, score 2 {f2:.4f} (0.0834 +- {hw:.4f})")


CHECKS = (
    check_quantiles,
    check_dual_primal,
    check_lambda_identity,
    check_gene_sets,
    check_null_level,
    check_example2,
)


def run_all(seed: int = 0) -> list[CheckResult]:
    out = []
    for check in CHECKS:
        t0 = time.perf_counter()
        res = check(seed)
        out.append(CheckResult(res.name, res.passed, res.detail, time.perf_counter() - t0))
    return out


__all__ = ["CheckResult", "general_projections", "replay_gene_sets", "run_all"]
