"""Seeded Monte Carlo checks of the exactness claims.

Runs are grouped in fixed-size chunks; chunk ``c`` draws from
``Philox(SeedSequence([seed, c]))``.  The partition does not depend on the
number of workers, so reports are bit-identical for any worker count.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats

from .beta import BetaParams, beta_cdf_array, beta_critical, beta_quantile
from .design import Design, make_design_projections
from .errors import ConfigError
from .model_choice import column_sum_order, kropf_diagonal_order, select_scores, sequential_rule
from .scoretests import score_statistics, score_test_one_group

WORKERS_ENV = "SPHERESCORE_WORKERS"
RNG_ALGORITHM = "numpy.random.Philox(SeedSequence([seed, chunk]))"
REPORT_QUANTILES = (0.5, 0.9, 0.95, 0.99)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chunk)])))


def three_sigma(freq: float, runs: int) -> float:
    return 3.0 * math.sqrt(freq * (1.0 - freq) / runs)


def random_rotation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal n x n matrix (QR of a Gaussian matrix)."""
    G = rng.standard_normal((n, n))
    Qm, R = np.linalg.qr(G)
    return Qm * np.where(np.diag(R) < 0, -1.0, 1.0)


@dataclass(frozen=True, eq=False)
class SimConfig:
    n: int
    p: int
    runs: int
    alpha: float = 0.05
    seed: int = 0
    design: Design | None = None
    #: length-p row mean, or an n x p mean matrix
    mean: np.ndarray | None = None
    covariance: np.ndarray | None = None
    method: str = "pca"
    #: sequential procedures run on every draw, as (name, k) pairs
    procedures: tuple = ()
    track: int = 1
    chunk_size: int = 2000
    scenario: str = ""

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.n < 2 or self.p < 1:
            raise ConfigError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.covariance is not None:
            S = np.asarray(self.covariance, dtype=float)
            if S.shape != (self.p, self.p):
                raise ConfigError(f"covariance must be {self.p}x{self.p}")
            if np.max(np.abs(S - S.T)) > 1e-10 or np.linalg.eigvalsh(0.5 * (S + S.T)).min() < -1e-10:
                raise ConfigError("covariance must be symmetric positive semidefinite")
        for name, k in self.procedures:
            if name not in ("simple", "hommel-kropf") or int(k) < 1:
                raise ConfigError(f"bad procedure spec {(name, k)!r}")
        if self.mean is not None:
            m = np.asarray(self.mean, dtype=float)
            if m.shape not in ((self.p,), (self.n, self.p)):
                raise ConfigError(f"mean must have shape ({self.p},) or ({self.n}, {self.p})")

    @property
    def the_design(self) -> Design:
        return self.design if self.design is not None else Design.one_group()

    def label(self) -> str:
        if self.scenario:
            return self.scenario
        procs = ",".join(procedure_label(nm, k) for nm, k in self.procedures) or "first-scores"
        return f"{self.the_design.kind}/{self.method}/{procs}"


def procedure_label(name: str, k: int) -> str:
    return "simple" if name == "simple" else f"hommel-kropf(k={int(k)})"


@dataclass(eq=False)
class SimReport:
    scenario: str
    runs: int
    alpha: float
    seed: int
    rng: str
    frequencies: list[float]
    half_widths: list[float]
    #: probability of any significance, per procedure label
    fwe: dict = field(default_factory=dict)
    fwe_half_widths: dict = field(default_factory=dict)
    beta_params: tuple[float, float] | None = None
    ks_distance: float | None = None
    ks_pvalue: float | None = None
    quantiles: dict = field(default_factory=dict)
    wall_time: float = 0.0
    #: B samples of the first tested score (not serialized)
    statistics: np.ndarray | None = field(default=None, repr=False)

    def frequency_at(self, alpha: float) -> float:
        """Rejection frequency of the first score at another level."""
        if self.statistics is None or self.beta_params is None:
            raise ValueError("report carries no statistic sample")
        crit = beta_critical(alpha, *self.beta_params)
        s = self.statistics[np.isfinite(self.statistics)]
        return float(np.mean(s >= crit))

    def as_dict(self, include_timing: bool = False) -> dict:
        out = {
            "scenario": self.scenario,
            "runs": self.runs,
            "alpha": self.alpha,
            "seed": self.seed,
            "rng": self.rng,
            "frequencies": list(self.frequencies),
            "half_widths": list(self.half_widths),
            "fwe": dict(self.fwe),
            "fwe_half_widths": dict(self.fwe_half_widths),
            "beta_params": list(self.beta_params) if self.beta_params else None,
            "ks_distance": self.ks_distance,
            "ks_pvalue": self.ks_pvalue,
            "quantiles": {str(k): list(v) for k, v in self.quantiles.items()},
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.as_dict(include_timing), indent=2)

    def to_table(self) -> str:
        lines = [f"scenario {self.scenario}  runs={self.runs}  alpha={self.alpha}  seed={self.seed}"]
        lines.append(f"{'score':>6} {'freq':>10} {'+-3sd':>10}")
        for h, (f, w) in enumerate(zip(self.frequencies, self.half_widths), start=1):
            lines.append(f"{h:>6} {f:>10.6f} {w:>10.6f}")
        for name, f in self.fwe.items():
            lines.append(f"any significance, {name}: {f:.6f} +- {self.fwe_half_widths[name]:.6f}")
        if self.ks_distance is not None:
            lines.append(f"KS distance {self.ks_distance:.6f} (p = {self.ks_pvalue:.4g})")
        for q, (emp, theo) in self.quantiles.items():
            lines.append(f"q{q}: empirical {emp:.6f}  beta {theo:.6f}")
        return "\n".join(lines)


class _Decision(NamedTuple):
    statistic: float
    significant: bool


def _draw(cfg: SimConfig, rng: np.random.Generator, count: int) -> np.ndarray:
    X = rng.standard_normal((count, cfg.n, cfg.p))
    if cfg.covariance is not None:
        w, V = np.linalg.eigh(np.asarray(cfg.covariance, dtype=float))
        root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
        X = X @ root
    if cfg.mean is not None:
        X = X + np.asarray(cfg.mean, dtype=float)
    return X


def _simulate_chunk(args):
    cfg, chunk, count = args
    design = cfg.the_design
    proj = make_design_projections(design, cfg.n)
    params = BetaParams.for_design(proj.f, proj.f_H)
    crit = beta_critical(cfg.alpha, params)
    seq_crit = [beta_critical(cfg.alpha / (1 if nm == "simple" else int(k)), params) for nm, k in cfg.procedures]

    X = _draw(cfg, chunk_rng(cfg.seed, chunk), count)
    tracked = np.full((count, cfg.track), np.nan)
    any_sig = np.zeros((count, len(cfg.procedures)), dtype=bool)
    for r in range(count):
        sel = select_scores(X[r], design, cfg.method)
        B = score_statistics(sel.scores, proj) if sel.scores.shape[1] else np.zeros(0)
        m = min(cfg.track, len(B))
        tracked[r, :m] = B[:m]
        for j, (name, k) in enumerate(cfg.procedures):
            c = seq_crit[j]
            tests = (lambda level, b=b, c=c: _Decision(b, b >= c) for b in B)
            any_sig[r, j] = sequential_rule(tests, cfg.alpha, name, k).any_significant
    return tracked, any_sig, crit


def _map_chunks(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def simulate_null_level(cfg: SimConfig, workers: int | None = None) -> SimReport:
    """Rejection frequencies (and KS shape check) of data-driven scores.

    Each run draws X, builds the scores with ``cfg.method`` under the
    design, records the beta statistics of the first ``cfg.track`` scores
    and whether each of ``cfg.procedures`` reports any significance.
    """
    t0 = time.perf_counter()
    workers = default_workers() if workers is None else workers
    proj = make_design_projections(cfg.the_design, cfg.n)
    params = BetaParams.for_design(proj.f, proj.f_H)

    sizes = [min(cfg.chunk_size, cfg.runs - s) for s in range(0, cfg.runs, cfg.chunk_size)]
    jobs = [(cfg, c, size) for c, size in enumerate(sizes)]
    parts = _map_chunks(_simulate_chunk, jobs, workers)
    tracked = np.concatenate([p[0] for p in parts])
    any_sig = np.concatenate([p[1] for p in parts])
    crit = parts[0][2]

    freqs, widths = [], []
    for h in range(cfg.track):
        col = tracked[:, h]
        col = col[np.isfinite(col)]
        f = float(np.mean(col >= crit)) if len(col) else float("nan")
        freqs.append(f)
        widths.append(three_sigma(f, max(len(col), 1)) if len(col) else float("nan"))

    first = tracked[:, 0]
    sample = np.sort(first[np.isfinite(first)])
    ks_d = ks_p = None
    quantiles = {}
    if len(sample):
        cdf = beta_cdf_array(sample, params)
        m = len(sample)
        ks_d = float(max(np.max(np.arange(1, m + 1) / m - cdf), np.max(cdf - np.arange(m) / m)))
        ks_p = float(stats.kstwo.sf(ks_d, m))
        for q in REPORT_QUANTILES:
            quantiles[q] = (float(np.quantile(sample, q)), beta_quantile(q, params))

    fwe, fwe_w = {}, {}
    for j, (name, k) in enumerate(cfg.procedures):
        label = procedure_label(name, k)
        fwe[label] = float(any_sig[:, j].mean())
        fwe_w[label] = three_sigma(fwe[label], cfg.runs)
    return SimReport(
        scenario=cfg.label(),
        runs=cfg.runs,
        alpha=cfg.alpha,
        seed=cfg.seed,
        rng=f"{RNG_ALGORITHM}; chunk_size={cfg.chunk_size}",
        frequencies=freqs,
        half_widths=widths,
        fwe=fwe,
        fwe_half_widths=fwe_w,
        beta_params=(params.a, params.b),
        ks_distance=ks_d,
        ks_pvalue=ks_p,
        quantiles=quantiles,
        wall_time=time.perf_counter() - t0,
        statistics=first,
    )


# -- column-sum ordering example ---------------------------------------------

EXAMPLE2_N = 10
EXAMPLE2_MEAN = (0.0, 0.0, 3.0)


def example2_statistics(X: np.ndarray, ordering: str = "column-sum") -> np.ndarray:
    """Beta statistics of the ordered single-column scores, batched.

    ``X`` has shape (runs, n, p); weights come from the uncentered
    ``W = X'X`` (one-group design) and scores are raw columns.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    W = np.einsum("rni,rnj->rij", X, X)
    if ordering == "column-sum":
        keys = np.abs(W).sum(axis=1)
    elif ordering == "diagonal":
        keys = np.einsum("rii->ri", W)
    else:
        raise ConfigError(f"unknown ordering {ordering!r}")
    order = np.argsort(-keys, axis=1, kind="stable")
    cols = np.take_along_axis(X, order[:, None, :], axis=2)
    return n * cols.mean(axis=1) ** 2 / np.einsum("rni,rni->ri", cols, cols)


def example2_run(X: np.ndarray, alpha: float = 0.05, ordering: str = "column-sum") -> list[bool]:
    """One run through the library's ordering and one-group beta test."""
    W = X.T @ X
    order = column_sum_order(W) if ordering == "column-sum" else kropf_diagonal_order(W)
    return [score_test_one_group(X[:, i], alpha).significant for i in order.permutation]


def simulate_example2(
    runs: int = 1_000_000,
    seed: int = 0,
    *,
    mean=EXAMPLE2_MEAN,
    alpha: float = 0.05,
    ordering: str = "column-sum",
    chunk_size: int = 100_000,
    workers: int | None = None,
) -> SimReport:
    """10 x 3 normal data, scores ordered by absolute column sums of X'X.

    Reports the marginal significance frequency of each ordered score.
    """
    t0 = time.perf_counter()
    mean = np.asarray(mean, dtype=float)
    p = len(mean)
    n = EXAMPLE2_N
    params = BetaParams(0.5, (n - 1) / 2)
    crit = beta_critical(alpha, params)
    sizes = [min(chunk_size, runs - s) for s in range(0, runs, chunk_size)]
    jobs = [(seed, c, size, n, mean, ordering) for c, size in enumerate(sizes)]
    workers = default_workers() if workers is None else workers
    parts = _map_chunks(_example2_chunk, jobs, workers)
    B = np.concatenate(parts)
    hits = (B >= crit).sum(axis=0)
    freqs = [float(h / runs) for h in hits]
    first = B[:, 0]
    return SimReport(
        scenario=f"example2/{ordering}/mean={tuple(mean.tolist())}",
        runs=runs,
        alpha=alpha,
        seed=seed,
        rng=f"{RNG_ALGORITHM}; chunk_size={chunk_size}",
        frequencies=freqs,
        half_widths=[three_sigma(f, runs) for f in freqs],
        beta_params=(params.a, params.b),
        quantiles={q: (float(np.quantile(first, q)), beta_quantile(q, params)) for q in REPORT_QUANTILES},
        wall_time=time.perf_counter() - t0,
        statistics=first,
    )


def _example2_chunk(args):
    seed, chunk, size, n, mean, ordering = args
    X = chunk_rng(seed, chunk).standard_normal((size, n, len(mean))) + mean
    return example2_statistics(X, ordering)


# -- rotation invariance --------------------------------------------------------

@dataclass(frozen=True)
class RotationReport:
    passed: bool
    ks_statistic: float
    p_value: float
    trials: int
    level: float
    #: False when the generator output is visibly non-spherical
    spherical: bool


def rotation_invariance_check(
    generator: Callable[[np.random.Generator], np.ndarray],
    trials: int = 2000,
    seed: int = 0,
    *,
    statistic: Callable[[np.ndarray], float] | None = None,
    fixed_rotation: bool = True,
    level: float = 0.001,
) -> RotationReport:
    """Compare B(z) with B(C'z) in distribution (two-sample KS).

    Two independent streams of scores are drawn; the second is rotated by a
    Haar-random ``C'`` (one fixed matrix by default, fresh per trial
    otherwise).  ``statistic`` defaults to the one-group beta statistic.
    The comparison is distributional only: B(C'z) != B(z) pointwise.
    """
    stat = statistic or (lambda z: float(len(z) * z.mean() ** 2 / (z @ z)))
    rng_plain = chunk_rng(seed, 0)
    rng_rot = chunk_rng(seed, 1)
    rng_c = chunk_rng(seed, 2)
    plain = np.empty(trials)
    rotated = np.empty(trials)
    C = None
    for t in range(trials):
        z = np.asarray(generator(rng_plain), dtype=float)
        plain[t] = stat(z)
        w = np.asarray(generator(rng_rot), dtype=float)
        if C is None or not fixed_rotation:
            C = random_rotation(len(w), rng_c)
        rotated[t] = stat(C.T @ w)
    res = stats.ks_2samp(plain, rotated)
    passed = bool(res.pvalue >= level)
    return RotationReport(
        passed=passed,
        ks_statistic=float(res.statistic),
        p_value=float(res.pvalue),
        trials=trials,
        level=level,
        spherical=passed,
    )
