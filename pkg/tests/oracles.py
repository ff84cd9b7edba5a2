"""Independent reference computations used by the tests.

None of these touch the package's incomplete beta code: densities are
written out from gamma functions and integrated numerically.
"""
import math

import numpy as np
from scipy import integrate


def t_density(x, m):
    c = math.lgamma((m + 1) / 2) - math.lgamma(m / 2) - 0.5 * math.log(m * math.pi)
    return math.exp(c - (m + 1) / 2 * math.log1p(x * x / m))


def t_upper_tail(t, m):
    val, _ = integrate.quad(t_density, t, np.inf, args=(m,), epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def t_quantile_two_sided(alpha, m, tol=1e-13):
    """t with P(|T_m| > t) = alpha, by bisection on the integrated density."""
    lo, hi = 0.0, 1.0
    while 2 * t_upper_tail(hi, m) > alpha:
        hi *= 2
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if 2 * t_upper_tail(mid, m) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def f_cdf(x, d1, d2):
    """F(d1, d2) cdf by integrating its density."""
    c = math.lgamma((d1 + d2) / 2) - math.lgamma(d1 / 2) - math.lgamma(d2 / 2) + d1 / 2 * math.log(d1 / d2)

    def dens(u):
        if u <= 0:
            return 0.0
        return math.exp(c + (d1 / 2 - 1) * math.log(u) - (d1 + d2) / 2 * math.log1p(d1 * u / d2))

    val, _ = integrate.quad(dens, 0, x, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def beta_cdf_quad(x, a, b):
    """Beta cdf by integrating the density with the substitution u = t**a."""
    lb = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    # du = a t^(a-1) dt removes the endpoint singularity at 0
    def dens(u):
        t = min(u ** (1 / a), 1.0)
        return (1.0 - t) ** (b - 1) / (a * math.exp(lb))

    val, _ = integrate.quad(dens, 0, x**a, epsabs=1e-15, epsrel=1e-12, limit=200)
    return val


def wilks_lambda(Z, Q, Q_H):
    Z = np.asarray(Z, dtype=float)
    E = Z.T @ (Q - Q_H) @ Z
    T = Z.T @ Z
    return np.linalg.det(E) / np.linalg.det(T)


def planted_two_group(seed, sizes=(10, 10), p=50, block=10, loading=2.0, noise=0.5, shift=2.0):
    """Two-group data whose first ``block`` columns share a latent factor
    that is shifted by ``shift`` in group 2; remaining columns are N(0, 1)."""
    rng = np.random.default_rng(seed)
    n1, n2 = sizes
    n = n1 + n2
    X = rng.standard_normal((n, p))
    f = rng.standard_normal(n)
    f[n1:] += shift
    X[:, :block] = loading * f[:, None] + noise * rng.standard_normal((n, block))
    return X


def write_table(path, X, labels=None, label_name="group", col_prefix="g", newline="\n"):
    n, p = X.shape
    header = ["id"] + ([label_name] if labels is not None else []) + [f"{col_prefix}{j + 1}" for j in range(p)]
    lines = [",".join(header)]
    for i in range(n):
        cells = [f"s{i + 1}"] + ([str(labels[i])] if labels is not None else []) + [repr(float(v)) for v in X[i]]
        lines.append(",".join(cells))
    with open(path, "w", newline="") as fh:
        fh.write(newline.join(lines) + newline)
    return path
