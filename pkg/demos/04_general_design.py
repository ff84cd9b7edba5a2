"""A general linear design: three treatment groups with a linear covariate.

Q removes the intercept and the covariate, Q_H spans the treatment
contrasts left over.  PCA weights come from X'QX, and each score is
tested with B = z'Q_H z / z'z against Beta(f_H/2, (f - f_H)/2).  Wilks'
lambda summarizes the first two scores jointly.
"""
import numpy as np

from spherescore import Design, make_design_projections, run_sequential, select_scores, wilks_test

n, p = 18, 30
rng = np.random.default_rng(11)
dose = np.linspace(0.0, 1.0, n)
group = np.arange(n) % 3

A = np.column_stack([np.ones(n), dose])
Q = np.eye(n) - A @ np.linalg.pinv(A)
G = np.eye(3)[group]
U, s, _ = np.linalg.svd(Q @ G, full_matrices=False)
U = U[:, s > 1e-10 * s[0]]
design = Design.general(Q, U @ U.T)
pair = make_design_projections(design, n)
print(f"f = {pair.f}, f_H = {pair.f_H}")

# %% a treatment effect on five variables, plus a covariate trend everywhere
X = rng.standard_normal((n, p)) + 3.0 * dose[:, None]
X[group == 2, :5] += 1.5

sel = select_scores(X, design, "pca", q=4)
out = run_sequential(sel.scores, design, alpha=0.05)
for h, res in enumerate(out.results, start=1):
    print(f"PC{h}: B = {res.statistic:.4f}  p = {res.p_value:.2E}")

w = wilks_test(sel.scores[:, :2], pair)
print(f"Wilks lambda (2 scores) = {w.lambda_:.4f}, approximate p = {w.p_value:.2E}")
