"""Independent oracles used by the SVM tests: a projected-gradient solver
for the soft-margin dual, kept deliberately separate from the SMO path it
checks."""

import numpy as np


def project_box_hyperplane(v: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    """Euclidean projection onto {0 <= a <= C, sum(y*a) = 0}: the
    projection is clip(v - lam*y, 0, C) where g(lam) = y @ a(lam) is
    monotone decreasing, so lam comes from bisection."""
    span = c + float(np.abs(v).max(initial=0.0)) + 1.0
    lo, hi = -span, span
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(y @ np.clip(v - mid * y, 0.0, c)) > 0.0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * y, 0.0, c)


def solve_dual_pg(k: np.ndarray, y: np.ndarray, c: float, iters: int = 50000) -> np.ndarray:
    """Projected-gradient ascent on W(a) = sum(a) - a'Qa/2, Q = yy' * K."""
    q = (y[:, None] * y[None, :]) * k
    lam_max = float(np.linalg.eigvalsh(q).max())
    lr = 1.0 / max(lam_max, 1e-9)
    alpha = project_box_hyperplane(np.zeros(len(y)), y, c)
    for _ in range(iters):
        grad = 1.0 - q @ alpha
        new = project_box_hyperplane(alpha + lr * grad, y, c)
        if float(np.max(np.abs(new - alpha))) < 1e-12:
            return new
        alpha = new
    return alpha


def oracle_bias(alpha: np.ndarray, k: np.ndarray, y: np.ndarray, c: float) -> float:
    """Bias from the KKT conditions, averaged over free support vectors."""
    margins = y - (alpha * y) @ k
    free = (alpha > 1e-7) & (alpha < c - 1e-7)
    if free.any():
        return float(margins[free].mean())
    support = alpha > 1e-7
    if support.any():
        return float(margins[support].mean())
    return 0.0


def oracle_decision(
    alpha: np.ndarray, bias: float, train_x: np.ndarray, y: np.ndarray, query_x: np.ndarray, gamma: float
) -> np.ndarray:
    from veriscope.svm import rbf_kernel_matrix

    k = rbf_kernel_matrix(query_x, train_x, gamma)
    return k @ (alpha * y) + bias
