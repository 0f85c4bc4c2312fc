"""Soft-margin SVM trained by sequential minimal optimization.

Working pairs are chosen with maximal-violating-pair / second-order
selection; the loop stops once the KKT gap ``m(lambda) - M(lambda)`` drops
below ``tol``.
"""

from __future__ import annotations

import numpy as np

from .model import ClassifierModel, rbf_kernel

TAU = 1e-12


class SvmConvergenceError(RuntimeError):
    def __init__(self, message: str, n_iter: int, gap: float):
        self.n_iter = n_iter
        self.gap = gap
        super().__init__(f"{message} (iterations={n_iter}, KKT gap={gap:.3e})")


def _kernel(X, kernel, gamma):
    if kernel == "linear":
        return X @ X.T
    return rbf_kernel(X, X, gamma)


def _violation(lam, G, y, C):
    """(i, m, M): most violating index in I_up and the gap bounds."""
    score = -y * G
    up = ((y == 1) & (lam < C)) | ((y == -1) & (lam > 0))
    low = ((y == -1) & (lam < C)) | ((y == 1) & (lam > 0))
    m = score[up].max() if up.any() else -np.inf
    M = score[low].min() if low.any() else np.inf
    i = int(np.flatnonzero(up)[np.argmax(score[up])]) if up.any() else -1
    return i, m, M, up, low, score


def smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3,
        max_iter: int = 100_000) -> tuple[np.ndarray, float, dict]:
    """Solve the C-SVC dual on a precomputed kernel matrix.

    Returns ``(lambda, bias, info)``.
    """
    n = len(y)
    y = y.astype(float)
    lam = np.zeros(n)
    G = -np.ones(n)  # gradient of 0.5 l'Ql - e'l
    diagK = np.diag(K).copy()
    it = 0
    gap = np.inf
    while True:
        i, m, M, up, low, score = _violation(lam, G, y, C)
        gap = m - M
        if gap < tol:
            break
        if it >= max_iter:
            raise SvmConvergenceError("SMO did not converge", it, float(gap))
        # second-order choice of j among I_low entries that violate with i
        cand = low & (score < m)
        b = m - score[cand]
        a = diagK[i] + diagK[cand] - 2.0 * K[i, cand]
        a = np.where(a > 0, a, TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])
        b_ij = m - score[j]
        a_ij = max(diagK[i] + diagK[j] - 2.0 * K[i, j], TAU)
        step = b_ij / a_ij
        step = min(step, C - lam[i] if y[i] > 0 else lam[i])
        step = min(step, lam[j] if y[j] > 0 else C - lam[j])
        old_i, old_j = lam[i], lam[j]
        lam[i] = min(max(old_i + y[i] * step, 0.0), C)
        lam[j] = min(max(old_j - y[j] * step, 0.0), C)
        d_i, d_j = lam[i] - old_i, lam[j] - old_j
        G += y * (y[i] * d_i * K[:, i] + y[j] * d_j * K[:, j])
        it += 1
    score = -y * G
    free = (lam > 0) & (lam < C)
    if free.any():
        bias = float(score[free].mean())
    else:
        bias = float((m + M) / 2.0)
    return lam, bias, {"n_iter": it, "kkt_gap": float(gap)}


def kkt_residual(lam: np.ndarray, K: np.ndarray, y: np.ndarray, C: float) -> float:
    """Largest pairwise KKT violation ``max(0, m - M)`` of a dual point."""
    y = y.astype(float)
    G = y * (K @ (lam * y)) - 1.0
    _, m, M, *_ = _violation(lam, G, y, C)
    return float(max(0.0, m - M))


def train_svm(X, y, kernel: str = "linear", C: float = 1.0, gamma: float = 1.0,
              tol: float = 1e-3, max_iter: int = 100_000) -> ClassifierModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y).astype(int)
    if kernel not in ("linear", "rbf"):
        raise ValueError(f"unknown kernel {kernel!r}")
    if C <= 0:
        raise ValueError("C must be positive")
    if kernel == "rbf" and gamma <= 0:
        raise ValueError("gamma must be positive for the rbf kernel")
    if not (np.any(y == 1) and np.any(y == -1)) or not np.isin(y, (-1, 1)).all():
        raise ValueError("labels must be +1/-1 with both classes present")
    K = _kernel(X, kernel, gamma)
    lam, bias, info = smo(K, y, C, tol, max_iter)
    sv = lam > 0
    coef = lam[sv] * y[sv]
    info.update({"n_support": int(sv.sum()), "dual": lam,
                 "kkt_residual": kkt_residual(lam, K, y, C)})
    if kernel == "linear":
        w = X[sv].T @ coef
        return ClassifierModel("LSVM", bias, w=w, support_vectors=X[sv], dual_coef=coef,
                               C=C, diagnostics=info)
    return ClassifierModel("RSVM", bias, support_vectors=X[sv], dual_coef=coef, C=C,
                           gamma=gamma, diagnostics=info)
