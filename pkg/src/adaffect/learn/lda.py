from __future__ import annotations

import math

import numpy as np

from .model import ClassifierModel


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


def train_lda(X, y, shrinkage: float = 0.0) -> ClassifierModel:
    """Two-class LDA with a pooled, optionally shrunk, covariance.

    The covariance is ``(1 - s) * S + s * nu * I`` with ``nu = trace(S) / d``
    (``nu = 1`` when ``S`` is all zeros). The decision threshold sits at the
    class-mean midpoint shifted by the log prior ratio.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y)
    if not 0.0 <= shrinkage <= 1.0:
        raise ValueError("shrinkage must lie in [0, 1]")
    pos, neg = X[y == 1], X[y == -1]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("both classes must be present")
    n, d = X.shape
    mu_p, mu_n = pos.mean(axis=0), neg.mean(axis=0)
    centered = np.vstack([pos - mu_p, neg - mu_n])
    dof = max(n - 2, 1)
    S = centered.T @ centered / dof
    nu = np.trace(S) / d
    if nu <= 0:
        nu = 1.0
    cov = (1.0 - shrinkage) * S + shrinkage * nu * np.eye(d)
    diff = mu_p - mu_n
    if np.linalg.matrix_rank(cov) < d:
        raise SingularCovarianceError(
            "pooled covariance is singular; use shrinkage > 0")
    w = np.linalg.solve(cov, diff)
    prior_p, prior_n = len(pos) / n, len(neg) / n
    bias = -float(w @ (mu_p + mu_n)) / 2.0 + math.log(prior_p / prior_n)
    return ClassifierModel(kind="LDA", bias=bias, w=w,
                           diagnostics={"shrinkage": shrinkage})
