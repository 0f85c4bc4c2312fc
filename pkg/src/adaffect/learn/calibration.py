"""Platt sigmoid calibration of decision values."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .model import ClassifierModel


def fit_platt(f, y, max_iter: int = 100, min_step: float = 1e-10,
              sigma: float = 1e-12, eps: float = 1e-5) -> tuple[float, float]:
    """Fit ``P(y=1|f) = 1 / (1 + exp(a f + b))`` by regularized maximum likelihood.

    Targets are Platt's smoothed labels ``(N+ + 1)/(N+ + 2)`` and
    ``1/(N- + 2)``; the optimizer is Newton's method with a backtracking line
    search.
    """
    f = np.asarray(f, dtype=float)
    y = np.asarray(y)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y != 1))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("calibration data must contain both classes")
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    def objective(a, b):
        z = a * f + b
        return float(np.sum(np.where(z >= 0, t * z + np.log1p(np.exp(-np.abs(z))),
                                     (t - 1.0) * z + np.log1p(np.exp(-np.abs(z))))))

    a, b = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = objective(a, b)
    for _ in range(max_iter):
        z = a * f + b
        ez = np.exp(-np.abs(z))
        p = np.where(z >= 0, ez / (1.0 + ez), 1.0 / (1.0 + ez))
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + float(np.sum(f * f * d2))
        h22 = sigma + float(np.sum(d2))
        h21 = float(np.sum(f * d2))
        d1 = t - p
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= min_step:
            na, nb = a + step * da, b + step * db
            nf = objective(na, nb)
            if nf < fval + 1e-4 * step * gd:
                a, b, fval = na, nb, nf
                break
            step /= 2.0
        else:
            break
    return a, b


def platt_calibrate(model: ClassifierModel, X_holdout, y_holdout) -> ClassifierModel:
    """Return a copy of ``model`` carrying a sigmoid fitted on held-out data."""
    f = model.decision_function(X_holdout)
    return dataclasses.replace(model, calibration=fit_platt(f, y_holdout))
