from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KINDS = ("LDA", "LSVM", "RSVM")


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def sigmoid_prob(f: np.ndarray, a: float, b: float) -> np.ndarray:
    """``1 / (1 + exp(a f + b))`` without overflow."""
    z = a * np.asarray(f, dtype=float) + b
    out = np.empty_like(z)
    pos = z >= 0
    ez = np.exp(-z[pos])
    out[pos] = ez / (1.0 + ez)
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    """A trained binary classifier with labels +1/-1.

    Linear models keep ``w``; kernel models keep the support vectors and
    their signed dual coefficients ``lambda_i * y_i``.
    """

    kind: str
    bias: float
    w: np.ndarray | None = None
    support_vectors: np.ndarray | None = None
    dual_coef: np.ndarray | None = None
    C: float | None = None
    gamma: float | None = None
    calibration: tuple[float, float] | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}")

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "RSVM":
            return rbf_kernel(X, self.support_vectors, self.gamma) @ self.dual_coef + self.bias
        return X @ self.w + self.bias

    def predict(self, X) -> np.ndarray:
        """Labels in {+1, -1}; a zero decision value maps to +1."""
        return np.where(self.decision_function(X) >= 0, 1, -1)

    def predict_proba(self, X) -> np.ndarray:
        """P(y = +1 | x) from the Platt sigmoid."""
        if self.calibration is None:
            raise ValueError("model is not calibrated; run platt_calibrate first")
        a, b = self.calibration
        return sigmoid_prob(self.decision_function(X), a, b)
