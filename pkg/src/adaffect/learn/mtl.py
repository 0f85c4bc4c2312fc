"""Sparse graph-regularized multi-task least squares.

Minimizes

    sum_t ||W_t' X_t - Y_t||^2 + alpha ||W R||_F^2 + beta ||W||_1 + gamma ||W||_F^2

over ``W = [W_1 .. W_T]`` (d x T) with a monotone FISTA and backtracking.
Convergence is declared only on a momentum-free step, so a lucky small
accelerated step cannot end the run early.
``X_t`` holds task t's samples as columns; ``R`` is the T x E incidence
matrix of the task graph, so ``||W R||^2`` sums ``||W_i - W_j||^2`` over
edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..dataset import QUADRANTS, FeatureTable


class MtlError(FloatingPointError):
    pass


def incidence_matrix(n_tasks: int, edges: Sequence[tuple[int, int]]) -> np.ndarray:
    R = np.zeros((n_tasks, len(edges)))
    for e, (i, j) in enumerate(edges):
        if i == j or not (0 <= i < n_tasks and 0 <= j < n_tasks):
            raise ValueError(f"bad edge {(i, j)}")
        R[i, e], R[j, e] = 1.0, -1.0
    return R


def quadrant_edges() -> list[tuple[int, int]]:
    """Pairs of quadrants that share the arousal or the valence label."""
    edges = []
    for i in range(len(QUADRANTS)):
        for j in range(i + 1, len(QUADRANTS)):
            a, b = QUADRANTS[i], QUADRANTS[j]
            if a[:2] == b[:2] or a[2:] == b[2:]:
                edges.append((i, j))
    return edges


def quadrant_graph() -> np.ndarray:
    """Incidence matrix over the four quadrant tasks, in ``QUADRANTS`` order."""
    return incidence_matrix(len(QUADRANTS), quadrant_edges())


@dataclass(frozen=True)
class MtlModel:
    W: np.ndarray
    R: np.ndarray
    alpha: float
    beta: float
    gamma: float
    history: list[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False

    @property
    def n_tasks(self) -> int:
        return self.W.shape[1]

    def to_dict(self) -> dict:
        return {"W": self.W, "R": self.R, "alpha": self.alpha, "beta": self.beta,
                "gamma": self.gamma, "objective": self.history[-1] if self.history else None,
                "n_iter": self.n_iter, "converged": self.converged}


def _as_tasks(tasks) -> list[tuple[np.ndarray, np.ndarray]]:
    """Normalize input to a list of (d x n_t samples-as-columns, n_t labels)."""
    if isinstance(tasks, FeatureTable):
        tasks = [tasks.by_task(t) for t in range(tasks.n_tasks)]
    out = []
    for t in tasks:
        if isinstance(t, FeatureTable):
            X, y = t.X, t.y
        else:
            X, y = t
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out.append((X.T.copy(), np.asarray(y, dtype=float)))
    dims = {X.shape[0] for X, _ in out}
    if len(dims) != 1:
        raise ValueError(f"tasks disagree on feature dimension: {sorted(dims)}")
    return out


def mtl_smooth_objective(W, tasks, R, alpha, gamma) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        return _smooth_objective(W, tasks, R, alpha, gamma)


def _smooth_objective(W, tasks, R, alpha, gamma) -> float:
    loss = math.fsum(float(np.sum((W[:, t] @ X - y) ** 2)) for t, (X, y) in enumerate(tasks))
    return loss + alpha * float(np.sum((W @ R) ** 2)) + gamma * float(np.sum(W * W))


def mtl_smooth_gradient(W, tasks, R, alpha, gamma) -> np.ndarray:
    G = np.empty_like(W)
    for t, (X, y) in enumerate(tasks):
        G[:, t] = 2.0 * X @ (W[:, t] @ X - y)
    return G + 2.0 * alpha * W @ R @ R.T + 2.0 * gamma * W


def mtl_objective(W, tasks, R, alpha, beta, gamma) -> float:
    return mtl_smooth_objective(W, tasks, R, alpha, gamma) + beta * float(np.abs(W).sum())


def soft_threshold(V: np.ndarray, tau: float) -> np.ndarray:
    return np.sign(V) * np.maximum(np.abs(V) - tau, 0.0)


def train_mtl(tasks, R=None, alpha: float = 1.0, beta: float = 0.0, gamma: float = 1.0,
              max_iter: int = 5000, tol: float = 1e-10, L0: float = 1.0) -> MtlModel:
    """Fit the multi-task model.

    ``tasks`` is a FeatureTable (split by ``task_id``), or a sequence of
    FeatureTables or ``(X, y)`` pairs with samples as rows. ``R`` defaults
    to the quadrant graph.
    """
    if min(alpha, beta, gamma) < 0:
        raise ValueError("alpha, beta and gamma must be nonnegative")
    data = _as_tasks(tasks)
    T = len(data)
    R = quadrant_graph() if R is None else np.asarray(R, dtype=float)
    if R.shape[0] != T:
        raise ValueError(f"R has {R.shape[0]} rows but there are {T} tasks")
    d = data[0][0].shape[0]

    f = lambda W: mtl_smooth_objective(W, data, R, alpha, gamma)  # noqa: E731
    F = lambda W: f(W) + beta * float(np.abs(W).sum())  # noqa: E731

    x = np.zeros((d, T))
    y = x.copy()
    t = 1.0
    L = L0
    Fx = F(x)
    history = [Fx]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        fy = f(y)
        gy = mtl_smooth_gradient(y, data, R, alpha, gamma)
        while True:
            z = soft_threshold(y - gy / L, beta / L)
            diff = z - y
            fz = f(z)
            if not math.isfinite(fz):
                raise MtlError(f"non-finite objective at iteration {it} "
                               f"(L={L:.3e}, max|W|={np.abs(z).max():.3e})")
            if fz <= fy + float(np.sum(gy * diff)) + 0.5 * L * float(np.sum(diff * diff)):
                break
            L *= 2.0
        Fz = fz + beta * float(np.abs(z).sum())
        accepted = Fz <= Fx
        x_new, F_new = (z, Fz) if accepted else (x, Fx)
        change = abs(Fx - F_new) / max(1.0, abs(Fx))
        plain = t == 1.0  # step taken from x itself, without momentum
        history.append(F_new)
        if (accepted and change < tol) or not np.any(diff):
            if plain:
                x, Fx = x_new, F_new
                converged = True
                break
            # a small accelerated step proves little; confirm with a plain one
            x, Fx, y, t = x_new, F_new, x_new.copy(), 1.0
            continue
        t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = x_new + (t / t_new) * (z - x_new) + ((t - 1.0) / t_new) * (x_new - x)
        x, Fx, t = x_new, F_new, t_new
    return MtlModel(x, R, alpha, beta, gamma, history, it, converged)


def mtl_predict(model: MtlModel, x, task: int) -> int:
    """Sign of ``W_task' x``; an exact zero maps to +1."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.W.shape[0],):
        raise ValueError(f"expected a vector of length {model.W.shape[0]}, got shape {x.shape}")
    if not 0 <= task < model.n_tasks:
        raise ValueError(f"task must be in [0, {model.n_tasks})")
    return 1 if float(model.W[:, task] @ x) >= 0 else -1
