"""Weighted-estimate decision fusion of two modality posteriors.

For weights (a1, a2) on a grid over [0, 1]^2 the fused score is
``a1*t1*p1 + a2*t2*p2`` with ``t_i = a_i F_i / (a1 F1 + a2 F2)``, where
``F_i`` is the training F1 of modality i. The weights and the decision
threshold that maximize F1 are found by exhaustive search.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .metrics import UndefinedMetricWarning, f1_score

DEFAULT_THRESHOLDS = tuple(k / 20 for k in range(6, 15))  # 0.30 .. 0.70


@dataclass(frozen=True)
class FusionWeights:
    alpha: tuple[float, float]
    t: tuple[float, float]
    training_f1: tuple[float, float]
    threshold: float


@dataclass(frozen=True)
class FusionResult:
    weights: FusionWeights
    labels: np.ndarray
    f1: float
    # True when weights were tuned on the same labels they are scored on
    optimistic: bool

    def to_dict(self) -> dict:
        return {"alpha": self.weights.alpha, "t": self.weights.t,
                "training_f1": self.weights.training_f1, "threshold": self.weights.threshold,
                "f1": self.f1, "labels": self.labels, "optimistic": self.optimistic}


def fusion_coefficients(a1: np.ndarray, a2: np.ndarray, f_audio: float, f_video: float):
    """Effective per-modality coefficients ``a_i * t_i``; NaN where undefined."""
    denom = a1 * f_audio + a2 * f_video
    with np.errstate(invalid="ignore", divide="ignore"):
        t1 = np.where(denom > 0, a1 * f_audio / denom, np.nan)
        t2 = np.where(denom > 0, a2 * f_video / denom, np.nan)
    return a1 * t1, a2 * t2, t1, t2


def _search(p_audio, p_video, f_audio, f_video, truth, n_steps, thresholds):
    k = np.arange(n_steps + 1)
    k1, k2 = (g.ravel() for g in np.meshgrid(k, k, indexing="ij"))
    a1, a2 = k1 / n_steps, k2 / n_steps
    c1, c2, t1, t2 = fusion_coefficients(a1, a2, f_audio, f_video)
    ok = ~np.isnan(c1)
    k1, k2, a1, a2, c1, c2, t1, t2 = (v[ok] for v in (k1, k2, a1, a2, c1, c2, t1, t2))
    scores = c1[:, None] * p_audio[None, :] + c2[:, None] * p_video[None, :]
    pos = truth == 1
    best = None
    for ti, theta in enumerate(thresholds):
        pred = scores >= theta
        tp = (pred & pos).sum(axis=1)
        fp = (pred & ~pos).sum(axis=1)
        fn = (~pred & pos).sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            f1 = np.where(tp > 0, 2.0 * tp / (2.0 * tp + fp + fn), 0.0)
        # ties: closest to (0.5, 0.5), then threshold closest to 0.5, then grid order
        centre = (2 * k1 - n_steps) ** 2 + (2 * k2 - n_steps) ** 2
        th_dist = abs(theta - 0.5)
        top = f1.max()
        cand = np.flatnonzero(f1 == top)
        g = cand[np.lexsort((k2[cand], k1[cand], centre[cand]))[0]]
        key = (-top, centre[g], th_dist, ti, k1[g], k2[g])
        if best is None or key < best[0]:
            best = (key, g, theta)
    _, g, theta = best
    weights = FusionWeights((float(a1[g]), float(a2[g])), (float(t1[g]), float(t2[g])),
                            (float(f_audio), float(f_video)), float(theta))
    return weights, (c1[g], c2[g])


def _check(p_audio, p_video, truth):
    p_audio = np.asarray(p_audio, dtype=float)
    p_video = np.asarray(p_video, dtype=float)
    truth = np.asarray(truth).astype(int)
    if not (p_audio.shape == p_video.shape == truth.shape) or p_audio.ndim != 1:
        raise ValueError("posteriors and labels must be equal-length sequences")
    return p_audio, p_video, truth


def fuse_scores(weights: FusionWeights, p_audio, p_video) -> np.ndarray:
    a1, a2 = weights.alpha
    c1, c2, _, _ = fusion_coefficients(np.array(a1), np.array(a2), *weights.training_f1)
    s = c1 * np.asarray(p_audio, dtype=float) + c2 * np.asarray(p_video, dtype=float)
    return np.where(s >= weights.threshold, 1, -1)


def decision_fusion(p_audio, p_video, f_audio: float, f_video: float, truth,
                    grid_step: float = 0.01, thresholds=DEFAULT_THRESHOLDS,
                    validation: tuple | None = None) -> FusionResult:
    """Grid-search fusion weights and threshold for the best F1.

    Without ``validation`` the search scores the very labels being
    predicted, which is optimistic; the result says so. With
    ``validation=(p_audio_val, p_video_val, truth_val)`` the weights are
    tuned there and then applied to the given posteriors.
    """
    if f_audio < 0 or f_video < 0 or (f_audio == 0 and f_video == 0):
        raise ValueError("training F1 values must be nonnegative and not both zero")
    n_steps = int(round(1.0 / grid_step))
    if n_steps < 1 or not np.isclose(n_steps * grid_step, 1.0):
        raise ValueError("grid_step must divide 1")
    p_audio, p_video, truth = _check(p_audio, p_video, truth)
    if validation is None:
        weights, _ = _search(p_audio, p_video, f_audio, f_video, truth, n_steps, thresholds)
        optimistic = True
    else:
        va, vv, vt = _check(*validation)
        weights, _ = _search(va, vv, f_audio, f_video, vt, n_steps, thresholds)
        optimistic = False
    labels = fuse_scores(weights, p_audio, p_video)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetricWarning)
        f1 = f1_score(labels, truth)
    return FusionResult(weights, labels, f1, optimistic)


def cross_fitted_fusion(p_audio, p_video, f_audio: float, f_video: float, truth,
                        n_folds: int = 5, seed: int = 0, grid_step: float = 0.01,
                        thresholds=DEFAULT_THRESHOLDS) -> tuple[FusionResult, list[FusionWeights]]:
    """Label each fold with weights tuned on the remaining folds.

    Returns the pooled result (not optimistic) and the per-fold weights;
    the pooled result's ``weights`` are those of the first fold.
    """
    p_audio, p_video, truth = _check(p_audio, p_video, truth)
    n = len(truth)
    if not 2 <= n_folds <= n:
        raise ValueError(f"n_folds must lie in [2, {n}]")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    fold_of = np.empty(n, dtype=int)
    fold_of[rng.permutation(n)] = np.arange(n) % n_folds
    labels = np.empty(n, dtype=int)
    per_fold = []
    for k in range(n_folds):
        test = fold_of == k
        tr = ~test
        res = decision_fusion(p_audio[test], p_video[test], f_audio, f_video, truth[test],
                              grid_step, thresholds,
                              validation=(p_audio[tr], p_video[tr], truth[tr]))
        labels[test] = res.labels
        per_fold.append(res.weights)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetricWarning)
        f1 = f1_score(labels, truth)
    return FusionResult(per_fold[0], labels, f1, False), per_fold
