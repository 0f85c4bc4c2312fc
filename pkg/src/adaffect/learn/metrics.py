from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np


class UndefinedMetricWarning(UserWarning):
    pass


def _pair(pred, truth):
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    return p, t


def f1_score(pred: Sequence[int], truth: Sequence[int]) -> float:
    """F1 of the +1 class. Returns 0 with a warning when P + R = 0."""
    p, t = _pair(pred, truth)
    tp = int(np.sum((p == 1) & (t == 1)))
    fp = int(np.sum((p == 1) & (t != 1)))
    fn = int(np.sum((p != 1) & (t == 1)))
    if tp == 0:
        if fp == 0 and fn == 0:
            warnings.warn("F1 undefined: no predicted and no true positives; returning 0",
                          UndefinedMetricWarning, stacklevel=2)
        return 0.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def accuracy(pred: Sequence[int], truth: Sequence[int]) -> float:
    p, t = _pair(pred, truth)
    if p.size == 0:
        raise ValueError("empty input")
    return float(np.mean(p == t))
