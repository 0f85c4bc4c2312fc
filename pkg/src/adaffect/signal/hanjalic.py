"""Time-continuous arousal and valence curves from low-level components.

Arousal combines motion activity, shot-change rate and sound energy;
valence combines a pitch-deviation component and an HSV colour score. Both
are weighted sums smoothed with a Kaiser window and rescaled to [0, 1].
Weights, window length and Kaiser beta are configuration, not constants
recovered from any dataset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from .audio import AudioClip, audio_energy_curve, minmax_normalize, pitch_curve
from .video import FrameSequence, color_curve, motion_activity_curve, shot_change_curve

AROUSAL_COMPONENTS = ("motion", "shot_rate", "energy")
VALENCE_COMPONENTS = ("pitch", "color")
DEFAULT_AROUSAL_WEIGHTS = {"motion": 1 / 3, "shot_rate": 1 / 3, "energy": 1 / 3}
DEFAULT_VALENCE_WEIGHTS = {"pitch": 0.5, "color": 0.5}
SMOOTH_LENGTH_S = 11
KAISER_BETA = 5.0

WINDOWS = {"all": None, "last30s": 30, "l3": 30, "last10s": 10, "l": 10}


@dataclass(frozen=True, eq=False)
class AffectCurve:
    values: np.ndarray
    dimension: str
    components: dict[str, np.ndarray] = field(default_factory=dict)
    weights: dict[str, float] = field(default_factory=dict)
    raw: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("curve values must be a nonempty 1-D sequence")
        if not np.isfinite(v).all() or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("curve values must be finite and within [0, 1]")
        if self.dimension not in ("arousal", "valence"):
            raise ValueError(f"unknown dimension {self.dimension!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "values": self.values,
                "weights": self.weights, "components": self.components,
                "raw": self.raw}


def smoothing_window(length: int = SMOOTH_LENGTH_S, beta: float = KAISER_BETA) -> np.ndarray:
    w = np.kaiser(length, beta)
    return w / w.sum()


def smooth(x: np.ndarray, length: int = SMOOTH_LENGTH_S, beta: float = KAISER_BETA) -> np.ndarray:
    """Centred Kaiser smoothing, renormalized at the edges so constants are kept."""
    x = np.asarray(x, dtype=float)
    if length <= 1:
        return x.copy()
    w = smoothing_window(length, beta)
    num = np.convolve(x, w, mode="full")
    den = np.convolve(np.ones_like(x), w, mode="full")
    off = (length - 1) // 2
    return num[off: off + len(x)] / den[off: off + len(x)]


def _check_weights(weights: Mapping[str, float], names) -> dict[str, float]:
    weights = {k: float(weights[k]) for k in names}
    if any(w < 0 for w in weights.values()):
        raise ValueError("component weights must be nonnegative")
    if not math.isclose(math.fsum(weights.values()), 1.0, abs_tol=1e-9):
        raise ValueError("component weights must sum to 1")
    return weights


def combine_components(curves: Mapping[str, np.ndarray], weights: Mapping[str, float],
                       smooth_length: int = SMOOTH_LENGTH_S,
                       beta: float = KAISER_BETA) -> tuple[np.ndarray, np.ndarray]:
    """Weighted sum of component curves, smoothed; returns ``(raw, normalized)``."""
    names = list(weights)
    lengths = {k: len(curves[k]) for k in names}
    if len(set(lengths.values())) != 1:
        raise ValueError(f"component curves differ in length: {lengths}")
    total = np.zeros(lengths[names[0]])
    for k in names:
        total = total + weights[k] * np.asarray(curves[k], dtype=float)
    raw = smooth(total, smooth_length, beta)
    return raw, minmax_normalize(raw)


def hanjalic_arousal(curves: Mapping[str, np.ndarray],
                     weights: Mapping[str, float] | None = None,
                     smooth_length: int = SMOOTH_LENGTH_S,
                     beta: float = KAISER_BETA) -> AffectCurve:
    """Arousal from ``motion``, ``shot_rate`` and ``energy`` per-second curves."""
    missing = [k for k in AROUSAL_COMPONENTS if k not in curves]
    if missing:
        raise ValueError(f"missing arousal components {missing}")
    weights = _check_weights(weights or DEFAULT_AROUSAL_WEIGHTS, AROUSAL_COMPONENTS)
    comps = {k: np.asarray(curves[k], dtype=float) for k in AROUSAL_COMPONENTS}
    raw, values = combine_components(comps, weights, smooth_length, beta)
    return AffectCurve(values, "arousal", comps, weights, raw)


def pitch_component(pitch_hz: np.ndarray) -> np.ndarray:
    """Deviation of voiced pitch from the clip's median voiced pitch, in [0, 1].

    Unvoiced seconds (pitch 0) count as zero deviation.
    """
    p = np.asarray(pitch_hz, dtype=float)
    voiced = p > 0
    dev = np.zeros_like(p)
    if voiced.any():
        dev[voiced] = p[voiced] - float(np.median(p[voiced]))
    return minmax_normalize(dev)


def hanjalic_valence(curves: Mapping[str, np.ndarray],
                     weights: Mapping[str, float] | None = None,
                     smooth_length: int = SMOOTH_LENGTH_S,
                     beta: float = KAISER_BETA) -> AffectCurve:
    """Valence from ``pitch`` (Hz, 0 when unvoiced) and ``color`` per-second curves."""
    missing = [k for k in VALENCE_COMPONENTS if k not in curves]
    if missing:
        raise ValueError(f"missing valence components {missing}")
    if len(curves["pitch"]) != len(curves["color"]):
        raise ValueError("pitch and color curves differ in length")
    weights = _check_weights(weights or DEFAULT_VALENCE_WEIGHTS, VALENCE_COMPONENTS)
    comps = {"pitch": pitch_component(curves["pitch"]),
             "color": np.asarray(curves["color"], dtype=float)}
    raw, values = combine_components(comps, weights, smooth_length, beta)
    return AffectCurve(values, "valence", comps, weights, raw)


def affect_curves(clip: AudioClip, frames: FrameSequence,
                  arousal_weights: Mapping[str, float] | None = None,
                  valence_weights: Mapping[str, float] | None = None,
                  smooth_length: int = SMOOTH_LENGTH_S, beta: float = KAISER_BETA,
                  shot_k: float = 3.0) -> tuple[AffectCurve, AffectCurve]:
    """Arousal and valence curves for one ad, one value per second of audio."""
    n = clip.n_seconds
    arousal = hanjalic_arousal({
        "motion": motion_activity_curve(frames, n),
        "shot_rate": shot_change_curve(frames, n, k=shot_k),
        "energy": audio_energy_curve(clip),
    }, arousal_weights, smooth_length, beta)
    valence = hanjalic_valence({
        "pitch": pitch_curve(clip),
        "color": color_curve(frames, n),
    }, valence_weights, smooth_length, beta)
    return arousal, valence


class WindowMean(NamedTuple):
    value: float
    n_samples: int
    clamped: bool


def curve_mean(curve: AffectCurve | np.ndarray, window: str | int = "all") -> WindowMean:
    """Mean over the whole curve or its final 30 s / 10 s.

    A window longer than the curve is clamped to the full curve and
    flagged via ``clamped``.
    """
    values = curve.values if isinstance(curve, AffectCurve) else np.asarray(curve, dtype=float)
    if len(values) == 0:
        raise ValueError("empty curve")
    if isinstance(window, str):
        if window not in WINDOWS:
            raise ValueError(f"unknown window {window!r}; choose from {sorted(WINDOWS)}")
        span = WINDOWS[window]
    else:
        span = int(window)
    clamped = span is not None and span > len(values)
    sel = values if span is None or clamped else values[-span:]
    return WindowMean(math.fsum(sel) / len(sel), len(sel), clamped)
