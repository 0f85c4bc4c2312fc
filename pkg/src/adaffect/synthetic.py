"""Seeded synthetic stand-ins for ads, ratings, features and programs."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import DEFAULT_SCALES, QUADRANTS, AdRecord, FeatureTable, RatingsTable
from .scheduler import Scene
from .signal.audio import AudioClip, write_wav
from .signal.video import FrameSequence, keyframe_times, write_frames

SAMPLE_RATE = 16_000


def synthetic_audio(duration_s: float = 60.0, seed: int = 0,
                    sample_rate_hz: int = SAMPLE_RATE) -> AudioClip:
    """Voiced tone whose pitch and loudness change every few seconds, plus
    quiet noise."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz
    n_parts = max(1, int(duration_s // 5))
    pitches = rng.uniform(90.0, 320.0, n_parts)
    levels = rng.uniform(0.05, 0.6, n_parts)
    idx = np.minimum((t // 5).astype(int), n_parts - 1)
    phase = 2 * np.pi * np.cumsum(pitches[idx]) / sample_rate_hz
    x = levels[idx] * (np.sin(phase) + 0.3 * np.sin(2 * phase))
    x += 0.01 * rng.standard_normal(n)
    return AudioClip(np.clip(x / 1.5, -1.0, 1.0), sample_rate_hz)


def synthetic_frames(duration_s: float = 60.0, seed: int = 0, width: int = 32,
                     height: int = 24, every_s: float = 3.0) -> FrameSequence:
    """Keyframes that drift in colour with a few hard cuts."""
    rng = np.random.default_rng(seed + 1)
    times = keyframe_times(duration_s, every_s)
    yy, xx = np.mgrid[0:height, 0:width] / max(width, height)
    base = rng.uniform(0.1, 0.9, 3)
    frames = []
    for i, _ in enumerate(times):
        if rng.random() < 0.2:
            base = rng.uniform(0.05, 0.95, 3)  # cut
        base = np.clip(base + rng.normal(0.0, 0.03, 3), 0.0, 1.0)
        img = np.stack([base[c] * (0.7 + 0.3 * np.sin(3 * xx + 2 * yy + i + c))
                        for c in range(3)], axis=-1)
        frames.append(np.clip(img, 0.0, 1.0))
    return FrameSequence(np.array(frames), times)


def write_synthetic_ad(directory: str | Path, duration_s: float = 60.0,
                       seed: int = 0) -> tuple[Path, Path]:
    """Write ``ad.wav`` and ``frames/`` under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    clip = synthetic_audio(duration_s, seed)
    wav = write_wav(directory / "ad.wav", clip.samples, clip.sample_rate_hz)
    frames = write_frames(directory / "frames", synthetic_frames(duration_s, seed))
    return wav, frames


def synthetic_ratings(n_ads: int = 20, n_raters: int = 5, seed: int = 0,
                      missing: float = 0.0) -> tuple[RatingsTable, list[AdRecord]]:
    """Ratings that scatter around a per-ad latent level, with expert labels
    derived from that level."""
    rng = np.random.default_rng(seed)
    ads, scores = [], {}
    latent = {dim: rng.uniform(lo, hi, n_ads) for dim, (lo, hi) in DEFAULT_SCALES.items()}
    for dim, (lo, hi) in DEFAULT_SCALES.items():
        noisy = latent[dim][None, :] + rng.normal(0.0, 0.8, (n_raters, n_ads))
        m = np.clip(np.rint(noisy), lo, hi)
        if missing:
            m[rng.random(m.shape) < missing] = np.nan
        scores[dim] = m
    for j in range(n_ads):
        a = "H" if latent["A"][j] >= 2.0 else "L"
        v = "H" if latent["V"][j] >= 0.0 else "L"
        ads.append(AdRecord(f"ad{j:03d}", float(rng.integers(30, 121)), a, v))
    table = RatingsTable([f"r{i}" for i in range(n_raters)], [a.id for a in ads], scores)
    return table, ads


def synthetic_features(n_ads: int = 20, frames_per_ad: int = 6, d: int = 5, seed: int = 0,
                       separable: bool = True, noise: float = 0.3) -> FeatureTable:
    """Per-frame features; when ``separable`` the first coordinate carries
    the ad label with a margin, otherwise labels are independent of X."""
    rng = np.random.default_rng(seed)
    labels = np.array([1, -1] * (n_ads // 2) + [1] * (n_ads % 2))
    rng.shuffle(labels)
    ad_ids, frame_idx, task, rows, ys = [], [], [], [], []
    for j in range(n_ads):
        q = int(rng.integers(len(QUADRANTS)))
        centre = rng.normal(0.0, 1.0, d)
        for f in range(frames_per_ad):
            x = centre + noise * rng.standard_normal(d)
            if separable:
                x[0] = labels[j] * (2.0 + abs(x[0]))
            ad_ids.append(f"ad{j:03d}")
            frame_idx.append(f)
            task.append(q)
            rows.append(x)
            ys.append(labels[j])
    return FeatureTable(ad_ids, frame_idx, task, np.array(rows), np.array(ys), len(QUADRANTS))


def synthetic_scenes(n_scenes: int = 8, seed: int = 0, mean_length_s: float = 118.0
                     ) -> list[Scene]:
    rng = np.random.default_rng(seed)
    return [Scene(f"s{i}", float(rng.random()), float(rng.random()),
                  float(np.round(rng.uniform(0.5, 1.5) * mean_length_s, 1)))
            for i in range(n_scenes)]
