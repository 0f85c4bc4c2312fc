"""Keyframe I/O (binary PPM) and visual descriptors: motion, shot rate, colour."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .audio import minmax_normalize

KEYFRAME_EVERY_S = 3.0
SHOT_K = 3.0
SHOT_WINDOW_S = 10.0
# frame differences at or below this count as "no change" for shot detection
SHOT_MIN_DIFF = 1e-6

_LUMA = np.array([0.299, 0.587, 0.114])


class FrameFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """RGB frames as float arrays in [0, 1], shape (height, width, 3)."""

    frames: tuple[np.ndarray, ...]
    timestamps_s: np.ndarray

    def __post_init__(self):
        frames = tuple(np.asarray(f, dtype=float) for f in self.frames)
        ts = np.asarray(self.timestamps_s, dtype=float)
        if not frames:
            raise FrameFormatError("no frames")
        if len(ts) != len(frames):
            raise FrameFormatError("one timestamp per frame required")
        shape = frames[0].shape
        if len(shape) != 3 or shape[2] != 3:
            raise FrameFormatError(f"frames must be HxWx3, got {shape}")
        for k, f in enumerate(frames):
            if f.shape != shape:
                raise FrameFormatError(f"frame {k} has shape {f.shape}, expected {shape}")
        if np.any(np.diff(ts) <= 0):
            raise FrameFormatError("timestamps must be strictly increasing")
        for f in frames:
            f.setflags(write=False)
        ts.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "timestamps_s", ts)

    def __len__(self) -> int:
        return len(self.frames)


def keyframe_times(duration_s: float, every_s: float = KEYFRAME_EVERY_S) -> np.ndarray:
    """Sampling instants 0, every_s, 2*every_s, ... strictly before the end."""
    n = max(1, math.ceil(duration_s / every_s - 1e-9))
    return np.arange(n) * every_s


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FrameFormatError("truncated PPM header")
    return buf[start:pos], pos


def read_ppm(path: str | Path) -> np.ndarray:
    """Decode a binary (P6) PPM into an (h, w, 3) float array in [0, 1]."""
    buf = Path(path).read_bytes()
    magic, pos = _read_token(buf, 0)
    if magic != b"P6":
        raise FrameFormatError(f"{path}: not a binary PPM (magic {magic!r})")
    try:
        w_tok, pos = _read_token(buf, pos)
        h_tok, pos = _read_token(buf, pos)
        m_tok, pos = _read_token(buf, pos)
        width, height, maxval = int(w_tok), int(h_tok), int(m_tok)
    except ValueError:
        raise FrameFormatError(f"{path}: malformed PPM header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise FrameFormatError(f"{path}: bad PPM geometry")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    need = width * height * 3 * dtype.itemsize
    data = buf[pos:pos + need]
    if len(data) < need:
        raise FrameFormatError(f"{path}: truncated pixel data")
    img = np.frombuffer(data, dtype=dtype).reshape(height, width, 3)
    return img.astype(float) / maxval


def write_ppm(path: str | Path, rgb: np.ndarray) -> Path:
    """Encode an (h, w, 3) array in [0, 1] as 8-bit P6."""
    rgb = np.asarray(rgb, dtype=float)
    h, w, _ = rgb.shape
    pix = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode("ascii") + pix.tobytes())
    return Path(path)


_NAME = re.compile(r"^(\d+(?:\.\d+)?)\.ppm$", re.IGNORECASE)


def read_frames(directory: str | Path) -> FrameSequence:
    """Load ``<seconds>.ppm`` files from ``directory`` sorted by timestamp."""
    directory = Path(directory)
    found = []
    for p in directory.iterdir():
        m = _NAME.match(p.name)
        if m:
            found.append((float(m.group(1)), p))
    if not found:
        raise FrameFormatError(f"{directory}: no <seconds>.ppm frames found")
    found.sort(key=lambda t: t[0])
    times = [t for t, _ in found]
    if len(set(times)) != len(times):
        raise FrameFormatError(f"{directory}: duplicate frame timestamps")
    frames = []
    for t, p in found:
        img = read_ppm(p)
        if frames and img.shape != frames[0].shape:
            raise FrameFormatError(f"{p}: size {img.shape[:2]} differs from {frames[0].shape[:2]}")
        frames.append(img)
    return FrameSequence(tuple(frames), np.array(times))


def write_frames(directory: str | Path, frames: FrameSequence) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t, f in zip(frames.timestamps_s, frames.frames):
        name = f"{int(t)}.ppm" if float(t).is_integer() else f"{t:.3f}.ppm"
        write_ppm(directory / name, f)
    return directory


def luminance(rgb: np.ndarray) -> np.ndarray:
    return np.asarray(rgb, dtype=float) @ _LUMA


def frame_differences(frames: FrameSequence) -> np.ndarray:
    """Mean absolute luminance change between consecutive frames."""
    lum = [luminance(f) for f in frames.frames]
    return np.array([float(np.mean(np.abs(b - a))) for a, b in zip(lum[:-1], lum[1:])])


def default_n_seconds(frames: FrameSequence) -> int:
    ts = frames.timestamps_s
    step = float(np.median(np.diff(ts))) if len(ts) > 1 else 1.0
    return max(1, math.ceil(ts[-1] + step - 1e-9))


def to_per_second(times: np.ndarray, values: np.ndarray, n_seconds: int) -> np.ndarray:
    """Linear interpolation onto t = 0, 1, ..., n_seconds - 1 (held constant
    outside the sampled range)."""
    grid = np.arange(n_seconds, dtype=float)
    if len(values) == 0:
        return np.zeros(n_seconds)
    if len(values) == 1:
        return np.full(n_seconds, float(values[0]))
    return np.interp(grid, times, values)


def motion_activity_curve(frames: FrameSequence, n_seconds: int | None = None) -> np.ndarray:
    """Per-second motion activity in [0, 1].

    Each frame difference is placed at the time of the later frame and
    interpolated to 1 Hz. A varying curve is min-max normalized; a constant
    one keeps its raw level, which already lies in [0, 1] because luminance
    does.
    """
    n_seconds = n_seconds or default_n_seconds(frames)
    if len(frames) < 2:
        return np.zeros(n_seconds)
    diffs = frame_differences(frames)
    curve = to_per_second(frames.timestamps_s[1:], diffs, n_seconds)
    if np.ptp(curve) > 0:
        return minmax_normalize(curve)
    return np.clip(curve, 0.0, 1.0)


def detect_shots(frames: FrameSequence, k: float = SHOT_K) -> list[int]:
    """Indices of frames that start a new shot.

    A boundary is declared before frame ``i`` when the difference to frame
    ``i-1`` reaches ``mean + k * std`` of all differences and is not
    negligible.
    """
    if len(frames) < 2:
        return []
    d = frame_differences(frames)
    thr = d.mean() + k * d.std()
    thr -= 1e-12 * max(1.0, abs(thr))  # equal differences must reach their own mean
    return [i + 1 for i, v in enumerate(d) if v >= thr and v > SHOT_MIN_DIFF]


def shot_change_curve(frames: FrameSequence, n_seconds: int | None = None, k: float = SHOT_K,
                      window_s: float = SHOT_WINDOW_S) -> np.ndarray:
    """Shot boundaries per centred sliding window, min-max normalized."""
    n_seconds = n_seconds or default_n_seconds(frames)
    cuts = frames.timestamps_s[detect_shots(frames, k)]
    grid = np.arange(n_seconds, dtype=float)
    half = window_s / 2.0
    counts = np.array([np.count_nonzero((cuts >= t - half) & (cuts < t + half)) for t in grid],
                      dtype=float)
    return minmax_normalize(counts)


def color_score(rgb: np.ndarray) -> float:
    """Mean of HSV saturation x value; equals mean(max(RGB) - min(RGB))."""
    rgb = np.asarray(rgb, dtype=float)
    return float(np.mean(rgb.max(axis=2) - rgb.min(axis=2)))


def color_curve(frames: FrameSequence, n_seconds: int | None = None) -> np.ndarray:
    n_seconds = n_seconds or default_n_seconds(frames)
    scores = np.array([color_score(f) for f in frames.frames])
    return np.clip(to_per_second(frames.timestamps_s, scores, n_seconds), 0.0, 1.0)
