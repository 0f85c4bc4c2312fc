"""WAV decoding, STFT spectrograms and per-second audio descriptors."""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

WINDOW_S = 0.040
HOP_S = 0.020
SEGMENT_S = 10.0
MIN_TAIL_S = 2.0

PITCH_FMIN = 50.0
PITCH_FMAX = 500.0
VOICING_THRESHOLD = 0.5
# windows quieter than this RMS are treated as silence
SILENCE_RMS = 1e-4


class AudioFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1:
            raise ValueError("AudioClip holds mono samples; remix first")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be positive")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    @property
    def n_seconds(self) -> int:
        return max(1, math.ceil(len(self.samples) / self.sample_rate_hz))

    @property
    def channels(self) -> int:
        return 1


def remix_to_mono(samples: np.ndarray) -> np.ndarray:
    """Average a (n_samples, n_channels) array into one channel."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        return samples
    return samples.mean(axis=1)


def read_wav(path: str | Path) -> AudioClip:
    """Decode 8/16-bit PCM WAV; stereo is averaged to mono."""
    try:
        with wave.open(str(path), "rb") as wf:
            n_ch = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"{path}: unsupported or corrupt WAV ({exc})") from None
    if n_ch not in (1, 2):
        raise AudioFormatError(f"{path}: {n_ch} channels not supported")
    if width == 1:
        data = (np.frombuffer(raw, dtype=np.uint8).astype(float) - 128.0) / 128.0
    elif width == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(float) / 32768.0
    else:
        raise AudioFormatError(f"{path}: {8 * width}-bit samples not supported")
    usable = (len(data) // n_ch) * n_ch
    data = data[:usable].reshape(-1, n_ch)
    return AudioClip(remix_to_mono(data), rate)


def write_wav(path: str | Path, samples: np.ndarray, sample_rate_hz: int) -> Path:
    """Write 16-bit PCM. ``samples`` is (n,) or (n, channels) in [-1, 1]."""
    data = np.asarray(samples, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    pcm = np.clip(np.rint(data * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(data.shape[1])
        wf.setsampwidth(2)
        wf.setframerate(int(sample_rate_hz))
        wf.writeframes(pcm.tobytes())
    return Path(path)


# -- spectrograms -----------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    start_s: float
    end_s: float
    padded: bool = False


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Magnitude STFT, shape (n_windows, n_bins)."""

    magnitudes: np.ndarray
    sample_rate_hz: int
    segment: Segment
    window_s: float = WINDOW_S
    hop_s: float = HOP_S

    @property
    def n_windows(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[1]

    def frequencies(self) -> np.ndarray:
        n_win = int(round(self.window_s * self.sample_rate_hz))
        return np.fft.rfftfreq(n_win, d=1.0 / self.sample_rate_hz)

    def times(self) -> np.ndarray:
        """Window centres in seconds from the segment start."""
        n_win = round(self.window_s * self.sample_rate_hz)
        hop = round(self.hop_s * self.sample_rate_hz)
        return (np.arange(self.n_windows) * hop + n_win / 2) / self.sample_rate_hz


def split_segments(duration_s: float, length_s: float = SEGMENT_S,
                   min_tail_s: float = MIN_TAIL_S) -> list[Segment]:
    """Consecutive fixed-length segments.

    A final partial segment shorter than ``min_tail_s`` is dropped; a longer
    one keeps its nominal length and is flagged for zero padding.
    """
    segs = []
    start = 0.0
    k = 0
    eps = 1e-9
    while start < duration_s - eps:
        end = start + length_s
        if end <= duration_s + eps:
            segs.append(Segment(start, end))
        elif duration_s - start >= min_tail_s:
            segs.append(Segment(start, end, padded=True))
        k += 1
        start = k * length_s
    return segs


def frame_signal(x: np.ndarray, n_win: int, hop: int) -> np.ndarray:
    """Overlapping frames, shape (n_frames, n_win); trailing samples that do
    not fill a whole window are left out."""
    if len(x) < n_win:
        return np.empty((0, n_win))
    n_frames = 1 + (len(x) - n_win) // hop
    view = np.lib.stride_tricks.sliding_window_view(x, n_win)
    return view[::hop][:n_frames]


def hann(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft_magnitude(x: np.ndarray, n_win: int, hop: int) -> np.ndarray:
    frames = frame_signal(np.asarray(x, dtype=float), n_win, hop)
    return np.abs(np.fft.rfft(frames * hann(n_win), axis=1))


def spectrogram(clip: AudioClip, segment: Segment | tuple[float, float] | None = None,
                window_s: float = WINDOW_S, hop_s: float = HOP_S) -> Spectrogram:
    """Hann-windowed magnitude STFT of one segment of ``clip``.

    A plain ``(start, end)`` tuple must lie inside the clip; a
    :class:`Segment` flagged ``padded`` is zero-filled past the clip end.
    """
    if segment is None:
        segment = Segment(0.0, clip.duration_s)
    elif not isinstance(segment, Segment):
        segment = Segment(float(segment[0]), float(segment[1]))
    sr = clip.sample_rate_hz
    start, end = segment.start_s, segment.end_s
    if start < 0 or end <= start:
        raise ValueError(f"invalid segment ({start}, {end})")
    i0 = int(round(start * sr))
    i1 = int(round(end * sr))
    if i1 > len(clip.samples) and not segment.padded:
        raise ValueError(f"segment ({start}, {end}) s extends past clip end "
                         f"({clip.duration_s:.3f} s)")
    x = clip.samples[i0:i1]
    if len(x) < i1 - i0:
        x = np.concatenate([x, np.zeros(i1 - i0 - len(x))])
    n_win = int(round(window_s * sr))
    hop = int(round(hop_s * sr))
    mags = stft_magnitude(x, n_win, hop)
    mags.setflags(write=False)
    return Spectrogram(mags, sr, segment, window_s, hop_s)


def segment_spectrograms(clip: AudioClip, length_s: float = SEGMENT_S) -> list[Spectrogram]:
    return [spectrogram(clip, seg) for seg in split_segments(clip.duration_s, length_s)]


# -- per-second descriptors -------------------------------------------------

def minmax_normalize(x: np.ndarray) -> np.ndarray:
    """Scale to [0, 1]; a constant sequence maps to all zeros.

    A spread within rounding noise of the values themselves counts as
    constant, so smoothing a constant does not blow its last-bit wobble up
    to the full range.
    """
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return x.copy()
    lo, hi = float(x.min()), float(x.max())
    if hi - lo <= 1e-12 * max(abs(lo), abs(hi)) or not math.isfinite(hi - lo):
        return np.zeros_like(x)
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def per_second_bins(n_samples: int, sample_rate_hz: int) -> list[slice]:
    n_sec = max(1, math.ceil(n_samples / sample_rate_hz))
    return [slice(s * sample_rate_hz, min((s + 1) * sample_rate_hz, n_samples))
            for s in range(n_sec)]


def audio_energy_curve(clip: AudioClip, normalize: bool = True) -> np.ndarray:
    """Mean squared amplitude per one-second bin, min-max normalized over the clip."""
    x = clip.samples
    if len(x) == 0:
        raise ValueError("empty clip")
    energy = np.array([np.mean(x[b] ** 2) for b in per_second_bins(len(x), clip.sample_rate_hz)])
    return minmax_normalize(energy) if normalize else energy


def _window_pitch(frames: np.ndarray, sr: int, fmin: float, fmax: float,
                  threshold: float) -> np.ndarray:
    """Autocorrelation pitch per frame; 0 marks unvoiced frames."""
    n_frames, n = frames.shape
    out = np.zeros(n_frames)
    if n_frames == 0:
        return out
    lag_min = max(1, int(math.floor(sr / fmax)))
    lag_max = min(n - 2, int(math.ceil(sr / fmin)))
    if lag_max <= lag_min:
        return out
    frames = frames - frames.mean(axis=1, keepdims=True)
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    spec = np.fft.rfft(frames, nfft, axis=1)
    acf = np.fft.irfft(spec * np.conj(spec), nfft, axis=1)[:, : lag_max + 2]
    sq = frames ** 2
    head = np.cumsum(sq, axis=1)                           # energy of x[0:k]
    tail = np.cumsum(sq[:, ::-1], axis=1)[:, ::-1]         # energy of x[k:n]
    lags = np.arange(lag_max + 2)
    e_head = head[:, n - 1 - lags]                          # x[0 : n-lag]
    e_tail = tail[:, lags]                                  # x[lag : n]
    denom = np.sqrt(e_head * e_tail)
    with np.errstate(invalid="ignore", divide="ignore"):
        nacf = np.where(denom > 0, acf / denom, 0.0)
    rms = np.sqrt(sq.mean(axis=1))
    for i in range(n_frames):
        if rms[i] < SILENCE_RMS:
            continue
        r = nacf[i]
        seg = r[lag_min: lag_max + 1]
        best = float(seg.max())
        if best < threshold:
            continue
        # earliest local peak close to the global one avoids octave-down errors
        cand = lag_min + int(np.argmax(seg))
        for lag in range(lag_min, lag_max + 1):
            if r[lag] >= 0.9 * best and r[lag] >= r[lag - 1] and r[lag] >= r[lag + 1]:
                cand = lag
                break
        a, b, c = r[cand - 1], r[cand], r[cand + 1]
        den = a - 2 * b + c
        shift = 0.5 * (a - c) / den if den < 0 else 0.0
        out[i] = sr / (cand + float(np.clip(shift, -0.5, 0.5)))
    return out


def pitch_track(clip: AudioClip, window_s: float = WINDOW_S, hop_s: float = HOP_S,
                fmin: float = PITCH_FMIN, fmax: float = PITCH_FMAX,
                threshold: float = VOICING_THRESHOLD) -> tuple[np.ndarray, np.ndarray]:
    """Window-level pitch (Hz, 0 when unvoiced) and window centre times."""
    sr = clip.sample_rate_hz
    if sr < 8000:
        raise ValueError("pitch tracking needs a sample rate of at least 8 kHz")
    n_win = int(round(window_s * sr))
    hop = int(round(hop_s * sr))
    frames = frame_signal(clip.samples, n_win, hop)
    f0 = _window_pitch(frames, sr, fmin, fmax, threshold)
    centres = (np.arange(len(f0)) * hop + n_win / 2) / sr
    return f0, centres


def pitch_curve(clip: AudioClip, **kwargs) -> np.ndarray:
    """Per-second median pitch of voiced 40 ms windows; 0 for unvoiced seconds."""
    f0, centres = pitch_track(clip, **kwargs)
    n_sec = clip.n_seconds
    out = np.zeros(n_sec)
    sec = np.minimum(np.floor(centres).astype(int), n_sec - 1)
    for s in range(n_sec):
        voiced = f0[(sec == s) & (f0 > 0)]
        if voiced.size:
            out[s] = float(np.median(voiced))
    return out
