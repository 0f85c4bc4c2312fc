from .audio import (AudioClip, AudioFormatError, Segment, Spectrogram, audio_energy_curve,
                    minmax_normalize, pitch_curve, read_wav, segment_spectrograms, spectrogram,
                    split_segments, write_wav)
from .hanjalic import (AffectCurve, WindowMean, affect_curves, curve_mean, hanjalic_arousal,
                       hanjalic_valence)
from .video import (FrameFormatError, FrameSequence, color_curve, detect_shots,
                    keyframe_times, motion_activity_curve, read_frames, shot_change_curve,
                    write_frames)

__all__ = [
    "AffectCurve", "AudioClip", "AudioFormatError", "FrameFormatError", "FrameSequence",
    "Segment", "Spectrogram", "WindowMean", "affect_curves", "audio_energy_curve",
    "color_curve", "curve_mean", "detect_shots", "hanjalic_arousal", "hanjalic_valence",
    "keyframe_times", "minmax_normalize", "motion_activity_curve", "pitch_curve",
    "read_frames", "read_wav", "segment_spectrograms", "shot_change_curve", "spectrogram",
    "split_segments", "write_frames", "write_wav",
]
