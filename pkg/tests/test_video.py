import colorsys

import numpy as np
import pytest

from adaffect.signal.video import (FrameFormatError, FrameSequence, color_curve, color_score,
                                   detect_shots, keyframe_times, motion_activity_curve,
                                   read_frames, read_ppm, shot_change_curve, write_frames,
                                   write_ppm)


def constant_frames(values, h=4, w=5, step=1.0):
    frames = tuple(np.full((h, w, 3), v, dtype=float) for v in values)
    return FrameSequence(frames, np.arange(len(values)) * step)


def test_ppm_round_trip_with_comment(tmp_path):
    rgb = np.random.default_rng(0).integers(0, 256, size=(3, 4, 3)) / 255.0
    write_ppm(tmp_path / "a.ppm", rgb)
    assert np.array_equal(read_ppm(tmp_path / "a.ppm"), rgb)
    pix = (rgb * 255).astype(np.uint8).tobytes()
    (tmp_path / "b.ppm").write_bytes(b"P6\n# made by hand\n4 3\n255\n" + pix)
    assert np.array_equal(read_ppm(tmp_path / "b.ppm"), rgb)


def test_ppm_errors(tmp_path):
    (tmp_path / "p3.ppm").write_bytes(b"P3\n1 1\n255\n0 0 0\n")
    with pytest.raises(FrameFormatError):
        read_ppm(tmp_path / "p3.ppm")
    (tmp_path / "short.ppm").write_bytes(b"P6\n2 2\n255\n" + bytes(5))
    with pytest.raises(FrameFormatError):
        read_ppm(tmp_path / "short.ppm")


def test_read_frames_sorted_twenty(tmp_path):
    rng = np.random.default_rng(1)
    for t in reversed(range(0, 60, 3)):
        write_ppm(tmp_path / f"{t}.ppm", rng.random((6, 8, 3)))
    (tmp_path / "notes.txt").write_text("ignored")
    seq = read_frames(tmp_path)
    assert len(seq) == 20
    assert seq.timestamps_s.tolist() == list(range(0, 60, 3))
    assert keyframe_times(60.0).tolist() == seq.timestamps_s.tolist()


def test_read_frames_single_and_mixed(tmp_path):
    write_ppm(tmp_path / "0.ppm", np.zeros((2, 2, 3)))
    assert len(read_frames(tmp_path)) == 1
    write_ppm(tmp_path / "3.ppm", np.zeros((3, 2, 3)))
    with pytest.raises(FrameFormatError):
        read_frames(tmp_path)


def test_frame_sequence_round_trip(tmp_path):
    seq = constant_frames([0.0, 0.2, 0.4], step=3.0)
    back = read_frames(write_frames(tmp_path / "f", seq))
    assert back.timestamps_s.tolist() == [0.0, 3.0, 6.0]
    assert np.allclose(back.frames[1], round(0.2 * 255) / 255)


def test_frame_sequence_validation():
    with pytest.raises(FrameFormatError):
        FrameSequence((np.zeros((2, 2, 3)), np.zeros((2, 2, 3))), [1.0, 1.0])
    with pytest.raises(FrameFormatError):
        FrameSequence((np.zeros((2, 2)),), [0.0])


def test_motion_examples():
    assert not motion_activity_curve(constant_frames([0.5] * 6)).any()
    alt = motion_activity_curve(constant_frames([0.0, 1.0] * 4))
    assert np.allclose(alt, 1.0)
    assert not motion_activity_curve(constant_frames([0.3])).any()


def test_motion_single_change_peaks_at_change():
    seq = constant_frames([0.2] * 5 + [0.8] * 5)
    curve = motion_activity_curve(seq)
    assert int(np.argmax(curve)) == 5
    assert curve[5] == 1.0 and np.count_nonzero(curve) == 1


def test_shots_examples():
    assert detect_shots(constant_frames([0.4] * 10)) == []
    assert detect_shots(constant_frames([0.0, 1.0] * 5)) == list(range(1, 10))


def test_shots_planted_cuts():
    rng = np.random.default_rng(3)
    levels = np.repeat([0.1, 0.6, 0.2, 0.9], [20, 25, 15, 20]).astype(float)
    frames = tuple(np.clip(v + rng.normal(0, 0.01, (8, 8, 3)), 0, 1) for v in levels)
    seq = FrameSequence(frames, np.arange(len(levels), dtype=float))
    assert detect_shots(seq) == [20, 45, 60]
    curve = shot_change_curve(seq)
    assert curve.min() == 0.0 and curve.max() == 1.0


def test_color_score_is_saturation_times_value():
    rgb = np.random.default_rng(4).random((5, 5, 3))
    ref = np.mean([s * v for s, v in (colorsys.rgb_to_hsv(*px)[1:] for px in rgb.reshape(-1, 3))])
    assert color_score(rgb) == pytest.approx(ref, abs=1e-12)


def test_color_curve_gray_is_zero():
    assert not color_curve(constant_frames([0.1, 0.5, 0.9], step=3.0)).any()
