"""Waveform I/O, framing, and overlap-add contracts."""

import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contvoc.signal_io import (EmptyAudioError, FrameSpec, NonFiniteSampleError,
                               UnsupportedFormatError, Waveform, default_frame_spec,
                               load_waveform, overlap_add, save_waveform,
                               segment_frames)

SR = 16000


def write_pcm(path, data_int16, sr=SR, channels=1):
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(channels)
        fh.setsampwidth(2)
        fh.setframerate(sr)
        fh.writeframes(np.asarray(data_int16, dtype="<i2").tobytes())


def test_load_one_second_mono(tmp_path):
    path = tmp_path / "a.wav"
    write_pcm(path, np.zeros(SR, dtype=np.int16))
    w = load_waveform(path)
    assert len(w.samples) == SR
    assert w.sample_rate == SR


def test_stereo_antiphase_averages_to_zero(tmp_path):
    path = tmp_path / "s.wav"
    x = (np.sin(2 * np.pi * 440 * np.arange(1000) / SR) * 10000).astype(np.int16)
    interleaved = np.empty(2000, dtype=np.int16)
    interleaved[0::2] = x
    interleaved[1::2] = -x
    write_pcm(path, interleaved, channels=2)
    w = load_waveform(path)
    assert np.all(np.abs(w.samples) <= 1 / 32768)


def test_160_samples_two_frames_under_default_spec(tmp_path):
    path = tmp_path / "t.wav"
    write_pcm(path, np.zeros(160, dtype=np.int16))
    w = load_waveform(path)
    spec = default_frame_spec(w.sample_rate)
    assert spec.hop == 80
    assert spec.n_frames(len(w.samples)) == 2


def test_round_trip_quantization_bound(tmp_path, rng):
    w = Waveform(rng.uniform(-1, 1, 2048), SR)
    path = tmp_path / "r.wav"
    save_waveform(w, path)
    back = load_waveform(path)
    assert np.abs(back.samples - w.samples).max() <= 1 / 32768


def test_zero_waveform_round_trips_exactly(tmp_path):
    path = tmp_path / "z.wav"
    save_waveform(Waveform(np.zeros(500), SR), path)
    assert np.all(load_waveform(path).samples == 0.0)


def test_full_scale_clips_to_32767(tmp_path):
    path = tmp_path / "c.wav"
    save_waveform(Waveform(np.array([1.0]), SR), path)
    assert load_waveform(path).samples[0] == 32767 / 32768


def test_missing_file_raises_file_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_waveform(tmp_path / "nope.wav")


def test_non_pcm_rejected(tmp_path):
    # IEEE-float WAV: format tag 3 in the fmt chunk
    import struct
    data = np.zeros(100, dtype=np.float32).tobytes()
    path = tmp_path / "f.wav"
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<IHHIIHH", 16, 3, 1, SR, SR * 4, 4, 32))
        fh.write(b"data" + struct.pack("<I", len(data)) + data)
    with pytest.raises(UnsupportedFormatError):
        load_waveform(path)


def test_non_16bit_rejected(tmp_path):
    path = tmp_path / "b.wav"
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(1)
        fh.setframerate(SR)
        fh.writeframes(bytes(100))
    with pytest.raises(UnsupportedFormatError):
        load_waveform(path)


def test_zero_length_rejected(tmp_path):
    path = tmp_path / "e.wav"
    write_pcm(path, np.zeros(0, dtype=np.int16))
    with pytest.raises(EmptyAudioError):
        load_waveform(path)


def test_non_finite_save_rejected(tmp_path):
    with pytest.raises(NonFiniteSampleError):
        Waveform(np.array([np.nan]), SR)


def test_constant_signal_rect_window_frames():
    w = Waveform(np.ones(400), SR)
    spec = FrameSpec(hop=80, window_len=160, window_kind="rect")
    frames = segment_frames(w, spec)
    assert frames.shape == (5, 160)
    assert np.all(frames[0] == 1.0)
    # last frame starts at 320, signal ends at 400: half the window is padding
    assert np.all(frames[-1][:80] == 1.0)
    assert np.all(frames[-1][80:] == 0.0)


def test_hop_equals_window_partitions():
    samples = np.arange(600, dtype=float) / 600
    w = Waveform(samples, SR)
    spec = FrameSpec(hop=100, window_len=100, window_kind="rect")
    frames = segment_frames(w, spec)
    assert frames.shape == (6, 100)
    assert np.array_equal(frames.ravel(), samples)


def test_16000_samples_hop_80_gives_200_frames():
    spec = default_frame_spec(SR)
    assert spec.n_frames(16000) == 200


def test_overlap_add_identity_interior(rng):
    spec = default_frame_spec(SR)
    w = Waveform(np.clip(0.3 * rng.standard_normal(SR), -1, 1), SR)
    frames = segment_frames(w, spec)
    recon = overlap_add(frames, spec.hop) / (spec.window().sum() / spec.hop)
    lo, hi = spec.window_len, len(w.samples) - spec.window_len
    err = np.sqrt(np.mean((recon[lo:hi] - w.samples[lo:hi]) ** 2))
    assert err < 1e-6


def test_invalid_frame_spec_rejected():
    with pytest.raises(ValueError):
        FrameSpec(hop=0, window_len=100)
    with pytest.raises(ValueError):
        FrameSpec(hop=200, window_len=100)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
                min_size=1, max_size=400))
def test_round_trip_property(tmp_path_factory, samples):
    path = tmp_path_factory.mktemp("wav") / "p.wav"
    w = Waveform(np.array(samples), SR)
    save_waveform(w, path)
    back = load_waveform(path)
    assert len(back.samples) == len(w.samples)
    assert np.abs(back.samples - w.samples).max() <= 1 / 32768
