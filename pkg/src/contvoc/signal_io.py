"""WAV file I/O, framing, and windowing shared by all DSP modules."""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass

import numpy as np

PCM_SCALE = 32768.0  # 16-bit full scale; 1.0 stores as 32767 (clipped)

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_HOP_MS = 5.0
DEFAULT_WINDOW_MS = 25.0


class SignalIOError(Exception):
    """Base class for audio I/O failures."""


class UnsupportedFormatError(SignalIOError):
    """File is not 16-bit linear-PCM RIFF/WAVE."""


class EmptyAudioError(SignalIOError):
    """File decodes to zero samples."""


class NonFiniteSampleError(SignalIOError):
    """Waveform contains NaN or infinite samples."""


@dataclass(frozen=True)
class Waveform:
    """Mono audio: float samples in [-1, 1] plus their sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1:
            raise ValueError("waveform samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(samples)):
            raise NonFiniteSampleError("waveform contains non-finite samples")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0


@dataclass(frozen=True)
class FrameSpec:
    """Hop/window geometry: frame k covers samples [k*hop, k*hop + window_len)."""

    hop: int
    window_len: int
    window_kind: str = "hann"

    def __post_init__(self):
        if not 0 < self.hop <= self.window_len:
            raise ValueError("need 0 < hop <= window_len")
        if self.window_kind not in ("hann", "rect"):
            raise ValueError(f"unknown window kind: {self.window_kind!r}")

    def n_frames(self, n_samples: int) -> int:
        return math.ceil(n_samples / self.hop)

    def window(self) -> np.ndarray:
        return make_window(self.window_kind, self.window_len)

    def frame_times(self, n_frames: int, sample_rate: int) -> np.ndarray:
        """Frame-center times in seconds."""
        k = np.arange(n_frames, dtype=np.float64)
        return (k * self.hop + self.window_len / 2.0) / sample_rate


def make_window(kind: str, length: int) -> np.ndarray:
    if kind == "hann":
        # periodic form: exact constant-overlap-add for hop dividing length
        return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)
    if kind == "rect":
        return np.ones(length)
    raise ValueError(f"unknown window kind: {kind!r}")


def default_frame_spec(sample_rate: int, hop_ms: float = DEFAULT_HOP_MS,
                       window_ms: float = DEFAULT_WINDOW_MS,
                       window_kind: str = "hann") -> FrameSpec:
    hop = max(1, int(round(sample_rate * hop_ms / 1000.0)))
    window_len = max(hop, int(round(sample_rate * window_ms / 1000.0)))
    return FrameSpec(hop=hop, window_len=window_len, window_kind=window_kind)


def load_waveform(path) -> Waveform:
    """Read a 16-bit linear-PCM WAV file as a mono Waveform.

    Multichannel input is averaged down to mono; integer samples are
    scaled by 1/32768.
    """
    try:
        reader = wave.open(str(path), "rb")
    except FileNotFoundError:
        raise
    except (wave.Error, EOFError) as exc:
        raise UnsupportedFormatError(f"{path}: not a linear-PCM WAV file ({exc})") from exc
    try:
        n_channels = reader.getnchannels()
        sample_width = reader.getsampwidth()
        sample_rate = reader.getframerate()
        n_frames = reader.getnframes()
        if sample_width != 2:
            raise UnsupportedFormatError(
                f"{path}: only 16-bit PCM supported, got sample width {sample_width}")
        if n_frames == 0:
            raise EmptyAudioError(f"{path}: zero-length audio")
        raw = reader.readframes(n_frames)
    finally:
        reader.close()
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / PCM_SCALE
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    return Waveform(samples=data, sample_rate=sample_rate)


def save_waveform(w: Waveform, path) -> None:
    """Write a Waveform as 16-bit PCM mono, clipping to full scale."""
    if not np.all(np.isfinite(w.samples)):
        raise NonFiniteSampleError("cannot save non-finite samples")
    quantized = np.clip(np.round(w.samples * PCM_SCALE), -32768, 32767).astype("<i2")
    writer = wave.open(str(path), "wb")
    try:
        writer.setnchannels(1)
        writer.setsampwidth(2)
        writer.setframerate(w.sample_rate)
        writer.writeframes(quantized.tobytes())
    finally:
        writer.close()


def segment_frames(w: Waveform, spec: FrameSpec) -> np.ndarray:
    """Slice the signal into windowed frames of shape (n_frames, window_len).

    Frame k covers samples [k*hop, k*hop + window_len), zero-padded past
    the signal end, multiplied by the tapering window.
    """
    n = len(w.samples)
    n_frames = spec.n_frames(n)
    padded_len = (n_frames - 1) * spec.hop + spec.window_len if n_frames else spec.window_len
    padded = np.zeros(max(padded_len, n), dtype=np.float64)
    padded[:n] = w.samples
    idx = np.arange(spec.window_len)[None, :] + spec.hop * np.arange(n_frames)[:, None]
    return padded[idx] * spec.window()[None, :]


def overlap_add(frames: np.ndarray, hop: int, out_len: int | None = None) -> np.ndarray:
    """Sum frames back at their hop positions (no extra windowing)."""
    n_frames, window_len = frames.shape
    total = (n_frames - 1) * hop + window_len if n_frames else 0
    out = np.zeros(total)
    for k in range(n_frames):
        out[k * hop:k * hop + window_len] += frames[k]
    if out_len is not None:
        out = out[:out_len]
    return out
