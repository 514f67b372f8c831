"""Waveform reconstruction: pulse + noise excitation, masking, overlap-add."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import DEFAULT_WARP, ContinuousParams, envelope_response, _next_pow2
from .mask import NoiseMask
from .signal_io import FrameSpec, Waveform

DEFAULT_NOISE_SEED = 42

_RMS_FLOOR = 1e-9
PEAK_TARGET = 0.99


@dataclass(frozen=True)
class ExcitationPlan:
    """Per-frame voiced and unvoiced excitation segments, one row per frame."""

    voiced: np.ndarray
    unvoiced: np.ndarray
    frame_spec: FrameSpec

    def __post_init__(self):
        if self.voiced.shape != self.unvoiced.shape:
            raise ValueError("voiced and unvoiced segments must have equal shape")

    @property
    def n_frames(self) -> int:
        return self.voiced.shape[0]


def _per_sample_f0(cont_f0: np.ndarray, hop: int, total_len: int) -> np.ndarray:
    idx = np.minimum(np.arange(total_len) // hop, len(cont_f0) - 1)
    return cont_f0[idx]


def _pulse_train(cont_f0: np.ndarray, hop: int, total_len: int,
                 sample_rate: int) -> np.ndarray:
    """Unit impulses wherever the running pitch phase crosses a full cycle."""
    f0 = _per_sample_f0(cont_f0, hop, total_len)
    phase = np.cumsum(f0 / sample_rate)
    cycles = np.floor(phase)
    onsets = np.diff(cycles, prepend=0.0) >= 1.0
    train = np.zeros(total_len)
    train[onsets] = 1.0
    return train


def _band_select(segment: np.ndarray, sample_rate: int, low: float,
                 high: float) -> np.ndarray:
    """Keep DFT bins with low < f <= high, zero the rest (DC always dropped)."""
    n = len(segment)
    spec = np.fft.rfft(segment)
    freqs = np.arange(len(spec)) * sample_rate / n
    keep = (freqs > low) & (freqs <= high)
    spec[~keep] = 0.0
    return np.fft.irfft(spec, n)


def _normalize_rms(segment: np.ndarray) -> np.ndarray:
    rms = np.sqrt(np.mean(segment ** 2))
    if rms < _RMS_FLOOR:
        return np.zeros_like(segment)
    return segment / rms


def gen_voiced_excitation(params: ContinuousParams) -> np.ndarray:
    """Pitch-synchronous pulse train segments, band-limited below each frame's MVF.

    The pulse phase runs continuously across frame boundaries; each segment
    is normalized to unit RMS so the spectral envelope alone carries the
    energy contour.
    """
    spec = params.frame_spec
    total_len = (params.n_frames - 1) * spec.hop + spec.window_len
    train = _pulse_train(params.cont_f0, spec.hop, total_len, params.sample_rate)
    segments = np.empty((params.n_frames, spec.window_len))
    for k in range(params.n_frames):
        seg = train[k * spec.hop:k * spec.hop + spec.window_len]
        seg = _band_select(seg, params.sample_rate, 0.0, float(params.mvf[k]))
        segments[k] = _normalize_rms(seg)
    return segments


def gen_unvoiced_excitation(params: ContinuousParams,
                            seed: int = DEFAULT_NOISE_SEED) -> np.ndarray:
    """White-noise segments high-passed above each frame's MVF, unit RMS.

    Deterministic for a given seed: the full-length noise stream is drawn
    once and sliced per frame.
    """
    spec = params.frame_spec
    total_len = (params.n_frames - 1) * spec.hop + spec.window_len
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(total_len)
    nyquist = params.sample_rate / 2.0
    segments = np.empty((params.n_frames, spec.window_len))
    for k in range(params.n_frames):
        seg = noise[k * spec.hop:k * spec.hop + spec.window_len]
        seg = _band_select(seg, params.sample_rate, float(params.mvf[k]), nyquist)
        segments[k] = _normalize_rms(seg)
    return segments


def make_plan(params: ContinuousParams, seed: int = DEFAULT_NOISE_SEED) -> ExcitationPlan:
    return ExcitationPlan(voiced=gen_voiced_excitation(params),
                          unvoiced=gen_unvoiced_excitation(params, seed),
                          frame_spec=params.frame_spec)


def apply_mask(plan: ExcitationPlan, mask: NoiseMask) -> ExcitationPlan:
    """Gate the voiced component and scale the noise component per frame.

    A frame's voiced segment survives unchanged iff cnm <= threshold
    (inclusive boundary) and is zeroed otherwise; its unvoiced segment is
    multiplied by that frame's cnm value.
    """
    if mask.n_frames != plan.n_frames:
        raise ValueError(f"mask has {mask.n_frames} frames, plan has {plan.n_frames}")
    keep = mask.cnm <= mask.threshold
    voiced = plan.voiced * keep[:, None]
    unvoiced = plan.unvoiced * mask.cnm[:, None]
    return ExcitationPlan(voiced=voiced, unvoiced=unvoiced,
                          frame_spec=plan.frame_spec)


def synthesize(plan: ExcitationPlan, params: ContinuousParams,
               warp: float | None = None,
               peak_normalize: bool = True) -> Waveform:
    """Filter each frame's excitation by its envelope, window, and overlap-add.

    Output length is exactly n_frames * hop. Peak normalization to 0.99 can
    be disabled to keep the pipeline strictly linear.
    """
    if plan.n_frames != params.n_frames:
        raise ValueError("plan and params must share one frame count")
    if warp is None:
        warp = DEFAULT_WARP
    spec = params.frame_spec
    window = spec.window()
    nfft = 2 * _next_pow2(spec.window_len)
    response = envelope_response(params.envelope, warp, nfft)
    excitation = plan.voiced + plan.unvoiced
    shaped = np.fft.irfft(np.fft.rfft(excitation, nfft, axis=1) * response,
                          nfft, axis=1)[:, :spec.window_len]
    shaped *= window[None, :]
    out_len = plan.n_frames * spec.hop
    total = (plan.n_frames - 1) * spec.hop + spec.window_len
    out = np.zeros(total)
    for k in range(plan.n_frames):
        out[k * spec.hop:k * spec.hop + spec.window_len] += shaped[k]
    out = out[:out_len] / (window.sum() / spec.hop)
    if not np.all(np.isfinite(out)):
        raise ValueError("synthesis produced non-finite samples")
    if peak_normalize:
        peak = np.abs(out).max()
        if peak > 0:
            out = out * (PEAK_TARGET / peak)
    return Waveform(samples=out, sample_rate=params.sample_rate)
