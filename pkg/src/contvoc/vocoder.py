"""End-to-end analysis and resynthesis built from the module-level operations."""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import analysis, mask, synthesis
from .analysis import ContinuousParams
from .mask import NoiseMask
from .signal_io import (DEFAULT_HOP_MS, DEFAULT_WINDOW_MS, FrameSpec, Waveform,
                        default_frame_spec)

DEFAULT_WARP = analysis.DEFAULT_WARP


@dataclass(frozen=True)
class VocoderConfig:
    """All tunable analysis/synthesis parameters with their defaults."""

    hop_ms: float = DEFAULT_HOP_MS
    window_ms: float = DEFAULT_WINDOW_MS
    f0_min: float = analysis.DEFAULT_F0_MIN
    f0_max: float = analysis.DEFAULT_F0_MAX
    mvf_min: float = analysis.DEFAULT_MVF_MIN
    order: int = analysis.DEFAULT_ENVELOPE_ORDER
    warp: float = analysis.DEFAULT_WARP
    pdd_window: int = mask.DEFAULT_PDD_WINDOW
    threshold: float = mask.DEFAULT_THRESHOLD
    convention: str = mask.CONVENTION_OPERATIONAL
    seed: int = synthesis.DEFAULT_NOISE_SEED

    def frame_spec(self, sample_rate: int) -> FrameSpec:
        return default_frame_spec(sample_rate, self.hop_ms, self.window_ms)

    def with_overrides(self, **kwargs) -> "VocoderConfig":
        return replace(self, **kwargs)


def analyze(w: Waveform, config: VocoderConfig = VocoderConfig()) -> tuple[ContinuousParams, NoiseMask]:
    """Full analysis chain: tracks, envelope, harmonic phases, deviation, mask."""
    spec = config.frame_spec(w.sample_rate)
    cont_f0 = analysis.estimate_cont_f0(w, spec, config.f0_min, config.f0_max)
    mvf = analysis.estimate_mvf(w, cont_f0, spec, config.mvf_min)
    envelope = analysis.estimate_envelope(w, spec, config.order, config.warp)
    params = ContinuousParams(cont_f0=cont_f0, mvf=mvf, envelope=envelope,
                              frame_spec=spec, sample_rate=w.sample_rate)
    harmonics = analysis.harmonic_analysis(w, cont_f0, mvf, spec)
    times = params.frame_times()
    pd_track = mask.phase_distortion(harmonics, times)
    raw_pdd = mask.pdd_estimate(pd_track, config.pdd_window)
    regular = mask.regularize_pdd(raw_pdd, times, times)
    noise_mask = mask.compute_cnm(regular, config.convention, config.threshold)
    return params, noise_mask


def resynthesize(params: ContinuousParams, noise_mask: NoiseMask,
                 config: VocoderConfig = VocoderConfig(),
                 peak_normalize: bool = True) -> Waveform:
    """Excitation generation, masking, and overlap-add synthesis."""
    plan = synthesis.make_plan(params, config.seed)
    plan = synthesis.apply_mask(plan, noise_mask)
    return synthesis.synthesize(plan, params, config.warp, peak_normalize)


def copy_synthesis(w: Waveform, config: VocoderConfig = VocoderConfig()
                   ) -> tuple[Waveform, ContinuousParams, NoiseMask]:
    """Analyze a waveform and immediately rebuild it from its parameters."""
    params, noise_mask = analyze(w, config)
    out = resynthesize(params, noise_mask, config)
    return out, params, noise_mask
