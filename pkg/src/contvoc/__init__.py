"""Continuous-parameter vocoder: analysis, noise masking, synthesis, metrics."""

from .analysis import (ContinuousParams, HarmonicFrame, estimate_cont_f0,
                       estimate_envelope, estimate_mvf, harmonic_analysis)
from .mask import (NoiseMask, PhaseDistortionTrack, compute_cnm,
                   pdd_estimate, phase_distortion, regularize_pdd)
from .metrics import EcdfCurve, MetricReport, ecdf, evaluate_ecdf, mcd, pearson_corr, rmse
from .signal_io import (FrameSpec, Waveform, default_frame_spec, load_waveform,
                        save_waveform, segment_frames)
from .synthesis import (ExcitationPlan, apply_mask, gen_unvoiced_excitation,
                        gen_voiced_excitation, make_plan, synthesize)
from .vocoder import VocoderConfig, analyze, copy_synthesis, resynthesize

__version__ = "0.1.0"

__all__ = [
    "ContinuousParams", "EcdfCurve", "ExcitationPlan", "FrameSpec",
    "HarmonicFrame", "MetricReport", "NoiseMask", "PhaseDistortionTrack",
    "VocoderConfig", "Waveform", "analyze", "apply_mask", "compute_cnm",
    "copy_synthesis", "default_frame_spec", "ecdf", "estimate_cont_f0",
    "estimate_envelope", "estimate_mvf", "evaluate_ecdf",
    "gen_unvoiced_excitation", "gen_voiced_excitation", "harmonic_analysis",
    "load_waveform", "make_plan", "mcd", "pdd_estimate", "pearson_corr",
    "phase_distortion", "regularize_pdd", "resynthesize", "rmse",
    "save_waveform", "segment_frames", "synthesize",
]
