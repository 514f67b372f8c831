"""Phase distortion, its short-time deviation, and the continuous noise mask."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import HarmonicFrame, wrap_phase

DEFAULT_PDD_WINDOW = 11
DEFAULT_THRESHOLD = 0.77

CONVENTION_LITERAL = "eq1-literal"
CONVENTION_OPERATIONAL = "fig1-operational"
CONVENTIONS = (CONVENTION_OPERATIONAL, CONVENTION_LITERAL)


@dataclass(frozen=True)
class PhaseDistortionTrack:
    """Per-frame, per-harmonic phase distortion in (-pi, pi].

    Row k has that frame's harmonic_count - 1 entries (empty when the frame
    carries fewer than two harmonics).
    """

    pd: list
    frame_times: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frame_times",
                           np.asarray(self.frame_times, dtype=np.float64))
        if len(self.pd) != len(self.frame_times):
            raise ValueError("pd rows and frame_times must align")

    @property
    def n_frames(self) -> int:
        return len(self.pd)


@dataclass(frozen=True)
class NoiseMask:
    """Per-frame deviation and mask values in [0, 1] plus the gating threshold."""

    pdd: np.ndarray
    cnm: np.ndarray
    threshold: float
    convention: str

    def __post_init__(self):
        object.__setattr__(self, "pdd", np.asarray(self.pdd, dtype=np.float64))
        object.__setattr__(self, "cnm", np.asarray(self.cnm, dtype=np.float64))
        if len(self.pdd) != len(self.cnm):
            raise ValueError("pdd and cnm must share one frame count")
        for name, track in (("pdd", self.pdd), ("cnm", self.cnm)):
            if len(track) and (track.min() < 0.0 or track.max() > 1.0):
                raise ValueError(f"{name} values must lie in [0, 1]")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown mask convention: {self.convention!r}")

    @property
    def n_frames(self) -> int:
        return len(self.cnm)


def phase_distortion(frames: list[HarmonicFrame],
                     frame_times=None) -> PhaseDistortionTrack:
    """Difference of consecutive harmonic phases with the linear phase removed.

    pd[k][h-1] = wrap(phi_{h+1} - phi_h - phi_1): a pure time shift moves
    every phi_h by h*c and leaves pd unchanged. Frames with fewer than two
    harmonics contribute an empty row.
    """
    if frame_times is None:
        frame_times = np.arange(len(frames), dtype=np.float64)
    rows = []
    for frame in frames:
        phases = frame.phases
        if len(phases) < 2:
            rows.append(np.empty(0))
            continue
        rows.append(wrap_phase(phases[1:] - phases[:-1] - phases[0]))
    return PhaseDistortionTrack(pd=rows, frame_times=frame_times)


def pdd_estimate(pd_track: PhaseDistortionTrack,
                 window_frames: int = DEFAULT_PDD_WINDOW) -> np.ndarray:
    """Per-frame phase distortion deviation, normalized to [0, 1].

    Frame k pools the phase-distortion values of frames [k - W//2, k + W//2]
    across all harmonics and measures their circular spread as 1 - R, where
    R is the length of the mean unit phasor: 0 when all pooled values agree,
    1 when they cancel. An empty pool means maximal uncertainty (1).
    """
    if window_frames < 3 or window_frames % 2 == 0:
        raise ValueError("window_frames must be odd and >= 3")
    n = pd_track.n_frames
    phasor_sums = np.zeros(n, dtype=np.complex128)
    counts = np.zeros(n)
    for k, row in enumerate(pd_track.pd):
        if len(row):
            phasor_sums[k] = np.exp(1j * row).sum()
            counts[k] = len(row)
    half = window_frames // 2
    out = np.empty(n)
    for k in range(n):
        lo = max(0, k - half)
        hi = min(n, k + half + 1)
        total = counts[lo:hi].sum()
        if total == 0:
            out[k] = 1.0
            continue
        resultant = abs(phasor_sums[lo:hi].sum()) / total
        out[k] = 1.0 - resultant
    return np.clip(out, 0.0, 1.0)


def regularize_pdd(raw: np.ndarray, source_times: np.ndarray,
                   target_times: np.ndarray) -> np.ndarray:
    """Nearest-neighbor resampling of a deviation track onto a target grid.

    Each target value copies the source value at the nearest source time;
    exact ties pick the earlier source frame.
    """
    raw = np.asarray(raw, dtype=np.float64)
    source_times = np.asarray(source_times, dtype=np.float64)
    target_times = np.asarray(target_times, dtype=np.float64)
    if len(raw) == 0:
        raise ValueError("empty source track")
    if len(raw) != len(source_times):
        raise ValueError("raw values and source times must align")
    for name, t in (("source", source_times), ("target", target_times)):
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError(f"{name} times must be strictly increasing")
    if np.any(raw < 0.0) or np.any(raw > 1.0):
        raise ValueError("deviation values must lie in [0, 1]")
    midpoints = 0.5 * (source_times[:-1] + source_times[1:])
    idx = np.searchsorted(midpoints, target_times, side="left")
    return raw[idx]


def compute_cnm(pdd: np.ndarray, convention: str = CONVENTION_OPERATIONAL,
                threshold: float = DEFAULT_THRESHOLD) -> NoiseMask:
    """Continuous noise mask from the regularized deviation track.

    fig1-operational (default): cnm = pdd, so the mask is low in voiced
    frames and high in noisy ones. eq1-literal: cnm = 1 - pdd, the exact
    complement, kept for polarity audits.
    """
    pdd = np.asarray(pdd, dtype=np.float64)
    if len(pdd) and (pdd.min() < 0.0 or pdd.max() > 1.0):
        raise ValueError("pdd values must lie in [0, 1]")
    if convention == CONVENTION_OPERATIONAL:
        cnm = pdd.copy()
    elif convention == CONVENTION_LITERAL:
        cnm = 1.0 - pdd
    else:
        raise ValueError(f"unknown mask convention: {convention!r}")
    return NoiseMask(pdd=pdd.copy(), cnm=cnm, threshold=threshold,
                     convention=convention)
