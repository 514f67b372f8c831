"""Continuous vocoder parameter extraction: contF0, MVF, spectral envelope, harmonics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .signal_io import FrameSpec, Waveform, make_window, segment_frames

DEFAULT_F0_MIN = 50.0
DEFAULT_F0_MAX = 500.0
DEFAULT_MVF_MIN = 800.0
DEFAULT_ENVELOPE_ORDER = 24
DEFAULT_WARP = 0.42

# Frames whose normalized autocorrelation peak falls below this are treated
# as unreliable and bridged by interpolation from reliable neighbors.
PERIODICITY_ANCHOR = 0.5

# Harmonic phases are tracked at least up to this frequency even when the
# estimated MVF collapses, so the phase statistics never starve in noise.
HARMONIC_BAND_FLOOR = 4000.0

# Per-harmonic score above which a band still counts as harmonic.
MVF_SCORE_THRESHOLD = 0.5

SPECTRAL_FLOOR = 1e-10  # power floor for silent frames

_TRUE_ENVELOPE_ITERS = 4


@dataclass(frozen=True)
class ContinuousParams:
    """Per-frame contF0 (Hz), MVF (Hz), and cepstral envelope tracks."""

    cont_f0: np.ndarray
    mvf: np.ndarray
    envelope: np.ndarray  # (n_frames, order + 1)
    frame_spec: FrameSpec
    sample_rate: int

    def __post_init__(self):
        object.__setattr__(self, "cont_f0", np.asarray(self.cont_f0, dtype=np.float64))
        object.__setattr__(self, "mvf", np.asarray(self.mvf, dtype=np.float64))
        object.__setattr__(self, "envelope", np.asarray(self.envelope, dtype=np.float64))
        n = len(self.cont_f0)
        if len(self.mvf) != n or self.envelope.shape[0] != n:
            raise ValueError("cont_f0, mvf, and envelope must share one frame count")
        if n and not np.all(self.cont_f0 > 0):
            raise ValueError("cont_f0 must be strictly positive in every frame")
        nyquist = self.sample_rate / 2.0
        if n and (np.any(self.mvf < 0) or np.any(self.mvf > nyquist)):
            raise ValueError("mvf must lie in [0, nyquist]")

    @property
    def n_frames(self) -> int:
        return len(self.cont_f0)

    @property
    def order(self) -> int:
        return self.envelope.shape[1] - 1

    def frame_times(self) -> np.ndarray:
        return self.frame_spec.frame_times(self.n_frames, self.sample_rate)


@dataclass(frozen=True)
class HarmonicFrame:
    """Amplitude and wrapped phase of harmonics h*f0 for one frame."""

    f0: float
    amplitudes: np.ndarray
    phases: np.ndarray

    @property
    def harmonic_count(self) -> int:
        return len(self.amplitudes)


def wrap_phase(x):
    """Wrap angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=np.float64), 2.0 * np.pi)


def _frame_centers(n_samples: int, spec: FrameSpec) -> np.ndarray:
    n_frames = spec.n_frames(n_samples)
    return spec.hop * np.arange(n_frames) + spec.window_len // 2


def _centered_segment(samples: np.ndarray, center: int, length: int) -> np.ndarray:
    """Segment of given length centered on `center`, zero-padded at edges."""
    half = length // 2
    start = center - half
    seg = np.zeros(length)
    lo = max(start, 0)
    hi = min(start + length, len(samples))
    if hi > lo:
        seg[lo - start:hi - start] = samples[lo:hi]
    return seg


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def _normalized_autocorr(seg: np.ndarray, max_lag: int) -> np.ndarray:
    """r[tau] = sum x[n]x[n+tau] / sqrt(E0(tau) E1(tau)), tau = 0..max_lag."""
    n = len(seg)
    nfft = _next_pow2(2 * n)
    spec = np.fft.rfft(seg, nfft)
    raw = np.fft.irfft(spec * np.conj(spec), nfft)[:max_lag + 1]
    csum = np.concatenate(([0.0], np.cumsum(seg * seg)))
    tau = np.arange(max_lag + 1)
    e0 = csum[n - tau] - csum[0]
    e1 = csum[n] - csum[tau]
    denom = np.sqrt(np.maximum(e0 * e1, 1e-30))
    r = raw / denom
    r[denom <= 1e-15] = 0.0
    return r


def _pick_pitch_lag(r: np.ndarray, lag_min: int, lag_max: int) -> tuple[float, float]:
    """Smallest-lag strong peak of the normalized autocorrelation.

    Returns (refined lag, peak value). Preferring the smallest lag among
    peaks close to the maximum protects against octave-down errors.
    """
    lag_max = min(lag_max, len(r) - 2)
    if lag_max <= lag_min:
        return float(lag_min), 0.0
    window = r[lag_min:lag_max + 1]
    best = float(window.max())
    interior = window[1:-1]
    is_peak = (interior >= window[:-2]) & (interior >= window[2:])
    strong = is_peak & (interior >= 0.85 * best) & (interior > 0)
    candidates = np.nonzero(strong)[0]
    if len(candidates):
        lag = int(candidates[0]) + 1 + lag_min
    else:
        lag = int(np.argmax(window)) + lag_min
    peak = float(r[lag])
    # parabolic refinement around the integer peak
    if 1 <= lag < len(r) - 1:
        rm, r0, rp = r[lag - 1], r[lag], r[lag + 1]
        denom = rm - 2.0 * r0 + rp
        if abs(denom) > 1e-12:
            delta = 0.5 * (rm - rp) / denom
            if abs(delta) < 1.0:
                return lag + float(delta), peak
    return float(lag), peak


def estimate_cont_f0(w: Waveform, spec: FrameSpec,
                     f0_min: float = DEFAULT_F0_MIN,
                     f0_max: float = DEFAULT_F0_MAX) -> np.ndarray:
    """Continuous per-frame fundamental frequency (Hz), positive everywhere.

    Frames with low periodicity get values bridged from reliable neighbors
    by periodicity-weighted interpolation, so the track never drops to zero
    or jumps to junk in unvoiced or silent stretches.
    """
    sr = w.sample_rate
    if not 0 < f0_min < f0_max <= sr / 2.0:
        raise ValueError("need 0 < f0_min < f0_max <= nyquist")
    if len(w.samples) < sr / f0_min:
        raise ValueError("signal shorter than one pitch period at f0_min")
    centers = _frame_centers(len(w.samples), spec)
    win_len = max(spec.window_len, int(math.ceil(2.5 * sr / f0_min)))
    lag_min = max(2, int(math.floor(sr / f0_max)))
    lag_max = int(math.ceil(sr / f0_min))

    raw = np.empty(len(centers))
    periodicity = np.empty(len(centers))
    for k, c in enumerate(centers):
        seg = _centered_segment(w.samples, int(c), win_len)
        seg = seg - seg.mean()
        r = _normalized_autocorr(seg, lag_max + 1)
        lag, peak = _pick_pitch_lag(r, lag_min, lag_max)
        raw[k] = sr / max(lag, 1.0)
        periodicity[k] = min(max(peak, 0.0), 1.0)
    raw = np.clip(raw, f0_min, f0_max)

    f0 = _bridge_low_periodicity(raw, periodicity, f0_min, f0_max)
    f0 = _median3(f0)
    return np.clip(f0, f0_min, f0_max)


def _bridge_low_periodicity(raw, periodicity, f0_min, f0_max):
    anchors = np.nonzero(periodicity >= PERIODICITY_ANCHOR)[0]
    if len(anchors) == 0:
        weights = periodicity + 1e-6
        return np.full_like(raw, float(np.sum(weights * raw) / np.sum(weights)))
    f0 = raw.copy()
    # hold outside the first/last anchor
    f0[:anchors[0]] = raw[anchors[0]]
    f0[anchors[-1] + 1:] = raw[anchors[-1]]
    for a, b in zip(anchors[:-1], anchors[1:]):
        if b - a <= 1:
            continue
        t = np.arange(a + 1, b, dtype=np.float64)
        wa = max(periodicity[a], 1e-6) * (b - t)
        wb = max(periodicity[b], 1e-6) * (t - a)
        f0[a + 1:b] = (wa * raw[a] + wb * raw[b]) / (wa + wb)
    return f0


def _median3(x: np.ndarray) -> np.ndarray:
    return _median_filter(x, 3)


def _median_filter(x: np.ndarray, width: int) -> np.ndarray:
    if len(x) < 2 or width < 2:
        return x.copy()
    half = width // 2
    out = np.empty_like(x)
    for i in range(len(x)):
        lo = max(0, i - half)
        hi = min(len(x), i + half + 1)
        out[i] = np.median(x[lo:hi])
    return out


def _band_peak(power: np.ndarray, freq_per_bin: float, f_center: float, f_half: float) -> float:
    lo = int(round((f_center - f_half) / freq_per_bin))
    hi = int(round((f_center + f_half) / freq_per_bin))
    lo = max(lo, 0)
    hi = min(hi, len(power) - 1)
    if hi < lo:
        return 0.0
    return float(power[lo:hi + 1].max())


def estimate_mvf(w: Waveform, f0_track: np.ndarray, spec: FrameSpec,
                 mvf_min: float = DEFAULT_MVF_MIN) -> np.ndarray:
    """Per-frame maximum voiced frequency (Hz) in [mvf_min, nyquist].

    Scans harmonics of the per-frame f0 upward and keeps going while the
    energy at the harmonic dominates the energy between harmonics; the scan
    stops at the first failing band. Noise-dominated frames collapse to
    mvf_min, strongly harmonic frames reach toward the nyquist.
    """
    sr = w.sample_rate
    nyquist = sr / 2.0
    f0_track = np.asarray(f0_track, dtype=np.float64)
    centers = _frame_centers(len(w.samples), spec)
    if len(f0_track) != len(centers):
        raise ValueError("f0 track does not match the frame grid")
    mvf = np.empty(len(centers))
    for k, c in enumerate(centers):
        f0 = float(f0_track[k])
        # five pitch periods keep the window mainlobe narrower than half a
        # harmonic spacing, so harmonic and inter-harmonic bands separate
        win_len = max(spec.window_len, int(math.ceil(5.0 * sr / f0)))
        seg = _centered_segment(w.samples, int(c), win_len)
        seg = (seg - seg.mean()) * make_window("hann", win_len)
        nfft = 2 * _next_pow2(win_len)
        power = np.abs(np.fft.rfft(seg, nfft)) ** 2
        freq_per_bin = sr / nfft
        half = max(0.15 * f0, freq_per_bin)
        h = 1
        last_good = 0
        while (h + 0.6) * f0 < nyquist:
            e_harm = _band_peak(power, freq_per_bin, h * f0, half)
            e_inter = 0.5 * (_band_peak(power, freq_per_bin, (h - 0.5) * f0, half)
                             + _band_peak(power, freq_per_bin, (h + 0.5) * f0, half))
            score = e_harm / (e_harm + e_inter + 1e-30)
            if score <= MVF_SCORE_THRESHOLD:
                break
            last_good = h
            h += 1
        mvf[k] = min(max(last_good * f0, mvf_min), nyquist)
    return _median_filter(mvf, 5)


# --- warped-cepstrum spectral envelope ---------------------------------------


def _warp_map(alpha: float, n_points: int) -> np.ndarray:
    """Warped frequency beta(omega) on [0, pi] for the all-pass warp alpha."""
    omega = np.linspace(0.0, np.pi, n_points)
    return omega + 2.0 * np.arctan2(alpha * np.sin(omega), 1.0 - alpha * np.cos(omega))


def _warp_interp_grid(alpha: float, n_bins: int) -> np.ndarray:
    """Fractional linear-bin positions whose warped frequencies are uniform."""
    dense = 8 * n_bins
    beta_dense = _warp_map(alpha, dense)
    beta_uniform = np.linspace(0.0, np.pi, n_bins)
    omega = np.interp(beta_uniform, beta_dense, np.linspace(0.0, np.pi, dense))
    return omega / np.pi * (n_bins - 1)


def _resample_rows(rows: np.ndarray, positions: np.ndarray) -> np.ndarray:
    idx = np.clip(positions.astype(int), 0, rows.shape[1] - 2)
    frac = positions - idx
    return rows[:, idx] * (1.0 - frac) + rows[:, idx + 1] * frac


def estimate_envelope(w: Waveform, spec: FrameSpec,
                      order: int = DEFAULT_ENVELOPE_ORDER,
                      warp: float = DEFAULT_WARP) -> np.ndarray:
    """Per-frame warped-cepstrum envelope, shape (n_frames, order + 1).

    The log periodogram is resampled onto the warped frequency axis and fit
    from above by a truncated cepstrum: points falling under the current fit
    are pulled up to it and the fit is repeated, which makes the envelope
    ride the spectral peaks instead of the noise valleys.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not 0.0 <= warp < 1.0:
        raise ValueError("warp must lie in [0, 1)")
    frames = segment_frames(w, spec)
    nfft = 2 * _next_pow2(max(spec.window_len, 256))
    power = np.abs(np.fft.rfft(frames, nfft, axis=1)) ** 2
    # coefficients parameterize the log AMPLITUDE spectrum, so the
    # exponentiated envelope is directly usable as a synthesis filter
    log_amp = 0.5 * np.log(np.maximum(power, SPECTRAL_FLOOR))
    positions = _warp_interp_grid(warp, nfft // 2 + 1)
    warped = _resample_rows(log_amp, positions)
    return _fit_truncated_cepstrum(warped, order, nfft)


def _fit_truncated_cepstrum(warped_log: np.ndarray, order: int, nfft: int) -> np.ndarray:
    target = warped_log
    keep = np.zeros(nfft // 2 + 1)
    keep[:order + 1] = 1.0
    for _ in range(_TRUE_ENVELOPE_ITERS):
        ceps = np.fft.irfft(target, nfft, axis=1)
        half = ceps[:, :nfft // 2 + 1] * keep[None, :]
        fit = np.fft.rfft(_mirror_even(half, nfft), nfft, axis=1).real
        target = np.maximum(warped_log, fit)
    ceps = np.fft.irfft(target, nfft, axis=1)
    return ceps[:, :order + 1].copy()


def _mirror_even(half: np.ndarray, nfft: int) -> np.ndarray:
    full = np.zeros((half.shape[0], nfft))
    full[:, :nfft // 2 + 1] = half
    full[:, nfft // 2 + 1:] = half[:, 1:nfft // 2][:, ::-1]
    return full


def envelope_response(coeffs: np.ndarray, warp: float, nfft: int) -> np.ndarray:
    """Linear-frequency amplitude response exp(log-envelope) on the rfft grid."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=np.float64))
    beta = _warp_map(warp, nfft // 2 + 1)
    m = np.arange(coeffs.shape[1])
    basis = np.cos(np.outer(m, beta))
    basis[1:] *= 2.0
    return np.exp(coeffs @ basis)


def warped_frequency(freq_hz, sample_rate: int, warp: float) -> np.ndarray:
    """Map physical frequency (Hz) to the warped axis in [0, pi]."""
    omega = np.asarray(freq_hz, dtype=np.float64) * np.pi / (sample_rate / 2.0)
    return omega + 2.0 * np.arctan2(warp * np.sin(omega), 1.0 - warp * np.cos(omega))


def harmonic_analysis(w: Waveform, cont_f0: np.ndarray, mvf: np.ndarray,
                      spec: FrameSpec,
                      harmonic_floor: float = HARMONIC_BAND_FLOOR) -> list[HarmonicFrame]:
    """Windowed projection onto harmonics h*f0 for h = 1..H per frame.

    H = floor(min(max(mvf, harmonic_floor), nyquist) / f0): phases are
    tracked up to at least `harmonic_floor` so the downstream phase
    statistics keep enough samples even when MVF collapses in noise.
    Phases are referenced to the frame center and wrapped to (-pi, pi].
    """
    sr = w.sample_rate
    nyquist = sr / 2.0
    cont_f0 = np.asarray(cont_f0, dtype=np.float64)
    mvf = np.asarray(mvf, dtype=np.float64)
    centers = _frame_centers(len(w.samples), spec)
    if len(cont_f0) != len(centers) or len(mvf) != len(centers):
        raise ValueError("tracks do not match the frame grid")
    if np.any(cont_f0 > nyquist):
        raise ValueError("f0 above nyquist")
    frames = []
    for k, c in enumerate(centers):
        f0 = float(cont_f0[k])
        # cap never drops below f0 itself, so every frame keeps >= 1 harmonic
        cap = min(max(mvf[k], harmonic_floor, f0), nyquist)
        count = int(math.floor(cap / f0))
        if count < 1:
            frames.append(HarmonicFrame(f0, np.empty(0), np.empty(0)))
            continue
        win_len = max(spec.window_len, int(math.ceil(3.0 * sr / f0)))
        seg = _centered_segment(w.samples, int(c), win_len)
        win = make_window("hann", win_len)
        t = (np.arange(win_len) - win_len // 2) / sr
        h = np.arange(1, count + 1)
        basis = np.exp(-2j * np.pi * np.outer(h, t) * f0)
        coeffs = basis @ (seg * win) * (2.0 / win.sum())
        frames.append(HarmonicFrame(f0, np.abs(coeffs), wrap_phase(np.angle(coeffs))))
    return frames
