"""Shared synthetic-signal builders for the test suite."""

import numpy as np
import pytest

SR = 16000


def harmonic_signal(f0, n_samples, sr=SR, max_hz=None, amp_of=None, phase_of=None):
    """Sum of harmonics of f0 up to max_hz.

    Default phases follow a pulse-like source (all sines), which is the
    phase structure voiced speech has; amp_of/phase_of override amplitude
    and phase per harmonic index.
    """
    t = np.arange(n_samples) / sr
    max_hz = max_hz if max_hz is not None else sr / 2.0 - 100.0
    sig = np.zeros(n_samples)
    h = 1
    while h * f0 < max_hz:
        amp = amp_of(h) if amp_of is not None else 1.0 / h
        phase = phase_of(h) if phase_of is not None else 0.0
        sig += amp * np.sin(2.0 * np.pi * h * f0 * t + phase)
        h += 1
    peak = np.abs(sig).max()
    return 0.7 * sig / peak if peak > 0 else sig


def vowel_signal(f0, n_samples, formants, sr=SR):
    """Sawtooth-like source shaped by resonance-shaped amplitude weights."""
    def amp(h):
        f = h * f0
        return sum(1.0 / (1.0 + ((f - fc) / bw) ** 2) for fc, bw in formants) / h ** 0.5

    return harmonic_signal(f0, n_samples, sr=sr, amp_of=amp)


FORMANT_SETS = [
    [(730, 90), (1090, 110), (2440, 160)],
    [(270, 60), (2290, 200), (3010, 220)],
    [(300, 60), (870, 100), (2240, 180)],
    [(530, 80), (1840, 150), (2480, 200)],
    [(660, 90), (1720, 140), (2410, 190)],
]

VOWEL_F0S = [120.0, 160.0, 200.0, 240.0, 280.0]


def white_noise(n_samples, seed=0, rms=0.15):
    rng = np.random.default_rng(seed)
    return rms * rng.standard_normal(n_samples)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
