"""Objective evaluation: mel-cepstral distortion, RMSE, correlation, ECDF."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MCD_SCALE = 10.0 / math.log(10.0)


class ConstantInputError(ValueError):
    """Correlation is undefined for a zero-variance track."""


@dataclass(frozen=True)
class MetricReport:
    """Objective scores for one reference/test pair."""

    mcd_db: float
    f0_rmse_hz: float
    mvf_rmse_hz: float
    mvf_rmse_norm: float
    corr: float
    frame_count: int

    def __post_init__(self):
        values = (self.mcd_db, self.f0_rmse_hz, self.mvf_rmse_hz,
                  self.mvf_rmse_norm, self.corr)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("metric values must be finite")
        if min(self.mcd_db, self.f0_rmse_hz, self.mvf_rmse_hz, self.mvf_rmse_norm) < 0:
            raise ValueError("distortion metrics must be non-negative")
        if abs(self.corr) > 1.0 + 1e-12:
            raise ValueError("correlation must lie in [-1, 1]")


@dataclass(frozen=True)
class EcdfCurve:
    """Sorted sample values and the cumulative fraction at each of them."""

    sorted_values: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sorted_values",
                           np.asarray(self.sorted_values, dtype=np.float64))
        object.__setattr__(self, "cumulative",
                           np.asarray(self.cumulative, dtype=np.float64))
        if len(self.sorted_values) != len(self.cumulative):
            raise ValueError("values and cumulative fractions must align")
        if len(self.cumulative):
            if np.any(np.diff(self.cumulative) < 0):
                raise ValueError("cumulative fractions must be non-decreasing")
            if not math.isclose(self.cumulative[-1], 1.0):
                raise ValueError("cumulative fractions must end at 1")


def mcd(ref: np.ndarray, test: np.ndarray) -> float:
    """Mel-cepstral distortion in dB, excluding the energy coefficient c0.

    Mean over frames of (10/ln 10) * sqrt(2 * sum_{i>=1} (c_i - c'_i)^2).
    """
    ref = np.atleast_2d(np.asarray(ref, dtype=np.float64))
    test = np.atleast_2d(np.asarray(test, dtype=np.float64))
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    diff = ref[:, 1:] - test[:, 1:]
    per_frame = MCD_SCALE * np.sqrt(2.0 * np.sum(diff ** 2, axis=1))
    return float(per_frame.mean())


def rmse(ref: np.ndarray, test: np.ndarray) -> float:
    """Root mean squared difference, in the units of the input tracks."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    if ref.size == 0:
        raise ValueError("empty tracks")
    return float(np.sqrt(np.mean((ref - test) ** 2)))


def pearson_corr(ref: np.ndarray, test: np.ndarray) -> float:
    """Pearson product-moment correlation coefficient."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    if ref.size < 2:
        raise ValueError("correlation needs at least two points")
    ref_c = ref - ref.mean()
    test_c = test - test.mean()
    denom = math.sqrt(float(np.sum(ref_c ** 2)) * float(np.sum(test_c ** 2)))
    if denom == 0.0:
        raise ConstantInputError("zero variance track")
    return float(np.sum(ref_c * test_c) / denom)


def ecdf(values: np.ndarray) -> EcdfCurve:
    """Empirical cumulative distribution of a finite, non-empty sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    ordered = np.sort(values)
    cumulative = np.arange(1, len(ordered) + 1, dtype=np.float64) / len(ordered)
    return EcdfCurve(sorted_values=ordered, cumulative=cumulative)


def evaluate_ecdf(curve: EcdfCurve, x: float) -> float:
    """Fraction of the sample less than or equal to x."""
    n = len(curve.sorted_values)
    if n == 0:
        raise ValueError("empty curve")
    return float(np.searchsorted(curve.sorted_values, x, side="right")) / n
