"""Metric implementations against independently coded brute-force oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contvoc.metrics import (ConstantInputError, EcdfCurve, ecdf, evaluate_ecdf,
                             mcd, pearson_corr, rmse)


# --- independent oracles, written straight from the definitions ---------------

def oracle_mcd(ref, test):
    total = 0.0
    for r_row, t_row in zip(ref, test):
        acc = 0.0
        for i in range(1, len(r_row)):
            acc += (r_row[i] - t_row[i]) ** 2
        total += (10.0 / math.log(10.0)) * math.sqrt(2.0 * acc)
    return total / len(ref)


def oracle_rmse(ref, test):
    acc = 0.0
    for r, t in zip(ref, test):
        acc += (r - t) ** 2
    return math.sqrt(acc / len(ref))


def oracle_corr(ref, test):
    n = len(ref)
    mr = sum(ref) / n
    mt = sum(test) / n
    num = sum((r - mr) * (t - mt) for r, t in zip(ref, test))
    dr = math.sqrt(sum((r - mr) ** 2 for r in ref))
    dt = math.sqrt(sum((t - mt) ** 2 for t in test))
    return num / (dr * dt)


def oracle_ecdf_at(values, x):
    return sum(1 for v in values if v <= x) / len(values)


# --- mcd ----------------------------------------------------------------------

def test_mcd_identical_zero():
    a = np.random.default_rng(0).normal(size=(10, 25))
    assert mcd(a, a) == 0.0


def test_mcd_single_coefficient_closed_form():
    d = 0.37
    ref = np.zeros((1, 25))
    test = np.zeros((1, 25))
    test[0, 1] = d
    expected = (10.0 * math.sqrt(2.0) / math.log(10.0)) * d
    assert mcd(ref, test) == pytest.approx(expected, abs=1e-9)


def test_mcd_matches_oracle_on_random_pairs(rng):
    for _ in range(100):
        n = rng.integers(1, 50)
        order = rng.integers(2, 30)
        a = rng.normal(size=(n, order))
        b = rng.normal(size=(n, order))
        assert mcd(a, b) == pytest.approx(oracle_mcd(a, b), abs=1e-9)


def test_mcd_symmetry_and_scaling(rng):
    a = rng.normal(size=(20, 25))
    b = rng.normal(size=(20, 25))
    assert mcd(a, b) == pytest.approx(mcd(b, a), abs=1e-12)
    k = 3.5
    scaled = a + k * (b - a)  # differences scaled by k
    assert mcd(a, scaled) == pytest.approx(k * mcd(a, b), rel=1e-12)


def test_mcd_ignores_c0(rng):
    a = rng.normal(size=(5, 10))
    b = a.copy()
    b[:, 0] += rng.normal(size=5)
    assert mcd(a, b) == 0.0


def test_mcd_length_mismatch():
    with pytest.raises(ValueError):
        mcd(np.zeros((3, 5)), np.zeros((4, 5)))


# --- rmse ---------------------------------------------------------------------

def test_rmse_identical_zero():
    a = np.arange(10.0)
    assert rmse(a, a) == 0.0


def test_rmse_constant_offset():
    a = np.arange(10.0)
    assert rmse(a, a + 5.0) == pytest.approx(5.0, abs=1e-12)


def test_rmse_matches_oracle(rng):
    for _ in range(100):
        n = int(rng.integers(1, 200))
        a = rng.normal(size=n)
        b = rng.normal(size=n)
        assert rmse(a, b) == pytest.approx(oracle_rmse(a, b), abs=1e-12)


def test_rmse_errors():
    with pytest.raises(ValueError):
        rmse(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        rmse(np.empty(0), np.empty(0))


# --- pearson correlation ------------------------------------------------------

def test_corr_self_is_one(rng):
    a = rng.normal(size=50)
    assert pearson_corr(a, a) == pytest.approx(1.0, abs=1e-12)


def test_corr_negated_is_minus_one(rng):
    a = rng.normal(size=50)
    assert pearson_corr(a, -a) == pytest.approx(-1.0, abs=1e-12)


def test_corr_matches_oracle(rng):
    for _ in range(100):
        n = int(rng.integers(2, 150))
        a = rng.normal(size=n)
        b = rng.normal(size=n) + 0.5 * a
        assert pearson_corr(a, b) == pytest.approx(oracle_corr(a, b), abs=1e-12)


def test_corr_zero_variance_distinct_error():
    with pytest.raises(ConstantInputError):
        pearson_corr(np.ones(10), np.arange(10.0))


def test_corr_affine_invariance(rng):
    a = rng.normal(size=40)
    b = rng.normal(size=40)
    base = pearson_corr(a, b)
    assert pearson_corr(2.5 * a + 7.0, b) == pytest.approx(base, abs=1e-12)
    assert pearson_corr(a, 0.3 * b - 2.0) == pytest.approx(base, abs=1e-12)


# --- ecdf ---------------------------------------------------------------------

def test_ecdf_definition_example():
    curve = ecdf(np.array([1.0, 2.0, 3.0]))
    assert evaluate_ecdf(curve, 2.0) == pytest.approx(2 / 3)


def test_ecdf_extremes():
    curve = ecdf(np.array([1.0, 2.0, 3.0]))
    assert evaluate_ecdf(curve, 0.5) == 0.0
    assert evaluate_ecdf(curve, 3.0) == 1.0
    assert evaluate_ecdf(curve, 10.0) == 1.0


def test_ecdf_matches_counting_oracle(rng):
    values = rng.normal(size=1000)
    curve = ecdf(values)
    probes = rng.normal(size=100)
    for x in probes:
        assert evaluate_ecdf(curve, x) == oracle_ecdf_at(values, x)
    # right-continuity at the sample points themselves
    for v in values[:50]:
        assert evaluate_ecdf(curve, v) == oracle_ecdf_at(values, v)


def test_ecdf_structure(rng):
    curve = ecdf(rng.normal(size=321))
    assert np.all(np.diff(curve.cumulative) >= 0)
    assert curve.cumulative[-1] == 1.0
    assert np.all(np.diff(curve.sorted_values) >= 0)


def test_ecdf_empty_rejected():
    with pytest.raises(ValueError):
        ecdf(np.empty(0))


def test_ecdf_curve_validation():
    with pytest.raises(ValueError):
        EcdfCurve(sorted_values=np.array([1.0, 2.0]),
                  cumulative=np.array([0.5, 0.9]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-1e6, max_value=1e6,
                          allow_nan=False, allow_infinity=False),
                min_size=1, max_size=100),
       st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_ecdf_counting_property(values, x):
    curve = ecdf(np.array(values))
    assert evaluate_ecdf(curve, x) == oracle_ecdf_at(values, x)


def test_noise_ordering_of_mcd(rng):
    ref = rng.normal(size=(40, 25))
    prev = 0.0
    for level in (0.1, 0.3, 0.9):
        noisy = ref + level * rng.normal(size=ref.shape)
        value = mcd(ref, noisy)
        assert value > prev
        prev = value
