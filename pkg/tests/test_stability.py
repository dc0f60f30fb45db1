import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from lsl.stability import (
    Mode,
    ThresholdSet,
    best_translation_response,
    bracketed,
    classify_F,
    classify_weak,
    f0_lower_bound,
    f_stable_by_threshold,
    mode_coefficient,
    reduced_matrix,
    spectral_table,
    threshold_scan,
    weak_stable_by_threshold,
)
from lsl.surface_core import LambdaParams, Sphere, sample_surface
from lsl.variations import second_variation_F, second_variation_T


def test_F_examples():
    assert classify_F(2, 1.4).verdict == "stable"
    v = classify_F(2, 1.6)
    assert v.verdict == "unstable" and v.witness_kind == "normal"
    assert_allclose(v.certificate, -0.4375, rtol=1e-12)
    assert classify_F(2, 1.74).verdict == "stable"


def test_weak_examples():
    assert classify_weak(2, 0.9).stable
    v = classify_weak(2, 1.5)
    assert not v.stable and v.witness_kind == "normal"
    assert classify_weak(2, 2.0).stable


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_boundary_semantics(n):
    t = ThresholdSet.for_dimension(n)
    assert classify_F(n, t.f_lower).stable
    assert not classify_F(n, t.f_upper).stable
    assert classify_weak(n, t.weak_lower).stable
    assert classify_weak(n, t.weak_upper).stable


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 8])
def test_threshold_set_ordering(n):
    t = ThresholdSet.for_dimension(n)
    assert t.f_lower < t.weak_upper
    assert t.weak_lower <= t.f_lower


def test_n2_weak_thresholds_are_exact():
    t = ThresholdSet.for_dimension(2)
    assert (t.weak_lower, t.weak_upper) == (1.0, 2.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("mode", ["f", "weak"])
def test_optimizer_agrees_with_threshold_rule(n, mode):
    scan = threshold_scan(n, 0.2, 4.0, 1e-2, mode)
    assert scan.disagreements() == []


@given(st.integers(1, 6), st.floats(0.05, 6.0))
def test_optimizer_agrees_on_random_radii(n, r):
    assert classify_F(n, r).stable == f_stable_by_threshold(n, r)
    assert classify_weak(n, r).stable == weak_stable_by_threshold(n, r)


def test_scan_localizes_F_thresholds():
    scan = threshold_scan(2, 1.3, 1.8, 1e-3, "f")
    assert len(scan.transitions) == 2
    assert bracketed(scan.transitions, math.sqrt(2), 0.0)
    assert bracketed(scan.transitions, math.sqrt(3), 0.0)


def test_scan_localizes_weak_thresholds_n1():
    scan = threshold_scan(1, 0.3, 2.0, 1e-3, "weak")
    golden = (1 + math.sqrt(5)) / 2
    assert bracketed(scan.transitions, golden - 1, 1e-3)
    assert bracketed(scan.transitions, golden, 1e-3)


def test_scan_n3_F():
    scan = threshold_scan(3, 1.5, 2.2, 1e-3, "f")
    assert bracketed(scan.transitions, math.sqrt(3), 0.0)
    assert bracketed(scan.transitions, 2.0, 0.0)


def test_scan_csv():
    csv = threshold_scan(2, 1.5, 1.52, 1e-2, "weak").to_csv().splitlines()
    assert csv[0] == "r,mode,verdict,certificate,witness_kind"
    assert len(csv) == 4
    assert csv[1].startswith("1.5,weak,unstable,")


def test_scan_rejects_bad_grid():
    with pytest.raises(ValueError):
        threshold_scan(2, 1.0, 0.5, 1e-2)


def test_spectral_table():
    rows = spectral_table(2, 1.0, 4)
    assert [r["mu"] for r in rows[:3]] == [0.0, 2.0, 6.0]
    with pytest.raises(ValueError):
        spectral_table(2, 1.0, 1)


@given(st.integers(1, 5), st.floats(0.1, 5.0))
def test_degree_one_coefficient(n, r):
    lam = n / r - r
    assert_allclose(mode_coefficient(n, r, 1), lam**2 - 1, rtol=1e-12, atol=1e-12)


def test_degree_two_example():
    assert_allclose(mode_coefficient(2, math.sqrt(2), 2), 1.0, atol=1e-14)


@given(st.integers(1, 6), st.floats(0.05, 6.0), st.integers(2, 10))
def test_f0_sector_positive(n, r, k):
    c = mode_coefficient(n, r, k)
    assert c > 0
    assert c >= f0_lower_bound(n, r) * (1 - 1e-12)
    assert_allclose(mode_coefficient(n, r, 2), f0_lower_bound(n, r), rtol=1e-10)


def test_reduced_matrix_is_diagonal_on_mode_basis():
    labels, M, _ = reduced_matrix(3, 1.9, Mode.F, 5)
    assert labels[:2] == ["const", "normal"]
    assert_allclose(M - np.diag(np.diag(M)), 0.0, atol=1e-12)
    _, W, _ = reduced_matrix(3, 1.9, Mode.WEAK, 5)
    assert W.shape == (5, 5)


def test_translation_response_widens_past_upper_threshold():
    n = 2
    r = math.sqrt(3) + 1e-3
    k, g = best_translation_response(n, r)
    assert abs(k) > 10 and g >= 0


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("frac", [0.1, 0.5, 0.9, 1.0])
def test_F_witness_gives_negative_form(n, frac):
    r = math.sqrt(n) + frac * (math.sqrt(n + 1) - math.sqrt(n))
    v = classify_F(n, r)
    assert not v.stable
    q = second_variation_F(sample_surface(Sphere(n, r)), LambdaParams.for_sphere(n, r), v.witness)
    assert q.value < 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_weak_witness_gives_negative_form(n):
    t = ThresholdSet.for_dimension(n)
    r = 0.5 * (t.weak_lower + t.weak_upper)
    v = classify_weak(n, r)
    assert not v.stable
    s = sample_surface(Sphere(n, r))
    f = v.witness.to_variation(n + 1).f
    assert second_variation_T(s, LambdaParams.for_sphere(n, r), f) < 0


@given(st.integers(1, 4), st.floats(0.1, 4.0))
def test_stable_certificates_are_nonnegative(n, r):
    for v in (classify_F(n, r), classify_weak(n, r)):
        if v.stable:
            assert v.certificate >= -1e-10 and v.witness is None
        else:
            assert v.certificate < 0 and v.witness is not None


def test_invalid_inputs():
    with pytest.raises(ValueError):
        classify_F(0, 1.0)
    with pytest.raises(ValueError):
        classify_weak(2, -1.0)
