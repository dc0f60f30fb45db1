import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from lsl import fields as fl
from lsl.growth import (
    annulus_check,
    area_in_ball,
    bound_exponent,
    growth_exponent,
    linear_lower_bound_check,
    log_sobolev_case,
    log_sobolev_check,
    log_sobolev_resolution_drift,
    polyline_length_in_ball,
)
from lsl.surface_core import Cylinder, LambdaParams, Plane, Sphere, SurfaceError, regular_polygon, sample_surface

CYLINDERS = [Cylinder(1, 2, 1.0), Cylinder(1, 3, 1.0), Cylinder(2, 3, math.sqrt(2)), Cylinder(1, 3, 0.7)]


def test_area_examples():
    assert_allclose(area_in_ball(Cylinder(1, 2, 1.0), 2.0), 4 * math.pi * math.sqrt(3))
    assert_allclose(area_in_ball(Plane(2), 3.0), 9 * math.pi)
    assert area_in_ball(Sphere(2, 1.0), 0.5) == 0.0
    assert_allclose(area_in_ball(Sphere(2, 1.0), 1.5), 4 * math.pi)
    with pytest.raises(SurfaceError):
        area_in_ball("torus", 1.0)


@given(st.sampled_from(CYLINDERS + [Plane(2), Plane(3), Cylinder(2, 3, 1.3)]), st.floats(0.1, 50), st.floats(0.0, 5))
def test_areas_monotone(desc, r, dr):
    assert area_in_ball(desc, r + dr) >= area_in_ball(desc, r)


@pytest.mark.parametrize("desc", CYLINDERS, ids=repr)
def test_cylinder_exponent_equals_bound(desc):
    prof = growth_exponent(desc, 2.0, 64.0, 32)
    assert abs(prof.fitted_exponent - prof.bound_exponent) <= 0.05
    assert_allclose(prof.bound_exponent, desc.n - desc.k, atol=1e-12)


def test_plane_exponent():
    prof = growth_exponent(Plane(2), 1.0, 64.0)
    assert_allclose(prof.fitted_exponent, 2.0, atol=1e-12)
    assert prof.bound_exponent == 2.0
    assert prof.to_csv().splitlines()[0] == "r,area,log_r,log_area"


@given(st.integers(1, 4), st.integers(0, 3), st.floats(0.3, 3.0))
def test_bound_exponent_at_most_n_for_shrinkers(k, extra, r0):
    n = k + 1 + extra
    assert bound_exponent(Cylinder(k, n, r0)) < n
    assert bound_exponent(Plane(n)) == n


def test_compact_surfaces_rejected():
    with pytest.raises(SurfaceError):
        growth_exponent(Sphere(2, 1.0), 1.0, 10.0)
    with pytest.raises(ValueError):
        growth_exponent(Plane(2), 1.0, 2.0)


def test_annulus_examples():
    rep = annulus_check(Cylinder(1, 2, 1.0), 1, 64)
    assert np.all(rep.ratios[rep.t >= 3] <= 2)
    plane = annulus_check(Plane(2), 1, 64)
    assert_allclose(plane.ratios, (2 * plane.t + 1) / plane.t)
    assert plane.ratio_bound <= 3
    assert np.all(plane.doubling[plane.t >= 3])
    assert plane.doubling_onset == 3


def test_linear_lower_bound():
    for desc in CYLINDERS + [Plane(2)]:
        assert linear_lower_bound_check(desc).passed
    rep = linear_lower_bound_check(Cylinder(1, 2, 1.0))
    assert_allclose(rep.slope, 4 * math.pi, rtol=1e-3)


def test_polyline_length_in_ball():
    pts = regular_polygon(256, 1.0)
    total = np.sum(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1))
    assert_allclose(polyline_length_in_ball(pts, 2.0), total)
    assert polyline_length_in_ball(pts, 0.5) == 0.0
    square = np.array([[x, -1.0] for x in np.linspace(-1, 1, 5)[:-1]] + [[1.0, y] for y in np.linspace(-1, 1, 5)[:-1]]
                      + [[x, 1.0] for x in np.linspace(1, -1, 5)[:-1]] + [[-1.0, y] for y in np.linspace(1, -1, 5)[:-1]])
    # circle of radius sqrt(2)/... : each side contributes 2 sqrt(r^2 - 1)
    r = 1.2
    assert_allclose(polyline_length_in_ball(square, r), 4 * 2 * math.sqrt(r * r - 1))


def test_log_sobolev_constant_function_closed_form():
    n, r = 2, 1.0
    s = sample_surface(Sphere(n, r))
    p = LambdaParams.for_sphere(n, r)
    case = log_sobolev_case(s, fl.Constant(3.0), p)
    mass = 4 * math.pi * math.exp(-0.5)
    assert_allclose(case.lhs, -0.5 * math.log(mass), rtol=1e-12)
    assert case.gradient_term == 0.0
    assert_allclose(case.minimal_c1, 2 * (-0.5 * math.log(mass) - 0.25), rtol=1e-12)


def test_log_sobolev_zero_set_convention():
    s = sample_surface(Sphere(1, 1.0))
    e1 = fl.basis_vector(2, 0)
    f = (1.0 + fl.normal_dot(e1)) * (1.0 + fl.normal_dot(e1))
    assert np.isfinite(log_sobolev_case(s, f, LambdaParams(0.0, 1)).minimal_c1)


def test_log_sobolev_rejects_negative_f():
    s = sample_surface(Sphere(1, 1.0))
    with pytest.raises(ValueError, match="nonnegative"):
        log_sobolev_case(s, fl.normal_dot(fl.basis_vector(2, 0)), LambdaParams(0.0, 1))


@pytest.mark.parametrize("n", [1, 2])
def test_log_sobolev_battery(n):
    worst = -math.inf
    reps = []
    for r in (0.8, 1.0, 1.6):
        s = sample_surface(Sphere(n, r))
        p = LambdaParams.for_sphere(n, r)
        rep = log_sobolev_check(s, p)
        reps.append(rep)
        worst = max(worst, rep.minimal_c1)
        # on lambda-hypersurfaces both forms give the same constant
        assert_allclose(rep.minimal_c1, rep.minimal_c1_general, atol=1e-12)
        assert log_sobolev_resolution_drift(s, p) <= 1e-3
    assert np.isfinite(worst)
    assert all(rep.all_pass(worst) for rep in reps)
    assert not all(rep.all_pass(worst - 1e-3) for rep in reps)
