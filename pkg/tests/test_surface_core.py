import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from lsl.surface_core import (
    Cylinder,
    LambdaParams,
    PlanarCurve,
    Plane,
    ProfileCurve,
    Sphere,
    SurfaceError,
    coarsen,
    curvature_of_polyline,
    descriptor_from_json,
    descriptor_to_json,
    lambda_residual,
    regular_polygon,
    sample_surface,
    unit_sphere_area,
)


def test_circle_circumference():
    s = sample_surface(Sphere(1, 1.0), 256)
    assert len(s) == 256
    assert_allclose(s.total_area(), 2 * math.pi, atol=1e-10)


def test_unit_sphere_area_on_32_by_64_grid():
    s = sample_surface(Sphere(2, 1.0), 64)
    assert len(s) == 32 * 64
    assert_allclose(s.total_area(), 4 * math.pi, atol=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_higher_sphere_areas(n):
    assert_allclose(sample_surface(Sphere(n, 1.3)).total_area(), unit_sphere_area(n) * 1.3**n, rtol=1e-12)


def test_truncated_cylinder_area():
    L = 10.0
    s = sample_surface(Cylinder(1, 2, 1.0, L))
    assert_allclose(s.total_area(), 2 * math.pi * 2 * L, atol=1e-8)


def test_sphere_orientation():
    s = sample_surface(Sphere(2, 1.7))
    assert_allclose(s.support, -1.7, atol=1e-14)
    assert_allclose(np.linalg.norm(s.X, axis=1), 1.7, atol=1e-10)
    assert np.all(s.H * 1.7 == 2.0)


def test_cylinder_curvatures():
    s = sample_surface(Cylinder(2, 3, 1.3))
    assert_allclose(s.H, 2 / 1.3)
    assert_allclose(s.S, 2 / 1.3**2)


def test_surface_point_view():
    p = sample_surface(Sphere(2, 1.0))[5]
    assert_allclose(np.linalg.norm(p.normal), 1.0, atol=1e-12)
    assert p.area_weight > 0
    assert p.second_fundamental_norm_sq >= p.mean_curvature**2 / 2 - 1e-12


@pytest.mark.parametrize(
    "desc",
    [Sphere(1, 0.8), Sphere(2, 1.2), Sphere(3, 2.0), Cylinder(1, 2, 1.0), Cylinder(1, 3, 0.7), Cylinder(2, 3, 1.3), Plane(2)],
)
def test_cauchy_schwarz_and_unit_normals(desc):
    s = sample_surface(desc)
    assert np.all(s.S >= s.H**2 / s.n - 1e-12)
    assert_allclose(np.linalg.norm(s.N, axis=1), 1.0, atol=1e-12)
    assert np.all(s.w > 0)


def test_lambda_residual_examples():
    assert lambda_residual(Sphere(2, 1.0), LambdaParams(1.0, 2)).max <= 1e-12
    assert lambda_residual(Plane(2), LambdaParams(0.0, 2)).max == 0.0
    assert_allclose(lambda_residual(Sphere(2, 1.0), LambdaParams(0.0, 2)).max, 1.0, atol=1e-12)


@given(st.integers(1, 4), st.floats(0.2, 4.0))
def test_lambda_residual_vanishes_on_spheres(n, r):
    assert lambda_residual(Sphere(n, r), LambdaParams.for_sphere(n, r), 8).max <= 1e-10


def test_polygon_curvature_on_circle():
    g = curvature_of_polyline(regular_polygon(1024, 2.0))
    assert np.max(np.abs(g.H - 0.5)) <= 1e-4
    assert_allclose(g.S, g.H**2)


def test_polygon_normals_point_inward():
    pts = regular_polygon(64, 1.5)
    g = curvature_of_polyline(pts)
    assert_allclose(np.einsum("ij,ij->i", pts, g.normal), -1.5, rtol=1e-3)


def test_polygon_length_converges_at_second_order():
    errs = [abs(curvature_of_polyline(regular_polygon(m, 1.0)).area_weight.sum() - 2 * math.pi) for m in (64, 128, 256)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.01)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.01)


def test_ellipse_peak_curvature():
    t = 2 * np.pi * np.arange(2048) / 2048
    g = curvature_of_polyline(np.stack([2 * np.cos(t), np.sin(t)], axis=1))
    assert abs(np.max(g.H) - 2.0) <= 1e-3


def test_collinear_markers_have_zero_curvature():
    pts = np.array([[0, 0], [1, 0], [2, 0], [3, 0], [3, 1], [2, 1], [1, 1], [0, 1]], dtype=float)
    g = curvature_of_polyline(pts)
    assert g.H[1] == 0.0 and g.H[2] == 0.0


def test_polygon_rejections():
    pts = regular_polygon(16)
    with pytest.raises(SurfaceError, match="coincident"):
        PlanarCurve(np.vstack([pts[:3], pts[2:]]))
    with pytest.raises(SurfaceError, match="at least 8"):
        PlanarCurve(regular_polygon(5))


def test_descriptor_validation():
    with pytest.raises(SurfaceError):
        Sphere(2, -1.0)
    with pytest.raises(SurfaceError):
        Cylinder(3, 3, 1.0)
    with pytest.raises(SurfaceError):
        sample_surface("torus")


def test_json_round_trip():
    for desc in (Sphere(2, 1.5), Cylinder(1, 3, 1.0, 10.0), Plane(2)):
        assert descriptor_from_json(descriptor_to_json(desc)) == desc
    c = descriptor_from_json({"kind": "curve", "points": regular_polygon(8).tolist()})
    assert isinstance(c, PlanarCurve)
    with pytest.raises(SurfaceError, match="missing field 'r'"):
        descriptor_from_json({"kind": "sphere", "n": 2})
    with pytest.raises(SurfaceError, match="unknown surface kind"):
        descriptor_from_json('{"kind": "torus"}')


def test_profile_curve_torus_area():
    # circle of radius 1/2 centred at distance 2 from the axis: area 4 pi^2 R rho
    pts = np.array([0.0, 2.0]) + regular_polygon(2048, 0.5)
    s = sample_surface(ProfileCurve(pts, 2))
    assert_allclose(s.total_area(), 4 * math.pi**2 * 2 * 0.5, rtol=1e-5)
    assert np.all(s.S >= s.H**2 / 2 - 1e-12)


def test_coarsen_halves_sphere_resolution():
    s = sample_surface(Sphere(2, 1.0), 64)
    c = coarsen(s)
    assert c.resolution == 32
    assert_allclose(c.total_area(), 4 * math.pi, rtol=1e-12)
