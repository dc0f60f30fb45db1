import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from lsl import fields as fl
from lsl.functionals import (
    NotALambdaSurface,
    drift_identity_residuals,
    f_functional,
    integral_identity_residuals,
    weighted_area,
    weighted_volume,
)
from lsl.quadrature import GaussianFrame, weighted_sum
from lsl.surface_core import Cylinder, LambdaParams, Plane, Sphere, canonical_lambda, sample_surface, unit_sphere_area

STD3 = GaussianFrame.standard(3)


def test_weighted_area_examples():
    assert_allclose(weighted_area(Sphere(2, math.sqrt(2)), STD3), 2 * math.exp(-1), atol=1e-12)
    assert_allclose(weighted_area(Plane(2), STD3), 0.5, atol=1e-12)


@given(st.floats(0.3, 2.5), st.floats(0.5, 2.0))
def test_weighted_area_scale_invariance(r, c):
    base = weighted_area(Sphere(2, r), GaussianFrame(np.zeros(3), 1.0))
    scaled = weighted_area(Sphere(2, c * r), GaussianFrame(np.zeros(3), c * c))
    assert_allclose(scaled, base, rtol=1e-12)


def test_weighted_volume_examples():
    assert_allclose(weighted_volume(Sphere(2, 1.0), STD3), -4 * math.pi * math.exp(-0.5), rtol=1e-12)
    assert weighted_volume(Plane(2), STD3) == 0.0
    assert_allclose(weighted_volume(Sphere(1, 2.0), GaussianFrame.standard(2)), -8 * math.pi * math.exp(-2), rtol=1e-12)


def test_f_functional_examples():
    assert abs(f_functional(Sphere(2, 1.0), STD3, LambdaParams(1.0, 2)).f_value) <= 1e-12
    v = f_functional(Sphere(1, 1.0), GaussianFrame.standard(2), LambdaParams(0.0, 1))
    assert_allclose(v.f_value, (4 * math.pi) ** -0.5 * 2 * math.pi * math.exp(-0.5), rtol=1e-12)
    assert v.f_value == v.t_value


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("r", [0.5, 0.9, 1.4, 2.0, 2.7])
def test_f_functional_closed_form(n, r):
    lam = n / r - r
    got = f_functional(Sphere(n, r), GaussianFrame.standard(n + 1), LambdaParams(lam, n)).f_value
    expected = (4 * math.pi) ** (-n / 2) * unit_sphere_area(n) * r**n * math.exp(-r * r / 2) * (1 - lam * r)
    assert_allclose(got, expected, atol=1e-9)


CANONICAL = [Sphere(n, r) for n in (1, 2, 3) for r in (0.8, 1.0, 1.5)] + [
    Cylinder(1, 2, 1.0), Cylinder(1, 3, 1.0), Cylinder(2, 3, math.sqrt(2)),
    Cylinder(1, 2, 0.7), Cylinder(1, 3, 0.7), Cylinder(2, 3, 1.3),
]


@pytest.mark.parametrize("desc", CANONICAL, ids=repr)
def test_identities_on_canonical_surfaces(desc):
    s = sample_surface(desc)
    p = LambdaParams(canonical_lambda(desc), desc.n)
    for rep in drift_identity_residuals(s, p) + integral_identity_residuals(s, p):
        assert rep.passed, rep


def test_drift_identities_reject_wrong_lambda():
    with pytest.raises(NotALambdaSurface, match="1.000e\\+00"):
        drift_identity_residuals(Sphere(2, 1.0), LambdaParams(0.0, 2))
    reps = drift_identity_residuals(Sphere(2, 1.0), LambdaParams(0.0, 2), strict=False)
    assert reps[0].name == "drift-position"
    assert reps[0].residual > 0.1


def test_radius_balance_is_pointwise_zero_on_sphere():
    n, r = 2, 1.5
    s = sample_surface(Sphere(n, r))
    lam = n / r - r
    X2 = np.einsum("ij,ij->i", s.X, s.X)
    assert_allclose(n - X2 + lam * s.support, 0.0, atol=1e-13)


def test_quadratic_moment_on_unit_circle_by_brute_force():
    # both sides of the <X,a>^2 identity with a = e1 from an independent trapezoid rule
    th = 2 * np.pi * np.arange(4096) / 4096
    w = np.exp(-0.5) * 2 * np.pi / 4096
    lhs = np.sum(np.cos(th) ** 2) * w
    # |a^T|^2 = sin^2, <N,a><X,a> = -cos^2, lambda = 0
    rhs = np.sum(np.sin(th) ** 2) * w
    assert_allclose(lhs, rhs, atol=1e-9)
    s = sample_surface(Sphere(1, 1.0))
    rep = {r.name: r for r in integral_identity_residuals(s, LambdaParams(0.0, 1))}
    assert rep["weighted-quadratic-moment"].residual <= 1e-9
    assert_allclose(weighted_sum(s, s.X[:, 0] ** 2, GaussianFrame.standard(2)), lhs, rtol=1e-12)


def test_identity_report_json():
    rep = drift_identity_residuals(Sphere(2, 1.0), LambdaParams(1.0, 2))[1]
    js = rep.to_json()
    assert set(js) == {"name", "residual", "tolerance", "pass"}
    assert js["pass"] is True
