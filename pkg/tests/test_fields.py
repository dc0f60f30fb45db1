import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from lsl import fields as fl
from lsl.surface_core import Cylinder, Sphere, sample_surface

e = fl.basis_vector


@given(st.integers(1, 3), st.floats(0.3, 3.0))
def test_linear_function_laplacian_on_sphere(n, r):
    s = sample_surface(Sphere(n, r), 16)
    a = np.linspace(1.0, -0.5, n + 1)
    # Lap <X,a> = H <N,a>
    assert_allclose(fl.linear(a).laplacian(s), s.H * (s.N @ a), atol=1e-12)


@given(st.integers(2, 6), st.floats(0.4, 2.5))
def test_harmonic_is_laplace_eigenfunction(k, r):
    n = 2
    s = sample_surface(Sphere(n, r), 32)
    h = fl.harmonic(k, e(3, 0), e(3, 1))
    mu = k * (k + n - 1) / r**2
    assert_allclose(h.laplacian(s), -mu * h.value(s), atol=1e-9 * max(1.0, mu))


def test_product_rule_matches_direct_formula():
    s = sample_surface(Cylinder(1, 2, 1.3), (16, 8))
    f = fl.linear(e(3, 2)) * fl.linear(e(3, 2))
    g = fl.PositionField(
        lambda X: X[:, 2] ** 2,
        lambda X: 2 * X[:, 2, None] * e(3, 2),
        lambda X: np.broadcast_to(2 * np.outer(e(3, 2), e(3, 2)), (len(X), 3, 3)),
    )
    assert_allclose(f.laplacian(s), g.laplacian(s), atol=1e-12)
    assert_allclose(f.grad(s), g.grad(s), atol=1e-12)


def test_arithmetic_combinations():
    s = sample_surface(Sphere(2, 1.0), 8)
    f = 2.0 * fl.Constant(1.5) - fl.normal_dot(e(3, 0)) / 2 + 1.0
    assert_allclose(f.value(s), 4.0 - 0.5 * s.N[:, 0])
    assert_allclose((-f).value(s), -f.value(s))


def test_field_from_spec():
    s = sample_surface(Sphere(2, 1.0), 8)
    assert_allclose(fl.field_from_spec("const", 3).value(s), 1.0)
    assert_allclose(fl.field_from_spec("const:2.5", 3).value(s), 2.5)
    assert_allclose(fl.field_from_spec("linear:[0, 0, 2]", 3).value(s), 2 * s.N[:, 2])
    h2 = fl.field_from_spec("harmonic:2", 3).value(s)
    assert_allclose(h2, s.N[:, 0] ** 2 - s.N[:, 1] ** 2, atol=1e-14)
