"""Scalar functions on sampled hypersurfaces with analytic derivatives.

A field knows its value, tangential gradient and Laplace-Beltrami
operator on any :class:`~lsl.surface_core.Samples` bundle, computed from
the ambient derivatives of the defining formula and the per-sample shape
operator.  Two primitive families cover everything the identity and
variation checks need:

* functions of position ``g(X)``:
  ``grad = P grad g``, ``Lap = tr(P Hess g) + H <grad g, N>``;
* functions of the normal ``p(N)``:
  ``grad = -A grad p``, ``Lap = tr(A Hess p A) - <grad p, grad H + S N>``.

Sums and products follow the Leibniz rule, so polynomials in the
coordinates of ``X`` and ``N`` are available exactly.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .surface_core import Samples


class Field:
    label = "field"

    def value(self, s: Samples) -> np.ndarray:
        raise NotImplementedError

    def grad(self, s: Samples) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, s: Samples) -> np.ndarray:
        raise NotImplementedError

    def drift_laplacian(self, s: Samples) -> np.ndarray:
        """``Lap f - <X, grad f>``."""
        return self.laplacian(s) - np.einsum("ij,ij->i", s.X, self.grad(s))

    def __call__(self, s: Samples) -> np.ndarray:
        return self.value(s)

    def __add__(self, other):
        return Combination([(1.0, self), (1.0, as_field(other))])

    __radd__ = __add__

    def __sub__(self, other):
        return Combination([(1.0, self), (-1.0, as_field(other))])

    def __rsub__(self, other):
        return Combination([(1.0, as_field(other)), (-1.0, self)])

    def __neg__(self):
        return Combination([(-1.0, self)])

    def __mul__(self, other):
        if np.isscalar(other):
            return Combination([(float(other), self)])
        return Product(self, as_field(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Combination([(1.0 / float(c), self)])

    def __repr__(self) -> str:
        return self.label


def as_field(obj) -> Field:
    if isinstance(obj, Field):
        return obj
    if np.isscalar(obj):
        return Constant(float(obj))
    raise TypeError(f"cannot interpret {obj!r} as a field")


class Constant(Field):
    def __init__(self, c: float = 1.0):
        self.c = float(c)
        self.label = f"{self.c:g}"

    def value(self, s):
        return np.full(len(s), self.c)

    def grad(self, s):
        return np.zeros_like(s.X)

    def laplacian(self, s):
        return np.zeros(len(s))


class Combination(Field):
    def __init__(self, terms):
        flat = []
        for c, f in terms:
            if isinstance(f, Combination):
                flat.extend((c * c2, f2) for c2, f2 in f.terms)
            else:
                flat.append((c, f))
        self.terms = flat
        self.label = " + ".join(f"{c:g}*({f.label})" for c, f in flat)

    def value(self, s):
        return sum(c * f.value(s) for c, f in self.terms)

    def grad(self, s):
        return sum(c * f.grad(s) for c, f in self.terms)

    def laplacian(self, s):
        return sum(c * f.laplacian(s) for c, f in self.terms)


class Product(Field):
    def __init__(self, f: Field, g: Field):
        self.f, self.g = f, g
        self.label = f"({f.label})*({g.label})"

    def value(self, s):
        return self.f.value(s) * self.g.value(s)

    def grad(self, s):
        return self.f.value(s)[:, None] * self.g.grad(s) + self.g.value(s)[:, None] * self.f.grad(s)

    def laplacian(self, s):
        fv, gv = self.f.value(s), self.g.value(s)
        cross = np.einsum("ij,ij->i", self.f.grad(s), self.g.grad(s))
        return fv * self.g.laplacian(s) + gv * self.f.laplacian(s) + 2.0 * cross


Vectorized = Callable[[np.ndarray], np.ndarray]


class PositionField(Field):
    """``g(X)`` given ambient value, gradient and Hessian callables."""

    def __init__(self, g: Vectorized, grad_g: Vectorized, hess_g: Vectorized, label="g(X)"):
        self.g, self.grad_g, self.hess_g = g, grad_g, hess_g
        self.label = label

    def value(self, s):
        return self.g(s.X)

    def grad(self, s):
        G = self.grad_g(s.X)
        return G - np.einsum("ij,ij->i", G, s.N)[:, None] * s.N

    def laplacian(self, s):
        Hs = self.hess_g(s.X)
        tr = np.trace(Hs, axis1=1, axis2=2) - np.einsum("ij,ijk,ik->i", s.N, Hs, s.N)
        return tr + s.H * np.einsum("ij,ij->i", self.grad_g(s.X), s.N)


class NormalField(Field):
    """``p(N)`` given ambient value, gradient and Hessian callables."""

    def __init__(self, p: Vectorized, grad_p: Vectorized, hess_p: Vectorized, label="p(N)"):
        self.p, self.grad_p, self.hess_p = p, grad_p, hess_p
        self.label = label

    def value(self, s):
        return self.p(s.N)

    def grad(self, s):
        return -np.einsum("ijk,ik->ij", s.shape, self.grad_p(s.N))

    def laplacian(self, s):
        A = s.shape
        Hp = self.hess_p(s.N)
        tr = np.einsum("ijk,ikl,ilj->i", A, Hp, A)
        G = self.grad_p(s.N)
        return tr - np.einsum("ij,ij->i", G, s.grad_H) - s.S * np.einsum("ij,ij->i", G, s.N)


def _vec(a) -> np.ndarray:
    return np.asarray(a, dtype=float)


def linear(a) -> PositionField:
    """``<X, a>``."""
    a = _vec(a)
    return PositionField(
        lambda X: X @ a,
        lambda X: np.broadcast_to(a, X.shape).copy(),
        lambda X: np.zeros((len(X), len(a), len(a))),
        label=f"<X,{a.tolist()}>",
    )


def radial_sq() -> PositionField:
    """``|X|^2``."""
    return PositionField(
        lambda X: np.einsum("ij,ij->i", X, X),
        lambda X: 2.0 * X,
        lambda X: np.broadcast_to(2.0 * np.eye(X.shape[1]), (len(X), X.shape[1], X.shape[1])).copy(),
        label="|X|^2",
    )


def normal_dot(a) -> NormalField:
    """``<N, a>``."""
    a = _vec(a)
    return NormalField(
        lambda N: N @ a,
        lambda N: np.broadcast_to(a, N.shape).copy(),
        lambda N: np.zeros((len(N), len(a), len(a))),
        label=f"<N,{a.tolist()}>",
    )


def harmonic(k: int, u, v) -> NormalField:
    """``Re((<N,u> + i<N,v>)^k)`` for orthonormal ``u, v``.

    A homogeneous harmonic polynomial of degree k evaluated on the normal;
    on a round sphere it is a Laplace eigenfunction of degree k.
    """
    u, v = _vec(u), _vec(v)
    if abs(u @ v) > 1e-12 or abs(u @ u - 1) > 1e-12 or abs(v @ v - 1) > 1e-12:
        raise ValueError("harmonic() needs orthonormal u, v")
    if k < 0:
        raise ValueError("degree must be >= 0")

    def zpow(N, p):
        z = N @ u + 1j * (N @ v)
        return z**p if p >= 0 else np.zeros_like(z)

    def val(N):
        return np.real(zpow(N, k))

    def grad(N):
        dz = k * zpow(N, k - 1)
        # d/du-coordinate Re(z^k) = Re(k z^(k-1)); d/dv-coordinate = Re(i k z^(k-1))
        return np.real(dz)[:, None] * u[None] + np.real(1j * dz)[:, None] * v[None]

    def hess(N):
        d2 = k * (k - 1) * zpow(N, k - 2)
        huu = np.real(d2)
        huv = np.real(1j * d2)
        hvv = -huu
        uu, uv, vv = np.outer(u, u), np.outer(u, v) + np.outer(v, u), np.outer(v, v)
        return huu[:, None, None] * uu + huv[:, None, None] * uv + hvv[:, None, None] * vv

    return NormalField(val, grad, hess, label=f"harm{k}")


def basis_vector(d: int, i: int) -> np.ndarray:
    e = np.zeros(d)
    e[i] = 1.0
    return e


def field_from_spec(spec: str, d: int) -> Field:
    """Parse the battery notation ``const``, ``const:c``, ``linear:[z...]``
    (meaning ``<z, N>``) or ``harmonic:k`` (in the first two coordinates)."""
    kind, _, arg = spec.partition(":")
    if kind == "const":
        return Constant(float(arg) if arg else 1.0)
    if kind == "linear":
        import json

        z = np.asarray(json.loads(arg), dtype=float)
        if z.shape != (d,):
            raise ValueError(f"linear mode needs {d} components, got {z.shape}")
        return normal_dot(z)
    if kind == "harmonic":
        return harmonic(int(arg), basis_vector(d, 0), basis_vector(d, 1))
    raise ValueError(f"unknown field spec {spec!r}")
