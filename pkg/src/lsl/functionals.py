"""Gaussian-weighted area, weighted volume, the F-functional, and identity checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import fields as fl
from .quadrature import GaussianFrame, integrate, weighted_sum
from .surface_core import LambdaParams, Samples, as_samples, lambda_residual


class NotALambdaSurface(ValueError):
    def __init__(self, measured: float, lam: float):
        super().__init__(
            f"surface is not a lambda-hypersurface for lambda={lam:g}: "
            f"max |<X,N> + H - lambda| = {measured:.3e}"
        )
        self.measured = measured


@dataclass(frozen=True)
class FunctionalValue:
    f_value: float
    t_value: float
    v_value: float


@dataclass(frozen=True)
class IdentityReport:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def to_json(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tolerance": self.tolerance, "pass": self.passed}


def _frame(s: Samples, frame: Optional[GaussianFrame]) -> GaussianFrame:
    return GaussianFrame.standard(s.dim) if frame is None else frame


def weighted_area(surface, frame: Optional[GaussianFrame] = None) -> float:
    """``(4 pi t0)^(-n/2) int exp(-|X - X0|^2 / (2 t0)) dmu``."""
    s = as_samples(surface)
    fr = _frame(s, frame)
    return (4.0 * math.pi * fr.scale) ** (-s.n / 2) * weighted_sum(s, np.ones(len(s)), fr)


def weighted_volume(surface, frame: Optional[GaussianFrame] = None) -> float:
    """``int <X - X0, N> exp(-|X - X0|^2 / (2 t0)) dmu`` (unnormalized)."""
    s = as_samples(surface)
    fr = _frame(s, frame)
    return weighted_sum(s, np.einsum("ij,ij->i", s.X - fr.center, s.N), fr)


def f_functional(surface, frame: Optional[GaussianFrame], params: LambdaParams) -> FunctionalValue:
    s = as_samples(surface)
    fr = _frame(s, frame)
    t = weighted_area(s, fr)
    v = weighted_volume(s, fr)
    f = t + params.lam * (4.0 * math.pi * fr.scale) ** (-s.n / 2) * v
    return FunctionalValue(f, t, v)


def _check_lambda(s: Samples, params: LambdaParams, tol: float = 1e-8) -> None:
    res = lambda_residual(s, params).max
    if res > tol:
        raise NotALambdaSurface(res, params.lam)


def _directions(d: int) -> list:
    dirs = [fl.basis_vector(d, i) for i in range(d)]
    g = np.arange(1.0, d + 1.0) * np.array([1.0, -0.7, 0.45, -0.3, 0.2][:d] + [0.1] * max(0, d - 5))
    dirs.append(g / np.linalg.norm(g))
    return dirs


def drift_identity_residuals(
    surface, params: LambdaParams, tolerance: float = 1e-8, strict: bool = True
) -> List[IdentityReport]:
    """Pointwise drift-Laplacian identities of lambda-hypersurfaces.

    * ``L<X,a> = lambda <N,a> - <X,a>``
    * ``L<N,a> = -S <N,a>``
    * ``L|X|^2 / 2 = n - |X|^2 + lambda <X,N>``

    Residuals are sup norms over samples and a set of directions ``a``.
    With ``strict=False`` the lambda-hypersurface precondition is skipped.
    """
    s = as_samples(surface)
    if strict:
        _check_lambda(s, params)
    lam = params.lam
    Xn = s.support
    r_lin = r_nor = 0.0
    for a in _directions(s.dim):
        xa, na = s.X @ a, s.N @ a
        r_lin = max(r_lin, float(np.max(np.abs(fl.linear(a).drift_laplacian(s) - lam * na + xa))))
        r_nor = max(r_nor, float(np.max(np.abs(fl.normal_dot(a).drift_laplacian(s) + s.S * na))))
    X2 = np.einsum("ij,ij->i", s.X, s.X)
    r_rad = float(np.max(np.abs(0.5 * fl.radial_sq().drift_laplacian(s) - s.n + X2 - lam * Xn)))
    return [
        IdentityReport("drift-position", r_lin, tolerance),
        IdentityReport("drift-normal", r_nor, tolerance),
        IdentityReport("drift-radius", r_rad, tolerance),
    ]


def _rel(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def integral_identity_residuals(
    surface, params: LambdaParams, tolerance: float = 1e-6, strict: bool = True
) -> List[IdentityReport]:
    """Gaussian-weighted integral identities of lambda-hypersurfaces.

    Each residual is ``|lhs - rhs| / max(1, |lhs|, |rhs|)``, maximized over
    a set of directions where the identity involves one.
    """
    s = as_samples(surface)
    if strict:
        _check_lambda(s, params)
    lam, n = params.lam, s.n
    fr = GaussianFrame.standard(s.dim)
    X2 = np.einsum("ij,ij->i", s.X, s.X)
    Xn = s.support
    H = s.H

    def I(vals):
        return weighted_sum(s, vals, fr)

    r_first = r_cubic = r_quad = 0.0
    for a in _directions(s.dim):
        xa, na = s.X @ a, s.N @ a
        aT2 = a @ a - na**2
        r_first = max(r_first, _rel(I(xa), I(lam * na)))
        r_cubic = max(
            r_cubic,
            _rel(I(xa * X2), I(2 * n * lam * na + 2 * lam * xa * (lam - H) - lam * na * X2)),
        )
        r_quad = max(r_quad, _rel(I(xa**2), I(aT2 + lam * na * xa)))
    r_radial = _rel(I(n - X2 + lam * Xn), 0.0)
    r_square = _rel(
        I((X2 - n - lam * (lam - H) / 2) ** 2),
        I((lam**2 / 4 - 1) * (lam - H) ** 2 + 2 * n - H**2 + lam**2),
    )
    return [
        IdentityReport("weighted-position-mean", r_first, tolerance),
        IdentityReport("weighted-radius-balance", r_radial, tolerance),
        IdentityReport("weighted-cubic-moment", r_cubic, tolerance),
        IdentityReport("weighted-quadratic-moment", r_quad, tolerance),
        IdentityReport("weighted-radius-variance", r_square, tolerance),
    ]
