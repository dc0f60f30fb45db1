"""Plain and Gaussian-weighted surface integrals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .fields import Field
from .surface_core import Samples, SurfaceError, coarsen, unit_sphere_area


class IntegrandError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianFrame:
    """Centre ``X0`` and scale ``t0`` of the weight ``exp(-|X - X0|^2 / (2 t0))``."""

    center: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"Gaussian scale must be positive, got {self.scale}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @classmethod
    def standard(cls, dim: int) -> "GaussianFrame":
        return cls(np.zeros(dim), 1.0)

    def weight(self, X: np.ndarray) -> np.ndarray:
        D = X - self.center
        return np.exp(-np.einsum("ij,ij->i", D, D) / (2.0 * self.scale))


@dataclass(frozen=True)
class WeightedIntegral:
    value: float
    estimated_error: float = 0.0

    def __float__(self) -> float:
        return self.value


Integrand = Union[Field, Callable[[Samples], np.ndarray]]


def _evaluate(samples: Samples, integrand: Integrand) -> np.ndarray:
    vals = np.broadcast_to(np.asarray(integrand(samples), dtype=float), (len(samples),))
    bad = np.nonzero(~np.isfinite(vals))[0]
    if len(bad):
        i = int(bad[0])
        raise IntegrandError(f"integrand is not finite at sample {i} (value {vals[i]!r})")
    return vals


def weighted_sum(samples: Samples, values: np.ndarray, frame: Optional[GaussianFrame] = None) -> float:
    w = samples.w if frame is None else samples.w * frame.weight(samples.X)
    return float(np.sum(values * w))


def integrate(
    samples: Samples,
    integrand: Integrand,
    frame: Optional[GaussianFrame] = None,
    estimate_error: bool = False,
) -> WeightedIntegral:
    """``int g dmu`` or, with a frame, ``int g exp(-|X-X0|^2/(2 t0)) dmu``.

    With ``estimate_error`` the integral is repeated at half resolution and
    the difference is reported as ``estimated_error``.
    """
    if len(samples) == 0:
        raise SurfaceError("cannot integrate over an empty sample set")
    value = weighted_sum(samples, _evaluate(samples, integrand), frame)
    err = 0.0
    if estimate_error:
        coarse = coarsen(samples)
        err = abs(value - weighted_sum(coarse, _evaluate(coarse, integrand), frame))
    return WeightedIntegral(value, err)


def gaussian_mean(samples: Samples, values: np.ndarray) -> float:
    w = samples.w * np.exp(-0.5 * np.einsum("ij,ij->i", samples.X, samples.X))
    return float(np.sum(values * w) / np.sum(w))


def sphere_moment(n: int, r: float, degree: int, z=None) -> float:
    """``int_{S^n(r)} <z, N>^degree dmu`` in closed form (degree 0, 1 or 2)."""
    area = unit_sphere_area(n) * r**n
    if degree == 0:
        return area
    if degree == 1:
        return 0.0
    if degree == 2:
        zz = 1.0 if z is None else float(np.dot(z, z))
        return zz * area / (n + 1)
    raise ValueError(f"sphere_moment supports degree 0, 1, 2; got {degree}")


def integration_by_parts_residual(samples: Samples, u: Field, v: Field) -> float:
    """``|int u (Lv) e^{-|X|^2/2} + int <grad u, grad v> e^{-|X|^2/2}|``.

    ``L`` is the drift Laplacian ``Lap - <X, grad>``.  Vanishes (to
    quadrature accuracy) on closed surfaces, and on open ones when the
    Gaussian weight makes the boundary flux negligible.
    """
    frame = GaussianFrame.standard(samples.dim)
    lhs = integrate(samples, lambda s: u.value(s) * v.drift_laplacian(s), frame).value
    rhs = integrate(samples, lambda s: np.einsum("ij,ij->i", u.grad(s), v.grad(s)), frame).value
    return abs(lhs + rhs)
