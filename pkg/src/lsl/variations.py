"""First and second variations of the F- and T-functionals.

The closed-form variation formulas are checked against finite differences
of the functional itself, evaluated on the normal graph
``X(s) = X + s f N`` with centre ``X0 + s y`` and scale ``t0 + s h``.  The
area element of the graph is computed exactly from the shape operator and
the tangential gradient of ``f``:

    dmu_s / dmu = sqrt(det(B^T B + N N^T)),   B = P - s f A + N (s grad f)^T,

so the finite-difference side never touches ``H`` or the variation
formulas.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import fields as fl
from .fields import Field, as_field
from .quadrature import GaussianFrame, weighted_sum
from .surface_core import LambdaParams, Samples, Sphere, as_samples, unit_sphere_area


class VariationError(ValueError):
    pass


@dataclass(frozen=True)
class VariationData:
    """Normal speed ``f``, centre velocity ``y`` and scale velocity ``h``."""

    f: Field
    y: np.ndarray
    h: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "f", as_field(self.f))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))

    @classmethod
    def zero(cls, dim: int) -> "VariationData":
        return cls(fl.Constant(0.0), np.zeros(dim), 0.0)

    def scaled(self, c: float) -> "VariationData":
        return VariationData(c * self.f, c * self.y, c * self.h)


@dataclass(frozen=True)
class SphereVariation:
    """``f = f0 + a + <z, N>`` with responses ``y = k z`` and ``h``.

    ``f0`` must be a combination of sphere harmonics of degree >= 2.
    """

    f0: Optional[Field] = None
    a: float = 0.0
    z: Sequence[float] = ()
    k: float = 0.0
    h: float = 0.0

    def to_variation(self, dim: int) -> VariationData:
        z = np.zeros(dim) if len(self.z) == 0 else np.asarray(self.z, dtype=float)
        f = fl.Constant(self.a) + fl.normal_dot(z)
        if self.f0 is not None:
            f = f + self.f0
        return VariationData(f, self.k * z, self.h)


@dataclass(frozen=True)
class QuadraticFormValue:
    value: float
    term_breakdown: Dict[str, float] = field(default_factory=dict)


# --------------------------------------------------------------------------
# first variation
# --------------------------------------------------------------------------

def _frame(s: Samples, frame: Optional[GaussianFrame]) -> GaussianFrame:
    return GaussianFrame.standard(s.dim) if frame is None else frame


def first_variation(surface, frame: Optional[GaussianFrame], params: LambdaParams, var: VariationData) -> float:
    """``F'(0)`` for the normal speed ``f`` and centre/scale velocities ``y, h``."""
    s = as_samples(surface)
    fr = _frame(s, frame)
    t0, lam, n = fr.scale, params.lam, s.n
    D = s.X - fr.center
    Dn = np.einsum("ij,ij->i", D, s.N)
    D2 = np.einsum("ij,ij->i", D, D)
    f = var.f.value(s)
    integrand = (
        (lam - (s.H + Dn / t0)) * f
        + (D @ var.y) / t0
        - lam * (s.N @ var.y)
        + (D2 / t0 - n - lam * Dn) * var.h / (2.0 * t0)
    )
    return (4.0 * math.pi * t0) ** (-n / 2) * weighted_sum(s, integrand, fr)


def area_jacobian(s: Samples, phi: np.ndarray, grad_phi: np.ndarray) -> np.ndarray:
    """``dmu_s / dmu`` for the normal graph ``X + phi N``."""
    P = s.tangent_projector()
    B = P - phi[:, None, None] * s.shape + s.N[:, :, None] * grad_phi[:, None, :]
    G = np.einsum("mki,mkj->mij", B, B) + s.N[:, :, None] * s.N[:, None, :]
    det = np.linalg.det(G)
    if np.any(det <= 0):
        raise VariationError("normal graph degenerates (non-positive area element); reduce the step")
    return np.sqrt(det)


def f_functional_along(
    surface, frame: Optional[GaussianFrame], params: LambdaParams, var: VariationData, step: float,
    include_volume: bool = True,
) -> float:
    """The F-functional at parameter ``step`` along the straight deformation family.

    The weighted-volume term keeps the initial normal, weight and measure.
    With ``include_volume=False`` this is the T-functional.
    """
    s = as_samples(surface)
    fr = _frame(s, frame)
    n, lam, t0 = s.n, params.lam, fr.scale
    fv = var.f.value(s)
    phi = step * fv
    Xs = s.X + phi[:, None] * s.N
    cs = fr.center + step * var.y
    ts = t0 + step * var.h
    if ts <= 0:
        raise VariationError(f"scale t_s = {ts} is not positive; reduce the step")
    J = area_jacobian(s, phi, step * var.f.grad(s))
    Ds = Xs - cs
    gauss_s = np.exp(-np.einsum("ij,ij->i", Ds, Ds) / (2.0 * ts))
    value = (4.0 * math.pi * ts) ** (-n / 2) * float(np.sum(s.w * J * gauss_s))
    if include_volume:
        vol = weighted_sum(s, np.einsum("ij,ij->i", Ds, s.N), fr)
        value += lam * (4.0 * math.pi * t0) ** (-n / 2) * math.sqrt(t0 / ts) * vol
    return value


@dataclass
class FDReport:
    formula: float
    steps: List[float]
    estimates: List[float]
    errors: List[float]
    order: float
    check_step: float
    check_error: float
    converged: bool

    def to_json(self) -> dict:
        return {
            "formula": self.formula,
            "steps": self.steps,
            "estimates": self.estimates,
            "errors": self.errors,
            "order": self.order,
            "check_step": self.check_step,
            "check_error": self.check_error,
            "converged": self.converged,
        }


DEFAULT_STEPS = (0.08, 0.04, 0.02, 0.01)


def _observed_order(steps, errors, floor) -> float:
    pts = [(math.log(h), math.log(e)) for h, e in zip(steps, errors) if e > floor]
    if len(pts) < 2:
        return float("nan")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def _fd_report(formula, estimator, steps, check_step, floor) -> FDReport:
    estimates = [estimator(h) for h in steps]
    errors = [abs(e - formula) for e in estimates]
    order = _observed_order(steps, errors, floor)
    check_error = abs(estimator(check_step) - formula)
    converged = (not math.isnan(order) and order >= 1.5) or max(errors) <= floor
    return FDReport(formula, list(steps), estimates, errors, order, check_step, check_error, converged)


def fd_check_first_variation(
    surface, frame: Optional[GaussianFrame], params: LambdaParams, var: VariationData,
    steps: Sequence[float] = DEFAULT_STEPS, check_step: float = 1e-3, floor: float = 1e-12,
) -> FDReport:
    """Central differences of F(s) against :func:`first_variation`."""
    s = as_samples(surface)
    formula = first_variation(s, frame, params, var)

    def central(h):
        return (f_functional_along(s, frame, params, var, h) - f_functional_along(s, frame, params, var, -h)) / (2 * h)

    return _fd_report(formula, central, steps, check_step, floor)


# --------------------------------------------------------------------------
# second variation
# --------------------------------------------------------------------------

def _stability_operator(s: Samples, lam: float, f: Field) -> np.ndarray:
    """``L f = (drift Laplacian) f + (S + 1 - lambda^2) f``."""
    return f.drift_laplacian(s) + (s.S + 1.0 - lam**2) * f.value(s)


def second_variation_terms(surface, params: LambdaParams, var: VariationData) -> QuadraticFormValue:
    """``(4 pi)^(n/2) F''(0)`` at a critical point (centre 0, scale 1), by quadrature."""
    s = as_samples(surface)
    fr = GaussianFrame.standard(s.dim)
    lam, n, y, h = params.lam, s.n, var.y, var.h
    f = var.f.value(s)
    X2 = np.einsum("ij,ij->i", s.X, s.X)
    Xy, Ny = s.X @ y, s.N @ y

    def I(vals):
        return weighted_sum(s, vals, fr)

    terms = {
        "minus_fLf": I(-f * _stability_operator(s, lam, var.f)),
        "y_quadratic": I(-(y @ y) + Xy**2),
        "f_cross": I((2 * Ny + (n + 1 - X2) * lam * h - 2 * h * s.H - 2 * lam * Xy) * f),
        "yh_cross": I((X2 - n - 1) * Xy * h),
        "h_quadratic": I(
            ((n * n + 2 * n) / 4 - (n + 2) * X2 / 2 + X2**2 / 4 + 0.75 * lam * (lam - s.H)) * h * h
        ),
    }
    return QuadraticFormValue(math.fsum(terms.values()), terms)


def _require_critical_sphere(s: Samples, params: LambdaParams) -> Sphere:
    desc = s.descriptor
    if not isinstance(desc, Sphere):
        raise VariationError("second_variation_F is only available on round spheres")
    expected = desc.n / desc.r - desc.r
    if abs(params.lam - expected) > 1e-10 * max(1.0, abs(expected)):
        raise VariationError(
            f"S^{desc.n}({desc.r:g}) is critical only for lambda = n/r - r = {expected:.12g}, got {params.lam:.12g}"
        )
    return desc


def second_variation_F(surface, params: LambdaParams, var) -> QuadraticFormValue:
    """``(4 pi)^(n/2) F''(0)`` on a critical round sphere.

    ``var`` is a :class:`VariationData` or a :class:`SphereVariation`.
    """
    s = as_samples(surface)
    _require_critical_sphere(s, params)
    if isinstance(var, SphereVariation):
        var = var.to_variation(s.dim)
    return second_variation_terms(s, params, var)


def volume_preserving(surface, f: Field) -> Field:
    """Project ``f`` onto ``int f exp(-|X|^2/2) dmu = 0`` by removing its weighted mean."""
    s = as_samples(surface)
    fr = GaussianFrame.standard(s.dim)
    mean = weighted_sum(s, f.value(s), fr) / weighted_sum(s, np.ones(len(s)), fr)
    return f - mean


def second_variation_T(surface, params: LambdaParams, f: Field, tol: float = 1e-8) -> float:
    """``(4 pi)^(n/2) T''(0)`` for a weighted-volume-preserving normal speed ``f``."""
    s = as_samples(surface)
    f = as_field(f)
    fr = GaussianFrame.standard(s.dim)
    fv = f.value(s)
    constraint = weighted_sum(s, fv, fr)
    scale = math.sqrt(max(weighted_sum(s, fv * fv, fr) * weighted_sum(s, np.ones(len(s)), fr), 0.0))
    if abs(constraint) > tol * max(1.0, scale):
        raise VariationError(
            f"normal speed does not preserve the weighted volume: int f w dmu = {constraint:.3e}"
        )
    return weighted_sum(s, -fv * _stability_operator(s, params.lam, f), fr)


def fd_check_second_variation(
    surface, params: LambdaParams, var, steps: Sequence[float] = DEFAULT_STEPS,
    check_step: float = 1e-3, floor: float = 1e-10, functional: str = "F", stencil: int = 3,
) -> FDReport:
    """Second central differences of F(s) (or T(s)) against the closed formula.

    ``stencil=3`` uses ``s in {0, +-h}`` (error O(h^2)); ``stencil=5`` adds
    ``+-2h`` (error O(h^4)).  For ``functional="T"`` the centre and scale
    stay fixed and ``var.f`` must preserve the weighted volume.
    """
    s = as_samples(surface)
    if isinstance(var, SphereVariation):
        var = var.to_variation(s.dim)
    n = s.n
    norm = (4.0 * math.pi) ** (n / 2)
    fr = GaussianFrame.standard(s.dim)
    if functional == "F":
        formula = second_variation_terms(s, params, var).value
        include_volume = True
    elif functional == "T":
        formula = second_variation_T(s, params, var.f)
        var = VariationData(var.f, np.zeros(s.dim), 0.0)
        include_volume = False
    else:
        raise ValueError("functional must be 'F' or 'T'")

    def F(h):
        return f_functional_along(s, fr, params, var, h, include_volume=include_volume)

    f0 = F(0.0)

    if stencil == 3:
        def second(h):
            return norm * (F(h) - 2.0 * f0 + F(-h)) / (h * h)
    elif stencil == 5:
        def second(h):
            return norm * (16.0 * (F(h) + F(-h)) - (F(2 * h) + F(-2 * h)) - 30.0 * f0) / (12.0 * h * h)
    else:
        raise ValueError("stencil must be 3 or 5")

    return _fd_report(formula, second, steps, check_step, floor)


# --------------------------------------------------------------------------
# closed forms on the round sphere
# --------------------------------------------------------------------------

def sphere_eigenvalue(n: int, r: float, k: int) -> float:
    """Eigenvalue ``k(k + n - 1) / r^2`` of minus the Laplacian on ``S^n(r)``."""
    return (k * k + (n - 1) * k) / r**2


def sphere_quadratic_form(
    n: int, r: float, energies: Optional[Dict[int, float]] = None, a: float = 0.0,
    z=None, y=None, h: float = 0.0,
) -> QuadraticFormValue:
    """``(4 pi)^(n/2) F''(0)`` on ``S^n(r)`` from sphere moments.

    ``energies`` maps a harmonic degree ``k >= 2`` to ``int f0_k^2 dmu``.
    Uses ``lambda = n/r - r``.
    """
    lam = n / r - r
    area = unit_sphere_area(n) * r**n
    deg1 = area / (n + 1)
    z = np.zeros(n + 1) if z is None else np.asarray(z, dtype=float)
    y = np.zeros(n + 1) if y is None else np.asarray(y, dtype=float)
    c = n / r**2 + 1 - lam**2
    energies = energies or {}
    if any(k < 2 for k in energies):
        raise ValueError("f0 energies must be for harmonic degrees k >= 2")
    fLf = sum((sphere_eigenvalue(n, r, k) - c) * e for k, e in energies.items())
    fLf += -c * a * a * area + (lam**2 - 1) * (z @ z) * deg1
    terms = {
        "minus_fLf": fLf,
        "y_quadratic": -(y @ y) * area + r * r * (y @ y) * deg1,
        "f_cross": 2 * (1 + lam * r) * (y @ z) * deg1 + ((n + 1 - r * r) * lam - 2 * n / r) * h * a * area,
        "yh_cross": 0.0,
        "h_quadratic": (r**4 - (2 * n + 1) * r * r + n * (n - 1)) / 4 * h * h * area,
    }
    w = math.exp(-r * r / 2)
    terms = {key: w * v for key, v in terms.items()}
    return QuadraticFormValue(math.fsum(terms.values()), terms)


# --------------------------------------------------------------------------
# batteries
# --------------------------------------------------------------------------

def random_variation(rng: np.random.Generator, dim: int, scale: float = 1.0) -> VariationData:
    """A variation with ``f`` polynomial in the coordinates of X and N."""
    a, b, c, d = (rng.normal(size=dim) for _ in range(4))
    f = (
        fl.Constant(rng.normal())
        + fl.linear(a)
        + rng.normal() * 0.3 * fl.linear(b) * fl.linear(c)
        + fl.normal_dot(d)
    )
    return VariationData(scale * f, scale * rng.normal(size=dim), scale * rng.uniform(-1, 1))


def variation_battery(seed: int, dim: int, count: int = 20) -> List[VariationData]:
    rng = np.random.default_rng(seed)
    return [random_variation(rng, dim) for _ in range(count)]


def load_battery(text: str, dim: int) -> List[VariationData]:
    """Parse ``[{"f": "const|linear:[...]|harmonic:k", "y": [...], "h": ...}, ...]``."""
    items = json.loads(text)
    out = []
    for item in items:
        out.append(
            VariationData(
                fl.field_from_spec(item["f"], dim),
                np.asarray(item.get("y", [0.0] * dim), dtype=float),
                float(item.get("h", 0.0)),
            )
        )
    return out
