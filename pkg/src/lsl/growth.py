"""Area growth of canonical hypersurfaces and the related inequalities.

Areas of ``B_r(0)`` intersected with cylinders, planes and centred
spheres are exact.  Flowed curves are measured by clipping each polyline
segment to the disc.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import fields as fl
from .fields import Field
from .quadrature import GaussianFrame, weighted_sum
from .surface_core import (
    Cylinder,
    LambdaParams,
    Plane,
    Sphere,
    SurfaceError,
    as_samples,
    coarsen,
    unit_ball_volume,
    unit_sphere_area,
)


def area_in_ball(desc, r: float) -> float:
    """``Area(B_r(0) ∩ M)`` in closed form."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    if isinstance(desc, Cylinder):
        m = desc.n - desc.k
        gap = max(r * r - desc.r0**2, 0.0)
        return unit_sphere_area(desc.k) * desc.r0**desc.k * unit_ball_volume(m) * gap ** (m / 2)
    if isinstance(desc, Plane):
        return unit_ball_volume(desc.n) * r**desc.n
    if isinstance(desc, Sphere):
        # a centred sphere lies entirely inside or outside the ball
        return unit_sphere_area(desc.n) * desc.r**desc.n if r >= desc.r else 0.0
    raise SurfaceError(f"no closed-form ball area for {type(desc).__name__}")


def polyline_length_in_ball(points, r: float) -> float:
    """Length of the closed polyline inside the disc ``|x| <= r``."""
    P = np.asarray(points, dtype=float)
    Q = np.roll(P, -1, axis=0)
    D = Q - P
    a = np.einsum("ij,ij->i", D, D)
    b = 2 * np.einsum("ij,ij->i", P, D)
    c = np.einsum("ij,ij->i", P, P) - r * r
    disc = b * b - 4 * a * c
    root = np.sqrt(np.maximum(disc, 0.0))
    lo = np.clip((-b - root) / (2 * a), 0.0, 1.0)
    hi = np.clip((-b + root) / (2 * a), 0.0, 1.0)
    frac = np.where(disc > 0, hi - lo, 0.0)
    return float(np.sum(frac * np.sqrt(a)))


def _lambda_and_curvature(desc) -> Tuple[float, float, float]:
    """``(lambda, beta, inf H^2)`` for a non-compact canonical descriptor."""
    if isinstance(desc, Cylinder):
        H = desc.k / desc.r0
        lam = H - desc.r0
        return lam, 0.25 * desc.r0**2, H * H
    if isinstance(desc, Plane):
        return 0.0, 0.0, 0.0
    raise SurfaceError(f"{type(desc).__name__} is compact; growth exponents need a non-compact surface")


def bound_exponent(desc) -> float:
    """``n + lambda^2/2 - 2 beta - inf H^2 / 2`` with ``beta = inf (lambda - H)^2 / 4``."""
    lam, beta, h2 = _lambda_and_curvature(desc)
    return desc.n + 0.5 * lam**2 - 2 * beta - 0.5 * h2


@dataclass
class GrowthProfile:
    radii: np.ndarray
    areas: np.ndarray
    fitted_exponent: float
    bound_exponent: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "area", "log_r", "log_area"])
        for r, a in zip(self.radii, self.areas):
            la = math.log(a) if a > 0 else float("-inf")
            w.writerow([f"{r:.17g}", f"{a:.17g}", f"{math.log(r):.17g}", f"{la:.17g}"])
        return buf.getvalue()


def growth_exponent(desc, r_min: float, r_max: float, samples: int = 32) -> GrowthProfile:
    """Fit ``log Area`` against ``log r`` on the top half of a log grid."""
    b = bound_exponent(desc)
    if r_max < 4 * r_min or r_min <= 0:
        raise ValueError("need 0 < r_min and r_max >= 4 r_min")
    if samples < 32:
        raise ValueError("use at least 32 radii")
    radii = np.geomspace(r_min, r_max, samples)
    areas = np.array([area_in_ball(desc, r) for r in radii])
    tail = slice(samples // 2, None)
    if np.any(areas[tail] <= 0):
        raise ValueError("ball areas vanish on the fit window; raise r_min")
    slope = np.polyfit(np.log(radii[tail]), np.log(areas[tail]), 1)[0]
    return GrowthProfile(radii, areas, float(slope), b)


@dataclass
class AnnulusReport:
    t: np.ndarray
    ratios: np.ndarray
    doubling: np.ndarray
    ratio_bound: float
    doubling_onset: Optional[int]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "ratio", "doubling"])
        for t, q, d in zip(self.t, self.ratios, self.doubling):
            w.writerow([int(t), f"{q:.17g}", bool(d)])
        return buf.getvalue()


def annulus_check(desc, t_min: int = 1, t_max: int = 64) -> AnnulusReport:
    """Annulus ratio ``(A(t+1) - A(t)) t / A(t)`` and doubling flags for integer t.

    ``ratio_bound`` is the largest ratio over t with ``A(t) > 0``;
    ``doubling_onset`` is the first t from which ``A(t+1) <= 2 A(t)`` holds
    through ``t_max``.
    """
    _lambda_and_curvature(desc)
    if t_min < 1 or t_max < t_min:
        raise ValueError("need 1 <= t_min <= t_max")
    ts = np.arange(t_min, t_max + 1)
    A = np.array([area_in_ball(desc, float(t)) for t in ts])
    A1 = np.array([area_in_ball(desc, float(t + 1)) for t in ts])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(A > 0, (A1 - A) * ts / A, np.inf)
    doubling = (A > 0) & (A1 <= 2 * A)
    finite = ratios[np.isfinite(ratios)]
    bound = float(np.max(finite)) if len(finite) else float("inf")
    onset = None
    for i in range(len(ts) - 1, -1, -1):
        if not doubling[i]:
            break
        onset = int(ts[i])
    return AnnulusReport(ts, ratios, doubling, bound, onset)


@dataclass(frozen=True)
class LinearBoundReport:
    slope: float
    min_ratio: float
    passed: bool


def linear_lower_bound_check(desc, radii: Sequence[float] = tuple(np.linspace(4.0, 64.0, 61))) -> LinearBoundReport:
    """``min Area(B_r)/r`` over the grid and the least-squares slope of the tail."""
    _lambda_and_curvature(desc)
    radii = np.asarray(radii, dtype=float)
    areas = np.array([area_in_ball(desc, r) for r in radii])
    tail = slice(len(radii) // 2, None)
    slope = float(np.polyfit(radii[tail], areas[tail], 1)[0])
    min_ratio = float(np.min(areas / radii))
    return LinearBoundReport(slope, min_ratio, min_ratio > 0 and slope > 0)


# --------------------------------------------------------------------------
# logarithmic Sobolev inequality
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LogSobolevCase:
    label: str
    lhs: float
    gradient_term: float
    minimal_c1: float
    minimal_c1_general: float

    def margin(self, c1: float, lam: float) -> float:
        """``rhs - lhs`` of the normalized inequality for a given ``C1``."""
        return self.gradient_term + 0.5 * c1 + 0.25 * lam**2 - self.lhs


def _f2_log_f(f: np.ndarray) -> np.ndarray:
    # t ln t -> 0 extension at f = 0
    safe = np.where(f > 0, f, 1.0)
    return np.where(f > 0, f * f * np.log(safe), 0.0)


def log_sobolev_case(surface, f: Field, params: LambdaParams, label: str = "") -> LogSobolevCase:
    """Minimal ``C1`` for one nonnegative ``f``.

    ``minimal_c1`` uses the normalized form ``int f^2 ln f w <= int |grad f|^2 w
    + C1/2 + lambda^2/4`` after scaling ``f`` to ``int f^2 w = 1``.
    ``minimal_c1_general`` uses the unnormalized form with the
    ``(H + <X, N>)^2`` term and needs no lambda.
    """
    s = as_samples(surface)
    fr = GaussianFrame.standard(s.dim)
    fv = f.value(s)
    if np.any(fv < 0):
        i = int(np.nonzero(fv < 0)[0][0])
        raise ValueError(f"f must be nonnegative; f = {fv[i]:.3e} at sample {i}")
    g = f.grad(s)
    g2 = np.einsum("ij,ij->i", g, g)
    mass = weighted_sum(s, fv * fv, fr)
    if not mass > 0:
        raise ValueError("f vanishes identically")
    c = 1.0 / math.sqrt(mass)
    lhs = weighted_sum(s, _f2_log_f(c * fv), fr)
    grad_term = c * c * weighted_sum(s, g2, fr)
    lam = params.lam
    c1 = 2.0 * (lhs - grad_term - 0.25 * lam**2)

    general_lhs = weighted_sum(s, 2.0 * _f2_log_f(fv), fr) - mass * math.log(mass)
    curv = weighted_sum(s, (s.H + s.support) ** 2 * fv * fv, fr)
    c1_general = (general_lhs - 2.0 * weighted_sum(s, g2, fr) - 0.5 * curv) / mass
    return LogSobolevCase(label, lhs, grad_term, c1, c1_general)


def default_battery(dim: int) -> List[Tuple[str, Field]]:
    """Nonnegative test functions with exact gradients."""
    e1 = fl.basis_vector(dim, 0)
    e2 = fl.basis_vector(dim, 1 % dim)
    exp_e1 = fl.PositionField(
        lambda X: np.exp(X @ e1),
        lambda X: np.exp(X @ e1)[:, None] * e1,
        lambda X: np.exp(X @ e1)[:, None, None] * np.outer(e1, e1),
        label="exp<X,e1>",
    )
    one_plus = 1.0 + fl.normal_dot(e1)
    return [
        ("const", fl.Constant(1.0)),
        ("one-plus-half-normal", 1.0 + 0.5 * fl.normal_dot(e1)),
        ("one-plus-normal-squared", one_plus * one_plus),
        ("quadratic-position", 1.0 + 0.3 * fl.linear(e2) * fl.linear(e2)),
        ("exponential-position", exp_e1),
    ]


@dataclass
class LogSobolevReport:
    cases: List[LogSobolevCase]
    minimal_c1: float
    minimal_c1_general: float
    lam: float

    def all_pass(self, c1: float) -> bool:
        return all(c.margin(c1, self.lam) >= -1e-12 for c in self.cases)


def log_sobolev_check(surface, params: LambdaParams, battery=None) -> LogSobolevReport:
    s = as_samples(surface)
    battery = default_battery(s.dim) if battery is None else battery
    cases = [log_sobolev_case(s, f, params, label) for label, f in battery]
    return LogSobolevReport(
        cases,
        max(c.minimal_c1 for c in cases),
        max(c.minimal_c1_general for c in cases),
        params.lam,
    )


def log_sobolev_resolution_drift(surface, params: LambdaParams, battery=None) -> float:
    """Change of the minimal ``C1`` between reference and half resolution."""
    s = as_samples(surface)
    fine = log_sobolev_check(s, params, battery).minimal_c1
    coarse = log_sobolev_check(coarsen(s), params, battery).minimal_c1
    return abs(fine - coarse)
