"""The acceptance matrix, shared by the test suite and ``lsl reproduce``.

Each ``criterion_*`` function runs one check at its stated tolerance and
returns a :class:`CriterionResult` whose ``details`` are JSON-ready.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from . import fields as fl
from . import flow, growth, stability, variations
from .functionals import drift_identity_residuals, integral_identity_residuals
from .quadrature import GaussianFrame, integration_by_parts_residual
from .surface_core import (
    Cylinder,
    LambdaParams,
    Plane,
    PlanarCurve,
    Sphere,
    canonical_lambda,
    regular_polygon,
    sample_surface,
)
from .variations import SphereVariation, VariationData

SEED = 20240601


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: Dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}"

    def to_json(self) -> dict:
        return {"id": self.number, "name": self.name, "pass": self.passed, "details": _jsonable(self.details)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def _label(desc) -> str:
    if isinstance(desc, Sphere):
        return f"sphere(n={desc.n},r={desc.r:.6g})"
    if isinstance(desc, Cylinder):
        return f"cylinder(k={desc.k},n={desc.n},r0={desc.r0:.6g})"
    if isinstance(desc, Plane):
        return f"plane(n={desc.n})"
    return type(desc).__name__


CRITICAL_SPHERES = [Sphere(n, r) for n in (1, 2, 3) for r in (0.8, 1.0, 1.6)]
SELF_SHRINKING_CYLINDERS = [Cylinder(1, 2, 1.0), Cylinder(1, 3, 1.0), Cylinder(2, 3, math.sqrt(2.0))]
OFF_RADIUS_CYLINDERS = [Cylinder(1, 2, 0.7), Cylinder(1, 3, 0.7), Cylinder(2, 3, 1.3)]
GROWTH_CYLINDERS = [Cylinder(1, 2, 1.0), Cylinder(1, 3, 1.0), Cylinder(2, 3, math.sqrt(2.0)), Cylinder(1, 3, 0.7)]
NONCOMPACT = GROWTH_CYLINDERS + [Cylinder(2, 3, 1.3), Plane(2), Plane(3)]


def _params(desc) -> LambdaParams:
    return LambdaParams(canonical_lambda(desc), desc.n)


# --------------------------------------------------------------------------
# 1. criticality
# --------------------------------------------------------------------------

def criterion_1(battery_size: int = 20) -> CriterionResult:
    worst = {}
    for desc in CRITICAL_SPHERES + SELF_SHRINKING_CYLINDERS:
        s = sample_surface(desc)
        p = _params(desc)
        battery = variations.variation_battery(SEED, s.dim, battery_size)
        worst[_label(desc)] = max(abs(variations.first_variation(s, None, p, v)) for v in battery)
    bad_sphere = sample_surface(Sphere(2, 1.0))
    noncritical = abs(
        variations.first_variation(bad_sphere, None, LambdaParams(0.0, 2), VariationData(fl.Constant(1.0), np.zeros(3)))
    )
    passed = max(worst.values()) <= 1e-7 and noncritical > 1e-2
    return CriterionResult(
        1,
        "first variation vanishes on lambda-hypersurfaces",
        passed,
        {"max_first_variation": worst, "noncritical_first_variation": noncritical, "battery_size": battery_size},
    )


# --------------------------------------------------------------------------
# 2. finite differences
# --------------------------------------------------------------------------

def fd_families() -> List[dict]:
    """Deformation families for the finite-difference check."""
    e = fl.basis_vector
    fams = []

    circle = Sphere(1, 1.0)
    fams.append(dict(
        name="circle-cos-shifted-frame-first", kind="first", desc=circle, params=LambdaParams(0.0, 1),
        frame=GaussianFrame(np.array([0.2, 0.1]), 1.3), var=VariationData(fl.linear(e(2, 0)), np.zeros(2), 0.0),
    ))
    s2 = Sphere(2, 1.2)
    fams.append(dict(
        name="sphere-const-with-responses-first", kind="first", desc=s2, params=_params(s2),
        frame=None, var=VariationData(fl.Constant(1.0), np.array([0.1, 0.0, 0.0]), 0.3),
    ))
    s3 = Sphere(2, 1.6)
    fams.append(dict(
        name="sphere-shifted-frame-first", kind="first", desc=s3, params=LambdaParams(0.4, 2),
        frame=GaussianFrame(np.array([0.2, -0.1, 0.3]), 1.4),
        var=VariationData(1.0 + 0.5 * fl.normal_dot(e(3, 2)) + 0.2 * fl.linear(e(3, 0)), np.array([0.0, 0.3, 0.0]), -0.2),
    ))
    cyl = Cylinder(1, 2, 1.0)
    fams.append(dict(
        name="cylinder-polynomial-first", kind="first", desc=cyl, params=_params(cyl),
        frame=None, var=VariationData(0.5 + 0.2 * fl.linear(e(3, 2)) * fl.linear(e(3, 0)), np.array([0.1, 0.0, 0.2]), 0.1),
    ))
    fams.append(dict(
        name="sphere-translation-mode-second", kind="second", desc=s3, params=_params(s3),
        var=SphereVariation(z=e(3, 0), k=1.0),
    ))
    fams.append(dict(
        name="circle-const-scale-second", kind="second", desc=circle, params=_params(circle),
        var=VariationData(fl.Constant(1.0), np.zeros(2), -2.0),
    ))
    s4 = Sphere(2, 1.0)
    fams.append(dict(
        name="sphere-mixed-modes-second", kind="second", desc=s4, params=_params(s4),
        var=SphereVariation(
            f0=0.3 * fl.harmonic(2, e(3, 0), e(3, 1)), a=0.2, z=np.array([0.0, 0.3, 0.1]), k=0.5, h=0.1
        ),
    ))
    s5 = Sphere(2, 1.5)
    s5s = sample_surface(s5)
    fams.append(dict(
        name="sphere-volume-preserving-T-second", kind="second-T", desc=s5, params=_params(s5),
        var=VariationData(
            variations.volume_preserving(s5s, 0.4 * fl.normal_dot(e(3, 2)) + 0.2 * fl.harmonic(2, e(3, 0), e(3, 2)) + 0.1),
            np.zeros(3),
        ),
    ))
    return fams


def criterion_2() -> CriterionResult:
    rows = {}
    passed = True
    for fam in fd_families():
        s = sample_surface(fam["desc"])
        if fam["kind"] == "first":
            rep = variations.fd_check_first_variation(s, fam["frame"], fam["params"], fam["var"])
        else:
            rep = variations.fd_check_second_variation(
                s, fam["params"], fam["var"], functional="T" if fam["kind"] == "second-T" else "F"
            )
        ok = rep.order >= 1.8 and rep.check_error <= 1e-5
        passed &= ok
        rows[fam["name"]] = {
            "formula": rep.formula, "order": rep.order, "error_at_1e-3": rep.check_error, "pass": ok,
        }
    return CriterionResult(2, "variation formulas match finite differences", passed and len(rows) >= 6, rows)


# --------------------------------------------------------------------------
# 3-4. stability thresholds
# --------------------------------------------------------------------------

SCAN_RANGE = (0.3, 2.7)
SCAN_STEP = 1e-3


def _threshold_criterion(number: int, mode: str) -> CriterionResult:
    rows = {}
    passed = True
    for n in (1, 2, 3, 4):
        th = stability.ThresholdSet.for_dimension(n)
        targets = (th.f_lower, th.f_upper) if mode == "f" else (th.weak_lower, th.weak_upper)
        scan = stability.threshold_scan(n, *SCAN_RANGE, SCAN_STEP, mode)
        trans = scan.transitions
        localized = len(trans) == 2 and all(stability.bracketed(trans, t, 0.0) for t in targets)
        lo, hi = (stability.classify(n, t, mode) for t in targets)
        if mode == "f":
            boundary = lo.stable and not hi.stable
        else:
            boundary = lo.stable and hi.stable
        ok = localized and boundary and not scan.disagreements()
        passed &= ok
        rows[f"n={n}"] = {
            "thresholds": list(targets),
            "transitions": [list(t) for t in trans],
            "boundary_lower": lo.verdict,
            "boundary_upper": hi.verdict,
            "pass": ok,
        }
    if mode == "weak":
        th2 = stability.ThresholdSet.for_dimension(2)
        exact = th2.weak_lower == 1.0 and th2.weak_upper == 2.0
        rows["n=2 exact thresholds"] = [th2.weak_lower, th2.weak_upper]
        passed &= exact
    name = "F-stability thresholds" if mode == "f" else "weak-stability thresholds"
    return CriterionResult(number, name, passed, rows)


def criterion_3() -> CriterionResult:
    return _threshold_criterion(3, "f")


def criterion_4() -> CriterionResult:
    return _threshold_criterion(4, "weak")


# --------------------------------------------------------------------------
# 5. identities
# --------------------------------------------------------------------------

def ibp_battery():
    e = fl.basis_vector
    return [
        ("normal-normal", Sphere(2, 1.5), fl.normal_dot(e(3, 2)), fl.normal_dot(e(3, 2))),
        ("const-radius", Sphere(2, 1.0), fl.Constant(1.0), fl.radial_sq()),
        ("position-position", Sphere(1, 1.0), fl.linear(e(2, 0)), fl.linear(e(2, 0))),
        ("harmonic-harmonic", Sphere(2, 1.2), fl.harmonic(2, e(3, 0), e(3, 1)), fl.harmonic(2, e(3, 0), e(3, 1))),
        ("radius-product", Sphere(3, 0.9), fl.radial_sq() * fl.normal_dot(e(4, 1)), fl.linear(e(4, 1)) * fl.normal_dot(e(4, 3))),
    ]


def criterion_5() -> CriterionResult:
    drift, integral = {}, {}
    passed = True
    for desc in CRITICAL_SPHERES + SELF_SHRINKING_CYLINDERS + OFF_RADIUS_CYLINDERS:
        s = sample_surface(desc)
        p = _params(desc)
        d = drift_identity_residuals(s, p, tolerance=1e-8)
        i = integral_identity_residuals(s, p, tolerance=1e-6)
        passed &= all(r.passed for r in d + i)
        drift[_label(desc)] = max(r.residual for r in d)
        integral[_label(desc)] = max(r.residual for r in i)
    ibp = {}
    for name, desc, u, v in ibp_battery():
        ibp[name] = integration_by_parts_residual(sample_surface(desc), u, v)
    passed &= max(ibp.values()) <= 1e-7
    return CriterionResult(
        5, "drift, integral and integration-by-parts identities", passed,
        {"max_drift_residual": drift, "max_integral_residual": integral, "integration_by_parts": ibp},
    )


# --------------------------------------------------------------------------
# 6. flow
# --------------------------------------------------------------------------

ROUNDOFF_FLOOR = 1e-12


def _final_state(dt: float, horizon: float, scheme: str, count: int):
    st = flow.initial_state(flow.perturbed_circle(count))
    for _ in range(int(round(horizon / dt))):
        st = flow.step(st, dt, scheme)
    return st


def order_sweep(scheme: str, dts, horizon: float, count: int) -> dict:
    """Volume drift and solution self-convergence for a halving sequence of dt."""
    finals = [_final_state(dt, horizon, scheme, count) for dt in dts]
    drift = [abs(s.weighted_volume - s.v0) / abs(s.v0) for s in finals]
    if all(d <= ROUNDOFF_FLOOR for d in drift):
        drift_order = None
    else:
        drift_order = math.log2(drift[-2] / drift[-1]) if drift[-1] > 0 else math.inf
    e1 = float(np.max(np.abs(finals[0].markers - finals[1].markers)))
    e2 = float(np.max(np.abs(finals[1].markers - finals[2].markers)))
    return {
        "dts": list(dts), "volume_drift": drift, "volume_drift_order": drift_order,
        "self_convergence_order": math.log2(e1 / e2),
    }


def criterion_6() -> CriterionResult:
    ref = flow.run(flow.perturbed_circle(512, 0.05, 3), dt=1e-4, steps=10_000, scheme="rk4", trace_stride=500)
    V = ref.column("weighted_volume")
    ref_drift = float(np.max(np.abs(V - V[0])) / abs(V[0]))

    rk4 = order_sweep("rk4", (4e-4, 2e-4, 1e-4), 0.04, 128)
    euler = order_sweep("euler", (1e-4, 5e-5, 2.5e-5), 0.04, 128)

    def conserving(sweep, p):
        o = sweep["volume_drift_order"]
        return o is None or o >= p

    circle = flow.run(PlanarCurve(regular_polygon(512, 1.0)), dt=1e-4, steps=1000, scheme="rk4", trace_stride=100)
    sphere = flow.run(Sphere(2, 1.3), dt=1e-3, steps=200, scheme="rk4", trace_stride=50)
    stationary = max(circle.column("max_displacement").max(), sphere.column("max_displacement").max())

    passed = (
        ref.halted is None
        and ref_drift <= 1e-5
        and conserving(rk4, 3.5)
        and conserving(euler, 0.8)
        and rk4["self_convergence_order"] >= 3.5
        and 0.8 <= euler["self_convergence_order"] <= 1.2
        and stationary <= 1e-10
    )
    return CriterionResult(
        6, "flow conserves weighted volume", passed,
        {"reference_relative_drift": ref_drift, "rk4": rk4, "euler": euler, "stationary_displacement": stationary},
    )


# --------------------------------------------------------------------------
# 7-9. growth
# --------------------------------------------------------------------------

def criterion_7() -> CriterionResult:
    rows = {}
    passed = True
    for desc in GROWTH_CYLINDERS:
        prof = growth.growth_exponent(desc, 2.0, 64.0, 32)
        target = desc.n - desc.k
        ok = abs(prof.fitted_exponent - prof.bound_exponent) <= 0.05 and abs(prof.bound_exponent - target) <= 1e-9
        passed &= ok
        rows[_label(desc)] = {"fitted": prof.fitted_exponent, "bound": prof.bound_exponent, "n_minus_k": target, "pass": ok}
    return CriterionResult(7, "growth exponent matches the sharp bound on cylinders", passed, rows)


def criterion_8() -> CriterionResult:
    rows = {}
    passed = True
    for desc in NONCOMPACT:
        rep = growth.linear_lower_bound_check(desc)
        passed &= rep.passed
        rows[_label(desc)] = {"min_area_over_r": rep.min_ratio, "pass": rep.passed}
    eq = growth.growth_exponent(Cylinder(1, 2, 1.0), 2.0, 64.0, 32).fitted_exponent
    passed &= abs(eq - 1.0) <= 0.02
    rows["equality_case_exponent"] = eq
    return CriterionResult(8, "linear lower bound on ball areas", passed, rows)


def criterion_9() -> CriterionResult:
    rows = {}
    passed = True
    for desc in NONCOMPACT:
        rep = growth.annulus_check(desc, 1, 64)
        ok = math.isfinite(rep.ratio_bound) and rep.doubling_onset is not None and rep.doubling_onset <= 5
        passed &= ok
        rows[_label(desc)] = {"ratio_bound": rep.ratio_bound, "doubling_onset": rep.doubling_onset, "pass": ok}
    return CriterionResult(9, "annulus ratio bounded and doubling holds", passed, rows)


# --------------------------------------------------------------------------
# 10. log-Sobolev
# --------------------------------------------------------------------------

def criterion_10() -> CriterionResult:
    rows = {}
    passed = True
    for n in (1, 2):
        best, drift = -math.inf, 0.0
        reports = []
        for r in (0.8, 1.0, 1.6):
            desc = Sphere(n, r)
            s = sample_surface(desc)
            p = _params(desc)
            rep = growth.log_sobolev_check(s, p)
            reports.append(rep)
            best = max(best, rep.minimal_c1)
            drift = max(drift, growth.log_sobolev_resolution_drift(s, p))
        ok = math.isfinite(best) and all(rep.all_pass(best) for rep in reports) and drift <= 1e-3
        passed &= ok
        rows[f"n={n}"] = {"minimal_c1": best, "resolution_drift": drift, "pass": ok}
    return CriterionResult(10, "log-Sobolev inequality with a finite constant", passed, rows)


CRITERIA: Dict[int, Callable[[], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_all(only=None) -> List[CriterionResult]:
    ids = sorted(CRITERIA) if not only else sorted(only)
    return [CRITERIA[i]() for i in ids]
