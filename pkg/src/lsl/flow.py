"""Weighted volume-preserving mean curvature flow on Lagrangian markers.

Markers move with velocity ``(H - alpha) N`` where

    alpha = sum H <N, N0> w0 / sum <N, N0> w0

and ``N0``, ``w0 = exp(-|X(0)|^2/2) dmu(0)`` are frozen at the initial
time.  The weighted volume ``V = sum <X, N0> w0`` then has zero time
derivative identically, so every Runge-Kutta scheme preserves it up to
round-off.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Union

import numpy as np

from .surface_core import (
    PlanarCurve,
    Sphere,
    curvature_of_polyline,
    sample_surface,
)

DENOMINATOR_TOL = 1e-10
COLLAPSE_FACTOR = 1e-8


class FlowHalt(RuntimeError):
    """Raised when a step cannot be taken; carries the last good state."""

    def __init__(self, message: str, state: Optional["FlowState"] = None):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class Geometry:
    normal: np.ndarray
    H: np.ndarray
    area_weight: np.ndarray


def _curve_geometry(X: np.ndarray, n: int) -> Geometry:
    g = curvature_of_polyline(X)
    return Geometry(g.normal, g.H, g.area_weight)


def _sphere_geometry(X: np.ndarray, n: int, unit_weights: np.ndarray) -> Geometry:
    # markers stay on a centred sphere, so geometry follows from |X|
    rho = np.linalg.norm(X, axis=1)
    return Geometry(-X / rho[:, None], n / rho, unit_weights * rho**n)


@dataclass(frozen=True)
class FlowState:
    markers: np.ndarray
    initial_markers: np.ndarray
    initial_normals: np.ndarray
    initial_weights: np.ndarray
    time: float
    alpha: float
    v0: float
    n: int
    kind: str
    spacing0: float
    unit_weights: Optional[np.ndarray] = None

    def geometry(self, X: Optional[np.ndarray] = None) -> Geometry:
        X = self.markers if X is None else X
        if self.kind == "sphere":
            return _sphere_geometry(X, self.n, self.unit_weights)
        return _curve_geometry(X, self.n)

    @property
    def weighted_volume(self) -> float:
        return float(np.sum(np.einsum("ij,ij->i", self.markers, self.initial_normals) * self.initial_weights))

    @property
    def area(self) -> float:
        return float(np.sum(self.geometry().area_weight))

    @property
    def max_displacement(self) -> float:
        return float(np.max(np.linalg.norm(self.markers - self.initial_markers, axis=1)))


def initial_state(desc: Union[PlanarCurve, Sphere], resolution=None) -> FlowState:
    if isinstance(desc, PlanarCurve):
        X = np.array(desc.points, dtype=float)
        geo = _curve_geometry(X, 1)
        kind, n, unit = "curve", 1, None
        spacing = float(np.mean(np.linalg.norm(np.roll(X, -1, axis=0) - X, axis=1)))
    elif isinstance(desc, Sphere):
        s = sample_surface(desc, resolution)
        X = s.X.copy()
        kind, n = "sphere", desc.n
        unit = s.w / desc.r**n
        geo = _sphere_geometry(X, n, unit)
        spacing = desc.r * math.sqrt(float(np.mean(unit)))
    else:
        raise TypeError("flow supports planar curves and round spheres")
    w0 = np.exp(-0.5 * np.einsum("ij,ij->i", X, X)) * geo.area_weight
    v0 = float(np.sum(np.einsum("ij,ij->i", X, geo.normal) * w0))
    state = FlowState(X, X.copy(), geo.normal, w0, 0.0, float("nan"), v0, n, kind, spacing, unit)
    return replace(state, alpha=_alpha(state, geo))


def _alpha(state: FlowState, geo: Geometry) -> float:
    c = np.einsum("ij,ij->i", geo.normal, state.initial_normals) * state.initial_weights
    den = float(np.sum(c))
    if abs(den) < DENOMINATOR_TOL:
        raise FlowHalt(f"alpha denominator {den:.3e} vanished at t={state.time:g}", state)
    return float(np.sum(geo.H * c)) / den


def flow_velocity(state: FlowState, X: Optional[np.ndarray] = None) -> np.ndarray:
    """``(H - alpha) N`` at every marker of ``X`` (default: the current markers)."""
    geo = state.geometry(X)
    a = _alpha(state, geo)
    return (geo.H - a)[:, None] * geo.normal


def projected_mean_residual(state: FlowState) -> float:
    """``|sum (H - alpha) <N, N0> w0|`` at the current markers."""
    geo = state.geometry()
    a = _alpha(state, geo)
    c = np.einsum("ij,ij->i", geo.normal, state.initial_normals) * state.initial_weights
    return abs(float(np.sum((geo.H - a) * c)))


SCHEMES = ("euler", "rk4")


def step(state: FlowState, dt: float, scheme: str = "rk4") -> FlowState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    X = state.markers
    if scheme == "euler":
        Xn = X + dt * flow_velocity(state, X)
    elif scheme == "rk4":
        k1 = flow_velocity(state, X)
        k2 = flow_velocity(state, X + 0.5 * dt * k1)
        k3 = flow_velocity(state, X + 0.5 * dt * k2)
        k4 = flow_velocity(state, X + dt * k3)
        Xn = X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    else:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if not np.all(np.isfinite(Xn)):
        raise FlowHalt(f"non-finite marker positions at t={state.time + dt:g}", state)
    if state.kind == "curve":
        edges = np.linalg.norm(np.roll(Xn, -1, axis=0) - Xn, axis=1)
        if float(np.min(edges)) < COLLAPSE_FACTOR * state.spacing0:
            raise FlowHalt(f"marker spacing collapsed at t={state.time + dt:g}", state)
    new = replace(state, markers=Xn, time=state.time + dt)
    return replace(new, alpha=_alpha(new, new.geometry()))


def redistribute(state: FlowState) -> FlowState:
    """Respace curve markers uniformly in arc length.

    Positions, initial positions and initial normals are interpolated
    linearly in the old arc-length parameter; frozen weights are rebuilt
    from the interpolated initial curve.
    """
    if state.kind != "curve":
        return state
    X = state.markers
    m = len(X)
    seg = np.linalg.norm(np.roll(X, -1, axis=0) - X, axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    target = np.linspace(0.0, s[-1], m, endpoint=False)

    def interp(V):
        Vc = np.vstack([V, V[:1]])
        return np.stack([np.interp(target, s, Vc[:, j]) for j in range(V.shape[1])], axis=1)

    Xn, X0n, N0n = interp(X), interp(state.initial_markers), interp(state.initial_normals)
    N0n /= np.linalg.norm(N0n, axis=1)[:, None]
    dual = curvature_of_polyline(X0n).area_weight
    w0 = np.exp(-0.5 * np.einsum("ij,ij->i", X0n, X0n)) * dual
    return replace(state, markers=Xn, initial_markers=X0n, initial_normals=N0n, initial_weights=w0)


@dataclass
class FlowTrace:
    rows: List[dict] = field(default_factory=list)
    halted: Optional[str] = None
    final_state: Optional[FlowState] = None

    COLUMNS = ("time", "alpha", "weighted_volume", "area", "max_displacement")

    def record(self, state: FlowState) -> None:
        self.rows.append(
            {
                "time": state.time,
                "alpha": state.alpha,
                "weighted_volume": state.weighted_volume,
                "area": state.area,
                "max_displacement": state.max_displacement,
            }
        )

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([f"{r[c]:.17g}" for c in self.COLUMNS])
        return buf.getvalue()


def run(
    desc: Union[PlanarCurve, Sphere, FlowState],
    dt: float = 1e-4,
    steps: int = 100,
    scheme: str = "rk4",
    trace_stride: int = 1,
    redistribute_every: int = 0,
) -> FlowTrace:
    """Integrate ``steps`` steps; the trace keeps every ``trace_stride``-th state.

    A :class:`FlowHalt` ends the run early; the partial trace is kept and
    the reason stored in ``trace.halted``.
    """
    if steps < 0 or trace_stride < 1:
        raise ValueError("steps must be >= 0 and trace_stride >= 1")
    state = desc if isinstance(desc, FlowState) else initial_state(desc)
    trace = FlowTrace()
    trace.record(state)
    for i in range(1, steps + 1):
        try:
            state = step(state, dt, scheme)
            if redistribute_every and i % redistribute_every == 0:
                state = redistribute(state)
        except FlowHalt as exc:
            trace.halted = str(exc)
            break
        if i % trace_stride == 0 or i == steps:
            trace.record(state)
    trace.final_state = state
    return trace


def perturbed_circle(count: int = 512, amplitude: float = 0.05, mode: int = 3, radius: float = 1.0) -> PlanarCurve:
    """``r(theta) = radius (1 + amplitude cos(mode theta))`` at uniform angles."""
    th = 2.0 * np.pi * np.arange(count) / count
    rr = radius * (1.0 + amplitude * np.cos(mode * th))
    return PlanarCurve(np.stack([rr * np.cos(th), rr * np.sin(th)], axis=1))
