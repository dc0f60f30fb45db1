"""Hypersurface descriptors and pointwise geometry.

Orientation convention used throughout the package: the round sphere
``S^n(r)`` centred at the origin has unit normal ``N = -X/r`` and mean
curvature ``H = n/r``.  The mean curvature vector is ``H * N`` (so that
``Laplacian(X) = H N``), and the shape operator ``A`` satisfies
``dN(v) = -A v`` with ``trace(A) = H``.

Every sampler returns a :class:`Samples` bundle (structure of arrays).
Indexing a bundle yields a :class:`SurfacePoint`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np
from scipy.special import gamma, roots_jacobi, roots_legendre

DEFAULT_HALF_LENGTH = 10.0
DEFAULT_AXIAL_NODES = 64


class SurfaceError(ValueError):
    """Raised for unsupported or degenerate surface descriptions."""


# --------------------------------------------------------------------------
# descriptors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Sphere:
    n: int
    r: float

    def __post_init__(self):
        if self.n < 1:
            raise SurfaceError(f"sphere dimension must be >= 1, got n={self.n}")
        if not self.r > 0:
            raise SurfaceError(f"sphere radius must be positive, got r={self.r}")


@dataclass(frozen=True)
class Cylinder:
    """``S^k(r0) x R^(n-k)`` truncated to ``|axial| <= half_length``."""

    k: int
    n: int
    r0: float
    half_length: float = DEFAULT_HALF_LENGTH

    def __post_init__(self):
        if not 1 <= self.k < self.n:
            raise SurfaceError(f"cylinder needs 1 <= k < n, got k={self.k}, n={self.n}")
        if not self.r0 > 0:
            raise SurfaceError(f"cylinder radius must be positive, got r0={self.r0}")
        if not self.half_length > 0:
            raise SurfaceError("half_length must be positive")


@dataclass(frozen=True)
class Plane:
    """The hyperplane ``x_{n+1} = 0`` through the origin, truncated to a cube."""

    n: int
    half_length: float = DEFAULT_HALF_LENGTH

    def __post_init__(self):
        if self.n < 1:
            raise SurfaceError(f"plane dimension must be >= 1, got n={self.n}")


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    """Closed polygon in R^2 (n = 1), counterclockwise for inward normals."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        _validate_polygon(pts)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return 1


@dataclass(frozen=True, eq=False)
class ProfileCurve:
    """Hypersurface of revolution about the first axis.

    ``points`` is a closed polygon in the half plane ``{(x, rho): rho > 0}``;
    the surface is ``(x, rho * u)`` for ``u`` on the unit ``S^(n-1)``.
    """

    points: np.ndarray
    n: int = 2

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        _validate_polygon(pts)
        if self.n < 2:
            raise SurfaceError("profile curves need n >= 2 (use PlanarCurve for n = 1)")
        if np.any(pts[:, 1] <= 0):
            raise SurfaceError("profile curve must stay off the rotation axis (rho > 0)")
        object.__setattr__(self, "points", pts)


Descriptor = Union[Sphere, Cylinder, Plane, PlanarCurve, ProfileCurve]


@dataclass(frozen=True)
class LambdaParams:
    lam: float
    n: int

    @classmethod
    def for_sphere(cls, n: int, r: float) -> "LambdaParams":
        return cls(n / r - r, n)

    @classmethod
    def for_cylinder(cls, k: int, n: int, r0: float) -> "LambdaParams":
        return cls(k / r0 - r0, n)


def canonical_lambda(desc: Descriptor) -> float:
    """The constant ``lambda`` for which an analytic descriptor is a lambda-hypersurface."""
    if isinstance(desc, Sphere):
        return desc.n / desc.r - desc.r
    if isinstance(desc, Cylinder):
        return desc.k / desc.r0 - desc.r0
    if isinstance(desc, Plane):
        return 0.0
    raise SurfaceError(f"{type(desc).__name__} has no canonical lambda")


def is_compact(desc: Descriptor) -> bool:
    return isinstance(desc, (Sphere, PlanarCurve, ProfileCurve))


# --------------------------------------------------------------------------
# samples
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfacePoint:
    position: np.ndarray
    normal: np.ndarray
    mean_curvature: float
    second_fundamental_norm_sq: float
    area_weight: float


@dataclass(frozen=True, eq=False)
class Samples:
    """Quadrature samples of a hypersurface in R^(n+1).

    ``shape`` holds the shape operator as an ambient ``(d, d)`` matrix per
    sample (zero on the normal direction); ``grad_H`` the tangential
    gradient of the mean curvature.
    """

    X: np.ndarray
    N: np.ndarray
    H: np.ndarray
    S: np.ndarray
    w: np.ndarray
    shape: np.ndarray
    grad_H: np.ndarray
    n: int
    descriptor: Any = None
    resolution: Any = None

    def __len__(self) -> int:
        return len(self.w)

    def __getitem__(self, i: int) -> SurfacePoint:
        return SurfacePoint(self.X[i], self.N[i], float(self.H[i]), float(self.S[i]), float(self.w[i]))

    @property
    def dim(self) -> int:
        """Ambient dimension n + 1."""
        return self.X.shape[1]

    @property
    def support(self) -> np.ndarray:
        """``<X, N>`` per sample."""
        return np.einsum("ij,ij->i", self.X, self.N)

    def tangent_projector(self) -> np.ndarray:
        return np.eye(self.dim)[None, :, :] - self.N[:, :, None] * self.N[:, None, :]

    def total_area(self) -> float:
        return float(np.sum(self.w))


def unit_sphere_area(n: int) -> float:
    """Area of the unit n-sphere in R^(n+1)."""
    return 2.0 * math.pi ** ((n + 1) / 2) / gamma((n + 1) / 2)


def unit_ball_volume(m: int) -> float:
    return math.pi ** (m / 2) / gamma(m / 2 + 1)


def default_resolution(n: int) -> int:
    return {1: 256, 2: 64, 3: 32}.get(n, 16)


def unit_sphere_nodes(n: int, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Product quadrature on the unit ``S^n``.

    ``resolution`` is the number of azimuthal nodes; each polar level uses
    ``resolution // 2`` Gauss-Jacobi nodes with weight ``(1 - t^2)^((m-2)/2)``
    (Gauss-Legendre for n = 2).
    """
    if resolution < 4 or resolution % 2:
        raise SurfaceError(f"sphere resolution must be an even integer >= 4, got {resolution}")
    phi = 2.0 * np.pi * np.arange(resolution) / resolution
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wts = np.full(resolution, 2.0 * np.pi / resolution)
    for m in range(2, n + 1):
        alpha = (m - 2) / 2.0
        if alpha == 0:
            t, wt = roots_legendre(resolution // 2)
        else:
            t, wt = roots_jacobi(resolution // 2, alpha, alpha)
        s = np.sqrt(1.0 - t * t)
        new_pts = np.concatenate(
            [s[:, None, None] * pts[None, :, :], np.broadcast_to(t[:, None, None], (len(t), len(pts), 1))],
            axis=2,
        )
        pts = new_pts.reshape(-1, m + 1)
        wts = (wt[:, None] * wts[None, :]).reshape(-1)
    return pts, wts


def _gl_interval(count: int, half_length: float) -> tuple[np.ndarray, np.ndarray]:
    t, wt = roots_legendre(count)
    return half_length * t, half_length * wt


def _tensor_grid(count: int, half_length: float, dims: int) -> tuple[np.ndarray, np.ndarray]:
    t, wt = _gl_interval(count, half_length)
    mesh = np.meshgrid(*([t] * dims), indexing="ij")
    wmesh = np.meshgrid(*([wt] * dims), indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    wts = np.prod(np.stack([m.reshape(-1) for m in wmesh], axis=1), axis=1)
    return pts, wts


def sample_surface(desc: Descriptor, resolution=None) -> Samples:
    """Quadrature samples of ``desc``.

    ``resolution`` is an int for spheres (azimuthal node count), a pair
    ``(sphere_resolution, axial_nodes)`` for cylinders, the per-axis node
    count for planes, and the sphere-factor resolution for profile curves.
    Polygons ignore it.
    """
    if isinstance(desc, Sphere):
        return _sample_sphere(desc, resolution)
    if isinstance(desc, Cylinder):
        return _sample_cylinder(desc, resolution)
    if isinstance(desc, Plane):
        return _sample_plane(desc, resolution)
    if isinstance(desc, PlanarCurve):
        return _sample_polygon(desc)
    if isinstance(desc, ProfileCurve):
        return _sample_profile(desc, resolution)
    raise SurfaceError(f"unsupported descriptor {desc!r}")


def _sample_sphere(desc: Sphere, resolution) -> Samples:
    n, r = desc.n, float(desc.r)
    res = default_resolution(n) if resolution is None else int(resolution)
    U, wu = unit_sphere_nodes(n, res)
    m, d = U.shape
    N = -U
    P = np.eye(d)[None] - N[:, :, None] * N[:, None, :]
    return Samples(
        X=r * U,
        N=N,
        H=np.full(m, n / r),
        S=np.full(m, n / r**2),
        w=wu * r**n,
        shape=P / r,
        grad_H=np.zeros((m, d)),
        n=n,
        descriptor=desc,
        resolution=res,
    )


def _sample_cylinder(desc: Cylinder, resolution) -> Samples:
    k, n, r0 = desc.k, desc.n, float(desc.r0)
    if resolution is None:
        sres = 64 if k == 1 else default_resolution(k) // 2
        axial = DEFAULT_AXIAL_NODES if n - k == 1 else 48
    else:
        sres, axial = resolution
    U, wu = unit_sphere_nodes(k, sres)
    Y, wy = _tensor_grid(axial, desc.half_length, n - k)
    mu, my = len(U), len(Y)
    d = n + 1
    X = np.zeros((mu, my, d))
    X[:, :, : k + 1] = r0 * U[:, None, :]
    X[:, :, k + 1 :] = Y[None, :, :]
    X = X.reshape(-1, d)
    N = np.zeros_like(X)
    N[:, : k + 1] = np.repeat(-U, my, axis=0)
    w = (wu[:, None] * r0**k * wy[None, :]).reshape(-1)
    m = len(w)
    Pk = np.zeros((d, d))
    Pk[: k + 1, : k + 1] = np.eye(k + 1)
    shape = (Pk[None] - N[:, :, None] * N[:, None, :]) / r0
    return Samples(
        X=X,
        N=N,
        H=np.full(m, k / r0),
        S=np.full(m, k / r0**2),
        w=w,
        shape=shape,
        grad_H=np.zeros((m, d)),
        n=n,
        descriptor=desc,
        resolution=(sres, axial),
    )


def _sample_plane(desc: Plane, resolution) -> Samples:
    n = desc.n
    count = DEFAULT_AXIAL_NODES if resolution is None else int(resolution)
    Y, wy = _tensor_grid(count, desc.half_length, n)
    m, d = len(Y), n + 1
    X = np.zeros((m, d))
    X[:, :n] = Y
    N = np.zeros((m, d))
    N[:, n] = 1.0
    return Samples(
        X=X,
        N=N,
        H=np.zeros(m),
        S=np.zeros(m),
        w=wy,
        shape=np.zeros((m, d, d)),
        grad_H=np.zeros((m, d)),
        n=n,
        descriptor=desc,
        resolution=count,
    )


# --------------------------------------------------------------------------
# polygons
# --------------------------------------------------------------------------

def _validate_polygon(pts: np.ndarray) -> None:
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise SurfaceError(f"polygon markers must have shape (m, 2), got {pts.shape}")
    if len(pts) < 8:
        raise SurfaceError(f"closed polygon needs at least 8 markers, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise SurfaceError("polygon markers must be finite")
    edges = np.roll(pts, -1, axis=0) - pts
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    scale = max(float(np.max(lengths)), 1e-300)
    bad = np.nonzero(lengths <= 1e-12 * scale)[0]
    if len(bad):
        raise SurfaceError(f"coincident adjacent markers at index {int(bad[0])}")
    prev = np.roll(edges, 1, axis=0)
    cross = prev[:, 0] * edges[:, 1] - prev[:, 1] * edges[:, 0]
    dot = np.einsum("ij,ij->i", prev, edges)
    folded = np.nonzero((np.abs(cross) <= 1e-12 * lengths * np.roll(lengths, 1)) & (dot < 0))[0]
    if len(folded):
        raise SurfaceError(f"adjacent segments overlap (polygon folds back) at marker {int(folded[0])}")


@dataclass(frozen=True)
class PolylineGeometry:
    normal: np.ndarray
    tangent: np.ndarray
    H: np.ndarray
    S: np.ndarray
    area_weight: np.ndarray


def curvature_of_polyline(markers) -> PolylineGeometry:
    """Discrete curvature of a closed polygon.

    Curvature is the signed turning angle divided by the dual edge length
    ``(|e_{i-1}| + |e_i|) / 2``; that dual length is also the area weight.
    Left turns count positive, so a counterclockwise circle of radius r has
    ``H = 1/r`` and inward normals.
    """
    pts = np.asarray(markers, dtype=float)
    _validate_polygon(pts)
    e = np.roll(pts, -1, axis=0) - pts
    prev = np.roll(e, 1, axis=0)
    le = np.hypot(e[:, 0], e[:, 1])
    lp = np.roll(le, 1)
    theta = np.arctan2(prev[:, 0] * e[:, 1] - prev[:, 1] * e[:, 0], np.einsum("ij,ij->i", prev, e))
    dual = 0.5 * (le + lp)
    H = theta / dual
    t = prev / lp[:, None] + e / le[:, None]
    t /= np.hypot(t[:, 0], t[:, 1])[:, None]
    normal = np.stack([-t[:, 1], t[:, 0]], axis=1)
    return PolylineGeometry(normal=normal, tangent=t, H=H, S=H * H, area_weight=dual)


def _sample_polygon(desc: PlanarCurve) -> Samples:
    geo = curvature_of_polyline(desc.points)
    T = geo.tangent
    return Samples(
        X=desc.points.copy(),
        N=geo.normal,
        H=geo.H,
        S=geo.S,
        w=geo.area_weight,
        shape=geo.H[:, None, None] * T[:, :, None] * T[:, None, :],
        grad_H=np.zeros_like(T),
        n=1,
        descriptor=desc,
        resolution=len(desc.points),
    )


def _sample_profile(desc: ProfileCurve, resolution) -> Samples:
    n = desc.n
    geo = curvature_of_polyline(desc.points)
    x, rho = desc.points[:, 0], desc.points[:, 1]
    res = default_resolution(n - 1) if resolution is None else int(resolution)
    U, wu = unit_sphere_nodes(n - 1, res)
    mp, mu = len(x), len(U)
    d = n + 1
    X = np.zeros((mp, mu, d))
    X[:, :, 0] = x[:, None]
    X[:, :, 1:] = rho[:, None, None] * U[None]
    N = np.zeros_like(X)
    N[:, :, 0] = geo.normal[:, 0, None]
    N[:, :, 1:] = geo.normal[:, 1, None, None] * U[None]
    T = np.zeros_like(X)
    T[:, :, 0] = geo.tangent[:, 0, None]
    T[:, :, 1:] = geo.tangent[:, 1, None, None] * U[None]
    k_mer = np.repeat(geo.H, mu)
    k_rot = np.repeat(-geo.normal[:, 1] / rho, mu)
    X, N, T = X.reshape(-1, d), N.reshape(-1, d), T.reshape(-1, d)
    Urep = np.zeros((mp * mu, d))
    Urep[:, 1:] = np.tile(U, (mp, 1))
    # tangent directions of the rotation sphere: block (0, I_n - u u^T)
    Prot = np.zeros((mp * mu, d, d))
    Prot[:, 1:, 1:] = np.eye(n)[None]
    Prot -= Urep[:, :, None] * Urep[:, None, :]
    shape = k_mer[:, None, None] * T[:, :, None] * T[:, None, :] + k_rot[:, None, None] * Prot
    w = (geo.area_weight[:, None] * rho[:, None] ** (n - 1) * wu[None, :]).reshape(-1)
    return Samples(
        X=X,
        N=N,
        H=k_mer + (n - 1) * k_rot,
        S=k_mer**2 + (n - 1) * k_rot**2,
        w=w,
        shape=shape,
        grad_H=np.zeros_like(X),
        n=n,
        descriptor=desc,
        resolution=res,
    )


def regular_polygon(count: int, radius: float = 1.0, center=(0.0, 0.0)) -> np.ndarray:
    th = 2.0 * np.pi * np.arange(count) / count
    return np.stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=1)


def polar_curve(radius_fn, count: int) -> np.ndarray:
    """Markers of the star-shaped curve ``r = radius_fn(theta)`` at uniform angles."""
    th = 2.0 * np.pi * np.arange(count) / count
    rr = radius_fn(th)
    return np.stack([rr * np.cos(th), rr * np.sin(th)], axis=1)


# --------------------------------------------------------------------------
# lambda residual
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualStats:
    max: float
    l2: float
    mean: float


def lambda_residual(surface, params: LambdaParams, resolution=None) -> ResidualStats:
    """Statistics of ``|<X, N> + H - lambda|`` over the samples.

    ``l2`` is the area-weighted root mean square, ``mean`` the area-weighted
    mean of the absolute residual.
    """
    smp = surface if isinstance(surface, Samples) else sample_surface(surface, resolution)
    res = np.abs(smp.support + smp.H - params.lam)
    area = np.sum(smp.w)
    return ResidualStats(
        max=float(np.max(res)),
        l2=float(np.sqrt(np.sum(res**2 * smp.w) / area)),
        mean=float(np.sum(res * smp.w) / area),
    )


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------

def descriptor_from_json(obj: Union[str, dict]) -> Descriptor:
    """Parse ``{"kind": "sphere" | "cylinder" | "plane" | "curve" | "profile", ...}``."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SurfaceError("surface JSON must be an object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "sphere":
            return Sphere(int(obj["n"]), float(obj["r"]))
        if kind == "cylinder":
            return Cylinder(
                int(obj["k"]), int(obj["n"]), float(obj["r0"]),
                float(obj.get("half_length", DEFAULT_HALF_LENGTH)),
            )
        if kind == "plane":
            return Plane(int(obj["n"]), float(obj.get("half_length", DEFAULT_HALF_LENGTH)))
        if kind == "curve":
            return PlanarCurve(np.asarray(obj["points"], dtype=float))
        if kind == "profile":
            return ProfileCurve(np.asarray(obj["points"], dtype=float), int(obj.get("n", 2)))
    except KeyError as exc:
        raise SurfaceError(f"surface JSON of kind {kind!r} is missing field {exc.args[0]!r}") from None
    raise SurfaceError(f"unknown surface kind {kind!r}")


def descriptor_to_json(desc: Descriptor) -> dict:
    if isinstance(desc, Sphere):
        return {"kind": "sphere", "n": desc.n, "r": desc.r}
    if isinstance(desc, Cylinder):
        return {"kind": "cylinder", "k": desc.k, "n": desc.n, "r0": desc.r0, "half_length": desc.half_length}
    if isinstance(desc, Plane):
        return {"kind": "plane", "n": desc.n, "half_length": desc.half_length}
    if isinstance(desc, PlanarCurve):
        return {"kind": "curve", "points": desc.points.tolist()}
    if isinstance(desc, ProfileCurve):
        return {"kind": "profile", "n": desc.n, "points": desc.points.tolist()}
    raise SurfaceError(f"unsupported descriptor {desc!r}")


def as_samples(surface, resolution=None) -> Samples:
    return surface if isinstance(surface, Samples) else sample_surface(surface, resolution)


def coarsen(samples: Samples) -> Samples:
    """The same surface at half resolution (for error indicators)."""
    desc, res = samples.descriptor, samples.resolution
    if desc is None:
        raise SurfaceError("samples carry no descriptor; cannot coarsen")
    if isinstance(desc, PlanarCurve):
        return sample_surface(PlanarCurve(desc.points[::2]))
    if isinstance(desc, Cylinder):
        return sample_surface(desc, (max(4, (res[0] // 4) * 2), max(2, res[1] // 2)))
    if isinstance(desc, Plane):
        return sample_surface(desc, max(2, res // 2))
    return sample_surface(desc, max(4, (res // 4) * 2))


def sphere_samples(n: int, r: float, resolution=None) -> Samples:
    return sample_surface(Sphere(n, r), resolution)


__all__: Sequence[str] = [
    "Sphere", "Cylinder", "Plane", "PlanarCurve", "ProfileCurve", "LambdaParams",
    "Samples", "SurfacePoint", "SurfaceError", "sample_surface", "lambda_residual",
    "curvature_of_polyline", "descriptor_from_json", "descriptor_to_json",
    "unit_sphere_area", "unit_ball_volume", "canonical_lambda", "regular_polygon",
    "polar_curve", "as_samples", "coarsen", "is_compact",
]
