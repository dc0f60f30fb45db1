"""Stability of round spheres for the F- and T-functionals.

Both classifications minimize a reduced quadratic form over normal speeds
``f = a + <z, N> + f0`` normalized by ``int f^2 exp(-|X|^2/2) dmu = 1``.
For F-stability the centre and scale responses ``y = k z`` and ``h`` are
chosen to maximize the form first.  The response-optimized form is
assembled as a matrix on the mode basis by polarizing
:func:`~lsl.variations.sphere_quadratic_form`, and its smallest eigenvalue
is the certificate.  A closed-form threshold rule is provided
independently for cross-checking.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import fields as fl
from .variations import SphereVariation, sphere_eigenvalue, sphere_quadratic_form
from .surface_core import unit_sphere_area

TIE_TOL = 1e-10
K_RANGE = 10.0
K_RANGE_CAP = 1e8


class Mode(str, Enum):
    F = "f"
    WEAK = "weak"


@dataclass(frozen=True)
class ThresholdSet:
    f_lower: float
    f_upper: float
    weak_lower: float
    weak_upper: float

    @classmethod
    def for_dimension(cls, n: int) -> "ThresholdSet":
        q = math.sqrt(1 + 4 * n)
        return cls(math.sqrt(n), math.sqrt(n + 1), (q - 1) / 2, (q + 1) / 2)


@dataclass(frozen=True)
class StabilityVerdict:
    mode: Mode
    n: int
    r: float
    stable: bool
    certificate: float
    witness: Optional[SphereVariation] = None
    witness_kind: str = ""

    @property
    def verdict(self) -> str:
        return "stable" if self.stable else "unstable"


def _check(n: int, r: float) -> None:
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")


def _near(x: float, y: float) -> bool:
    return abs(x - y) <= 1e-12 * max(1.0, abs(y))


def f_stable_by_threshold(n: int, r: float) -> bool:
    """Closed-form rule: stable iff ``r <= sqrt(n)`` or ``r > sqrt(n + 1)``."""
    t = ThresholdSet.for_dimension(n)
    if _near(r, t.f_lower):
        return True
    if _near(r, t.f_upper):
        return False
    return r < t.f_lower or r > t.f_upper


def weak_stable_by_threshold(n: int, r: float) -> bool:
    """Closed-form rule: stable iff ``r <= (sqrt(1+4n)-1)/2`` or ``r >= (sqrt(1+4n)+1)/2``."""
    t = ThresholdSet.for_dimension(n)
    if _near(r, t.weak_lower) or _near(r, t.weak_upper):
        return True
    return r < t.weak_lower or r > t.weak_upper


# --------------------------------------------------------------------------
# spectral data
# --------------------------------------------------------------------------

def mode_coefficient(n: int, r: float, k: int) -> float:
    """Coefficient of ``int f_k^2 dmu`` in ``-int f L f dmu`` for a degree-k harmonic."""
    lam = n / r - r
    return sphere_eigenvalue(n, r, k) - n / r**2 - 1 + lam**2


def spectral_table(n: int, r: float, k_max: int) -> List[Dict[str, float]]:
    """Per-degree eigenvalue ``mu_k`` and stability coefficient for ``k <= k_max``."""
    _check(n, r)
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    return [
        {"k": k, "mu": sphere_eigenvalue(n, r, k), "coefficient": mode_coefficient(n, r, k)}
        for k in range(k_max + 1)
    ]


def f0_lower_bound(n: int, r: float) -> float:
    """``((r^2 - n - 1/2)^2 + 7/4) / r^2``, the degree-2 stability coefficient."""
    return ((r * r - n - 0.5) ** 2 + 1.75) / r**2


# --------------------------------------------------------------------------
# response optimization
# --------------------------------------------------------------------------

def best_translation_response(n: int, r: float, k_range: float = K_RANGE) -> Tuple[float, float]:
    """Maximize ``g(k) = (lam^2 - 1) + m (2k - k^2)`` over ``|k| <= k_range``.

    ``m = 1 + lam r``.  Returns ``(k, g(k))``.  For ``m < 0`` the maximum is
    unbounded as the range grows; the range is widened tenfold while the
    value stays negative, up to a cap.
    """
    lam = n / r - r
    m = 1.0 + lam * r
    if abs(m) <= 1e-12:
        m = 0.0

    def g(k):
        return lam**2 - 1 + m * (2 * k - k * k)

    while True:
        candidates = [-k_range, k_range, min(max(1.0, -k_range), k_range)]
        k = max(candidates, key=g)
        if g(k) >= -TIE_TOL or m >= 0 or k_range >= K_RANGE_CAP:
            return k, g(k)
        k_range *= 10


def _basis_norms(n: int, r: float, k_max: int) -> Dict[str, float]:
    """``int b^2 dmu`` for the unit-coefficient basis functions on ``S^n(r)``.

    Harmonic degrees enter the closed form only through their energies, so
    each f0 basis element is a unit-energy harmonic.
    """
    area = unit_sphere_area(n) * r**n
    norms = {"const": area, "normal": area / (n + 1)}
    norms.update({f"harm{k}": 1.0 for k in range(2, k_max + 1)})
    return norms


def _reduced_form(n: int, r: float, coeffs: Dict[str, float], k_resp: float, with_responses: bool) -> float:
    a = coeffs.get("const", 0.0)
    zc = coeffs.get("normal", 0.0)
    z = np.zeros(n + 1)
    z[0] = zc
    energies = {int(key[4:]): c * c for key, c in coeffs.items() if key.startswith("harm")}
    if with_responses:
        return sphere_quadratic_form(n, r, energies, a=a, z=z, y=k_resp * z, h=-2 * a / r).value
    return sphere_quadratic_form(n, r, energies, z=z).value


def reduced_matrix(n: int, r: float, mode: Mode, k_max: int = 8) -> Tuple[List[str], np.ndarray, float]:
    """Matrix of the reduced form on the normalized mode basis, by polarization.

    Returns the basis labels, the symmetric matrix and the translation
    response ``k`` used (F mode).
    """
    labels = list(_basis_norms(n, r, k_max))
    if mode is Mode.WEAK:
        labels.remove("const")
    norms = _basis_norms(n, r, k_max)
    weight = math.exp(-r * r / 2)
    # unit weighted norm: int (c b)^2 w dmu = 1
    scale = {key: 1.0 / math.sqrt(norms[key] * weight) for key in labels}
    k_resp = best_translation_response(n, r)[0] if mode is Mode.F else 0.0
    with_resp = mode is Mode.F

    def form(c: Dict[str, float]) -> float:
        return _reduced_form(n, r, {key: v * scale[key] for key, v in c.items()}, k_resp, with_resp)

    size = len(labels)
    M = np.diag([form({key: 1.0}) for key in labels])
    for i, li in enumerate(labels):
        for j in range(i + 1, size):
            lj = labels[j]
            M[i, j] = M[j, i] = 0.5 * (form({li: 1.0, lj: 1.0}) - M[i, i] - M[j, j])
    return labels, M, k_resp


def _witness(n: int, r: float, label: str, k_resp: float, mode: Mode) -> SphereVariation:
    d = n + 1
    if label == "const":
        return SphereVariation(a=1.0, z=np.zeros(d), h=-2.0 / r)
    if label == "normal":
        return SphereVariation(z=fl.basis_vector(d, 0), k=k_resp if mode is Mode.F else 0.0)
    deg = int(label[4:])
    return SphereVariation(f0=fl.harmonic(deg, fl.basis_vector(d, 0), fl.basis_vector(d, 1)), z=np.zeros(d))


def _classify(n: int, r: float, mode: Mode, k_max: int) -> StabilityVerdict:
    _check(n, r)
    labels, M, k_resp = reduced_matrix(n, r, mode, k_max)
    evals, evecs = np.linalg.eigh(M)
    cert = float(evals[0])
    stable = cert >= -TIE_TOL
    witness, kind = None, ""
    if not stable:
        kind = labels[int(np.argmax(np.abs(evecs[:, 0])))]
        witness = _witness(n, r, kind, k_resp, mode)
    return StabilityVerdict(mode, n, r, stable, cert, witness, kind)


def classify_F(n: int, r: float, k_max: int = 8) -> StabilityVerdict:
    """F-stability of ``S^n(r)`` with optimal centre and scale responses."""
    return _classify(n, r, Mode.F, k_max)


def classify_weak(n: int, r: float, k_max: int = 8) -> StabilityVerdict:
    """Weak stability of ``S^n(r)`` over weighted-volume-preserving speeds."""
    return _classify(n, r, Mode.WEAK, k_max)


def classify(n: int, r: float, mode, k_max: int = 8) -> StabilityVerdict:
    return _classify(n, r, Mode(mode), k_max)


# --------------------------------------------------------------------------
# scans
# --------------------------------------------------------------------------

@dataclass
class ScanResult:
    n: int
    mode: Mode
    rows: List[StabilityVerdict]
    step: float

    @property
    def transitions(self) -> List[Tuple[float, float]]:
        """Consecutive grid pairs ``(r_i, r_{i+1})`` whose verdicts differ."""
        return [
            (a.r, b.r) for a, b in zip(self.rows, self.rows[1:]) if a.stable != b.stable
        ]

    def disagreements(self) -> List[float]:
        rule = f_stable_by_threshold if self.mode is Mode.F else weak_stable_by_threshold
        return [v.r for v in self.rows if v.stable != rule(self.n, v.r)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "mode", "verdict", "certificate", "witness_kind"])
        for v in self.rows:
            w.writerow([f"{v.r:.17g}", self.mode.value, v.verdict, f"{v.certificate:.17g}", v.witness_kind])
        return buf.getvalue()


def scan_grid(r_min: float, r_max: float, step: float) -> np.ndarray:
    if not (0 < r_min < r_max) or not step > 0:
        raise ValueError("need 0 < r_min < r_max and step > 0")
    count = int(math.floor((r_max - r_min) / step + 1e-9))
    return r_min + step * np.arange(count + 1)


def threshold_scan(n: int, r_min: float, r_max: float, step: float, mode="f", k_max: int = 8) -> ScanResult:
    mode = Mode(mode)
    rows = [_classify(n, float(r), mode, k_max) for r in scan_grid(r_min, r_max, step)]
    return ScanResult(n, mode, rows, step)


def bracketed(transitions: List[Tuple[float, float]], value: float, step: float) -> bool:
    """True if some transition pair lies within one grid step of ``value``."""
    return any(lo - step <= value <= hi + step for lo, hi in transitions)
