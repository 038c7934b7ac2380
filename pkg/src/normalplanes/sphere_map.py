"""Association between a constant-normal-distance curve and its unit spherical curve.

For a curve with <r, t> = 2*eps*c**2 the radial projection

    r1(s) = r(s) / (2 c sqrt(eps s))

is a unit spherical curve whose own arc length s1 is an explicit, strictly
increasing function of s on eps*s >= c**2. The inverse of that function has
no closed form and is computed by safeguarded Newton iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frenet_engine import tangents
from .geom_core import (
    DEFAULT_TOLERANCES,
    CurveSamples,
    DomainError,
    GeometryError,
    Tolerances,
    branch_sign,
    constant_within,
    rows_dot,
)


@dataclass(frozen=True)
class SphereAssociation:
    c: float
    epsilon: int

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise GeometryError(f"c must be a positive number, got {self.c!r}")
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "epsilon", branch_sign(self.epsilon))

    @property
    def normal_offset(self) -> float:
        """Signed distance 2*eps*c**2 of the normal planes from the origin."""
        return 2.0 * self.epsilon * self.c**2


def _unwound(z):
    """z - arctan(z), with a series near 0 to avoid cancellation."""
    z = np.asarray(z, dtype=float)
    small = z < 0.1
    zs = np.where(small, z, 0.0)
    series = np.zeros_like(zs)
    power = zs**3
    for k in range(10):
        series += (-1) ** k * power / (2 * k + 3)
        power = power * zs * zs
    return np.where(small, series, z - np.arctan(np.where(small, 1.0, z)))


def _check_domain(assoc: SphereAssociation, s) -> np.ndarray:
    es = assoc.epsilon * np.asarray(s, dtype=float)
    if np.any(es < assoc.c**2) or not np.all(np.isfinite(es)):
        raise DomainError(f"outside domain: need εs ≥ c² = {assoc.c**2:.17g}")
    return es


def s1_of_s(assoc: SphereAssociation, s):
    """Arc length of the spherical curve as a function of s."""
    es = _check_domain(assoc, s)
    z = np.sqrt(es - assoc.c**2) / assoc.c
    out = assoc.epsilon * _unwound(z)
    return float(out) if np.ndim(out) == 0 else out


def speed_ds1_ds(assoc: SphereAssociation, s):
    es = _check_domain(assoc, s)
    out = np.sqrt(es - assoc.c**2) / (2 * assoc.c * es)
    return float(out) if np.ndim(out) == 0 else out


def _invert_one(c: float, target: float, tolerances: Tolerances) -> float:
    """Solve psi(x) = target for x = eps*s >= c**2 with target = eps*s1 >= 0."""
    c2 = c * c
    if target == 0.0:
        return c2

    def g(x):
        return float(_unwound(np.sqrt(x - c2) / c)) - target

    lo = c2
    hi = c2 * (1 + tolerances.delta_min)
    for _ in range(2100):
        if g(hi) >= 0:
            break
        lo, hi = hi, c2 + 2.0 * (hi - c2)
    else:
        raise GeometryError("inversion failed: no bracket")

    x = hi
    for _ in range(tolerances.max_newton_iter):
        gx = g(x)
        if gx == 0:
            return x
        if gx > 0:
            hi = x
        else:
            lo = x
        slope = np.sqrt(x - c2) / (2 * c * x)
        x_new = x - gx / slope if slope > 0 else np.nan
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * x or hi - lo <= 4e-16 * hi:
            return x_new
        x = x_new
    raise GeometryError("inversion failed")


def s_of_s1(assoc: SphereAssociation, s1, tolerances: Tolerances = DEFAULT_TOLERANCES):
    """Inverse of :func:`s1_of_s` (bracket by doubling, bisection-safeguarded Newton)."""
    arr = np.asarray(s1, dtype=float)
    target = assoc.epsilon * arr
    if np.any(target < 0) or not np.all(np.isfinite(target)):
        raise DomainError("need ε·s1 ≥ 0")
    flat = np.array([_invert_one(assoc.c, float(v), tolerances) for v in target.ravel()])
    out = assoc.epsilon * flat.reshape(arr.shape)
    return float(out) if np.ndim(out) == 0 else out


def normal_offsets(curve: CurveSamples) -> np.ndarray:
    """<r, t> at every sample, using numerical tangents."""
    return rows_dot(curve.points, tangents(curve))


def check_association(
    assoc: SphereAssociation, curve: CurveSamples, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """Verify <r, t> = 2*eps*c**2 along `curve`; return the worst deviation (scaled)."""
    offsets = normal_offsets(curve)
    ok, spread = constant_within(offsets, tolerances.tol_const)
    scale = max(1.0, abs(assoc.normal_offset))
    dev = float(np.max(np.abs(offsets - assoc.normal_offset))) / scale
    if not ok or dev > tolerances.tol_const:
        raise GeometryError(
            f"association undefined: <r,t> spread {spread:.3g}, "
            f"max |<r,t> - 2εc²| / scale = {dev:.3g} (tol_const {tolerances.tol_const:g})"
        )
    return max(dev, spread)


def project_to_sphere(
    assoc: SphereAssociation, curve: CurveSamples, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> CurveSamples:
    if not curve.arclength:
        raise GeometryError("resample first")
    _check_domain(assoc, curve.s_values)
    check_association(assoc, curve, tolerances)
    es = assoc.epsilon * curve.s_values
    points = curve.points / (2 * assoc.c * np.sqrt(es))[:, None]
    return CurveSamples(
        s_values=s1_of_s(assoc, curve.s_values),
        points=points,
        label=f"sphere({curve.label})" if curve.label else "sphere",
        params={"c": assoc.c, "epsilon": assoc.epsilon, "parameter": "s1"},
    )


def lift_from_sphere(
    assoc: SphereAssociation, spherical: CurveSamples, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> CurveSamples:
    """r(s1) = 2 c sqrt(eps s(s1)) r1(s1), relabelled by its arc length s(s1)."""
    if not spherical.arclength:
        raise GeometryError("resample first")
    radii = np.linalg.norm(spherical.points, axis=1)
    if np.max(np.abs(radii - 1.0)) > tolerances.tol_eq:
        raise GeometryError("input is not on the unit sphere")
    s = s_of_s1(assoc, spherical.s_values, tolerances)
    points = (2 * assoc.c * np.sqrt(assoc.epsilon * s))[:, None] * spherical.points
    return CurveSamples(
        s_values=s,
        points=points,
        epsilon=assoc.epsilon,
        label=f"lift({spherical.label})" if spherical.label else "lift",
        params={"c": assoc.c, "epsilon": assoc.epsilon},
    )


def _check_kappa1(kappa1, tolerances: Tolerances) -> np.ndarray:
    k1 = np.asarray(kappa1, dtype=float)
    if np.any(k1 < 1.0 - tolerances.tol_curv):
        raise DomainError("impossible spherical curvature: κ₁ must be ≥ 1")
    return np.maximum(k1, 1.0)


def curvature_from_spherical(
    assoc: SphereAssociation, kappa1, s, tolerances: Tolerances = DEFAULT_TOLERANCES
):
    """Curvature of the lifted curve from the curvature of its spherical image.

    kappa**2 = 1/(4c²(εs - c²)) + (εs - c²)²/(4c² (εs)³) (kappa1² - 1)

    Spherical curvatures within ``tol_curv`` below 1 are treated as 1
    (numerical great circles); anything lower is rejected.
    """
    k1 = _check_kappa1(kappa1, tolerances)
    es = _check_domain(assoc, s)
    if np.any(es <= assoc.c**2):
        raise DomainError("need εs > c² (curvature is infinite at the boundary)")
    c2 = assoc.c**2
    d = es - c2
    k2 = 1.0 / (4 * c2 * d) + d**2 / (4 * c2 * es**3) * (k1**2 - 1.0)
    out = np.sqrt(k2)
    return float(out) if np.ndim(out) == 0 else out


def curvature_variant_gap(assoc: SphereAssociation, kappa1, s):
    """Alternative closed form of the curvature relation minus the implemented one (as kappa**2).

    The alternative form uses ``s - c²`` in one denominator where the
    implemented form uses ``εs - c²``; they agree on the ε = +1 branch.
    Diagnostic only.
    """
    k1 = np.asarray(kappa1, dtype=float)
    s = np.asarray(s, dtype=float)
    eps, c2 = assoc.epsilon, assoc.c**2
    es = eps * s
    variant = (3 * s**2 - 3 * c2 * es + c2**2) / (4 * eps * s**3 * (s - c2)) + (es - c2) ** 2 / (
        4 * c2 * eps * s**3
    ) * k1**2
    d = es - c2
    implemented = 1.0 / (4 * c2 * d) + d**2 / (4 * c2 * es**3) * (k1**2 - 1.0)
    out = variant - implemented
    return float(out) if np.ndim(out) == 0 else out


def rectifying_curvature_relation(a: float, kappa1, s, tolerances: Tolerances = DEFAULT_TOLERANCES):
    """Curvature of the rectifying lift a*sec(s1)*r1 at its arc length s.

    (s² + a²)³ kappa² = a⁴ (kappa1² - 1)
    """
    if not a > 0:
        raise GeometryError("a must be positive")
    k1 = _check_kappa1(kappa1, tolerances)
    s = np.asarray(s, dtype=float)
    out = a**2 * np.sqrt(k1**2 - 1.0) / (s**2 + a**2) ** 1.5
    return float(out) if np.ndim(out) == 0 else out
