"""Closed-form and ODE-generated curve families.

All closed-form families use coordinates in which the fixed point of the
normal planes is the origin. Parameters are validated by the frozen parameter records
below; generators return arc-length :class:`CurveSamples`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .frenet_engine import Integrated, NaturalEquations, integrate_natural_equations
from .geom_core import (
    DEFAULT_TOLERANCES,
    CurveSamples,
    DomainError,
    GeometryError,
    Tolerances,
    branch_sign,
    resample_to_arclength,
)
from .sphere_map import SphereAssociation, s1_of_s

DEFAULT_SAMPLES = 512


def _positive(name: str, value: float) -> float:
    if not (np.isfinite(value) and value > 0):
        raise GeometryError(f"{name} must be a positive number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class PlaneInvolute:
    c: float
    epsilon: int = 1

    def __post_init__(self):
        object.__setattr__(self, "c", _positive("c", self.c))
        object.__setattr__(self, "epsilon", branch_sign(self.epsilon))


@dataclass(frozen=True)
class TwistedExample:
    c: float
    epsilon: int = 1

    def __post_init__(self):
        object.__setattr__(self, "c", _positive("c", self.c))
        object.__setattr__(self, "epsilon", branch_sign(self.epsilon))


@dataclass(frozen=True)
class CircleInvolute:
    radius: float
    c2: float = 0.0
    epsilon2: int = 1

    def __post_init__(self):
        object.__setattr__(self, "radius", _positive("radius", self.radius))
        object.__setattr__(self, "epsilon2", branch_sign(self.epsilon2))


@dataclass(frozen=True)
class RectifyingLift:
    a: float

    def __post_init__(self):
        object.__setattr__(self, "a", _positive("a", self.a))


@dataclass(frozen=True)
class SphereCircle:
    height: float

    def __post_init__(self):
        if not -1.0 < self.height < 1.0:
            raise GeometryError(f"height must lie strictly inside (-1, 1), got {self.height!r}")


@dataclass(frozen=True)
class ConstantCurvatureNP:
    r: float
    h: float
    epsilon: int = 1
    tau_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "r", _positive("r", self.r))
        object.__setattr__(self, "h", _positive("h", self.h))
        object.__setattr__(self, "epsilon", branch_sign(self.epsilon))
        object.__setattr__(self, "tau_sign", branch_sign(self.tau_sign))


FamilySpec = Union[PlaneInvolute, TwistedExample, CircleInvolute, RectifyingLift, SphereCircle, ConstantCurvatureNP]


def branch_grid(
    c: float,
    epsilon: int,
    samples: int = DEFAULT_SAMPLES,
    es_min: float | None = None,
    es_max: float | None = None,
    spacing: str = "sqrt",
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """Increasing s grid on one branch, covering es_min <= eps*s <= es_max.

    ``spacing="sqrt"`` is uniform in sqrt(eps*s - c**2), which concentrates
    samples where the curvature of these families blows up;
    ``spacing="uniform"`` is uniform in s. Defaults cover
    [c**2 (1 + delta_min), 10 c**2].
    """
    eps = branch_sign(epsilon)
    c2 = c * c
    lo = c2 * (1 + tolerances.delta_min) if es_min is None else float(es_min)
    hi = 10 * c2 if es_max is None else float(es_max)
    if not hi > lo:
        raise GeometryError("empty grid range")
    if lo < c2:
        raise DomainError(f"outside εs ≥ c²: εs = {lo:.17g} < c² = {c2:.17g}")
    if spacing == "sqrt":
        es = c2 + np.linspace(np.sqrt(lo - c2), np.sqrt(hi - c2), samples) ** 2
    elif spacing == "uniform":
        es = np.linspace(lo, hi, samples)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    es[0], es[-1] = lo, hi
    return np.sort(eps * es)


def _check_branch(c: float, epsilon: int, s, tolerances: Tolerances, strict: bool) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    es = epsilon * s
    bound = c * c * (1 + tolerances.delta_min) if strict else c * c
    if np.any(es < bound * (1 - 1e-15)):
        raise DomainError(
            f"outside εs ≥ c²: need ε·s ≥ {bound:.17g} (c={c:g}, ε={epsilon:+d}), "
            f"got ε·s = {es.min():.17g}"
        )
    return es


def plane_involute_point(c: float, epsilon: int, s):
    """Points of the plane family; the boundary eps*s = c**2 is allowed.

    x = 2c² cos φ + 2cu sin φ,  y = ε (2c² sin φ − 2cu cos φ),  z = 0,
    with u = sqrt(εs − c²), φ = u/c. This is 2c sqrt(εs) (cos s1, sin s1, 0),
    the lift of the great circle, so the ε = −1 branch is the mirror image
    y -> −y of the ε = +1 branch and both are unit speed.
    """
    eps = branch_sign(epsilon)
    es = _check_branch(c, eps, s, DEFAULT_TOLERANCES, strict=False)
    u = np.sqrt(np.maximum(es - c * c, 0.0))
    phi = u / c
    x = 2 * c * c * np.cos(phi) + 2 * c * u * np.sin(phi)
    y = eps * (2 * c * c * np.sin(phi) - 2 * c * u * np.cos(phi))
    return np.stack([x, y, np.zeros_like(x)], axis=-1)


def plane_involute_frame(c: float, epsilon: int, s: float) -> np.ndarray:
    """Exact (t, n, b) of the plane family at s (rows), for eps*s > c**2."""
    eps = branch_sign(epsilon)
    es = float(_check_branch(c, eps, s, DEFAULT_TOLERANCES, strict=False))
    if es <= c * c:
        raise DomainError("frame undefined at εs = c²")
    phi = np.sqrt(es - c * c) / c
    t = np.array([eps * np.cos(phi), np.sin(phi), 0.0])
    n = np.array([-np.sin(phi), eps * np.cos(phi), 0.0])
    return np.array([t, n, np.cross(t, n)])


def plane_involute_curvature(c: float, epsilon: int, s):
    es = _check_branch(c, branch_sign(epsilon), s, DEFAULT_TOLERANCES, strict=False)
    return 1.0 / (2 * c * np.sqrt(es - c * c))


def plane_involute_equations(c: float, epsilon: int) -> NaturalEquations:
    """kappa = 1 / (2c sqrt(eps s - c²)), tau = 0."""
    eps = branch_sign(epsilon)
    c2 = c * c
    domain = (c2, np.inf) if eps > 0 else (-np.inf, -c2)
    return NaturalEquations(
        kappa_fn=lambda s: 1.0 / (2 * c * np.sqrt(eps * np.asarray(s) - c2)),
        tau_fn=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        domain=domain,
    )


def _family_params(spec) -> dict:
    params = {k: getattr(spec, k) for k in spec.__dataclass_fields__}
    return params


def gen_plane_involute(
    c: float, epsilon: int, s_grid=None, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> CurveSamples:
    spec = PlaneInvolute(c, epsilon)
    s = branch_grid(spec.c, spec.epsilon, tolerances=tolerances) if s_grid is None else np.asarray(s_grid, float)
    _check_branch(spec.c, spec.epsilon, s, tolerances, strict=True)
    return CurveSamples(
        s_values=s,
        points=plane_involute_point(spec.c, spec.epsilon, s),
        epsilon=spec.epsilon,
        label="plane-involute",
        params=_family_params(spec),
    )


def twisted_example_point(c: float, epsilon: int, s):
    """Lift of the circle of radius 1/sqrt(2) at height 1/sqrt(2):

    r = c sqrt(2) sqrt(εs) (cos(sqrt2 s1), sin(sqrt2 s1), 1).
    """
    eps = branch_sign(epsilon)
    _check_branch(c, eps, s, DEFAULT_TOLERANCES, strict=False)
    s1 = np.asarray(s1_of_s(SphereAssociation(c, eps), s))
    rho = c * np.sqrt(2.0) * np.sqrt(eps * np.asarray(s, dtype=float))
    angle = np.sqrt(2.0) * s1
    return np.stack([rho * np.cos(angle), rho * np.sin(angle), rho], axis=-1)


def twisted_example_curvature(c: float, epsilon: int, s):
    """kappa² = ((εs)³ + (εs − c²)³) / (4c² (εs)³ (εs − c²))."""
    es = _check_branch(c, branch_sign(epsilon), s, DEFAULT_TOLERANCES, strict=False)
    d = es - c * c
    return np.sqrt((es**3 + d**3) / (4 * c * c * es**3 * d))


def gen_twisted_example(
    c: float, epsilon: int, s_grid=None, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> CurveSamples:
    spec = TwistedExample(c, epsilon)
    s = branch_grid(spec.c, spec.epsilon, tolerances=tolerances) if s_grid is None else np.asarray(s_grid, float)
    _check_branch(spec.c, spec.epsilon, s, tolerances, strict=True)
    return CurveSamples(
        s_values=s,
        points=twisted_example_point(spec.c, spec.epsilon, s),
        epsilon=spec.epsilon,
        label="twisted-example",
        params=_family_params(spec),
    )


def circle_involute_point(radius: float, c2: float, s2):
    """r = r2(s2) + (c2 - s2) t2(s2) for the circle of `radius` about the origin."""
    s2 = np.asarray(s2, dtype=float)
    theta = s2 / radius
    r2 = radius * np.stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)], axis=-1)
    t2 = np.stack([-np.sin(theta), np.cos(theta), np.zeros_like(theta)], axis=-1)
    return r2 + (c2 - s2)[..., None] * t2


def circle_involute_tangent(radius: float, c2: float, s2):
    """Unit tangent (direction of increasing s2): sign(c2 - s2) n2."""
    s2 = np.asarray(s2, dtype=float)
    if np.any(s2 == c2):
        raise DomainError("involute cusp: tangent undefined at s2 = c2")
    theta = s2 / radius
    n2 = np.stack([-np.cos(theta), -np.sin(theta), np.zeros_like(theta)], axis=-1)
    return np.sign(c2 - s2)[..., None] * n2


def gen_circle_involute(
    radius: float, c2: float, epsilon2: int, s2_grid, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> CurveSamples:
    """Involute samples relabelled by arc length.

    The arc length is offset so that it matches the plane family with
    c² = radius/2: s = eps2 (radius/2 + distance along the involute from its cusp).
    """
    spec = CircleInvolute(radius, c2, epsilon2)
    s2 = np.asarray(s2_grid, dtype=float)
    side = np.sign(spec.c2 - s2)
    if np.any(side != -spec.epsilon2):
        raise DomainError(
            f"involute cusp in range: need sign(c2 - s2) = {-spec.epsilon2:+d} for every s2 "
            f"(c2 = {spec.c2:g})"
        )
    raw = CurveSamples(
        s_values=s2,
        points=circle_involute_point(spec.radius, spec.c2, s2),
        arclength=False,
        label="circle-involute",
        params=_family_params(spec),
    )
    start = spec.epsilon2 * (spec.radius / 2 + (spec.c2 - s2[0]) ** 2 / (2 * spec.radius))
    return resample_to_arclength(raw, s_start=start, epsilon=spec.epsilon2)


def gen_sphere_circle(height: float, s1_grid) -> CurveSamples:
    """Circle of latitude on the unit sphere, parametrized by its arc length."""
    spec = SphereCircle(height)
    s1 = np.asarray(s1_grid, dtype=float)
    rho = np.sqrt(1.0 - spec.height**2)
    pts = np.stack(
        [rho * np.cos(s1 / rho), rho * np.sin(s1 / rho), np.full_like(s1, spec.height)], axis=-1
    )
    return CurveSamples(s_values=s1, points=pts, label="sphere-circle", params={"height": spec.height})


def lift_rectifying(
    spherical: CurveSamples, a: float, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> CurveSamples:
    """Rectifying curve r = a sec(s1) r1(s1) over a unit-speed spherical curve.

    Its speed is a sec²(s1), so the arc length measured from s1 = 0 is
    s = a tan(s1); samples are labelled with that value.
    """
    spec = RectifyingLift(a)
    if not spherical.arclength:
        raise GeometryError("resample first")
    radii = np.linalg.norm(spherical.points, axis=1)
    if np.max(np.abs(radii - 1.0)) > tolerances.tol_eq:
        raise GeometryError("input is not on the unit sphere")
    s1 = spherical.s_values
    if np.any(np.abs(s1) >= np.pi / 2):
        raise DomainError("secant singularity: s1 must stay inside (-π/2, π/2)")
    pts = (spec.a / np.cos(s1))[:, None] * spherical.points
    return CurveSamples(
        s_values=spec.a * np.tan(s1),
        points=pts,
        label="rectifying-lift",
        params={"a": spec.a, **{f"sphere_{k}": v for k, v in spherical.params.items()}},
    )


def constant_curvature_torsion(spec: ConstantCurvatureNP, s):
    """tau = tau_sign * h / (r sqrt(2 eps h s - r² - h²))."""
    q = 2 * spec.epsilon * spec.h * np.asarray(s, dtype=float) - spec.r**2 - spec.h**2
    if np.any(q <= 0):
        raise DomainError("T² negative: need 2εhs − r² − h² > 0")
    return spec.tau_sign * spec.h / (spec.r * np.sqrt(q))


def constant_curvature_equations(spec: ConstantCurvatureNP) -> NaturalEquations:
    edge = (spec.r**2 + spec.h**2) / (2 * spec.h)
    domain = (edge, np.inf) if spec.epsilon > 0 else (-np.inf, -edge)
    r = spec.r
    return NaturalEquations(
        kappa_fn=lambda s: np.full_like(np.asarray(s, dtype=float), 1.0 / r),
        tau_fn=lambda s: constant_curvature_torsion(spec, s),
        domain=domain,
    )


def solve_constant_curvature_np(
    spec: ConstantCurvatureNP,
    s_start: float,
    s_end: float,
    samples: int = DEFAULT_SAMPLES,
    step: float = 1e-3,
    initial_point=None,
    initial_frame=None,
) -> Integrated:
    """Integrate the constant-curvature family.

    Without explicit initial data the curve starts from the standard frame,
    at the point that makes the origin the common fixed point:
    r = εh t − r n + (εh/r) T b.
    """
    constant_curvature_torsion(spec, np.array([s_start, s_end]))
    frame = np.eye(3) if initial_frame is None else np.asarray(initial_frame, dtype=float)
    if initial_point is None:
        t0, n0, b0 = frame
        torsion_radius = 1.0 / constant_curvature_torsion(spec, s_start)
        initial_point = (
            spec.epsilon * spec.h * t0 - spec.r * n0 + spec.epsilon * spec.h / spec.r * torsion_radius * b0
        )
    result = integrate_natural_equations(
        constant_curvature_equations(spec),
        initial_point,
        frame,
        s_start,
        s_end,
        step,
        samples=samples,
        label="constant-curvature-np",
    )
    curve = result.samples.replace(params=_family_params(spec))
    return Integrated(samples=curve, frames=result.frames, max_step_drift=result.max_step_drift)


def gen_constant_curvature_np(
    spec: ConstantCurvatureNP, s_grid=None, step: float = 1e-3, **placement
) -> CurveSamples:
    """Samples of the constant-curvature family at the evenly spaced `s_grid`.

    `s_grid` may also be a (start, end) pair, in which case 512 samples are used.
    """
    if s_grid is None:
        edge = (spec.r**2 + spec.h**2) / (2 * spec.h)
        lo, hi = 1.2 * edge, 5 * edge
        s_grid = (lo, hi) if spec.epsilon > 0 else (-hi, -lo)
    grid = np.asarray(s_grid, dtype=float)
    if grid.size == 2:
        start, end, n = grid[0], grid[1], DEFAULT_SAMPLES
    else:
        if not np.allclose(np.diff(grid), grid[1] - grid[0], rtol=1e-9, atol=0):
            raise GeometryError("s_grid must be evenly spaced")
        start, end, n = grid[0], grid[-1], len(grid)
    return solve_constant_curvature_np(spec, start, end, samples=n, step=step, **placement).samples


def generate(spec: FamilySpec, grid=None, tolerances: Tolerances = DEFAULT_TOLERANCES) -> CurveSamples:
    """Dispatch a family record to its generator."""
    if isinstance(spec, PlaneInvolute):
        return gen_plane_involute(spec.c, spec.epsilon, grid, tolerances)
    if isinstance(spec, TwistedExample):
        return gen_twisted_example(spec.c, spec.epsilon, grid, tolerances)
    if isinstance(spec, CircleInvolute):
        return gen_circle_involute(spec.radius, spec.c2, spec.epsilon2, grid, tolerances)
    if isinstance(spec, SphereCircle):
        return gen_sphere_circle(spec.height, grid)
    if isinstance(spec, ConstantCurvatureNP):
        return gen_constant_curvature_np(spec, grid)
    if isinstance(spec, RectifyingLift):
        raise GeometryError("a rectifying lift needs a spherical curve; use lift_rectifying")
    raise TypeError(f"unknown family spec {spec!r}")
