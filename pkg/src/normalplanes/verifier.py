"""Classification of curves and residuals of the normal-plane identities.

For a curve whose normal planes keep the signed distance 2*eps*c**2 from a
fixed point p, the position vector decomposes in the Frenet frame as

    r - p = 2 eps c² t - R n + A b,   A = 2 eps c² kappa T - R' T,

and the two scalar identities checked here are

    res311 = 4 eps c² s - (4 c⁴ + R² + A²)
    res312 = R tau + (R' T)' - 2 eps c² (kappa T)'.

Both vanish on twisted members of the family; plane members instead satisfy
R R' = 2 eps c².
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging

import numpy as np

from .frenet_engine import FrameSeries, compute_frenet, differentiate
from .geom_core import (
    DEFAULT_TOLERANCES,
    ORIGIN,
    CurveSamples,
    GeometryError,
    Tolerances,
    constant_within,
    rows_dot,
    vec3,
)

log = logging.getLogger(__name__)

MIN_TORSION = 1e-4


@dataclass(frozen=True, eq=False)
class PlaneDistances:
    """Distances of the normal, osculating and rectifying planes from p.

    Osculating and rectifying entries are NaN where the frame is undefined.
    """

    s: np.ndarray
    normal: np.ndarray
    osculating: np.ndarray
    rectifying: np.ndarray
    defined: np.ndarray


@dataclass(frozen=True, eq=False)
class PositionDecomposition:
    s: np.ndarray
    t_comp: np.ndarray
    n_comp: np.ndarray
    b_comp: np.ndarray
    defined: np.ndarray

    def reconstruct(self, frames: FrameSeries, p=ORIGIN) -> np.ndarray:
        return (
            vec3(p)
            + self.t_comp[:, None] * frames.t
            + self.n_comp[:, None] * frames.n
            + self.b_comp[:, None] * frames.b
        )


@dataclass(frozen=True)
class FixedPoint:
    p: np.ndarray
    d: float
    rank: int
    singular_values: np.ndarray
    deficient_dirs: list  # unit vectors (in point space) along which p is undetermined

    @property
    def condition(self) -> float:
        kept = self.singular_values[: self.rank]
        return float(kept[0] / kept[-1])


@dataclass(frozen=True)
class Flag:
    value: bool
    deviation: float
    tolerance: float


@dataclass
class VerificationReport:
    n_samples: int
    flags: dict[str, Flag]
    fitted: dict[str, float]
    residuals: dict[str, float | None]
    distances: dict[str, dict[str, float]]
    fixed_point: FixedPoint | None
    reference_point: np.ndarray
    tolerances: Tolerances
    notes: list[str] = field(default_factory=list)

    def flag(self, name: str) -> bool:
        return self.flags[name].value


def plane_distances(frames: FrameSeries, p=ORIGIN) -> PlaneDistances:
    rel = frames.points - vec3(p)
    return PlaneDistances(
        s=frames.s,
        normal=np.abs(rows_dot(rel, frames.t)),
        osculating=np.abs(rows_dot(rel, frames.b)),
        rectifying=np.abs(rows_dot(rel, frames.n)),
        defined=frames.defined.copy(),
    )


def decompose_position(frames: FrameSeries, p=ORIGIN) -> PositionDecomposition:
    rel = frames.points - vec3(p)
    return PositionDecomposition(
        s=frames.s,
        t_comp=rows_dot(rel, frames.t),
        n_comp=rows_dot(rel, frames.n),
        b_comp=rows_dot(rel, frames.b),
        defined=frames.defined.copy(),
    )


def normal_constant(frames: FrameSeries, p=ORIGIN) -> tuple[float, int, float, float]:
    """Fit <r - p, t> = 2 eps c².

    Returns (c, eps, mean, spread) where spread is the scale-aware constancy
    measure of :func:`constant_within`.
    """
    offsets = rows_dot(frames.points - vec3(p), frames.t)
    mean = float(np.mean(offsets))
    _, spread = constant_within(offsets, np.inf)
    eps = 1 if mean >= 0 else -1
    return float(np.sqrt(abs(mean) / 2)), eps, mean, spread


def _resolve_constants(frames, c, epsilon, p, tolerances):
    if c is not None and epsilon is not None:
        return float(c), int(epsilon)
    c_fit, eps_fit, mean, spread = normal_constant(frames, p)
    if spread > tolerances.tol_const or abs(mean) <= tolerances.tol_const:
        raise GeometryError(
            f"not a constant-normal-distance curve (spread of <r,t> = {spread:.3g}, mean = {mean:.3g})"
        )
    return (c_fit if c is None else float(c)), (eps_fit if epsilon is None else int(epsilon))


def _derived_mask(frames: FrameSeries, levels: int) -> np.ndarray:
    """Samples where every nested derivative came from a central stencil.

    Frames are interior from index 2; each further differentiation of a
    frame profile trims two more samples at each end.
    """
    mask = (frames.interior & frames.defined).copy()
    trim = 2 * levels
    first = int(np.argmax(frames.interior)) if frames.interior.any() else 0
    last = len(mask) - 1 - int(np.argmax(frames.interior[::-1])) if frames.interior.any() else 0
    mask[: first + trim] = False
    mask[last - trim + 1:] = False
    return mask


def residual_flatness(
    frames: FrameSeries, c=None, epsilon=None, p=ORIGIN, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """R R' - 2 eps c² per sample (NaN outside the trusted interior)."""
    c, eps = _resolve_constants(frames, c, epsilon, p, tolerances)
    if not np.all(frames.defined):
        log.warning("curvature vanishes at %d samples", int(np.sum(~frames.defined)))
    R = frames.R
    out = R * differentiate(R, frames.s) - 2 * eps * c * c
    out[~_derived_mask(frames, 1)] = np.nan
    return out


def _torsion_radius(frames: FrameSeries) -> np.ndarray:
    T = np.full(len(frames), np.nan)
    ok = frames.defined & (np.abs(frames.tau) >= MIN_TORSION)
    T[ok] = 1.0 / frames.tau[ok]
    return T


def residual_311(
    frames: FrameSeries, c=None, epsilon=None, p=ORIGIN, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    c, eps = _resolve_constants(frames, c, epsilon, p, tolerances)
    R, kappa, T = frames.R, frames.kappa, _torsion_radius(frames)
    dR = differentiate(R, frames.s)
    A = 2 * eps * c * c * kappa * T - dR * T
    out = 4 * eps * c * c * frames.s - (4 * c**4 + R**2 + A**2)
    out[~_derived_mask(frames, 1)] = np.nan
    return out


def residual_312(
    frames: FrameSeries, c=None, epsilon=None, p=ORIGIN, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    c, eps = _resolve_constants(frames, c, epsilon, p, tolerances)
    # samples with |tau| < MIN_TORSION come out NaN, as do their stencil neighbours
    R, kappa, T = frames.R, frames.kappa, _torsion_radius(frames)
    dR = differentiate(R, frames.s)
    out = R * frames.tau + differentiate(dR * T, frames.s) - 2 * eps * c * c * differentiate(kappa * T, frames.s)
    out[~_derived_mask(frames, 2)] = np.nan
    return out


def recover_fixed_point(frames: FrameSeries, rank_tol: float = 1e-8) -> FixedPoint:
    """Least-squares fit of p and d in <r_i - p, t_i> = d.

    Minimum-norm solution when the tangents do not span space (plane curves);
    fails when d itself cannot be separated from p (straight lines).
    """
    if len(frames) < 8:
        raise GeometryError("need at least 8 frames")
    design = np.hstack([frames.t, np.ones((len(frames), 1))])
    rhs = rows_dot(frames.points, frames.t)
    u, sv, vt = np.linalg.svd(design, full_matrices=False)
    rank = int(np.sum(sv > rank_tol * sv[0]))
    null = vt[rank:]
    if np.any(np.abs(null[:, 3]) > 1e-6):
        raise GeometryError("fixed point unidentifiable: tangents do not separate p from d")
    coef = (u[:, :rank].T @ rhs) / sv[:rank]
    x = vt[:rank].T @ coef
    dirs = []
    for v in null:
        w = v[:3] / np.linalg.norm(v[:3])
        k = int(np.argmax(np.abs(w)))
        dirs.append(w * np.sign(w[k]))
    return FixedPoint(p=x[:3], d=float(x[3]), rank=rank, singular_values=sv, deficient_dirs=dirs)


def _distance_summary(values: np.ndarray) -> dict[str, float]:
    v = values[np.isfinite(values)]
    if v.size == 0:
        return {"mean": None, "max_dev": None}
    mean = float(v.mean())
    return {"mean": mean, "max_dev": float(np.max(np.abs(v - mean)))}


def _finite_max(a: np.ndarray) -> float | None:
    a = np.abs(a[np.isfinite(a)])
    return float(a.max()) if a.size else None


def classify(
    samples: CurveSamples,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    fixed_point=None,
    recenter: bool = False,
) -> VerificationReport:
    """Flag which of the characterizing properties a sampled curve has.

    The reference point is the origin unless `fixed_point` is given or
    `recenter` asks for the least-squares fixed point.
    """
    if len(samples) < 16:
        raise GeometryError("classification needs at least 16 samples")
    frames = compute_frenet(samples, tolerances)
    notes: list[str] = []

    try:
        fp = recover_fixed_point(frames)
    except GeometryError as exc:
        fp = None
        notes.append(str(exc))
    if recenter:
        if fp is None:
            raise GeometryError("cannot recenter: fixed point unidentifiable")
        p = fp.p
    else:
        p = ORIGIN if fixed_point is None else vec3(fixed_point)

    rel = frames.points - p
    rho2 = rows_dot(rel, rel)
    scale = max(1.0, float(np.sqrt(rho2.max())))
    normal_signed = rows_dot(rel, frames.t)
    dist = plane_distances(frames, p)
    defined = frames.defined
    flags: dict[str, Flag] = {}
    fitted: dict[str, float] = {}
    residuals: dict[str, float | None] = {"res311_max": None, "res312_max": None, "flatness_max": None}

    sph_dev = float(np.max(np.abs(normal_signed))) / scale
    flags["spherical"] = Flag(sph_dev <= tolerances.tol_const, sph_dev, tolerances.tol_const)

    const_ok, spread = constant_within(normal_signed, tolerances.tol_const)
    cnd = const_ok and not flags["spherical"].value
    flags["constant_normal_distance"] = Flag(cnd, spread, tolerances.tol_const)
    fitted["c1"] = float(np.mean(normal_signed))

    if np.any(defined):
        tmax = float(np.max(np.abs(frames.tau[defined])))
        plane_dev = tmax / max(1.0, float(np.max(frames.kappa[defined])))
    else:
        plane_dev = 0.0
    is_plane = plane_dev <= tolerances.tol_curv
    flags["plane"] = Flag(is_plane, plane_dev, tolerances.tol_curv)

    if np.all(defined):
        cc_ok, cc_spread = constant_within(frames.kappa, tolerances.tol_curv)
    else:
        cc_ok, cc_spread = False, float("inf")
        notes.append("curvature vanishes somewhere; constant-curvature test skipped")
    flags["constant_curvature"] = Flag(cc_ok, cc_spread, tolerances.tol_curv)

    if np.any(defined):
        rect_dev = float(np.max(dist.rectifying[defined])) / scale
    else:
        rect_dev = float("inf")
    flags["rectifying"] = Flag(rect_dev <= tolerances.tol_curv and not is_plane, rect_dev, tolerances.tol_curv)

    rect_const, rect_spread = constant_within(dist.rectifying[defined], tolerances.tol_curv)
    flags["constant_rectifying_distance"] = Flag(rect_const and np.all(defined), rect_spread, tolerances.tol_curv)
    if flags["constant_rectifying_distance"].value:
        fitted["r_rect"] = float(np.mean(dist.rectifying))
    osc_const, _ = constant_within(dist.osculating[defined], tolerances.tol_curv)
    if flags["rectifying"].value and osc_const:
        fitted["a"] = float(np.mean(dist.osculating[defined]))

    if cnd:
        c, eps, mean, _ = normal_constant(frames, p)
        fitted.update(c=c, epsilon=eps, h=abs(mean))
        radial_dev = float(np.max(np.abs(rho2 - 4 * eps * c * c * frames.s))) / max(1.0, float(rho2.max()))
        flags["radial_law"] = Flag(radial_dev <= tolerances.tol_const, radial_dev, tolerances.tol_const)
        if np.all(defined):
            flat = residual_flatness(frames, c, eps, p, tolerances)
            residuals["flatness_max"] = _finite_max(flat)
            if not is_plane:
                residuals["res311_max"] = _finite_max(residual_311(frames, c, eps, p, tolerances))
                residuals["res312_max"] = _finite_max(residual_312(frames, c, eps, p, tolerances))
        if flags["constant_rectifying_distance"].value and not cc_ok:
            notes.append("constant normal and rectifying distances but curvature not constant")

    return VerificationReport(
        n_samples=len(samples),
        flags=flags,
        fitted=fitted,
        residuals=residuals,
        distances={
            "normal": _distance_summary(dist.normal),
            "osculating": _distance_summary(dist.osculating),
            "rectifying": _distance_summary(dist.rectifying),
        },
        fixed_point=fp,
        reference_point=np.array(p, dtype=float),
        tolerances=tolerances,
        notes=notes,
    )
