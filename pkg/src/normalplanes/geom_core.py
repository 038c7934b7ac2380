"""Vector helpers, curve sample containers and tolerance settings.

Everything here is immutable: arrays stored on containers are copied and
marked read-only on construction.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

ORIGIN = np.zeros(3)
ORIGIN.flags.writeable = False


class GeometryError(ValueError):
    """Raised when an input violates a geometric precondition."""


class DomainError(GeometryError):
    """Raised when a parameter lies outside an admissible interval."""


@dataclass(frozen=True)
class Tolerances:
    tol_eq: float = 1e-6
    tol_curv: float = 1e-4
    tol_const: float = 1e-6
    delta_min: float = 1e-3
    max_newton_iter: int = 64
    tol_arclen: float = 1e-6

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"tolerance {f.name} must be strictly positive, got {value!r}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any], base: "Tolerances | None" = None) -> "Tolerances":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        base = base or cls()
        values = {k: (int(v) if k == "max_newton_iter" else float(v)) for k, v in mapping.items()}
        return dataclasses.replace(base, **values)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_TOLERANCES = Tolerances()


def vec3(value) -> np.ndarray:
    """Return `value` as a finite float64 array of shape (3,)."""
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise GeometryError(f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("vector components must be finite")
    return arr


def branch_sign(epsilon) -> int:
    if epsilon in (1, -1):
        return int(epsilon)
    raise GeometryError(f"branch sign must be +1 or -1, got {epsilon!r}")


def rows_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise inner products of two (N, 3) arrays."""
    return np.einsum("ij,ij->i", a, b)


def normalize_rows(a: np.ndarray) -> np.ndarray:
    return a / np.linalg.norm(a, axis=1)[:, None]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class CurveSamples:
    """A sampled curve r(s).

    ``arclength`` states whether ``s_values`` is the natural parameter; when
    it is false ``s_values`` holds an arbitrary increasing parameter and the
    samples should go through :func:`resample_to_arclength` before any
    Frenet computation.

    ``epsilon`` is the branch sign of the parameter. It is optional because
    generic curves (circles, helices, spherical curves) have no branch; when
    it is set every sample must satisfy ``epsilon * s > 0``.
    """

    s_values: np.ndarray
    points: np.ndarray
    epsilon: int | None = None
    label: str = ""
    arclength: bool = True
    params: Mapping[str, Any] = field(default_factory=dict)
    tol_arclen: float = DEFAULT_TOLERANCES.tol_arclen

    def __post_init__(self):
        s = _frozen(np.ravel(self.s_values))
        pts = _frozen(self.points)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise GeometryError(f"points must have shape (N, 3), got {pts.shape}")
        if len(s) != len(pts):
            raise GeometryError(f"{len(s)} parameter values but {len(pts)} points")
        if len(s) < 2:
            raise GeometryError("a curve needs at least 2 samples")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(pts))):
            raise GeometryError("samples must be finite")
        if np.any(np.diff(s) <= 0):
            raise GeometryError("parameter values must be strictly increasing")
        eps = None if self.epsilon is None else branch_sign(self.epsilon)
        if eps is not None and np.any(eps * s <= 0):
            raise GeometryError("parameter crosses 0 within one branch (epsilon * s must be > 0)")
        if self.arclength:
            chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            ds = np.diff(s)
            excess = chords - ds * (1 + self.tol_arclen)
            if np.any(excess > 1e-12 * np.maximum(1.0, np.abs(s[1:]))):
                i = int(np.argmax(excess))
                raise GeometryError(
                    f"chord longer than arc length between samples {i} and {i + 1}: "
                    f"{chords[i]:.17g} > {ds[i]:.17g}"
                )
        object.__setattr__(self, "s_values", s)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "params", dict(self.params))

    def __len__(self) -> int:
        return len(self.s_values)

    def replace(self, **changes) -> "CurveSamples":
        return dataclasses.replace(self, **changes)

    def moved(self, rotation, translation=ORIGIN) -> "CurveSamples":
        """Apply the rigid motion x -> rotation @ x + translation."""
        rot = np.asarray(rotation, dtype=float)
        return self.replace(points=self.points @ rot.T + vec3(translation))


def plane_distance_from_origin(point, unit_normal, tol: float = DEFAULT_TOLERANCES.tol_eq) -> float:
    """Distance from the origin of the plane through `point` with normal `unit_normal`."""
    p, nrm = vec3(point), vec3(unit_normal)
    if abs(np.linalg.norm(nrm) - 1.0) > tol:
        raise GeometryError("normal not unit length")
    return abs(float(p @ nrm))


def constant_within(values, tol: float) -> tuple[bool, float]:
    """Scale-aware constancy test.

    The spread ``max - min`` is compared against ``tol * max(1, |mean|)``.
    Returns the verdict and the normalised spread.
    """
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return False, float("inf")
    spread = (v.max() - v.min()) / max(1.0, abs(v.mean()))
    return bool(spread <= tol), float(spread)


# 8-point Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _segment_lengths(x: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Length of each segment [x_j, x_{j+1}] of a local cubic interpolant.

    Segment j uses the cubic through the four samples starting at
    clip(j - 1, 0, N - 4); the speed of that cubic is integrated with
    8-point Gauss-Legendre.
    """
    n = len(x)
    j = np.arange(n - 1)
    k0 = np.clip(j - 1, 0, n - 4)
    nodes = x[k0[:, None] + np.arange(4)]  # (S, 4)
    vals = pts[k0[:, None] + np.arange(4)]  # (S, 4, 3)
    h = x[j + 1] - x[j]
    xq = x[j][:, None] + h[:, None] * _GL_X  # (S, Q)

    # derivative of the Lagrange basis polynomials at the quadrature nodes
    dbasis = np.zeros(xq.shape + (4,))
    for m in range(4):
        for l in range(4):
            if l == m:
                continue
            term = np.ones_like(xq) / (nodes[:, m] - nodes[:, l])[:, None]
            for q in range(4):
                if q in (m, l):
                    continue
                term = term * (xq - nodes[:, q][:, None]) / (nodes[:, m] - nodes[:, q])[:, None]
            dbasis[..., m] += term
    deriv = np.einsum("sqm,smk->sqk", dbasis, vals)
    speed = np.linalg.norm(deriv, axis=2)
    return h * (speed @ _GL_W)


def resample_to_arclength(
    samples: CurveSamples,
    s_start: float | None = None,
    epsilon: int | None = None,
    label: str | None = None,
) -> CurveSamples:
    """Relabel samples with cumulative arc length.

    Points are kept; only the parameter changes. The first sample keeps its
    parameter value unless `s_start` is given, so arc-length input comes back
    unchanged up to quadrature error.
    """
    n = len(samples)
    if n < 4:
        raise GeometryError("resampling needs at least 4 samples")
    pts = samples.points
    if np.any(np.all(np.diff(pts, axis=0) == 0.0, axis=1)):
        raise GeometryError("degenerate segment")
    lengths = _segment_lengths(samples.s_values, pts)
    start = samples.s_values[0] if s_start is None else float(s_start)
    s = start + np.concatenate([[0.0], np.cumsum(lengths)])
    return CurveSamples(
        s_values=s,
        points=pts,
        epsilon=samples.epsilon if epsilon is None else epsilon,
        label=samples.label if label is None else label,
        arclength=True,
        params=samples.params,
        tol_arclen=samples.tol_arclen,
    )


def rigid_align(source, target) -> tuple[np.ndarray, np.ndarray, float]:
    """Best proper rigid motion taking `source` onto `target` (Kabsch).

    Returns ``(rotation, translation, rmse)`` with
    ``target ~ source @ rotation.T + translation``.
    """
    a = np.asarray(source, dtype=float)
    b = np.asarray(target, dtype=float)
    if a.shape != b.shape:
        raise GeometryError("point sets must have the same shape")
    ca, cb = a.mean(axis=0), b.mean(axis=0)
    u, _, vt = np.linalg.svd((a - ca).T @ (b - cb))
    d = np.sign(np.linalg.det(vt.T @ u.T)) or 1.0
    rot = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    trans = cb - ca @ rot.T
    resid = a @ rot.T + trans - b
    rmse = float(np.sqrt(np.mean(np.sum(resid**2, axis=1))))
    return rot, trans, rmse
