import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normalplanes import curve_families as fam
from normalplanes.frenet_engine import compute_frenet, differentiate
from normalplanes.geom_core import CurveSamples, GeometryError, rows_dot
from normalplanes.verifier import (
    classify,
    decompose_position,
    normal_constant,
    plane_distances,
    recover_fixed_point,
    residual_311,
    residual_312,
    residual_flatness,
)

from conftest import random_rotation


def centred_circle(radius=2.0, n=300):
    s = np.linspace(0, 2 * np.pi * radius * 0.9, n)
    u = s / radius
    return CurveSamples(s, radius * np.stack([np.cos(u), np.sin(u), 0 * u], axis=1))


def helix(n=400):
    s = np.linspace(0.5, 12, n)
    w = 1 / np.hypot(1.0, 0.5)
    return CurveSamples(s, np.stack([np.cos(w * s), np.sin(w * s), 0.5 * w * s], axis=1))


@pytest.fixture(scope="module")
def twisted_mid():
    return fam.gen_twisted_example(1.0, 1, fam.branch_grid(1.0, 1, 512, 1.5, 6.0))


def test_plane_distances_examples(plane_1, twisted_1):
    for curve in (plane_1, twisted_1):
        dist = plane_distances(compute_frenet(curve))
        assert np.max(np.abs(dist.normal - 2)) < 1e-6
    dist = plane_distances(compute_frenet(centred_circle()))
    assert np.max(dist.normal) < 1e-6
    assert np.max(np.abs(dist.rectifying - 2)) < 1e-6


def test_plane_distances_undefined_on_lines():
    s = np.linspace(0, 1, 20)
    frames = compute_frenet(CurveSamples(s, np.stack([s, 1 + 0 * s, 0 * s], axis=1)))
    dist = plane_distances(frames)
    assert not dist.defined.any()
    assert np.isnan(dist.osculating).all() and np.isnan(dist.rectifying).all()
    assert np.allclose(dist.normal, s)


@pytest.mark.parametrize(
    "make",
    [
        lambda: fam.gen_plane_involute(0.5, -1),
        lambda: fam.gen_twisted_example(2.0, 1),
        lambda: fam.gen_constant_curvature_np(fam.ConstantCurvatureNP(1.0, 2.0, 1), (1.5, 6.0)),
        lambda: fam.lift_rectifying(fam.gen_sphere_circle(0.4, np.linspace(-1, 1, 200)), 2.0),
        helix,
    ],
)
def test_pythagoras_and_reconstruction(make):
    curve = make()
    frames = compute_frenet(curve)
    p = np.array([0.3, -1.0, 2.0])
    dist = plane_distances(frames, p)
    rel = curve.points - p
    total = dist.normal**2 + dist.osculating**2 + dist.rectifying**2
    assert np.max(np.abs(total - rows_dot(rel, rel))) < 1e-9 * max(1.0, rows_dot(rel, rel).max())
    dec = decompose_position(frames, p)
    assert np.max(np.abs(dec.reconstruct(frames, p) - curve.points)) < 1e-9


def test_decomposition_plane_involute_at_two():
    u = np.arange(5, 385) / 128
    curve = fam.gen_plane_involute(1.0, 1, 1 + u**2)
    dec = decompose_position(compute_frenet(curve))
    i = int(np.flatnonzero(curve.s_values == 2.0)[0])
    assert (dec.t_comp[i], dec.n_comp[i], dec.b_comp[i]) == pytest.approx((2, -2, 0), abs=1e-4)


def test_decomposition_twisted(twisted_mid):
    frames = compute_frenet(twisted_mid)
    dec = decompose_position(frames)
    assert np.max(np.abs(dec.t_comp - 2)) < 1e-5
    exact_R = 1 / fam.twisted_example_curvature(1.0, 1, twisted_mid.s_values)
    assert np.max(np.abs(-dec.n_comp / exact_R - 1)) < 1e-3
    inner = slice(4, -4)
    R = frames.R
    A = 2 * frames.kappa / frames.tau - differentiate(R, frames.s) / frames.tau
    assert np.max(np.abs(dec.b_comp - A)[inner]) < 1e-4 * np.max(np.abs(A))


@pytest.mark.parametrize("make", [lambda: fam.gen_plane_involute(1.0, 1), lambda: fam.gen_twisted_example(1.0, -1)])
def test_normal_derivative_identity(make):
    frames = compute_frenet(make())
    res = frames.kappa * rows_dot(frames.points, frames.n) + 1
    assert np.max(np.abs(res[frames.interior])) < 1e-3


def test_flatness_residual(plane_1, twisted_mid):
    assert np.nanmax(np.abs(residual_flatness(compute_frenet(plane_1)))) < 1e-3
    flat = residual_flatness(compute_frenet(twisted_mid))
    assert np.nanmin(np.abs(flat)) > 0.1
    with pytest.raises(GeometryError, match="not a constant-normal-distance curve"):
        residual_flatness(compute_frenet(centred_circle()))


def test_identity_residuals(twisted_mid):
    frames = compute_frenet(twisted_mid)
    r311 = residual_311(frames)
    r312 = residual_312(frames)
    assert np.nanmax(np.abs(r311)) < 1e-4 and np.nanmax(np.abs(r312)) < 1e-3
    # both residuals react together to a perturbed curvature profile
    for bump in (1.003, 1.01, 1.03):
        bumped = frames.replace(kappa=frames.kappa * bump)
        assert np.nanmax(np.abs(residual_311(bumped, 1.0, 1))) > 10 * np.nanmax(np.abs(r311))
        assert np.nanmax(np.abs(residual_312(bumped, 1.0, 1))) > 10 * np.nanmax(np.abs(r312))


def test_residual_312_undefined_for_plane_curves(plane_1):
    assert np.isnan(residual_312(compute_frenet(plane_1))).all()


def _normal_matrix_solution(frames):
    # oracle: eigendecomposition of the 4x4 normal equations, pseudo-inverse by hand
    design = np.hstack([frames.t, np.ones((len(frames), 1))])
    rhs = rows_dot(frames.points, frames.t)
    w, v = np.linalg.eigh(design.T @ design)
    keep = w > 1e-10 * w.max()
    x = v[:, keep] @ ((v[:, keep].T @ (design.T @ rhs)) / w[keep])
    return x, v[:, ~keep]


def test_fixed_point_translated_twisted(twisted_1):
    fp = recover_fixed_point(compute_frenet(twisted_1.moved(np.eye(3), [1, 2, 3])))
    assert np.allclose(fp.p, [1, 2, 3], atol=1e-6)
    assert fp.d == pytest.approx(2, abs=1e-6)
    assert fp.rank == 4 and fp.deficient_dirs == []


def test_fixed_point_translated_plane(plane_1):
    frames = compute_frenet(plane_1.moved(np.eye(3), [1, 2, 3]))
    fp = recover_fixed_point(frames)
    assert np.allclose(fp.p, [1, 2, 0], atol=1e-6)
    assert fp.d == pytest.approx(2, abs=1e-6)
    assert fp.rank == 3
    assert np.allclose(fp.deficient_dirs[0], [0, 0, 1], atol=1e-12)
    x, null = _normal_matrix_solution(frames)
    assert np.allclose(x, [*fp.p, fp.d], atol=1e-8)
    assert null.shape[1] == 1 and abs(abs(null[2, 0]) - 1) < 1e-12


def test_fixed_point_of_a_line_is_unidentifiable():
    s = np.linspace(0, 3, 40)
    frames = compute_frenet(CurveSamples(s, np.stack([s, 2 + 0 * s, 1 + 0 * s], axis=1)))
    with pytest.raises(GeometryError, match="fixed point unidentifiable"):
        recover_fixed_point(frames)


def test_classify_plane_involute(plane_1):
    rep = classify(plane_1)
    assert rep.flag("constant_normal_distance") and rep.flag("plane") and not rep.flag("spherical")
    assert rep.fitted["c"] == pytest.approx(1, abs=1e-4) and rep.fitted["epsilon"] == 1
    assert rep.flag("radial_law")
    for flag in rep.flags.values():
        assert np.isfinite(flag.tolerance)


def test_classify_sphere_circle():
    rep = classify(fam.gen_sphere_circle(0.3, np.linspace(0, 3, 200)))
    assert rep.flag("spherical") and not rep.flag("constant_normal_distance")


def test_classify_helix():
    rep = classify(helix())
    assert not rep.flag("constant_normal_distance")
    assert rep.flags["constant_normal_distance"].deviation > 1e-2


def test_classify_constant_curvature_after_recentering():
    spec = fam.ConstantCurvatureNP(1.0, 2.0, 1)
    curve = fam.gen_constant_curvature_np(spec, (1.5, 6.0)).moved(random_rotation(np.random.default_rng(1)), [3, -1, 2])
    rep = classify(curve, recenter=True)
    assert rep.flag("constant_normal_distance") and rep.flag("constant_curvature")
    assert rep.flag("constant_rectifying_distance")
    assert rep.fitted["r_rect"] == pytest.approx(1, abs=1e-4)
    assert rep.fitted["h"] == pytest.approx(2, abs=1e-4)


def test_classify_rectifying_lift():
    curve = fam.lift_rectifying(fam.gen_sphere_circle(0.5, np.linspace(-1, 1, 300)), 1.5)
    rep = classify(curve)
    assert rep.flag("rectifying") and not rep.flag("constant_normal_distance")
    assert rep.fitted["a"] == pytest.approx(1.5, abs=1e-4)


def test_classify_needs_sixteen_samples():
    with pytest.raises(GeometryError):
        classify(fam.gen_plane_involute(1.0, 1, fam.branch_grid(1.0, 1, 10)))


def test_normal_constant_fit(twisted_1):
    c, eps, mean, spread = normal_constant(compute_frenet(twisted_1))
    assert (c, eps) == (pytest.approx(1, abs=1e-8), 1)
    assert spread < 1e-8


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_classify_invariant_under_rigid_motion(seed, twisted_mid):
    rng = np.random.default_rng(seed)
    base = classify(twisted_mid, recenter=True)
    moved = classify(twisted_mid.moved(random_rotation(rng), rng.normal(size=3) * 5), recenter=True)
    assert {k: f.value for k, f in base.flags.items()} == {k: f.value for k, f in moved.flags.items()}
    assert moved.fitted["c"] == pytest.approx(base.fitted["c"], abs=1e-6)
