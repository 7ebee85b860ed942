import math

import numpy as np
import pytest

from zollfins import (BandError, ConvexityViolation, DomainError,
                      GeodesicState, ModuliPoint, coords_of_geodesic,
                      implicit_polynomial, implicit_residual,
                      indicatrix_curvature, indicatrix_curve,
                      indicatrix_parametric, indicatrix_regularized,
                      integrate_geodesic, turning_latitude)

TWO_PI = 2 * math.pi


def band_grid(R, n=40):
    rc = abs(R)
    u = np.linspace(0.0, math.pi, n)
    return np.arccos(np.clip(math.cos(rc) * np.cos(u), -1.0, 1.0))


# -- chart coordinates -----------------------------------------------------------

def test_coords_positive_c(ex1):
    state = GeodesicState(math.pi / 6, 1.0, 0.5, +1)   # at its turning point
    pt = coords_of_geodesic(ex1, state)
    assert pt.R == pytest.approx(math.pi / 6, abs=1e-12)
    assert pt.Theta == pytest.approx(1.0, abs=1e-12)


def test_coords_negative_c(ex1):
    state = GeodesicState(math.pi / 6, 1.0, -0.5, +1)
    pt = coords_of_geodesic(ex1, state)
    assert pt.R == pytest.approx(-math.pi / 6, abs=1e-12)
    assert pt.Theta == pytest.approx(1.0 + math.pi, abs=1e-12)


def test_coords_meridian():
    from zollfins import round_sphere
    state = GeodesicState(math.pi / 2, math.pi / 2, 0.0, +1)
    pt = coords_of_geodesic(round_sphere(), state)
    assert pt.R == 0.0
    assert pt.Theta == pytest.approx(0.0, abs=1e-15)


def test_coords_equator_rejected(ex1):
    with pytest.raises(DomainError):
        coords_of_geodesic(ex1, GeodesicState(math.pi / 2, 0.0, 1.0, +1))


@pytest.mark.parametrize("c", [0.3, -0.45, 0.8])
def test_coords_invariant_along_flow(ex1_strong, c):
    """Flowing a state along its geodesic must not move its chart point."""
    rc = turning_latitude(c)
    start = GeodesicState(rc, 0.7, c, +1)
    ref = coords_of_geodesic(ex1_strong, start)
    for t_stop in (0.6, 2.0, 4.5):
        trace = integrate_geodesic(ex1_strong, start, t_stop, tol=1e-11)
        moved = trace.endpoint_state()
        pt = coords_of_geodesic(ex1_strong, moved)
        assert pt.R == pytest.approx(ref.R, abs=1e-9)
        d_theta = (pt.Theta - ref.Theta + math.pi) % TWO_PI - math.pi
        assert abs(d_theta) < 1e-8


def test_moduli_point_validation():
    with pytest.raises(DomainError):
        ModuliPoint(math.pi / 2, 0.0)


# -- parametric and regularized samples ----------------------------------------------

def test_turning_point_sample(ex1_strong):
    R = 0.8
    s = indicatrix_parametric(ex1_strong, R, abs(R), +1)
    assert s.v1 == 0.0
    expected = -(1.0 + ex1_strong.h(math.cos(R))) / math.cos(R)
    assert s.v2 == pytest.approx(expected, abs=1e-14)


def test_round_sphere_ellipse(sphere):
    for R in (0.0, math.pi / 6, math.pi / 3):
        for r in band_grid(R, 60):
            for branch in (+1, -1):
                s = indicatrix_parametric(sphere, R, float(r), branch)
                assert abs(s.v1 ** 2 + math.cos(R) ** 2 * s.v2 ** 2 - 1.0) < 1e-10


def test_regularized_round_sphere(sphere):
    # v2 = -cos r / cos^2 R, finite through the equator.
    R = 0.5
    for r in (1.0, math.pi / 2, 2.2):
        s = indicatrix_regularized(sphere, R, r, +1)
        assert s.v2 == pytest.approx(-math.cos(r) / math.cos(R) ** 2, abs=1e-14)


def test_regularized_finite_at_equator(ex2):
    s = indicatrix_regularized(ex2, 0.9, math.pi / 2, +1)
    assert math.isfinite(s.v2)
    # The 1/cos r pole is gone: compare against the nearby parametric value.
    near = indicatrix_parametric(ex2, 0.9, math.pi / 2 - 5e-3, +1)
    assert abs(near.v2 - s.v2) < 5e-2


@pytest.mark.parametrize("R", [0.2, 0.8, 1.3])
def test_parametric_matches_regularized(all_good, R):
    for prof in all_good:
        for r in band_grid(R, 50):
            if abs(r - math.pi / 2) <= 0.1:
                continue
            for branch in (+1, -1):
                a = indicatrix_parametric(prof, R, float(r), branch)
                b = indicatrix_regularized(prof, R, float(r), branch)
                assert a.v1 == b.v1
                assert abs(a.v2 - b.v2) < 1e-10


def test_regularized_quadrature_backend(ex2):
    for r in (1.0, 1.8, 2.4):
        a = indicatrix_regularized(ex2, 0.6, r, +1)
        b = indicatrix_regularized(ex2, 0.6, r, +1, psi_method="quad")
        assert a.v2 == pytest.approx(b.v2, abs=1e-13)
    with pytest.raises(DomainError):
        indicatrix_regularized(ex2, 0.6, 1.0, +1, psi_method="nope")


def test_sample_domain_guards(ex1):
    with pytest.raises(BandError):
        indicatrix_parametric(ex1, 0.8, 0.1, +1)
    with pytest.raises(DomainError):
        indicatrix_parametric(ex1, math.pi / 2, 1.0, +1)
    with pytest.raises(DomainError):
        indicatrix_parametric(ex1, 0.8, 1.0, 0)


def test_example1_sample_on_implicit_curve(ex1):
    s = indicatrix_parametric(ex1, 0.4, 1.0, +1)
    assert abs(implicit_residual(ex1, 0.4, s.v1, s.v2)) < 1e-8


# -- the closed curve -------------------------------------------------------------------

def test_unit_circle_round_sphere(sphere):
    curve = indicatrix_curve(sphere, 0.0, 500)
    assert len(curve) == 998
    radii = np.array([math.hypot(s.v1, s.v2) for s in curve])
    assert np.abs(radii - 1.0).max() < 1e-10


def test_ellipse_round_sphere(sphere):
    curve = indicatrix_curve(sphere, math.pi / 3, 500)
    vals = np.array([s.v1 ** 2 + 0.25 * s.v2 ** 2 for s in curve])
    assert np.abs(vals - 1.0).max() < 1e-10


def test_curve_structure(ex1_strong):
    curve = indicatrix_curve(ex1_strong, 0.8, 128)
    # Branch +1 forward sweep, then branch -1 backward, no duplicate glue points.
    assert curve[0].branch == +1 and curve[-1].branch == -1
    assert curve[0].v1 == 0.0 and curve[0].v2 < 0
    branches = [s.branch for s in curve]
    assert branches == sorted(branches, reverse=True)
    # Winding number one around the origin.
    angles = np.unwrap([math.atan2(s.v2, s.v1) for s in curve])
    total = angles[-1] - angles[0]
    closing = (math.atan2(curve[0].v2, curve[0].v1) - angles[-1]) % TWO_PI
    assert (total + closing) / TWO_PI == pytest.approx(1.0, abs=1e-9)


def test_branch_glue_points(ex1_strong, ex2):
    for prof in (ex1_strong, ex2):
        for R in (0.3, 1.0):
            for r_glue in (abs(R), math.pi - abs(R)):
                a = indicatrix_regularized(prof, R, r_glue, +1)
                b = indicatrix_regularized(prof, R, r_glue, -1)
                assert math.hypot(a.v1 - b.v1, a.v2 - b.v2) < 1e-10


def test_indicatrix_not_centrally_symmetric(ex1_strong):
    """Top and bottom intercepts differ: (v1,v2) -> (-v1,-v2) is NOT a symmetry."""
    bottom = indicatrix_regularized(ex1_strong, 0.8, 0.8, +1)
    top = indicatrix_regularized(ex1_strong, 0.8, math.pi - 0.8, +1)
    assert abs(abs(top.v2) - abs(bottom.v2)) > 0.1


def test_curve_sample_floor(ex1):
    with pytest.raises(DomainError):
        indicatrix_curve(ex1, 0.4, 8)


def test_convexity_violation_detected(bad_curvature):
    with pytest.raises(ConvexityViolation) as excinfo:
        indicatrix_curve(bad_curvature, 0.15, 512)
    assert excinfo.value.report


# -- curvature of the curve ----------------------------------------------------------------

def test_curvature_sides_round_sphere(sphere):
    kl, kr = indicatrix_curvature(sphere, 0.0, 1.3, +1)
    assert kl == pytest.approx(1.0, abs=1e-12)
    assert kr == pytest.approx(1.0, abs=1e-12)


def test_curvature_sides_agree(ex1):
    kl, kr = indicatrix_curvature(ex1, 0.4, 1.0, +1)
    assert abs(kl - kr) / max(abs(kl), abs(kr)) < 1e-6


def test_strong_convexity_certificate(ex1_strong):
    for R in (0.2, 0.8, 1.3):
        for r in band_grid(R, 60)[1:-1]:
            if min(r - abs(R), math.pi - abs(R) - r) < 1e-5:
                continue
            kl, kr = indicatrix_curvature(ex1_strong, R, float(r), +1)
            assert kl > 0 and kr > 0


def test_negative_curvature_found_for_bad_profile(bad_curvature):
    found = min(indicatrix_curvature(bad_curvature, 0.1, float(r), +1)[0]
                for r in np.linspace(2.6, 3.0, 25))
    assert found < 0


def test_curvature_excludes_turning_points(ex1):
    with pytest.raises(DomainError):
        indicatrix_curvature(ex1, 0.4, 0.4, +1)


# -- implicit polynomial ----------------------------------------------------------------------

def test_implicit_polynomial_example1(ex1):
    R = 0.7
    impl = implicit_polynomial(ex1, R)
    eps, q, c2 = 0.25, math.cos(R) ** 2, math.sin(R) ** 2
    assert impl.degree == 1
    assert impl.raw_top_exact == 0           # exact degree collapse
    assert impl.combined[0] == pytest.approx(eps * c2, abs=1e-16)
    assert impl.combined[1] == pytest.approx(-eps * q, abs=1e-16)


def test_implicit_polynomial_example2(ex2):
    R = 0.7
    impl = implicit_polynomial(ex2, R)
    q, s2 = math.cos(R) ** 2, math.sin(R) ** 2
    assert impl.degree == 2
    assert impl.raw_top_exact == 0
    assert impl.combined[0] == pytest.approx(s2 * s2, abs=1e-15)
    assert impl.combined[1] == pytest.approx(-2 * q * s2, abs=1e-15)
    assert impl.combined[2] == pytest.approx(-q * q / 3, abs=1e-15)


def test_implicit_polynomial_round_sphere(sphere):
    impl = implicit_polynomial(sphere, 0.7)
    assert impl.degree == -1
    assert impl.combined == ()


def test_implicit_residual_trivial_points(ex1, sphere):
    R = 0.6
    v2_bottom = -(1.0 + ex1.h(math.cos(R))) / math.cos(R)
    assert abs(implicit_residual(ex1, R, 0.0, v2_bottom)) < 1e-14
    assert abs(implicit_residual(sphere, 0.0, 0.6, -0.8)) < 1e-15


@pytest.mark.parametrize("R", np.linspace(0.0, 1.3, 9))
def test_residual_on_parametric_samples(ex1_strong, ex2, R):
    for prof in (ex1_strong, ex2):
        for r in band_grid(float(R), 50):
            for branch in (+1, -1):
                s = indicatrix_parametric(prof, float(R), float(r), branch)
                assert abs(implicit_residual(prof, float(R), s.v1, s.v2)) < 1e-8


def test_branch_gap_sign_resolution(ex2):
    """The signed branch equation holds with sigma = sign(cos r)."""
    R = 0.5
    impl = implicit_polynomial(ex2, R)
    for r in (0.7, 1.2, 2.0, 2.5):
        s = indicatrix_regularized(ex2, R, r, +1)
        sigma = 1 if math.cos(r) > 0 else -1
        assert abs(impl.branch_gap(s.v1, s.v2, sigma)) < 1e-12


def test_dispatch_seam_continuity(ex1_strong, ex2):
    """The parametric evaluation hands off to the regularized form within
    1e-3 of the equator; both sides of the seam must agree far below the
    representation tolerance."""
    for prof in (ex1_strong, ex2):
        for R in (0.4, 1.2):
            for r in (math.pi / 2 - 2e-3, math.pi / 2 - 1.2e-3,
                      math.pi / 2 + 1.5e-3, math.pi / 2 + 3e-3):
                a = indicatrix_parametric(prof, R, r, +1)
                b = indicatrix_regularized(prof, R, r, +1)
                assert abs(a.v2 - b.v2) < 1e-9


def test_chart_mirror_symmetry(ex2):
    """All indicatrix formulas depend on R only through cos R and sin^2 R,
    so the curves at +-R coincide."""
    for r in band_grid(0.7, 21):
        a = indicatrix_regularized(ex2, 0.7, float(r), +1)
        b = indicatrix_regularized(ex2, -0.7, float(r), +1)
        assert a.v1 == b.v1 and a.v2 == b.v2
        p = indicatrix_parametric(ex2, -0.7, float(r), -1)
        q = indicatrix_parametric(ex2, 0.7, float(r), -1)
        assert p.v1 == q.v1 and abs(p.v2 - q.v2) < 1e-14


def test_coords_meridian_limit(ex1_strong):
    """Theta(c) approaches the c = 0 meridian convention linearly as c -> 0
    (the documented chart-continuity behavior)."""
    target = (0.3 - math.pi / 2) % TWO_PI
    for c, bound in ((1e-3, 1e-3), (1e-5, 1e-5), (1e-7, 1e-7)):
        pt = coords_of_geodesic(ex1_strong,
                                GeodesicState(math.pi / 2, 0.3, c, +1))
        assert abs(pt.Theta - target) < bound
        assert pt.R == pytest.approx(math.asin(c), abs=1e-15)
