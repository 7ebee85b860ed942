import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zollfins import (ChartExitError, DomainError, SIGMA_ROTATION,
                      chart_distance, curvature_critical_points, f_polynomial,
                      finsler_F, finsler_geodesic, fundamental_tensor,
                      indicatrix_parametric, invariant_flow_check,
                      invariants_IJ, round_sphere, unit_direction)
from zollfins.profile import curvature_x, curvature_x_prime


def ellipse_norm(R, v):
    return math.sqrt(v[0] ** 2 + math.cos(R) ** 2 * v[1] ** 2)


# -- the norm F -------------------------------------------------------------------

def test_round_sphere_norm(sphere):
    R = 0.7
    for v in ((0.3, -0.5), (1.0, 0.2), (-0.4, 0.9), (0.0, -2.0), (0.0, 1.5)):
        assert finsler_F(sphere, R, 0.0, v).F == pytest.approx(
            ellipse_norm(R, v), abs=1e-14)


@given(v1=st.floats(min_value=-3, max_value=3),
       v2=st.floats(min_value=-3, max_value=3))
@settings(max_examples=200, deadline=None)
def test_round_sphere_norm_property(v1, v2):
    if abs(v1) + abs(v2) < 1e-6:
        return
    R = 0.4
    prof = round_sphere()
    assert finsler_F(prof, R, 0.0, (v1, v2)).F == pytest.approx(
        ellipse_norm(R, (v1, v2)), rel=1e-12)


def test_unit_on_indicatrix_samples(all_good):
    for prof in all_good:
        for R in (0.0, 0.6, 1.3):
            rc = abs(R)
            for r in np.linspace(rc, math.pi - rc, 25):
                for branch in (+1, -1):
                    s = indicatrix_parametric(prof, R, float(r), branch)
                    assert abs(finsler_F(prof, R, 0.0, (s.v1, s.v2)).F - 1.0) < 1e-9


@pytest.mark.parametrize("lam", [1e-3, 0.5, 2.0, 1e3])
def test_homogeneity(ex1, ex2, lam):
    for prof in (ex1, ex2):
        for R in (0.3, 1.1):
            for v in ((0.3, -0.5), (1.0, 0.2), (-0.4, 0.9)):
                f1 = finsler_F(prof, R, 0.0, v).F
                f2 = finsler_F(prof, R, 0.0, (lam * v[0], lam * v[1])).F
                assert abs(f2 - lam * f1) / (lam * f1) < 1e-10


def test_zero_vector_rejected(ex1):
    with pytest.raises(DomainError):
        finsler_F(ex1, 0.3, 0.0, (0.0, 0.0))


def test_chart_guard(ex1):
    with pytest.raises(DomainError):
        finsler_F(ex1, math.pi / 2 - 1e-9, 0.0, (1.0, 0.0))


# -- the algebraic oracle -----------------------------------------------------------

def test_f_equation_degrees(ex1, ex2, sphere):
    p4 = f_polynomial(ex1, 0.4, 0.3, -0.5)
    assert p4.degree == 4
    assert p4.coeffs_exact[-1] != 0
    p8 = f_polynomial(ex2, 0.4, 0.3, -0.5)
    assert p8.degree == 8
    assert p8.coeffs_exact[-1] != 0
    p2 = f_polynomial(sphere, 0.4, 0.3, -0.5)
    assert p2.degree == 2


@pytest.mark.parametrize("v", [(0.3, -0.5), (0.8, 0.1), (-0.2, 1.4), (0.6, 0.6)])
def test_ray_value_is_polynomial_root(ex1, ex2, v):
    for prof in (ex1, ex2):
        for R in (0.2, 0.9):
            f_ray = finsler_F(prof, R, 0.0, v).F
            poly = f_polynomial(prof, R, *v)
            assert abs(poly(f_ray)) < 1e-10
            roots = poly.positive_real_roots()
            assert roots.size > 0
            assert np.min(np.abs(roots - f_ray)) < 1e-9


def test_round_sphere_polynomial_roots(sphere):
    R, v = 0.5, (0.7, -0.9)
    roots = f_polynomial(sphere, R, *v).positive_real_roots()
    assert roots.size == 1
    assert roots[0] == pytest.approx(ellipse_norm(R, v), abs=1e-13)


# -- fundamental tensor --------------------------------------------------------------

def test_tensor_round_sphere_default_step(sphere):
    fe = fundamental_tensor(sphere, 0.7, 0.0, (0.3, -0.5))
    # At the mandated 1e-5 relative step the root-finding noise dominates;
    # the quadratic structure still shows up to ~1e-4.
    assert fe.g11 == pytest.approx(1.0, abs=1e-4)
    assert fe.g12 == pytest.approx(0.0, abs=1e-4)
    assert fe.g22 == pytest.approx(math.cos(0.7) ** 2, abs=1e-4)


def test_tensor_round_sphere_wide_step(sphere):
    # F^2 is exactly quadratic here, so a wide step is truncation-free and
    # the noise floor drops to ~1e-9.
    fe = fundamental_tensor(sphere, 0.7, 0.0, (0.3, -0.5), step=1e-3)
    assert fe.g11 == pytest.approx(1.0, abs=1e-8)
    assert fe.g12 == pytest.approx(0.0, abs=1e-8)
    assert fe.g22 == pytest.approx(math.cos(0.7) ** 2, abs=1e-8)


def test_tensor_zero_homogeneity(ex1_strong, ex2):
    for prof in (ex1_strong, ex2):
        g0 = fundamental_tensor(prof, 0.6, 0.0, (0.3, -0.5)).tensor()
        for lam in (0.5, 2.0):
            g1 = fundamental_tensor(prof, 0.6, 0.0, (0.3 * lam, -0.5 * lam)).tensor()
            assert np.abs(g1 - g0).max() < 1e-6


def test_tensor_positive_definite_grid(ex1_strong):
    angles = np.linspace(0.0, 2 * math.pi, 101)[:-1]
    for R in (0.2, 0.7, 1.2):
        for a in angles:
            g = fundamental_tensor(ex1_strong, R, 0.0,
                                   (math.cos(a), math.sin(a))).tensor()
            assert np.linalg.det(g) > 0
            assert np.trace(g) > 0
            assert np.linalg.eigvalsh(g).min() > 0


def test_tensor_not_positive_definite_for_bad_profile(bad_curvature):
    angles = np.linspace(0.0, 2 * math.pi, 101)[:-1]
    eig_min = min(
        np.linalg.eigvalsh(fundamental_tensor(bad_curvature, R, 0.0,
                                              (math.cos(a), math.sin(a))).tensor()).min()
        for R in (0.1, 0.2) for a in angles)
    assert eig_min < 0


def test_tensor_guards(ex1):
    with pytest.raises(DomainError):
        fundamental_tensor(ex1, 0.3, 0.0, (0.0, 0.0))
    with pytest.raises(DomainError):
        fundamental_tensor(ex1, 0.3, 0.0, (1.0, 0.0), step=0.5)


# -- invariants -----------------------------------------------------------------------

def test_invariants_vanish_round_sphere(sphere):
    worst = 0.0
    for r in np.linspace(0.2, math.pi - 0.2, 25):
        for phi in np.linspace(0.0, 2 * math.pi, 17):
            pair = invariants_IJ(sphere, float(r), float(phi))
            worst = max(worst, abs(pair.I) + abs(pair.J))
    assert worst < 1e-12


def test_invariants_vanish_at_curvature_critical_point(ex2):
    x_star, _ = curvature_critical_points(ex2)[0]
    r_star = math.acos(x_star)
    pair = invariants_IJ(ex2, r_star, 1.1)
    assert abs(pair.I) < 1e-10 and abs(pair.J) < 1e-10


def test_invariants_example1_closed_form(ex1):
    """At phi = 0 the velocity is purely radial: J = 0 and I follows the
    chain rule through G(r)."""
    r = math.pi / 3
    x = math.cos(r)
    g_val = curvature_x(ex1, x)
    g_r = -math.sin(r) * curvature_x_prime(ex1, x)
    expected_i = 0.5 * g_r / ((1.0 + ex1.h(x)) * g_val ** 1.5)
    pair = invariants_IJ(ex1, r, 0.0)
    assert pair.J == pytest.approx(0.0, abs=1e-15)
    assert pair.I == pytest.approx(expected_i, rel=1e-12)


def test_invariant_fiber_rotation_calibration(ex1):
    """dI/dphi = sigma J and dJ/dphi = -sigma I with sigma = -1."""
    r, phi, dphi = 1.0, 0.7, 1e-6
    a = invariants_IJ(ex1, r, phi)
    b = invariants_IJ(ex1, r, phi + dphi)
    assert (b.I - a.I) / dphi == pytest.approx(SIGMA_ROTATION * a.J, rel=1e-4)
    assert (b.J - a.J) / dphi == pytest.approx(-SIGMA_ROTATION * a.I, rel=1e-4)


@pytest.mark.parametrize("prof_name,r,phi", [("ex1", 1.0, 0.7), ("ex2", 1.3, 2.0)])
def test_invariant_flow_residual(request, prof_name, r, phi):
    prof = request.getfixturevalue(prof_name)
    assert invariant_flow_check(prof, r, phi, 1e-5) < 1e-4


def test_invariant_flow_round_sphere(sphere):
    assert invariant_flow_check(sphere, 1.0, 0.3, 1e-5) == 0.0


def test_invariants_guards(ex1, bad_curvature):
    with pytest.raises(DomainError):
        invariants_IJ(ex1, 1e-12, 0.0)
    with pytest.raises(DomainError):
        invariants_IJ(bad_curvature, 3.1, 0.0)   # G < 0 near the south pole


# -- geodesics of F ----------------------------------------------------------------------

def test_unit_direction(ex2):
    v0 = unit_direction(ex2, 0.4, 0.0, 1.2)
    assert finsler_F(ex2, 0.4, 0.0, v0).F == pytest.approx(1.0, abs=1e-14)


def test_round_sphere_geodesic_closes(sphere):
    v0 = unit_direction(sphere, 0.2, 0.0, 0.9)
    trace = finsler_geodesic(sphere, (0.2, 0.0), v0, 2 * math.pi, tol=1e-9)
    assert chart_distance((float(trace.R[-1]), float(trace.Theta[-1])),
                          (0.2, 0.0)) < 1e-6
    assert np.abs(trace.F - 1.0).max() < 10 * 1e-7


def test_geodesic_two_tolerances_agree(ex1):
    v0 = unit_direction(ex1, 0.2, 0.0, 0.9)
    hi = finsler_geodesic(ex1, (0.2, 0.0), v0, math.pi, tol=1e-8,
                          samples_per_period=64)
    lo = finsler_geodesic(ex1, (0.2, 0.0), v0, math.pi, tol=1e-6,
                          samples_per_period=64)
    assert chart_distance((float(hi.R[-1]), float(hi.Theta[-1])),
                          (float(lo.R[-1]), float(lo.Theta[-1]))) < 1e-5


def test_non_unit_start_rejected(ex1):
    with pytest.raises(DomainError):
        finsler_geodesic(ex1, (0.2, 0.0), (1.0, 1.0), 1.0)


def test_chart_exit_carries_partial_trace(sphere):
    # A radial great circle of the round metric runs straight over the chart
    # pole, so it must trip the rim guard.
    v0 = unit_direction(sphere, 1.4, 0.0, 0.0)
    with pytest.raises(ChartExitError) as excinfo:
        finsler_geodesic(sphere, (1.4, 0.0), v0, 2 * math.pi, tol=1e-6)
    trace = excinfo.value.partial_trace
    assert trace is not None and not trace.complete
    assert abs(trace.R[-1]) <= math.pi / 2 - 1e-4
    assert abs(trace.R[-1]) >= math.pi / 2 - 2e-3


def test_trace_apex_matches_correspondence(ex1):
    """The chart apex of a Finsler geodesic equals the band latitude at which
    the indicatrix curve crosses the v2 = 0 axis: the trajectory enumerates
    the unit vectors at one fixed surface point, and the largest reachable
    |R| is the turning latitude of the steepest of those directions."""
    from zollfins.moduli import curve_cache
    R0 = 1.4
    cache = curve_cache(ex1, R0)
    lo, hi = R0, math.pi - R0
    for _ in range(60):         # bisect v2(r) = 0 across the band
        mid = 0.5 * (lo + hi)
        if cache.point(mid, +1)[1] > 0:
            hi = mid
        else:
            lo = mid
    r_p = 0.5 * (lo + hi)
    apex_pred = min(r_p, math.pi - r_p)
    v0 = unit_direction(ex1, R0, 0.0, 0.0)
    trace = finsler_geodesic(ex1, (R0, 0.0), v0, 2 * math.pi, tol=1e-8,
                             samples_per_period=2048)
    # Compare in the Clairaut variable sin R: arcsin amplifies errors ~150x
    # this close to the chart pole.
    assert math.sin(float(trace.R.max())) == pytest.approx(
        math.sin(apex_pred), abs=2e-6)
    assert float(trace.R.max()) == pytest.approx(apex_pred, abs=1e-3)


def test_trace_clairaut_is_sinusoidal(ex1_strong):
    """Along a Finsler geodesic the quantity sin R(t) is an exact sinusoid
    of the flow parameter: the flow enumerates the unit vectors at one
    surface point at unit angular rate, and sin R is the Clairaut constant
    of the enumerated direction.  A two-parameter fit must reproduce the
    whole trace."""
    v0 = unit_direction(ex1_strong, 0.2, 0.0, 0.9)
    trace = finsler_geodesic(ex1_strong, (0.2, 0.0), v0, 2 * math.pi,
                             tol=1e-9, samples_per_period=256)
    c_t = np.sin(trace.R)
    design = np.vstack([np.cos(trace.t), np.sin(trace.t)]).T
    coef, *_ = np.linalg.lstsq(design, c_t, rcond=None)
    assert np.abs(design @ coef - c_t).max() < 1e-7


def test_norm_at_high_eccentricity(ex2):
    """Near the chart rim the indicatrix is extremely elongated
    (axes ratio ~1/cos^2 R); the ray solve must stay exact."""
    R = 1.5
    for r in np.linspace(abs(R), math.pi - abs(R), 30):
        for branch in (+1, -1):
            s = indicatrix_parametric(ex2, R, float(r), branch)
            assert abs(finsler_F(ex2, R, 0.0, (s.v1, s.v2)).F - 1.0) < 1e-9


def test_flow_enumerates_directions_at_fixed_point(sphere, ex1_strong):
    """A Finsler geodesic enumerates the oriented geodesics through one fixed
    surface point at unit angular rate: with directions V(phi) = cos(phi) e_r
    + sin(phi) e_theta at p = (r_p, theta_p), the trace satisfies

        R(t) = R_chart(V(phi0 + t)),
        Theta(t) = 2 Theta(0) - Theta_chart(V(phi0 + t)),

    the longitude entering through the reflection isometry Theta -> -Theta
    (the parametric embedding is the mirror of the chart-compatible one; see
    the sign discussion in the moduli module docs).  This ties together the
    chart coordinates, the embedding, and the spray over whole trajectories.
    """
    from zollfins import GeodesicState, coords_of_geodesic, indicatrix_regularized

    for prof in (sphere, ex1_strong):
        r_p, th_p = 1.1, 0.7
        sin_rp = math.sin(r_p)

        def chart_of_direction(phi):
            c = math.sin(phi) * sin_rp
            eps = +1 if math.cos(phi) >= 0 else -1
            pt = coords_of_geodesic(prof, GeodesicState(r_p, th_p, c, eps))
            return pt.R, pt.Theta

        phi0 = 0.9
        R0, Th0 = chart_of_direction(phi0)
        s = indicatrix_regularized(prof, R0, r_p, +1)
        trace = finsler_geodesic(prof, (R0, Th0), np.array([s.v1, s.v2]),
                                 1.2, tol=1e-9, samples_per_period=512)
        for k in range(0, len(trace.t), 16):
            r_pred, th_pred = chart_of_direction(phi0 + float(trace.t[k]))
            assert float(trace.R[k]) == pytest.approx(r_pred, abs=2e-6)
            th_mirrored = (2 * Th0 - float(trace.Theta[k])) % (2 * math.pi)
            diff = (th_mirrored - th_pred + math.pi) % (2 * math.pi) - math.pi
            assert abs(diff) < 2e-6


def test_chart_coordinates_match_spherical_trig(sphere):
    """Round-sphere ground truth: the chart point of the great circle through
    p with azimuth phi, computed by vector algebra (plane normal and
    northernmost point), must coincide with coords_of_geodesic."""
    from zollfins import GeodesicState, coords_of_geodesic

    r_p, th_p = 1.1, 0.7
    p = np.array([math.sin(r_p) * math.cos(th_p),
                  math.sin(r_p) * math.sin(th_p), math.cos(r_p)])
    e_r = np.array([math.cos(r_p) * math.cos(th_p),
                    math.cos(r_p) * math.sin(th_p), -math.sin(r_p)])
    e_t = np.array([-math.sin(th_p), math.cos(th_p), 0.0])
    z_hat = np.array([0.0, 0.0, 1.0])
    for phi in (0.3, 0.9, 2.0, 3.5, 5.0):
        c = math.sin(phi) * math.sin(r_p)
        if abs(c) < 1e-3 or abs(abs(c) - 1.0) < 1e-3:
            continue
        d = math.cos(phi) * e_r + math.sin(phi) * e_t
        normal = np.cross(p, d)
        apex = np.cross(np.cross(z_hat, normal), normal)
        apex = apex / np.linalg.norm(apex)
        if apex[2] < 0:
            apex = -apex
        th_turn = math.atan2(apex[1], apex[0]) % (2 * math.pi)
        expect_R = math.copysign(math.asin(abs(c)), c)
        expect_Th = th_turn if c > 0 else (th_turn + math.pi) % (2 * math.pi)
        eps = +1 if math.cos(phi) >= 0 else -1
        pt = coords_of_geodesic(sphere, GeodesicState(r_p, th_p, c, eps))
        assert pt.R == pytest.approx(expect_R, abs=1e-12)
        diff = (pt.Theta - expect_Th + math.pi) % (2 * math.pi) - math.pi
        assert abs(diff) < 1e-10


def test_invariants_directional_derivative_oracle(ex2):
    """The frame derivatives of the curvature behind I and J, reproduced by
    finite differences of G along the velocity and its normal."""
    from zollfins.profile import gauss_curvature

    r, phi = 1.2, 0.8
    one_h = 1.0 + ex2.h(math.cos(r))
    gdot_r = math.cos(phi) / one_h
    n_r = -math.sin(phi) / one_h
    step = 1e-6
    fd_along = (gauss_curvature(ex2, r + step * gdot_r)
                - gauss_curvature(ex2, r - step * gdot_r)) / (2 * step)
    fd_normal = (gauss_curvature(ex2, r + step * n_r)
                 - gauss_curvature(ex2, r - step * n_r)) / (2 * step)
    pair = invariants_IJ(ex2, r, phi)
    assert pair.g_theta2 == pytest.approx(fd_along, abs=1e-7)
    assert pair.g_theta1 == pytest.approx(fd_normal, abs=1e-7)
    g_val = gauss_curvature(ex2, r)
    assert pair.I == pytest.approx(0.5 * fd_along / g_val ** 1.5, abs=1e-7)
    assert pair.J == pytest.approx(-0.5 * fd_normal / g_val ** 1.5, abs=1e-7)
