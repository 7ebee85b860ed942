"""The induced norm F on the manifold of geodesics and its invariants.

F(R, Theta; v) is the Minkowski gauge of the indicatrix curve at (R, Theta):
the unique t > 0 with v/t on the curve.  It is evaluated by intersecting the
ray through v with the signed parametric curve (bracketing plus safeguarded
Newton); star-shapedness about the origin guarantees uniqueness whenever the
curve is convex.  The algebraic route -- the polynomial equation in F
obtained from the implicit indicatrix equation by substituting v -> v/F --
is kept as an independent oracle, never as the primary evaluator, because
the squared implicit form admits spurious sheets.

The fundamental tensor is half the velocity Hessian of F^2, by central
finite differences with Richardson extrapolation.  The two scalar invariants
at a surface point (r) and fiber angle (phi) reduce, because the Gauss
curvature depends on the latitude only, to

    I = G'(r) cos(phi) / (2 (1+h(cos r)) G^{3/2}),
    J = G'(r) sin(phi) / (2 (1+h(cos r)) G^{3/2}),

where phi measures the unit direction against the orthonormal frame
(e_r, e_theta).  Transporting I, J around the fiber satisfies dI/dphi =
sigma J and dJ/dphi = -sigma I with the rotation orientation sigma = -1 in
this angle convention (calibrated numerically, see SIGMA_ROTATION).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ChartExitError, DomainError, PoleProximityError, StepFailureError
from .moduli import curve_cache, curve_eval, implicit_polynomial
from .profile import ZollProfile, curvature_x, curvature_x_prime

#: Orientation of the fiber rotation relative to the geodesic flow of F, in
#: the (e_r, e_theta) angle convention used by invariants_IJ.  Fixed once by
#: a calibration run on the worked deformation examples (the test-suite
#: re-derives it); do not change without re-calibrating.
SIGMA_ROTATION = -1.0

#: Relative Hessian step used by the geodesic spray.  Larger than the
#: fundamental_tensor default because the spray needs noise-robust
#: derivatives (root-finding noise amplifies as 1/step^2); with Richardson
#: extrapolation the truncation bias at this step stays ~1e-6 even for the
#: strongly deformed profiles.
SPRAY_HESSIAN_STEP = 1e-3

#: Chart half-width at which Finsler traces abort.
CHART_ABORT = math.pi / 2 - 1e-3


@dataclass(frozen=True)
class FinslerEval:
    """F and (optionally) the fundamental tensor at one tangent vector."""

    R: float
    Theta: float
    v1: float
    v2: float
    F: float
    g11: float | None = None
    g12: float | None = None
    g22: float | None = None

    def tensor(self) -> np.ndarray:
        if self.g11 is None:
            raise DomainError("fundamental tensor was not computed")
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])


@dataclass(frozen=True)
class InvariantPair:
    """The two local invariants at a point of the unit tangent bundle."""

    I: float
    J: float
    g_theta1: float = 0.0
    g_theta2: float = 0.0


def finsler_F(profile: ZollProfile, R: float, Theta: float, v) -> FinslerEval:
    """The induced norm of the tangent vector v at chart point (R, Theta)."""
    v1, v2 = float(v[0]), float(v[1])
    if v1 == 0.0 and v2 == 0.0:
        raise DomainError("F is evaluated on nonzero vectors only")
    cache = curve_cache(profile, R)
    F, _, _ = cache.solve_ray(v1, v2)
    return FinslerEval(R, Theta, v1, v2, F)


def _f_value(cache, v1: float, v2: float, seed_r: float | None = None) -> float:
    return cache.solve_ray(v1, v2, seed_r)[0]


def _f_gradient(cache, v1: float, v2: float, seed_r: float | None = None
                ) -> tuple[float, np.ndarray]:
    """(F, grad_v F) via the outward normal of the indicatrix at the ray point."""
    F, r_star, branch = cache.solve_ray(v1, v2, seed_r)
    p1, p2 = v1 / F, v2 / F
    if abs(v1) <= 1e-9 * math.hypot(v1, v2):
        # Glue points: the curve is symmetric about the v2 axis, so dF/dv1 = 0.
        return F, np.array([0.0, 1.0 / p2])
    _, _, t1, t2 = cache.point_tangent(r_star, branch)
    n1, n2 = t2, -t1
    denom = n1 * p1 + n2 * p2
    return F, np.array([n1 / denom, n2 / denom])


def _hessian_f2(cache, v: np.ndarray, h: float,
                seed_r: float | None = None) -> np.ndarray:
    """Central 9-point finite-difference Hessian of F^2 in the fiber variables."""
    def f2(a, b):
        return _f_value(cache, v[0] + a, v[1] + b, seed_r) ** 2

    f0 = f2(0.0, 0.0)
    d11 = (f2(h, 0) - 2 * f0 + f2(-h, 0)) / (h * h)
    d22 = (f2(0, h) - 2 * f0 + f2(0, -h)) / (h * h)
    d12 = (f2(h, h) - f2(h, -h) - f2(-h, h) + f2(-h, -h)) / (4 * h * h)
    return np.array([[d11, d12], [d12, d22]])


def fundamental_tensor(profile: ZollProfile, R: float, Theta: float, v,
                       step: float = 1e-5, richardson: bool = True) -> FinslerEval:
    """g_ij = (1/2) d^2(F^2)/dv_i dv_j by central differences at step*|v|.

    The result is symmetric by construction.  Richardson extrapolation at
    twice the step removes the leading quadratic truncation term.
    """
    v = np.asarray(v, dtype=float)
    vn = float(np.hypot(v[0], v[1]))
    if vn == 0.0:
        raise DomainError("fundamental tensor undefined at v = 0")
    h = step * vn
    if not 1e-12 < h < 0.2 * vn:
        raise DomainError(f"degenerate finite-difference step {h}")
    cache = curve_cache(profile, R)
    hess = _hessian_f2(cache, v, h)
    if richardson:
        hess = (4.0 * hess - _hessian_f2(cache, v, 2 * h)) / 3.0
    g = 0.5 * hess
    F = _f_value(cache, v[0], v[1])
    return FinslerEval(R, Theta, float(v[0]), float(v[1]), F,
                       g11=float(g[0, 0]), g12=float(g[0, 1]), g22=float(g[1, 1]))


# -- invariants ------------------------------------------------------------------

def invariants_IJ(profile: ZollProfile, r: float, phi: float) -> InvariantPair:
    """The invariant pair at latitude r and fiber angle phi.

    phi parametrizes the unit circle against the orthonormal frame
    (e_r, e_theta): the direction has Clairaut constant c = sin(phi) sin(r)
    and radial sign sign(cos phi).
    """
    sr = math.sin(r)
    if sr <= 1e-9:
        raise PoleProximityError(f"invariants undefined at the poles: r={r}")
    x = math.cos(r)
    g_val = float(curvature_x(profile, x))
    if g_val <= 0.0:
        raise DomainError(f"invariants need positive curvature; G({r}) = {g_val}")
    g_r = -sr * float(curvature_x_prime(profile, x))
    one_h = 1.0 + profile.h(x)
    # Frame components of the velocity and its normal.
    gdot_r = math.cos(phi) / one_h
    n_r = -math.sin(phi) / one_h
    g_theta2 = g_r * gdot_r
    g_theta1 = g_r * n_r
    scale = 0.5 / g_val ** 1.5
    return InvariantPair(I=scale * g_theta2, J=-scale * g_theta1,
                         g_theta1=g_theta1, g_theta2=g_theta2)


def invariant_flow_check(profile: ZollProfile, r: float, phi: float,
                         dphi: float = 1e-5) -> float:
    """Finite-difference defect of the fiber transport relations

        dI/dphi = sigma J,   dJ/dphi = -sigma I,   sigma = SIGMA_ROTATION.

    Returns the summed absolute defect; O(dphi) for exact invariants.
    """
    a = invariants_IJ(profile, r, phi)
    b = invariants_IJ(profile, r, phi + dphi)
    res_i = (b.I - a.I) / dphi - SIGMA_ROTATION * a.J
    res_j = (b.J - a.J) / dphi + SIGMA_ROTATION * a.I
    return abs(res_i) + abs(res_j)


# -- the algebraic oracle ----------------------------------------------------------

@dataclass(frozen=True)
class FPolynomial:
    """The polynomial equation satisfied by F at a fixed tangent vector.

    Built from the implicit indicatrix equation by substituting v -> v/F and
    clearing denominators; coefficients are exact rationals over the
    float-exact inputs.  ``coeffs`` is ascending in F.
    """

    coeffs_exact: tuple[Fraction, ...]

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs_exact])

    @property
    def degree(self) -> int:
        return len(self.coeffs_exact) - 1

    def positive_real_roots(self, imag_tol: float = 1e-9) -> np.ndarray:
        """Positive real roots via the companion matrix (numpy.roots)."""
        roots = np.roots(self.coeffs[::-1])
        keep = (np.abs(roots.imag) <= imag_tol * np.maximum(1.0, np.abs(roots))) \
            & (roots.real > 0)
        return np.sort(roots.real[keep])

    def __call__(self, F):
        return np.polynomial.polynomial.polyval(np.asarray(F, dtype=float),
                                                self.coeffs)


def f_polynomial(profile: ZollProfile, R: float, v1: float, v2: float) -> FPolynomial:
    """Exact F-equation at the tangent vector (v1, v2) of chart point R.

    With P(w) of degree m the equation is

        cos^2 R * [v2 F^{2m-1} + sum_j p_j v1^{2j} F^{2(m-j)}]^2
            = F^{4m-2} (F^2 - v1^2),

    of degree 4m in F (degree 2 when P is constant or zero).  Exact trailing
    zeros are stripped so the reported degree is the true one.
    """
    impl = implicit_polynomial(profile, R)
    q = Fraction(impl.q)
    p = impl.combined_exact
    v1f, v2f = Fraction(float(v1)), Fraction(float(v2))
    m = impl.degree
    if m <= 0:
        p0 = p[0] if p else Fraction(0)
        coeffs = [q * v2f * v2f + v1f * v1f,
                  2 * q * p0 * v2f,
                  q * p0 * p0 - 1]
    else:
        b = [Fraction(0)] * (2 * m + 1)
        b[2 * m - 1] += v2f
        v1pow = Fraction(1)
        for j, pj in enumerate(p):
            b[2 * (m - j)] += pj * v1pow
            v1pow *= v1f * v1f
        coeffs = [Fraction(0)] * (4 * m + 1)
        for i, bi in enumerate(b):
            if bi == 0:
                continue
            for j, bj in enumerate(b):
                coeffs[i + j] += q * bi * bj
        coeffs[4 * m] -= 1
        coeffs[4 * m - 2] += v1f * v1f
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return FPolynomial(tuple(coeffs))


# -- geodesics of F -----------------------------------------------------------------

@dataclass
class FinslerTrace:
    """Samples of a geodesic of F in the (R, Theta) chart."""

    t: np.ndarray
    R: np.ndarray
    Theta: np.ndarray
    vR: np.ndarray
    vTheta: np.ndarray
    F: np.ndarray
    tol: float
    complete: bool = True

    def rows(self):
        for k in range(len(self.t)):
            yield (float(self.t[k]), float(self.R[k]), float(self.Theta[k]),
                   float(self.vR[k]), float(self.vTheta[k]), float(self.F[k]))


def unit_direction(profile: ZollProfile, R: float, Theta: float,
                   angle: float) -> np.ndarray:
    """The F-unit vector at (R, Theta) in the chart direction ``angle``."""
    raw = np.array([math.cos(angle), math.sin(angle)])
    F = finsler_F(profile, R, Theta, raw).F
    return raw / F


def _spray_rhs(profile: ZollProfile, state: np.ndarray,
               dstep: float = 1e-4) -> np.ndarray:
    """(Rdot, Thetadot, vRdot, vThetadot) of the geodesic spray of F^2/2.

    The fiber Hessian comes from central differences of F^2 (Richardson at
    twice the step); chart derivatives use that F is Theta-independent, so
    only d/dR terms survive:

        g vdot = (1/2) dR(F^2) e_R - (1/2) vR * dR(grad_v F^2).

    All offset ray solves are warm-started from the base solve.  R is clamped
    just inside the chart so that trial stages that overshoot the termination
    event stay evaluable; accepted solution points never reach the clamp.
    """
    R_raw, theta, w1, w2 = state
    r_lim = math.pi / 2 - 8e-4
    R = min(max(R_raw, -r_lim), r_lim)
    cache = curve_cache(profile, R)
    _, r_base, _ = cache.solve_ray(w1, w2)
    v = np.array([w1, w2])
    vn = float(np.hypot(w1, w2))
    h = SPRAY_HESSIAN_STEP * vn
    hess = (4.0 * _hessian_f2(cache, v, h, r_base)
            - _hessian_f2(cache, v, 2 * h, r_base)) / 3.0
    g = 0.5 * hess

    cache_p = curve_eval(profile, R + dstep)
    cache_m = curve_eval(profile, R - dstep)
    fp, grad_p = _f_gradient(cache_p, w1, w2, r_base)
    fm, grad_m = _f_gradient(cache_m, w1, w2, r_base)
    d_r_f2 = (fp * fp - fm * fm) / (2 * dstep)
    d_r_grad_f2 = (2 * fp * grad_p - 2 * fm * grad_m) / (2 * dstep)

    rhs = 0.5 * np.array([d_r_f2, 0.0]) - 0.5 * w1 * d_r_grad_f2
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[0, 1]
    if det <= 0:
        if abs(R_raw) > CHART_ABORT:
            # Overshooting trial stage past the termination event: the step
            # will be cut back there, so any finite value serves.
            return np.array([w1, w2, 0.0, 0.0])
        raise StepFailureError(f"fundamental tensor not positive definite at R={R}")
    vdot = np.array([g[1, 1] * rhs[0] - g[0, 1] * rhs[1],
                     -g[0, 1] * rhs[0] + g[0, 0] * rhs[1]]) / det
    return np.array([w1, w2, vdot[0], vdot[1]])


def finsler_geodesic(profile: ZollProfile, start: tuple[float, float], v0,
                     t_end: float, tol: float = 1e-8,
                     samples_per_period: int = 256) -> FinslerTrace:
    """Integrate the unit-speed geodesic of F from ``start`` with velocity v0.

    F is conserved along the exact flow; the residual drift measures the
    combined spray/controller error.  Trajectories stay in one chart: when
    |R| reaches pi/2 - 1e-3 the integration aborts with ChartExitError
    carrying the partial trace.
    """
    R0, Theta0 = float(start[0]), float(start[1])
    v0 = np.asarray(v0, dtype=float)
    f0 = finsler_F(profile, R0, Theta0, v0).F
    if abs(f0 - 1.0) > 1e-6:
        raise DomainError(f"initial velocity must be F-unit; F(v0) = {f0}")
    if abs(R0) >= CHART_ABORT:
        raise ChartExitError(f"start point R={R0} outside the working chart")

    n = max(16, int(round(samples_per_period * t_end / (2 * math.pi)))) + 1
    t_eval = np.linspace(0.0, t_end, n)

    def rhs(t, yv):
        return _spray_rhs(profile, yv)

    def chart_event(t, yv):
        return CHART_ABORT - abs(yv[0])

    chart_event.terminal = True

    sol = solve_ivp(rhs, (0.0, t_end), [R0, Theta0, v0[0], v0[1]],
                    method="DOP853", rtol=tol, atol=tol * 1e-2,
                    t_eval=t_eval, events=chart_event, max_step=0.25)
    if sol.status == 1:  # chart exit
        trace = _trace_from_solution(profile, sol, tol, complete=False)
        raise ChartExitError(
            f"geodesic reached |R| = {CHART_ABORT:.6f} at t = {sol.t[-1]:.6f}",
            partial_trace=trace)
    if sol.status != 0 or not sol.success:
        raise StepFailureError(f"Finsler geodesic integration failed: {sol.message}")
    return _trace_from_solution(profile, sol, tol, complete=True)


def _trace_from_solution(profile, sol, tol, complete) -> FinslerTrace:
    t = sol.t
    y = sol.y
    if not complete and sol.t_events and len(sol.t_events[0]):
        # Append the chart-rim event state so the partial trace ends there.
        t_ev = sol.t_events[0][-1]
        if t.size == 0 or t_ev > t[-1]:
            t = np.append(t, t_ev)
            y = np.hstack([y, sol.y_events[0][-1][:, None]])
    rr, th, w1, w2 = y
    fvals = np.array([
        _f_value(curve_cache(profile, float(rr[k])), float(w1[k]), float(w2[k]))
        for k in range(len(t))
    ])
    return FinslerTrace(t.copy(), rr.copy(), th.copy(), w1.copy(), w2.copy(),
                        fvals, tol, complete)


def chart_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Round-metric proxy distance sqrt(dR^2 + cos^2(R) dTheta^2) on the chart."""
    d_r = b[0] - a[0]
    d_t = (b[1] - a[1] + math.pi) % (2 * math.pi) - math.pi
    cr = math.cos(0.5 * (a[0] + b[0]))
    return math.sqrt(d_r * d_r + cr * cr * d_t * d_t)
