"""Geodesic flow of the surface metric, Clairaut constants, closure integrals.

Geodesics of g = (1+h(cos r))^2 dr^2 + sin^2 r dtheta^2 at unit energy obey

    dr/dt     = sign * sqrt(1 - c^2/sin^2 r) / (1 + h(cos r)),
    dtheta/dt = c / sin^2 r,

where c = (dtheta/dt) sin^2 r is the conserved Clairaut constant and sign
is the sign of dr/dt, flipping at the turning latitudes r_c = arcsin|c| and
pi - r_c.

The square root is non-Lipschitz exactly at the turning points, so the
integrator works in the regular phase variable u defined by

    sin^2 r = sin^2 r_c + cos^2 r_c sin^2 u   (equivalently cos r = cos r_c cos u),

in which the flow is globally smooth:

    du/dt     = 1 / (1 + h(cos r_c cos u)),
    dtheta/dt = c / (1 - cos^2 r_c cos^2 u).

u increases monotonically; r = arccos(cos r_c cos u) oscillates through the
band [r_c, pi - r_c] and the sign of dr/dt is the sign of sin u, so turning
points need no event handling at all.  The same substitution turns the
closure integrals into integrals of analytic functions over [0, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (BandError, DomainError, PoleProximityError, QuadratureError,
                     StepFailureError)
from .profile import ZollProfile, metric_coeffs
from .quadrature import gl_adaptive, gl_refined

TWO_PI = 2.0 * math.pi

#: Hard limits on the integrator tolerance knob.
TOL_RANGE = (1e-12, 1e-4)

#: Default samples emitted per period 2*pi.
DEFAULT_SAMPLES_PER_PERIOD = 512


def turning_latitude(c: float) -> float:
    """r_c = arcsin|c|, the extremal latitude reached by a geodesic."""
    if abs(c) > 1.0 + 1e-12:
        raise DomainError(f"Clairaut constant |c|={abs(c)} exceeds 1")
    return math.asin(min(1.0, abs(c)))


def band_radicand(c: float, r) -> np.ndarray:
    """sin^2 r - c^2 in the cancellation-free form sin(r-r_c) sin(r+r_c).

    The second factor is evaluated as sin(r_top - r) with r_top the rounded
    float pi - r_c, so that both turning latitudes (r_c and that same float
    r_top, which is what callers iterate to) give an exact zero.  This keeps
    the two indicatrix branches glued to machine precision; the substitution
    of the rounded r_top costs only ~1 ulp(pi) in the radicand.
    """
    rc = turning_latitude(c)
    r = np.asarray(r)
    val = np.sin(r - rc) * np.sin((math.pi - rc) - r)
    return np.maximum(val, 0.0)


@dataclass(frozen=True)
class GeodesicState:
    """A point of the unit tangent bundle: (r, theta, Clairaut c, sign of dr/dt)."""

    r: float
    theta: float
    c: float
    sign: int = +1

    def __post_init__(self):
        if self.sign not in (-1, +1):
            raise DomainError(f"sign must be +-1, got {self.sign}")
        if abs(self.c) > 1.0 + 1e-12:
            raise DomainError(f"|c| = {abs(self.c)} exceeds 1")
        if abs(self.c) > math.sin(self.r) + 1e-12:
            raise BandError(
                f"state unreachable: |c|={abs(self.c)} > sin r={math.sin(self.r)}"
            )

    def xi1(self, profile: ZollProfile) -> float:
        """Radial momentum sign * (1+h) sqrt(1 - c^2/sin^2 r)."""
        sr = math.sin(self.r)
        rad = max(0.0, 1.0 - (self.c / sr) ** 2) if sr > 0 else 0.0
        return self.sign * (1.0 + profile.h(math.cos(self.r))) * math.sqrt(rad)

    def energy_residual(self, profile: ZollProfile) -> float:
        """|xi1^2/(1+h)^2 + c^2/sin^2 r - 1| (unit-energy defect)."""
        sr = math.sin(self.r)
        if sr < 1e-12:
            raise PoleProximityError("energy undefined at the poles")
        one_h = 1.0 + profile.h(math.cos(self.r))
        return abs((self.xi1(profile) / one_h) ** 2 + (self.c / sr) ** 2 - 1.0)


def flow_rhs(profile: ZollProfile, state: GeodesicState) -> tuple[float, float]:
    """(dr/dt, dtheta/dt) of the unit-energy geodesic flow."""
    sr = math.sin(state.r)
    if sr < 1e-9:
        raise PoleProximityError(f"flow evaluated too close to a pole: r={state.r}")
    y = math.sqrt(band_radicand(state.c, state.r))
    one_h = 1.0 + profile.h(math.cos(state.r))
    return state.sign * y / (one_h * sr), state.c / (sr * sr)


# -- closure integrals --------------------------------------------------------

def closure_integrals(profile: ZollProfile, c: float,
                      rtol: float = 1e-13) -> tuple[float, float]:
    """Half-period travel time T and longitude advance of a geodesic band sweep.

    T(c)     = int_{r_c}^{pi-r_c} sin r (1+h(cos r)) / sqrt(sin^2 r - sin^2 r_c) dr,
    Theta(c) = int_{r_c}^{pi-r_c} sin r_c (1+h) / (sin r sqrt(sin^2 r - sin^2 r_c)) dr.

    Both equal pi for every admissible profile and every |c| < 1 -- that is
    the closure property this function lets the tests verify.  The endpoint
    singularities are removed by substituting sin^2 r = sin^2 r_c +
    cos^2 r_c sin^2 u, after which

        T     = int_0^pi (1 + h(cos r_c cos u)) du,
        Theta = sin r_c int_0^pi (1 + h(cos r_c cos u)) / (1 - cos^2 r_c cos^2 u) du,

    with analytic integrands, evaluated by Gauss-Legendre with order
    escalation as the error check.

    For c = 0 the longitude advance of a meridian happens entirely at the
    pole crossing (the smooth integral vanishes); the geometric value pi is
    returned directly.  For c < 0 the magnitudes are returned; the sign of
    the actual advance is sign(c).
    """
    if abs(c) >= 1.0:
        raise DomainError("closure integrals degenerate for |c| = 1 (equators)")
    rc = turning_latitude(c)
    cos_rc = math.cos(rc)

    def time_integrand(u):
        return 1.0 + profile.h(cos_rc * np.cos(u))

    t_val, _ = gl_adaptive(time_integrand, 0.0, math.pi, rtol=rtol, atol=rtol)

    if c == 0.0:
        return t_val, math.pi

    sin_rc = math.sin(rc)
    c2 = c * c

    def theta_integrand(u):
        cu = np.cos(u)
        # denominator sin^2 r = 1 - cos^2 r_c cos^2 u, rearranged so that it
        # adds positive terms (the direct form cancels catastrophically for
        # small |c|).
        return sin_rc * (1.0 + profile.h(cos_rc * cu)) \
            / (c2 + (1.0 - c2) * np.sin(u) ** 2)

    if abs(c) >= 0.05:
        th_val, _ = gl_adaptive(theta_integrand, 0.0, math.pi, rtol=rtol, atol=rtol)
    else:
        # The integrand peaks with width ~|c| at both endpoints; dyadically
        # refined panels resolve it at any c, with two orders as the check.
        th_val = gl_refined(theta_integrand, 0.0, math.pi,
                            refine_a=True, refine_b=True, order=48)
        check = gl_refined(theta_integrand, 0.0, math.pi,
                           refine_a=True, refine_b=True, order=64)
        # The peak reaches (1+h)/|c|, so roundoff alone bounds the
        # achievable absolute accuracy by ~eps/|c|.
        floor = max(100 * rtol, 1e-15 / abs(c))
        if abs(th_val - check) > floor:
            raise QuadratureError(
                f"longitude-advance panels disagree at c={c}: "
                f"{abs(th_val - check):.3e}")
    return t_val, th_val


# -- trace integration --------------------------------------------------------

@dataclass
class GeodesicTrace:
    """Samples (t, r, theta) of an integrated geodesic plus step metadata."""

    t: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    sign: np.ndarray
    u: np.ndarray
    c: float
    tol: float

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise DomainError("trace times must be strictly increasing")

    def endpoint_state(self) -> GeodesicState:
        return GeodesicState(float(self.r[-1]), float(self.theta[-1] % TWO_PI),
                             self.c, int(self.sign[-1]))

    def rows(self):
        """Iterate CSV rows (t, r, theta, c, sign) with theta reduced mod 2*pi."""
        for k in range(len(self.t)):
            yield (float(self.t[k]), float(self.r[k]),
                   float(self.theta[k] % TWO_PI), self.c, int(self.sign[k]))


def _phase_from_state(state: GeodesicState) -> float:
    """Initial phase u0 with cos u0 = cos r0 / cos r_c and sign(sin u0) = sign."""
    rc = turning_latitude(state.c)
    y = math.sqrt(band_radicand(state.c, state.r))
    return math.atan2(state.sign * y, math.cos(state.r))


def _sign_of_phase(u: np.ndarray) -> np.ndarray:
    """+1 on the ascending half-oscillations u mod 2pi in [0, pi), else -1."""
    return np.where(np.mod(u, TWO_PI) < math.pi, 1, -1).astype(int)


def integrate_geodesic(profile: ZollProfile, initial: GeodesicState,
                       t_end: float, tol: float = 1e-10,
                       samples_per_period: int = DEFAULT_SAMPLES_PER_PERIOD
                       ) -> GeodesicTrace:
    """Adaptive trace of the geodesic flow over [0, t_end].

    Integration runs in the regular (u, theta) variables, which keeps the
    Clairaut relation (dtheta/dt) sin^2 r = c and the unit energy exact by
    construction and confines r to [r_c, pi - r_c] without event detection;
    the integrator error shows up only in the time/longitude parametrization
    (and is what the closure tests measure).

    Equators (c = +-1) are returned in closed form, never integrated.
    Meridians (c = 0) use the u-flow for r with the longitude jumping by pi
    at each pole crossing.
    """
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise DomainError(f"tolerance {tol} outside {TOL_RANGE}")
    if t_end <= 0:
        raise DomainError("t_end must be positive")
    n = max(16, int(round(samples_per_period * t_end / TWO_PI))) + 1
    t_eval = np.linspace(0.0, t_end, n)

    c = initial.c
    if abs(abs(c) - 1.0) <= 1e-12:
        # Equator: r stays at pi/2, theta advances linearly.
        sgn = 1.0 if c > 0 else -1.0
        theta = initial.theta + sgn * t_eval
        r = np.full_like(t_eval, math.pi / 2)
        return GeodesicTrace(t_eval, r, theta, np.ones(n, dtype=int),
                             np.zeros(n), c, tol)

    rc = turning_latitude(c)
    cos_rc = math.cos(rc)
    u0 = _phase_from_state(initial)

    if c == 0.0:
        def rhs(t, yv):
            return [1.0 / (1.0 + profile.h(math.cos(yv[0])))]

        sol = solve_ivp(rhs, (0.0, t_end), [u0], method="DOP853",
                        rtol=tol, atol=tol * 1e-3, t_eval=t_eval, max_step=0.5)
        if sol.status != 0 or not sol.success:
            raise StepFailureError(f"meridian integration failed: {sol.message}")
        u = sol.y[0]
        # Each pole crossing (u through a multiple of pi) flips the meridian half.
        crossings = np.floor(u / math.pi) - math.floor(u0 / math.pi)
        theta = initial.theta + math.pi * crossings
        r = np.arccos(np.clip(np.cos(u), -1.0, 1.0))
        return GeodesicTrace(t_eval, r, theta, _sign_of_phase(u), u, c, tol)

    c2 = c * c

    def rhs(t, yv):
        z = cos_rc * math.cos(yv[0])
        sin2_r = c2 + (1.0 - c2) * math.sin(yv[0]) ** 2   # cancellation-free
        return [1.0 / (1.0 + profile.h(z)), c / sin2_r]

    sol = solve_ivp(rhs, (0.0, t_end), [u0, initial.theta], method="DOP853",
                    rtol=tol, atol=tol * 1e-3, t_eval=t_eval, max_step=0.5)
    if sol.status != 0 or not sol.success:
        raise StepFailureError(f"geodesic integration failed: {sol.message}")
    u, theta = sol.y
    r = np.arccos(np.clip(cos_rc * np.cos(u), -1.0, 1.0))
    return GeodesicTrace(t_eval, r, theta, _sign_of_phase(u), u, c, tol)


def surface_distance(profile: ZollProfile, a: tuple[float, float],
                     b: tuple[float, float]) -> float:
    """First-order metric distance between nearby points (r, theta).

    Evaluates ds^2 = g_rr dr^2 + g_thth dtheta^2 at the midpoint with the
    longitude difference wrapped to (-pi, pi].  Adequate for closure checks
    where the separation is tiny.
    """
    dr = b[0] - a[0]
    dth = (b[1] - a[1] + math.pi) % TWO_PI - math.pi
    rm = 0.5 * (a[0] + b[0])
    rm = min(max(rm, 1e-9), math.pi - 1e-9)
    g_rr, g_tt = metric_coeffs(profile, rm)
    return math.sqrt(g_rr * dr * dr + g_tt * dth * dth)
