"""The manifold of oriented geodesics and the induced indicatrix curves.

Oriented geodesics (except the two equators) are charted by (R, Theta) with
|R| < pi/2: a geodesic anchored at its turning point maps to

    (R, Theta) = (r(0), theta(0))            if c > 0,
                 (-r(0), theta(0) + pi)       if c < 0,
                 (0, theta(gdot(0)) - pi/2)   if c = 0 (meridians),

so that c = sin R.  The unit tangent circle of the geodesic with c = sin R
embeds into the tangent plane at (R, Theta) as the closed curve

    v1(r) = branch * sqrt(sin^2 r - c^2) / cos R,
    v2(r) = -(1 + h(cos r))/cos r + sqrt(sin^2 r - c^2) * Phi(r),

parametrized by the latitude r in [r_c, pi - r_c] swept on both branches
(branch = sign of dr/dt).  v2 does not depend on the branch (it is even
under time reversal through the turning point), so the curve is symmetric
about the v2 axis; it is generally not centrally symmetric.

The apparent singularity of v2 at r = pi/2 cancels; integrating by parts
gives the everywhere-regular form

    v2 = -[ (1+h(x)) x + (sin^2 r - c^2) h'(x) + y Psi(r) ] / cos^2 R,

with x = cos r, y = sqrt(sin^2 r - c^2) and Psi the smooth h'' integral of
the jacobi module.  For polynomial h, expanding Psi in closed form turns the
curve into the implicit algebraic equation

    (v2 + P(v1^2))^2 = (1 - v1^2) / cos^2 R,

where P combines the profile coefficients (see implicit_polynomial); the
signed branch equation is

    v2 + P(v1^2) = -sigma * sqrt(1 - v1^2) / cos R,

sigma = sign(cos r) distinguishing the two hemispheres of the latitude
parameter.  The parametric route (quadrature) and the implicit polynomial
(exact algebra) are kept fully independent so each can certify the other.

Orientation note.  With the conventions above (branch = sign of dr/dt giving
the sign of v1), the embedded tangent circle is the image of the chart-
compatible one under the reflection Theta -> -Theta, which is an isometry of
the induced norm: the frame normal at the turning point points north
(n = -(1/(1+h)) d/dr there, from the frame formulas), so the second
normalized Jacobi field corresponds to -(1/(c1 cos r_c)) d/dR, not +.  Every
quantity computed here (the norm, its tensor, curvature, closure behavior,
the implicit equation) is invariant under that reflection; the one place the
orientation is observable -- following a geodesic of the induced norm
through the family of directions at a fixed surface point -- is pinned by a
test, with the longitude reflected about its start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import BandError, ConvexityViolation, DomainError
from .geodesics import GeodesicState, band_radicand, turning_latitude
from .jacobi import (EQUATOR_GUARD, _s_poly_coeffs, curvature_integral,
                     curvature_integral_full, curvature_integral_tail,
                     hpp_integral, hpp_integral_quad)
from .profile import ZollProfile, curvature_x
from .quadrature import gl_refined

TWO_PI = 2.0 * math.pi

#: Chart boundary guard: |R| must stay below pi/2 by at least this much.
CHART_GUARD = 1e-6


@dataclass(frozen=True)
class ModuliPoint:
    """Chart coordinates (R, Theta) of an oriented geodesic, |R| < pi/2."""

    R: float
    Theta: float

    def __post_init__(self):
        if abs(self.R) >= math.pi / 2:
            raise DomainError(f"|R| = {abs(self.R)} reaches the chart poles")


@dataclass(frozen=True)
class IndicatrixSample:
    """One point of the unit circle of the induced norm at chart point (R, Theta)."""

    R: float
    Theta: float
    branch: int
    r: float
    v1: float
    v2: float


def _check_chart(R: float):
    if abs(R) >= math.pi / 2 - CHART_GUARD:
        raise DomainError(f"chart coordinate |R| = {abs(R)} too close to pi/2")


def _check_sample_args(R: float, r: float, branch: int):
    _check_chart(R)
    if branch not in (-1, +1):
        raise DomainError(f"branch must be +-1, got {branch}")
    rc = abs(R)
    if not rc - 1e-12 <= r <= math.pi - rc + 1e-12:
        raise BandError(f"latitude {r} outside [{rc}, {math.pi - rc}]")


# -- chart coordinates ---------------------------------------------------------

def coords_of_geodesic(profile: ZollProfile, state: GeodesicState) -> ModuliPoint:
    """Chart coordinates of the oriented geodesic through the given state.

    States not at their turning point are normalized by flowing the longitude
    back to the turning point (a quadrature in the regular phase variable).
    Equators (c = +-1) are the two chart poles and are rejected.
    """
    c = state.c
    if abs(c) >= 1.0 - 1e-12:
        raise DomainError("the oriented equators are the poles of the chart")

    if c == 0.0:
        # Meridians: the anchor is the southbound equator crossing, which sits
        # on the theta half-plane the state is on (sign +1) or the opposite one.
        theta_cross = state.theta if state.sign == +1 else state.theta + math.pi
        return ModuliPoint(0.0, (theta_cross - math.pi / 2) % TWO_PI)

    rc = turning_latitude(c)
    if abs(state.r - rc) <= 1e-12:
        theta_turn = state.theta
    else:
        cos_rc = math.cos(rc)
        y = math.sqrt(band_radicand(c, state.r))
        u0 = math.atan2(state.sign * y, math.cos(state.r))
        c2 = c * c

        def dtheta_du(u):
            z = cos_rc * np.cos(u)
            # sin^2 r rearranged to avoid cancellation at small |c|.
            return c * (1.0 + profile.h(z)) / (c2 + (1.0 - c2) * np.sin(u) ** 2)

        advance = gl_refined(dtheta_du, 0.0, u0, refine_a=True, refine_b=True)
        theta_turn = state.theta - advance

    if c > 0:
        return ModuliPoint(rc, theta_turn % TWO_PI)
    return ModuliPoint(-rc, (theta_turn + math.pi) % TWO_PI)


# -- parametric and regularized samples ----------------------------------------

def indicatrix_parametric(profile: ZollProfile, R: float, r: float,
                          branch: int = +1, Theta: float = 0.0,
                          equator_guard: float = EQUATOR_GUARD) -> IndicatrixSample:
    """Indicatrix sample from the direct quadrature of the curvature integral.

    Below the equator Phi(r) is a plain (panel-refined) quadrature; above it
    the finite part is bridged over the pole as Phi_full - tail(r), with both
    pieces quadratures.  Within ``equator_guard`` of r = pi/2 the evaluation
    is dispatched to the regularized form, where the cancellation between
    1/cos r terms would otherwise cost precision.
    """
    _check_sample_args(R, r, branch)
    if abs(r - math.pi / 2) < equator_guard:
        return indicatrix_regularized(profile, R, r, branch, Theta=Theta)
    c = math.sin(R)
    y = math.sqrt(band_radicand(c, r))
    x = math.cos(r)
    if r < math.pi / 2:
        phi = curvature_integral(profile, c, r)
    else:
        phi = curvature_integral_full(profile, c) - curvature_integral_tail(profile, c, r)
    v2 = -(1.0 + profile.h(x)) / x + y * phi
    return IndicatrixSample(R, Theta, branch, r, branch * y / math.cos(R), v2)


def indicatrix_regularized(profile: ZollProfile, R: float, r: float,
                           branch: int = +1, Theta: float = 0.0,
                           psi_method: str = "closed") -> IndicatrixSample:
    """Indicatrix sample from the everywhere-regular v2 expression.

    The h'' integral Psi is taken in closed form for the polynomial profile
    by default; ``psi_method="quad"`` switches to quadrature (slower, used by
    cross-checks).
    """
    _check_sample_args(R, r, branch)
    c = math.sin(R)
    q = math.cos(R) ** 2
    x = math.cos(r)
    y2 = float(band_radicand(c, r))
    y = math.sqrt(y2)
    if psi_method == "closed":
        psi = float(hpp_integral(profile, c, r))
    elif psi_method == "quad":
        psi = hpp_integral_quad(profile, c, r)
    else:
        raise DomainError(f"unknown psi_method {psi_method!r}")
    v2 = -((1.0 + profile.h(x)) * x + y2 * profile.h_prime(x) + y * psi) / q
    return IndicatrixSample(R, Theta, branch, r, branch * y / math.cos(R), v2)


def _curve_v2_array(profile: ZollProfile, R: float, r: np.ndarray) -> np.ndarray:
    """Vectorized regularized v2 over an array of latitudes."""
    c = math.sin(R)
    q = math.cos(R) ** 2
    x = np.cos(r)
    y2 = band_radicand(c, r)
    y = np.sqrt(y2)
    psi = np.asarray(hpp_integral(profile, c, r))
    return -((1.0 + profile.h(x)) * x + y2 * profile.h_prime(x) + y * psi) / q


def _curve_tangent_arrays(profile: ZollProfile, R: float, r: np.ndarray,
                          branch: int) -> tuple[np.ndarray, np.ndarray]:
    """d(v1)/dr and d(v2)/dr along one branch (vectorized, closed form)."""
    c = math.sin(R)
    q = math.cos(R) ** 2
    x = np.cos(r)
    sr = np.sin(r)
    y2 = band_radicand(c, r)
    y = np.sqrt(y2)
    hp = profile.h_prime(x)
    n_of_x = 1.0 + profile.h(x) - x * hp
    psi = np.asarray(hpp_integral(profile, c, r))
    v1d = branch * sr * x / (y * math.cos(R))
    v2d = sr * n_of_x / q - sr * x * psi / (q * y)
    return v1d, v2d


def indicatrix_curvature(profile: ZollProfile, R: float, r: float,
                         branch: int = +1) -> tuple[float, float]:
    """Both sides of the indicatrix curvature identity, computed independently.

    Left: k = (v1'' v2' - v2'' v1') / (v1' v2 - v2' v1) from analytic
    r-derivatives of the curve.  Right: (dt/dr)^2 G(r).  Strict positivity of
    either side over the band certifies strong convexity; the two sides
    agreeing certifies the curvature identity itself.  Turning points are
    excluded (dt/dr diverges there).
    """
    _check_sample_args(R, r, branch)
    c = math.sin(R)
    rc = abs(R)
    if min(r - rc, math.pi - rc - r) < 1e-6:
        raise DomainError("indicatrix curvature is singular at the turning points")
    q = math.cos(R) ** 2
    x = math.cos(r)
    sr = math.sin(r)
    y2 = float(band_radicand(c, r))
    y = math.sqrt(y2)
    one_h = 1.0 + profile.h(x)
    hp = profile.h_prime(x)
    n_of_x = one_h - x * hp
    psi = float(hpp_integral(profile, c, r))
    cos2r = math.cos(2.0 * r)

    v1 = branch * y / math.cos(R)
    v2 = -((one_h) * x + y2 * hp + y * psi) / q
    v1d = branch * sr * x / (y * math.cos(R))
    v1dd = branch * (cos2r * y2 - (sr * x) ** 2) / (y ** 3 * math.cos(R))
    v2d = sr * n_of_x / q - sr * x * psi / (q * y)
    v2dd = x * n_of_x / q - (cos2r * y2 - (sr * x) ** 2) * psi / (q * y ** 3)

    left = (v1dd * v2d - v2dd * v1d) / (v1d * v2 - v2d * v1)
    right = (one_h * sr / y) ** 2 * float(curvature_x(profile, x))
    return left, right


# -- the closed curve -----------------------------------------------------------

def indicatrix_curve(profile: ZollProfile, R: float, samples: int = 256,
                     Theta: float = 0.0) -> list[IndicatrixSample]:
    """The full indicatrix as a closed polyline traversed once.

    Branch +1 sweeps r from r_c to pi - r_c (sampled uniformly in the phase
    variable, which spaces points evenly around the turning regions), branch
    -1 returns along the mirrored arc.  The polyline is checked to wind once
    around the origin with strictly monotone polar angle -- for a curve
    symmetric about the v2 axis and containing the origin this is exactly
    simplicity plus star-shapedness, and it fails when convexity is lost.
    """
    _check_chart(R)
    if samples < 16:
        raise DomainError(f"need at least 16 samples, got {samples}")
    rc = abs(R)
    cos_rc = math.cos(rc)
    u = np.linspace(0.0, math.pi, samples)
    r = np.arccos(np.clip(cos_rc * np.cos(u), -1.0, 1.0))
    r[0], r[-1] = rc, math.pi - rc
    v2 = _curve_v2_array(profile, R, r)
    v1_plus = np.sqrt(band_radicand(math.sin(R), r)) / math.cos(R)

    out: list[IndicatrixSample] = []
    for k in range(samples):
        out.append(IndicatrixSample(R, Theta, +1, float(r[k]),
                                    float(v1_plus[k]), float(v2[k])))
    for k in range(samples - 2, 0, -1):
        out.append(IndicatrixSample(R, Theta, -1, float(r[k]),
                                    float(-v1_plus[k]), float(v2[k])))

    angles = np.unwrap(np.array([math.atan2(s.v2, s.v1) for s in out]))
    steps = np.diff(angles)
    total = angles[-1] - angles[0]
    closing = (math.atan2(out[0].v2, out[0].v1) - angles[-1]) % TWO_PI
    winding = (total + closing) / TWO_PI
    if np.any(steps <= 0) or abs(winding - 1.0) > 1e-6:
        bad = [out[int(i)] for i in np.nonzero(steps <= 0)[0][:8]]
        raise ConvexityViolation(
            f"indicatrix at R={R} is not a simple star-shaped loop "
            f"(winding {winding:.6f}); convexity violated", report=bad)

    # Polyline convexity: every turn of the counterclockwise traversal must
    # bend left.  sin(turn angle) < -1e-9 flags a concave arc.
    pts = np.array([[s.v1, s.v2] for s in out])
    edges = np.diff(np.vstack([pts, pts[:2]]), axis=0)
    e0, e1 = edges[:-1], edges[1:]
    turn = (e0[:, 0] * e1[:, 1] - e0[:, 1] * e1[:, 0]) \
        / (np.hypot(e0[:, 0], e0[:, 1]) * np.hypot(e1[:, 0], e1[:, 1]))
    if np.min(turn) < -1e-9:
        bad_idx = np.nonzero(turn < -1e-9)[0]
        bad = [out[int(i % len(out))] for i in bad_idx[:8]]
        raise ConvexityViolation(
            f"indicatrix at R={R} has concave arcs "
            f"(worst turn sine {np.min(turn):.3e})", report=bad)
    return out


# -- implicit polynomial ---------------------------------------------------------

@dataclass(frozen=True)
class ImplicitIndicatrix:
    """Exact polynomial data of the indicatrix equation at chart value R.

    ``a_sum`` are the w-coefficients (w = v1^2) of
        sum_k a_{2k+1} cos^{2k}R (1 + 2k w)(1 - w)^k,
    ``b_sum`` those of
        S(w) = sum_k b_{2k+1} cos^{2k}R sum_p (-1)^p C(k,p) w^p / (2p+3),
    and ``combined`` is P(w) = a_sum(w) + cos^2 R * w^2 * S(w), assembled in
    exact rational arithmetic over the (float-exact) inputs.  The equation
    reads (v2 + P(v1^2))^2 = (1 - v1^2)/cos^2 R; on each hemisphere branch
    v2 + P(v1^2) = -sign(cos r) sqrt(1 - v1^2)/cos R.

    The a_sum and w^2 * S pieces formally reach degree n+1 in w, but their
    top coefficients cancel identically; ``combined`` keeps the general form,
    the cancellation is verified exactly, and ``degree`` reports the reduced
    degree (-1 for P = 0).
    """

    R: float
    cos_R: float
    q: float
    a_sum: tuple[float, ...]
    b_sum: tuple[float, ...]
    combined: tuple[float, ...]
    combined_exact: tuple[Fraction, ...]
    degree: int
    raw_top_exact: Fraction

    def p_eval(self, w):
        if not self.combined:
            return np.zeros_like(np.asarray(w, dtype=float))
        return np.polynomial.polynomial.polyval(np.asarray(w, dtype=float),
                                                np.asarray(self.combined))

    def residual(self, v1, v2):
        """(v2 + P(v1^2))^2 - (1 - v1^2)/cos^2 R; ~0 iff on the indicatrix."""
        v1 = np.asarray(v1, dtype=float)
        v2 = np.asarray(v2, dtype=float)
        out = (v2 + self.p_eval(v1 * v1)) ** 2 - (1.0 - v1 * v1) / self.q
        return out if out.ndim else float(out)

    def branch_gap(self, v1, v2, hemisphere: int):
        """v2 + P(v1^2) + sign(cos r) sqrt(1-v1^2)/cos R on one hemisphere."""
        v1 = np.asarray(v1, dtype=float)
        root = np.sqrt(np.clip(1.0 - v1 * v1, 0.0, None)) / self.cos_R
        return v2 + self.p_eval(v1 * v1) + hemisphere * root


def _poly_mul(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _poly_add(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else Fraction(0)) +
            (b[i] if i < len(b) else Fraction(0)) for i in range(n)]


@lru_cache(maxsize=1024)
def implicit_polynomial(profile: ZollProfile, R: float) -> ImplicitIndicatrix:
    """Exact coefficient data of the implicit indicatrix equation at R.

    Powers of cos R are computed once and all combinatorial factors enter as
    exact rationals, so the degree collapse of the combined polynomial is an
    exact cancellation, not a numerical one.
    """
    _check_chart(R)
    q = Fraction(math.cos(R) ** 2)
    a = [Fraction(ak) for ak in profile.odd_coeffs]
    # a-part: sum_k a_k q^k (1 + 2k w)(1 - w)^k
    a_sum: list[Fraction] = [Fraction(0)]
    one_minus_w_pow: list[Fraction] = [Fraction(1)]
    qk = Fraction(1)
    for k, ak in enumerate(a):
        term = _poly_mul([Fraction(1), Fraction(2 * k)], one_minus_w_pow)
        a_sum = _poly_add(a_sum, [ak * qk * t for t in term])
        one_minus_w_pow = _poly_mul(one_minus_w_pow, [Fraction(1), Fraction(-1)])
        qk *= q
    # b-part: S(w) = sum_k b_k q^k sum_p (-1)^p C(k,p)/(2p+3) w^p,
    # with b_k = 2(k+1)(2k+3) a_{k+1}.
    nb = max(0, len(a) - 1)
    s_sum: list[Fraction] = [Fraction(0)] * max(1, nb)
    qk = Fraction(1)
    for k in range(nb):
        bk = 2 * (k + 1) * (2 * k + 3) * a[k + 1]
        for p in range(k + 1):
            s_sum[p] += bk * qk * Fraction((-1) ** p * comb(k, p), 2 * p + 3)
        qk *= q
    combined = _poly_add(a_sum, [Fraction(0), Fraction(0)] + [q * s for s in s_sum])

    raw_top = combined[-1] if combined else Fraction(0)
    stripped = list(combined)
    while stripped and stripped[-1] == 0:
        stripped.pop()

    return ImplicitIndicatrix(
        R=R,
        cos_R=math.cos(R),
        q=float(q),
        a_sum=tuple(float(x) for x in a_sum),
        b_sum=tuple(float(x) for x in s_sum),
        combined=tuple(float(x) for x in stripped),
        combined_exact=tuple(stripped),
        degree=len(stripped) - 1,
        raw_top_exact=raw_top,
    )


def implicit_residual(profile: ZollProfile, R: float, v1, v2):
    """Value of the squared implicit identity at (v1, v2); ~0 on the curve."""
    return implicit_polynomial(profile, R).residual(v1, v2)


# -- fast closed-form curve evaluation (shared with the finsler module) ---------

def _horner(coeffs: tuple[float, ...], u: float) -> float:
    acc = 0.0
    for a in reversed(coeffs):
        acc = acc * u + a
    return acc


class CurveEval:
    """Scalar closed-form evaluation of the indicatrix at one chart value.

    Pure-python kernels (no array overhead): these sit in the innermost loop
    of the norm evaluation and of the geodesic spray.
    """

    __slots__ = ("profile", "R", "c", "rc", "cos_R", "q", "inv_cos", "inv_q",
                 "ca", "cb", "sc")

    def __init__(self, profile: ZollProfile, R: float):
        _check_chart(R)
        self.profile = profile
        self.R = R
        self.c = math.sin(R)
        self.rc = abs(R)
        self.cos_R = math.cos(R)
        self.q = self.cos_R ** 2
        self.inv_cos = 1.0 / self.cos_R
        self.inv_q = 1.0 / self.q
        a = profile.odd_coeffs
        self.ca = a
        self.cb = tuple((2 * k + 1) * a[k] for k in range(len(a)))
        self.sc = _s_poly_coeffs(profile, self.c)

    # r_c and pi - r_c bracket the latitude band.
    def band(self) -> tuple[float, float]:
        return self.rc, math.pi - self.rc

    def _y2(self, r: float) -> float:
        val = math.sin(r - self.rc) * math.sin((math.pi - self.rc) - r)
        return val if val > 0.0 else 0.0

    def point(self, r: float, branch: int) -> tuple[float, float]:
        x = math.cos(r)
        x2 = x * x
        y2 = self._y2(r)
        y = math.sqrt(y2)
        h = x * _horner(self.ca, x2) if self.ca else 0.0
        hp = _horner(self.cb, x2) if self.cb else 0.0
        psi = y2 * y * _horner(self.sc, y2 * self.inv_q) if self.sc else 0.0
        v2 = -((1.0 + h) * x + y2 * hp + y * psi) * self.inv_q
        return branch * y * self.inv_cos, v2

    def point_tangent(self, r: float, branch: int):
        """(v1, v2, dv1/dr, dv2/dr); requires interior r (y > 0)."""
        x = math.cos(r)
        sr = math.sin(r)
        x2 = x * x
        y2 = self._y2(r)
        y = math.sqrt(y2)
        h = x * _horner(self.ca, x2) if self.ca else 0.0
        hp = _horner(self.cb, x2) if self.cb else 0.0
        s_val = _horner(self.sc, y2 * self.inv_q) if self.sc else 0.0
        psi = y2 * y * s_val
        n_of_x = 1.0 + h - x * hp
        v1 = branch * y * self.inv_cos
        v2 = -((1.0 + h) * x + y2 * hp + y * psi) * self.inv_q
        v1d = branch * sr * x / y * self.inv_cos
        v2d = (sr * n_of_x - sr * x * psi / y) * self.inv_q
        return v1, v2, v1d, v2d

    def endpoint_values(self) -> tuple[float, float]:
        """v2 at the glue points r_c (bottom, < 0) and pi - r_c (top, > 0)."""
        return self.point(self.rc, +1)[1], self.point(math.pi - self.rc, +1)[1]

    def newton_ray(self, v1: float, v2: float, branch: int, r0: float,
                   iters: int = 24):
        """Newton solve of cross(v, P(r)) = 0 from a warm start; None on failure."""
        lo, hi = self.band()
        margin = 1e-12 * math.pi
        lo += margin
        hi -= margin
        r = min(max(r0, lo), hi)
        scale = math.hypot(v1, v2)
        for _ in range(iters):
            p1, p2, t1, t2 = self.point_tangent(r, branch)
            g = v1 * p2 - v2 * p1
            gp = v1 * t2 - v2 * t1
            if gp == 0.0:
                return None
            step = g / gp
            r_new = min(max(r - step, lo), hi)
            if abs(r_new - r) <= 1e-14 * (1.0 + abs(r)):
                r = r_new
                break
            r = r_new
        p1, p2 = self.point(r, branch)
        dot = v1 * p1 + v2 * p2
        rad = math.hypot(p1, p2)
        if dot <= 0.0 or abs(v1 * p2 - v2 * p1) > 1e-11 * scale * rad:
            return None
        return dot / (rad * rad), r

    def solve_ray(self, v1: float, v2: float, seed_r: float | None = None
                  ) -> tuple[float, float, int]:
        """Crossing of the ray through (v1, v2) with the curve.

        Returns (scale, r_star, branch) with (v1, v2) = scale * point.  The
        near-vertical rays resolve to the glue points directly (the curve is
        symmetric about the v2 axis, so they are exact extrema of the ray
        angle).  A warm start, when supplied, skips the bracket scan.
        """
        norm = math.hypot(v1, v2)
        if norm == 0.0:
            raise DomainError("the zero vector has no ray")
        bottom, top = self.endpoint_values()
        if abs(v1) <= 1e-9 * norm:
            if v2 < 0:
                return v2 / bottom, self.rc, +1
            return v2 / top, math.pi - self.rc, +1
        branch = +1 if v1 > 0 else -1
        if seed_r is not None:
            hit = self.newton_ray(v1, v2, branch, seed_r)
            if hit is not None:
                return hit[0], hit[1], branch
        return self._bracket_solve(v1, v2, branch)

    def _bracket_solve(self, v1, v2, branch):
        # Cold solves delegate to the sampled cache at the same chart value.
        return curve_cache(self.profile, self.R)._bracket_solve(v1, v2, branch)


class IndicatrixCurveCache(CurveEval):
    """CurveEval plus a phase-uniform sampling used for cold bracket scans."""

    __slots__ = ("r_grid", "v1_grid", "v2_grid")

    GRID = 96

    def __init__(self, profile: ZollProfile, R: float):
        super().__init__(profile, R)
        cos_rc = math.cos(self.rc)
        u = np.linspace(0.0, math.pi, self.GRID)
        r = np.arccos(np.clip(cos_rc * np.cos(u), -1.0, 1.0))
        r[0], r[-1] = self.rc, math.pi - self.rc
        self.r_grid = r
        self.v2_grid = _curve_v2_array(profile, R, r)
        self.v1_grid = np.sqrt(band_radicand(self.c, r)) / self.cos_R

    def _bracket_solve(self, v1, v2, branch):
        from .errors import NoBracketError  # local import to avoid cycles

        p1 = branch * self.v1_grid
        cross = v1 * self.v2_grid - v2 * p1
        dots = v1 * p1 + v2 * self.v2_grid
        sign_change = np.nonzero((np.sign(cross[:-1]) * np.sign(cross[1:]) <= 0)
                                 & ((dots[:-1] > 0) | (dots[1:] > 0)))[0]
        best = None
        for i in sign_change:
            r_star = self._refine(v1, v2, branch,
                                  float(self.r_grid[i]), float(self.r_grid[i + 1]))
            p = self.point(r_star, branch)
            dot = v1 * p[0] + v2 * p[1]
            if dot <= 0:
                continue
            rad2 = p[0] * p[0] + p[1] * p[1]
            if best is None or rad2 > best[0]:
                best = (rad2, r_star, p)
        if best is None:
            raise NoBracketError(
                f"ray through ({v1}, {v2}) misses the indicatrix at R={self.R}")
        rad2, r_star, p = best
        return (v1 * p[0] + v2 * p[1]) / rad2, r_star, branch

    def _refine(self, v1, v2, branch, lo, hi, iters=80):
        """Safeguarded Newton on cross(v, P(r)) = 0 inside the bracket [lo, hi]."""
        def g(r):
            p = self.point(r, branch)
            return v1 * p[1] - v2 * p[0]

        glo = g(lo)
        r = 0.5 * (lo + hi)
        margin = 1e-12 * math.pi
        for _ in range(iters):
            gr = g(r)
            if gr == 0.0:
                return r
            if (glo < 0) == (gr < 0):
                lo, glo = r, gr
            else:
                hi = r
            step_ok = False
            r_int = min(max(r, self.rc + margin), math.pi - self.rc - margin)
            _, _, t1, t2 = self.point_tangent(r_int, branch)
            slope = v1 * t2 - v2 * t1
            if slope != 0.0:
                r_new = r - gr / slope
                if lo < r_new < hi:
                    if abs(r_new - r) < 1e-15 * (1.0 + abs(r)):
                        return r_new
                    r = r_new
                    step_ok = True
            if not step_ok:
                r = 0.5 * (lo + hi)
            if hi - lo < 4e-16 * (1.0 + abs(r)):
                return r
        return r


@lru_cache(maxsize=512)
def curve_cache(profile: ZollProfile, R: float) -> IndicatrixCurveCache:
    return IndicatrixCurveCache(profile, R)


@lru_cache(maxsize=4096)
def curve_eval(profile: ZollProfile, R: float) -> CurveEval:
    """Lightweight (grid-free) curve evaluator; solve_ray needs a warm start."""
    return CurveEval(profile, R)
