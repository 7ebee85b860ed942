"""Odd polynomial profiles and the surface metric they generate.

A profile stores the coefficients a_1, a_3, ..., a_{2n+1} of an odd
polynomial h(x) = sum_k a_{2k+1} x^{2k+1} on [-1, 1].  The rotationally
symmetric metric it defines on the 2-sphere is

    g = (1 + h(cos r))^2 dr^2 + sin^2(r) dtheta^2,

with r in [0, pi] the polar latitude.  Admissible profiles must vanish at
x = +-1 (equivalently sum(a) = 0) and satisfy |h| < 1 so that 1 + h > 0
everywhere; both are enforced at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DegenerateMetricError, DomainError, ProfileError

#: Absolute tolerance on sum(odd_coeffs) = 0, i.e. on h(+-1) = 0.
COEFF_SUM_TOL = 1e-12

#: Slack allowed on |x| <= 1 when evaluating h and its derivatives.
X_DOMAIN_TOL = 1e-12

#: Grid size for the |h| < 1 admissibility scan.  At 10^4 points the grid
#: spacing is 2e-4, small enough that a degree <= 21 polynomial with the
#: derivative bound implied by |coeffs| cannot hide an excursion between
#: samples.
_SCAN_POINTS = 10_001


@dataclass(frozen=True)
class SurfacePoint:
    """A point (r, theta) of the surface; the metric degenerates at r in {0, pi}."""

    r: float
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.r <= math.pi:
            raise DomainError(f"latitude r={self.r} outside [0, pi]")


@dataclass(frozen=True)
class ZollProfile:
    """Coefficients (a_1, a_3, ...) of the odd deformation polynomial h."""

    odd_coeffs: tuple[float, ...]

    def __init__(self, odd_coeffs: Iterable[float] = ()):
        object.__setattr__(self, "odd_coeffs", tuple(float(a) for a in odd_coeffs))
        self._validate()

    # -- construction -----------------------------------------------------

    @classmethod
    def from_string(cls, text: str) -> "ZollProfile":
        """Parse the CLI literal: comma-separated odd coefficients, ascending.

        ``"0.25,-0.25"`` means h(x) = 0.25 x - 0.25 x^3.  An empty string or
        ``"0"`` gives the round sphere h = 0.
        """
        text = text.strip()
        if not text:
            return cls(())
        try:
            coeffs = [float(tok) for tok in text.split(",")]
        except ValueError as exc:
            raise ProfileError(f"cannot parse profile literal {text!r}") from exc
        return cls(coeffs)

    def _validate(self):
        coeffs = self.odd_coeffs
        total = math.fsum(coeffs)
        if abs(total) > COEFF_SUM_TOL:
            raise ProfileError(
                f"sum of odd coefficients must vanish (h(1)=0); got {total:.3e}"
            )
        if not coeffs:
            return
        # |h| < 1 scan: dense grid plus bisection refinement on sign changes
        # of h', which brackets every interior extremum of the polynomial.
        xs = np.linspace(-1.0, 1.0, _SCAN_POINTS)
        habs = np.abs(self.h(xs))
        worst = float(habs.max())
        dh = self.h_prime(xs)
        sign_flip = np.nonzero(np.sign(dh[:-1]) * np.sign(dh[1:]) < 0)[0]
        for i in sign_flip:
            lo, hi = float(xs[i]), float(xs[i + 1])
            x_ext = _bisect_root(self.h_prime, lo, hi)
            worst = max(worst, abs(float(self.h(x_ext))))
        if worst >= 1.0:
            raise ProfileError(f"|h| must stay below 1 on [-1,1]; max |h| = {worst}")

    # -- basic queries -----------------------------------------------------

    @property
    def degree(self) -> int:
        """Degree of h as a polynomial (0 for the round sphere)."""
        nz = [k for k, a in enumerate(self.odd_coeffs) if a != 0.0]
        return 2 * nz[-1] + 1 if nz else 0

    @property
    def is_round(self) -> bool:
        return all(a == 0.0 for a in self.odd_coeffs)

    def hpp_coeffs(self) -> tuple[float, ...]:
        """Coefficients b_1, b_3, ... with h''(x) = sum_k b_{2k+1} x^{2k+1}.

        b_{2k+1} = 2(k+1)(2k+3) a_{2k+3}.
        """
        a = self.odd_coeffs
        return tuple(2.0 * (k + 1) * (2 * k + 3) * a[k + 1] for k in range(len(a) - 1))

    # -- evaluation (vectorized; Horner in x^2) -----------------------------

    def _check_domain(self, x):
        if np.max(np.abs(x)) > 1.0 + X_DOMAIN_TOL:
            raise DomainError(f"profile argument outside [-1, 1]: {x!r}")

    def h(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        out = x * np.polynomial.polynomial.polyval(x * x, self._c(0))
        return out if out.ndim else float(out)

    def h_prime(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        out = np.polynomial.polynomial.polyval(x * x, self._c(1))
        return out if out.ndim else float(out)

    def h_second(self, x):
        self._check_domain(x)
        x = np.asarray(x, dtype=float)
        out = x * np.polynomial.polynomial.polyval(x * x, self._c(2))
        return out if out.ndim else float(out)

    def _c(self, which: int) -> np.ndarray:
        a = self.odd_coeffs
        if not a:
            return np.zeros(1)
        if which == 0:
            return np.asarray(a)
        if which == 1:
            return np.asarray([(2 * k + 1) * a[k] for k in range(len(a))])
        if len(a) == 1:
            return np.zeros(1)
        return np.asarray([2 * (k + 1) * (2 * k + 3) * a[k + 1] for k in range(len(a) - 1)])


def _bisect_root(f, lo: float, hi: float, iters: int = 80) -> float:
    flo = float(f(lo))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fmid = float(f(mid))
        if fmid == 0.0:
            return mid
        if (flo < 0) == (fmid < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- module-level operations ------------------------------------------------

def eval_h(profile: ZollProfile, x):
    """h(x) = sum_k a_{2k+1} x^{2k+1}, by Horner recurrence in x^2."""
    return profile.h(x)


def eval_h_derivs(profile: ZollProfile, x):
    """(h'(x), h''(x)) by term-wise analytic differentiation."""
    return profile.h_prime(x), profile.h_second(x)


def curvature_x(profile: ZollProfile, x):
    """Gauss curvature as a function of x = cos r:

        G = (1 + h(x) - x h'(x)) / (1 + h(x))^3.

    Finite on [-1, 1] because admissible profiles keep |h| < 1.
    """
    one_h = 1.0 + profile.h(x)
    return (one_h - np.asarray(x) * profile.h_prime(x)) / one_h**3


def curvature_x_prime(profile: ZollProfile, x):
    """dG/dx, analytic."""
    x = np.asarray(x, dtype=float)
    h = profile.h(x)
    hp = profile.h_prime(x)
    hpp = profile.h_second(x)
    one_h = 1.0 + h
    num = -x * hpp * one_h - 3.0 * hp * (one_h - x * hp)
    out = num / one_h**4
    return out if out.ndim else float(out)


def gauss_curvature(profile: ZollProfile, r):
    """Gauss curvature G(r) of the surface at latitude r in [0, pi]."""
    r = np.asarray(r, dtype=float)
    if np.min(r) < -X_DOMAIN_TOL or np.max(r) > math.pi + X_DOMAIN_TOL:
        raise DomainError(f"latitude outside [0, pi]: {r!r}")
    out = curvature_x(profile, np.cos(r))
    return out if np.ndim(out) else float(out)


def curvature_critical_points(profile: ZollProfile) -> list[tuple[float, float]]:
    """Interior critical points of G on (-1, 1) as (x, G(x)) pairs.

    Located by sampling dG/dx on the admissibility grid and bisecting each
    sign change.
    """
    xs = np.linspace(-1.0, 1.0, _SCAN_POINTS)
    dg = np.asarray(curvature_x_prime(profile, xs))
    flips = np.nonzero(np.sign(dg[:-1]) * np.sign(dg[1:]) < 0)[0]
    points = []
    for i in flips:
        x_star = _bisect_root(lambda x: curvature_x_prime(profile, x),
                              float(xs[i]), float(xs[i + 1]))
        points.append((x_star, float(curvature_x(profile, x_star))))
    return points


def check_positive_curvature(profile: ZollProfile) -> tuple[bool, tuple[float, float]]:
    """True iff min G > 0 over [-1, 1]; also returns the located minimum.

    The minimum is searched among the endpoints, the bisection-refined
    critical points, and the dense sampling grid (safety net).
    """
    candidates = [(-1.0, float(curvature_x(profile, -1.0))),
                  (1.0, float(curvature_x(profile, 1.0)))]
    candidates += curvature_critical_points(profile)
    xs = np.linspace(-1.0, 1.0, _SCAN_POINTS)
    gs = np.asarray(curvature_x(profile, xs))
    i = int(np.argmin(gs))
    candidates.append((float(xs[i]), float(gs[i])))
    x_min, g_min = min(candidates, key=lambda p: p[1])
    return g_min > 0.0, (x_min, g_min)


def metric_coeffs(profile: ZollProfile, r: float) -> tuple[float, float]:
    """(g_rr, g_thetatheta) = ((1 + h(cos r))^2, sin^2 r) at interior latitude."""
    if not 0.0 < r < math.pi:
        raise DegenerateMetricError(f"metric degenerates at r={r}")
    one_h = 1.0 + profile.h(math.cos(r))
    return one_h * one_h, math.sin(r) ** 2


def curvature_fd_check(profile: ZollProfile, r: float, step: float = 1e-4) -> float:
    """Finite-difference Gauss curvature, used as an independent test oracle.

    For the warped metric E dr^2 + Gt dtheta^2 the curvature is

        K = -(1 / sqrt(E Gt)) d/dr ( (d sqrt(Gt)/dr) / sqrt(E) ),

    evaluated with nested central differences of metric_coeffs only.
    """
    if not 1e-8 <= step <= 0.05:
        raise DomainError(f"finite-difference step {step} out of sane range")
    if not 2 * step < r < math.pi - 2 * step:
        raise DomainError(f"latitude {r} too close to a pole for step {step}")

    def sqrt_gt(rr: float) -> float:
        return math.sqrt(metric_coeffs(profile, rr)[1])

    def slope(rr: float) -> float:
        e = math.sqrt(metric_coeffs(profile, rr)[0])
        return (sqrt_gt(rr + step) - sqrt_gt(rr - step)) / (2.0 * step * e)

    e0, gt0 = metric_coeffs(profile, r)
    return -(slope(r + step) - slope(r - step)) / (2.0 * step * math.sqrt(e0 * gt0))


# Profiles used throughout the test-suite and the worked examples.
def example1(eps: float) -> ZollProfile:
    """h(x) = eps (1 - x^2) x = eps x - eps x^3."""
    return ZollProfile((eps, -eps))


def example2() -> ZollProfile:
    """h(x) = x (1 - x^2)^2 = x - 2 x^3 + x^5."""
    return ZollProfile((1.0, -2.0, 1.0))


def round_sphere() -> ZollProfile:
    return ZollProfile(())
