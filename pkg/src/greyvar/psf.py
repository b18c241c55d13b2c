"""Radial point-spread functions and their half-space edge profiles.

A PSF is a nonnegative radial probability density rho on R^d; blurring at
scale a uses rho_a(x) = a^{-d} rho(x/a).  The half-space edge profile

    theta_H(t) = integral of rho over { x : <x, u> >= t }
               = int_t^inf m(s) ds,

with m the 1-D marginal of rho along any unit direction u, describes the
grey value at signed distance a*t from a flat interface.  It decreases
from 1 to 0, and its inverse phi places grey thresholds at signed
distances from the interface.

Three kernels are provided:

* ``gaussian``       - standard normal density (unbounded support, smooth);
* ``bump``           - C^2 compactly supported polynomial bump
                       rho(x) = c_d (1 - |x|^2/D^2)^3 on |x| <= D;
* ``ball_indicator`` - uniform density on a ball (discontinuous; only
                       suitable for volume-estimator baselines).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.special import gammaincc

from ._quad import adaptive_quad, panel_nodes
from .errors import DomainError, InvertibilityError

_KINDS = ("gaussian", "bump", "ball_indicator")

#: number of tabulation nodes for edge profiles
PROFILE_GRID = 4096
#: grid half-width for the Gaussian profile (tail beyond is < 1e-15)
GAUSSIAN_T = 8.0


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1}."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_volume(d: int, r: float = 1.0) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r ** d


@dataclass(frozen=True)
class Psf:
    """Radial PSF descriptor.

    Parameters
    ----------
    kind : {"gaussian", "bump", "ball_indicator"}
    dim : ambient dimension d (2 or 3)
    support_radius : effective support radius D.  Exact for the compact
        kinds; for the Gaussian it is a working cutoff (mass outside the
        default 8.0 is ~6e-15).
    """

    kind: str
    dim: int
    support_radius: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown psf kind '{self.kind}'")
        if self.dim not in (2, 3):
            raise DomainError("only dimensions 2 and 3 are supported")
        if self.kind == "gaussian" and self.support_radius == 0.0:
            object.__setattr__(self, "support_radius", GAUSSIAN_T)
        if self.support_radius <= 0.0:
            raise DomainError("support_radius must be positive")

    @property
    def compact(self) -> bool:
        return self.kind in ("bump", "ball_indicator")


def gaussian(dim: int) -> Psf:
    return Psf("gaussian", dim)


def compact_bump(dim: int, support_radius: float = 1.0) -> Psf:
    return Psf("bump", dim, support_radius)


def ball_indicator(dim: int, support_radius: float = 1.0) -> Psf:
    return Psf("ball_indicator", dim, support_radius)


def _bump_norm(d: int, D: float) -> float:
    # int rho = c * omega_d * D^d * B(d/2, 4)/2  =>  c = 1/(...)
    beta = math.gamma(d / 2.0) * math.gamma(4.0) / math.gamma(d / 2.0 + 4.0)
    return 1.0 / (sphere_area(d) * D ** d * 0.5 * beta)


def eval_rho(psf: Psf, r):
    """Radial density value rho(|x|) at radius r >= 0 (vectorized)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    d, D = psf.dim, psf.support_radius
    if psf.kind == "gaussian":
        return (2.0 * math.pi) ** (-d / 2.0) * np.exp(-0.5 * r * r)
    if psf.kind == "bump":
        c = _bump_norm(d, D)
        t = 1.0 - (r / D) ** 2
        return c * np.where(t > 0.0, t, 0.0) ** 3
    # ball_indicator
    return np.where(r <= D, 1.0 / ball_volume(d, D), 0.0)


def radial_mass(psf: Psf, r: float) -> float:
    """Mass of rho inside the centered ball of radius r (by quadrature)."""
    if r <= 0:
        return 0.0
    d = psf.dim
    hi = min(r, _integration_radius(psf))
    return sphere_area(d) * adaptive_quad(
        lambda u: eval_rho(psf, u) * u ** (d - 1), 0.0, hi, abs_tol=1e-12)


def effective_radius(psf: Psf, eps: float) -> float:
    """Smallest radius whose complement carries mass <= eps."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    if psf.compact:
        return psf.support_radius
    # gaussian tail: P(|Z| > r) = Q(d/2, r^2/2)
    d = psf.dim
    lo, hi = 0.0, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gammaincc(d / 2.0, 0.5 * mid * mid) > eps:
            lo = mid
        else:
            hi = mid
    return hi


def _integration_radius(psf: Psf) -> float:
    """Radius beyond which rho is (numerically) zero."""
    return psf.support_radius if psf.compact else 20.0


def marginal(psf: Psf, s):
    """1-D marginal m(s) of rho along a fixed direction (vectorized).

    m(s) = surf(S^{d-2}) * int_0^{u_max} rho(sqrt(s^2+u^2)) u^{d-2} du.
    Evaluated on a shared tensor quadrature grid; accuracy is far below
    1e-12 for the smooth kernels.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    d = psf.dim
    surf = 2.0 if d == 2 else 2.0 * math.pi
    R = _integration_radius(psf)
    out = np.zeros_like(s)
    inside = np.abs(s) < R
    if not np.any(inside):
        return out
    si = np.abs(s[inside])
    umax = np.sqrt(R * R - si * si)
    # u = umax * v, v in [0,1].  The bump integrand is a polynomial of
    # degree <= 8 in v (two panels are already exact); the Gaussian decays
    # over v ~ sqrt(2)/umax and needs the finer subdivision.
    v, w = panel_nodes(0.0, 1.0, 2 if psf.compact else 30, order=15)
    rr = np.sqrt(si[:, None] ** 2 + (umax[:, None] * v[None, :]) ** 2)
    integrand = eval_rho(psf, rr) * (umax[:, None] * v[None, :]) ** (d - 2)
    out[inside] = surf * umax * (integrand @ w)
    return out


@dataclass(frozen=True)
class ConditionReport:
    """Which regularity regime a PSF falls under.

    c2_compact      : C^2 with compact support
    decay_ok        : radial, nonincreasing, with all polynomial moments
    profile_strict  : marginal strictly positive inside its support,
                      i.e. the edge profile has (theta_H)' < 0 there
    surface_ok      : PSF usable for surface estimators
    """

    c2_compact: bool
    decay_ok: bool
    profile_strict: bool
    surface_ok: bool
    notes: str = ""


def check_conditions(psf: Psf) -> ConditionReport:
    if psf.kind == "gaussian":
        return ConditionReport(
            c2_compact=False, decay_ok=True, profile_strict=True,
            surface_ok=True,
            notes="smooth, rapidly decaying; effective support radius "
                  f"{psf.support_radius:g}")
    if psf.kind == "bump":
        return ConditionReport(
            c2_compact=True, decay_ok=True, profile_strict=True,
            surface_ok=True, notes="C^2 polynomial bump, support radius "
                                   f"{psf.support_radius:g}")
    return ConditionReport(
        c2_compact=False, decay_ok=True, profile_strict=True,
        surface_ok=False,
        notes="discontinuous kernel; volume-estimator baselines only")


class HalfspaceProfile:
    """Tabulated edge profile theta_H with derivative and inverse.

    theta(t) is computed by cumulative panel quadrature of the marginal on
    a uniform grid of PROFILE_GRID nodes over [-T, T] and interpolated with
    a cubic Hermite spline whose slopes are the exact marginal values, so
    the interpolant is monotone and accurate to ~1e-12 between nodes.
    """

    def __init__(self, psf: Psf, n_grid: int = PROFILE_GRID):
        self.psf = psf
        self.T = psf.support_radius if psf.compact else GAUSSIAN_T
        t = np.linspace(-self.T, self.T, n_grid)
        m = marginal(psf, t)

        # panel integrals of m between consecutive nodes (node spacing is
        # ~4e-3, so GL-7 per panel is already at machine accuracy)
        v, w = panel_nodes(0.0, 1.0, 1, order=7)
        lo = t[:-1]
        h = np.diff(t)
        nodes = lo[:, None] + h[:, None] * v[None, :]
        piece = (marginal(psf, nodes.ravel()).reshape(nodes.shape) @ w) * h

        tail = 0.0
        if not psf.compact:
            R = _integration_radius(psf)
            nt, wt = panel_nodes(self.T, R, 40, order=15)
            tail = float(np.dot(marginal(psf, nt), wt))

        cum = np.concatenate(([0.0], np.cumsum(piece[::-1])))[::-1]
        theta = cum + tail

        self.t_grid = t
        self.theta_grid = theta
        self.m_grid = m
        self._theta_spline = CubicHermiteSpline(t, theta, -m)
        self._m_spline = CubicSpline(t, m)
        self.total_mass = float(theta[0] + self._tail_below())

    def _tail_below(self) -> float:
        # mass of m below -T (equals the tail above T by symmetry)
        if self.psf.compact:
            return 0.0
        R = _integration_radius(self.psf)
        nt, wt = panel_nodes(self.T, R, 40, order=15)
        return float(np.dot(marginal(self.psf, nt), wt))

    def theta(self, t):
        """Edge profile value(s); clamps to {1, 0} beyond the grid."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.empty_like(t)
        out[t <= -self.T] = 1.0
        out[t >= self.T] = 0.0
        inner = (t > -self.T) & (t < self.T)
        if np.any(inner):
            out[inner] = np.clip(self._theta_spline(t[inner]), 0.0, 1.0)
        return float(out[0]) if scalar else out

    def dtheta(self, t):
        """Profile derivative -m(t) (vectorized)."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros_like(t)
        inner = (np.abs(t) < self.T)
        if np.any(inner):
            out[inner] = -np.maximum(self._m_spline(t[inner]), 0.0)
        return float(out[0]) if scalar else out

    def phi(self, y: float) -> float:
        """Inverse profile: the t with theta(t) = y, for y in (0, 1).

        Bisection to 1e-12; raises InvertibilityError if the profile is
        flat at the requested level.
        """
        if not (0.0 < y < 1.0):
            raise DomainError(f"phi is defined on (0,1); got {y!r}")
        lo, hi = -self.T, self.T  # theta(lo) = 1 > y > 0 = theta(hi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.theta(mid) > y:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13:
                break
        t = 0.5 * (lo + hi)
        if abs(self.theta(t) - y) > 1e-9:
            raise InvertibilityError(
                f"profile not invertible at level {y:g} (flat region?)")
        return t


@lru_cache(maxsize=16)
def halfspace_profile(psf: Psf, n_grid: int = PROFILE_GRID) -> HalfspaceProfile:
    """Cached constructor for the edge profile of a PSF."""
    return HalfspaceProfile(psf, n_grid)
