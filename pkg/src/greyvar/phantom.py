"""Test phantoms (balls, half-spaces) and their blurred grey images.

The grey image of a set X under a PSF rho at scale a is the convolution
theta_a = 1_X * rho_a with rho_a(x) = a^{-d} rho(x/a).  For a ball the
convolution reduces to a 1-D radial integral: the sphere of radius s
around an evaluation point meets the ball in a spherical cap whose
normalized area is

    capfrac(r, s, R),  cos(polar angle) = (r^2 + s^2 - R^2) / (2 r s),

so   theta_a(B(R))(x) = int_0^inf rho(w) * surf(S^{d-1}) w^{d-1}
                          * capfrac(|x|, a*w, R) dw.

In d=2 the cap fraction has square-root behaviour where the cap appears
or disappears; the quadrature substitutes w = w_edge + zeta^2 there, which
removes the singularity and grades nodes toward the edge.  The evaluation
is vectorized over points, so tabulating a radial intensity model is cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from . import psf as psf_mod
from ._quad import panel_nodes
from .errors import DomainError
from .psf import Psf, eval_rho, halfspace_profile, sphere_area


@dataclass(frozen=True)
class Phantom:
    dim: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise DomainError("only dimensions 2 and 3 are supported")


@dataclass(frozen=True)
class Ball(Phantom):
    """Centered ball of radius R."""

    radius: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.radius <= 0:
            raise DomainError("ball radius must be positive")

    @property
    def surface_area(self) -> float:
        return sphere_area(self.dim) * self.radius ** (self.dim - 1)

    @property
    def volume(self) -> float:
        return psf_mod.ball_volume(self.dim, self.radius)


@dataclass(frozen=True)
class TransformedBall(Phantom):
    """Ball of radius `radius`, scaled by `scale`, centered at `center`."""

    radius: float = 1.0
    scale: float = 1.0
    center: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        if self.radius <= 0 or self.scale <= 0:
            raise DomainError("radius and scale must be positive")
        c = tuple(float(v) for v in self.center) or (0.0,) * self.dim
        if len(c) != self.dim:
            raise DomainError("center has wrong dimension")
        object.__setattr__(self, "center", c)

    @property
    def effective_radius(self) -> float:
        return self.radius * self.scale

    @property
    def surface_area(self) -> float:
        return sphere_area(self.dim) * self.effective_radius ** (self.dim - 1)

    @property
    def volume(self) -> float:
        return psf_mod.ball_volume(self.dim, self.effective_radius)


@dataclass(frozen=True)
class HalfSpace(Phantom):
    """Half-space {y : <y, normal> <= offset}."""

    normal: tuple = ()
    offset: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        n = np.asarray(self.normal if self.normal else
                       (1.0,) + (0.0,) * (self.dim - 1), dtype=float)
        if n.shape != (self.dim,) or not np.linalg.norm(n) > 0:
            raise DomainError("normal must be a nonzero d-vector")
        n = n / np.linalg.norm(n)
        object.__setattr__(self, "normal", tuple(n))


def capfrac(r, s, R: float, d: int):
    """Fraction of the sphere of radius s centered at distance r from the
    origin that lies inside the centered ball of radius R (vectorized)."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = (r * r + s * s - R * R) / (2.0 * r * s)
    mu = np.where(np.isfinite(mu), mu, np.where(s <= R, -1.0, 1.0))
    mu = np.clip(mu, -1.0, 1.0)
    if d == 2:
        return np.arccos(mu) / math.pi
    return 0.5 * (1.0 - mu)


# quadrature layout for the radial cap integral (see _ball_intensity_radii)
_N_CORE = 24        # panels on [0, w1] (cap fraction constant there)
_N_EDGE = 16        # zeta-panels per transition half


def _ball_intensity_radii(psf: Psf, a: float, R: float, radii) -> np.ndarray:
    """Grey values of a centered ball at the given radii (vectorized)."""
    d = psf.dim
    W = psf_mod._integration_radius(psf)
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    out = np.zeros_like(r)

    tiny = 1e-9 * (R + a)
    central = r < tiny
    if np.any(central):
        out[central] = psf_mod.radial_mass(psf, min(R / a, W))

    rest = ~central
    if not np.any(rest):
        return out
    rr = r[rest]
    w1 = np.abs(R - rr) / a
    w2 = (R + rr) / a

    vals = np.zeros_like(rr)

    # core segment [0, min(w1, W)], cap fraction is 1 inside / 0 outside
    inside = rr < R
    core_hi = np.minimum(w1, W)
    if np.any(inside):
        v, w = panel_nodes(0.0, 1.0, _N_CORE, order=15)
        hi = core_hi[inside]
        nodes = hi[:, None] * v[None, :]
        f = eval_rho(psf, nodes) * nodes ** (d - 1)
        vals[inside] += sphere_area(d) * hi * (f @ w)

    # transition segment [w1, min(w2, W)], graded toward the cap edges
    lo = w1
    hi = np.minimum(w2, W)
    open_seg = hi > lo
    if np.any(open_seg):
        li, hi_,  = lo[open_seg], hi[open_seg]
        ri = rr[open_seg]
        mid = 0.5 * (li + hi_)
        contrib = np.zeros_like(li)
        z, zw = panel_nodes(0.0, 1.0, _N_EDGE, order=15)
        for seg_lo, seg_hi, anchor_lo in ((li, mid, True), (mid, hi_, False)):
            span = seg_hi - seg_lo
            # w = anchor +/- (sqrt(span) * z)^2 grades nodes toward the
            # anchor edge and removes the d=2 arccos sqrt singularity
            zz = np.sqrt(span)[:, None] * z[None, :]
            if anchor_lo:
                nodes = seg_lo[:, None] + zz * zz
            else:
                nodes = seg_hi[:, None] - zz * zz
            jac = 2.0 * np.sqrt(span)[:, None] * zw[None, :] * zz
            f = (eval_rho(psf, nodes) * nodes ** (d - 1)
                 * capfrac(ri[:, None], a * nodes, R, d))
            contrib += (f * jac).sum(axis=1)
        vals[open_seg] += sphere_area(d) * contrib

    out[rest] = vals
    return np.clip(out, 0.0, 1.0)


class IntensityModel:
    """Fast vectorized grey-value evaluator for a (phantom, psf, a) triple.

    For balls, the radial intensity is tabulated over the transition zone
    on 2049 nodes and interpolated with a cubic spline (abs error ~1e-11);
    outside the zone the value is exactly 1 or 0 up to the PSF tail.
    Half-spaces evaluate through the edge profile directly.
    """

    def __init__(self, phantom: Phantom, psf: Psf, a: float, n_grid: int = 2049):
        if a <= 0:
            raise DomainError("blur scale a must be positive")
        if psf.dim != phantom.dim:
            raise DomainError("psf and phantom dimensions differ")
        self.phantom = phantom
        self.psf = psf
        self.a = a
        self.dim = phantom.dim

        if isinstance(phantom, HalfSpace):
            self._profile = halfspace_profile(psf)
            self._kind = "halfspace"
            self._normal = np.asarray(phantom.normal)
            self._offset = phantom.offset
            self.tube_halfwidth = a * self._profile.T
            return

        if isinstance(phantom, TransformedBall):
            R = phantom.effective_radius
            self._center = np.asarray(phantom.center)
        elif isinstance(phantom, Ball):
            R = phantom.radius
            self._center = np.zeros(phantom.dim)
        else:
            raise DomainError(f"unsupported phantom {phantom!r}")

        self._kind = "ball"
        self.R = R
        W = psf_mod._integration_radius(psf)
        r_lo = max(R - a * W, 0.0)
        r_hi = R + a * W
        grid = np.linspace(r_lo, r_hi, n_grid)
        vals = _ball_intensity_radii(psf, a, R, grid)
        self._r_lo, self._r_hi = r_lo, r_hi
        self._spline = CubicSpline(grid, vals)
        self.tube_halfwidth = a * W

    @property
    def table_range(self) -> tuple[float, float]:
        """Radius interval of the tabulated transition zone (balls only)."""
        if self._kind != "ball":
            raise DomainError("table_range is only defined for ball phantoms")
        return (self._r_lo, self._r_hi)

    def radial(self, r):
        """Grey value at radius r from the ball center (balls only)."""
        if self._kind != "ball":
            raise DomainError("radial() is only defined for ball phantoms")
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        hi_mask = r >= self._r_hi
        out[hi_mask] = 0.0
        if self._r_lo > 0.0:
            lo_mask = r <= self._r_lo
            out[lo_mask] = 1.0
            mid = ~lo_mask & ~hi_mask
        else:
            mid = ~hi_mask
        if np.any(mid):
            out[mid] = np.clip(self._spline(r[mid]), 0.0, 1.0)
        return out

    def __call__(self, points):
        """Grey values at an (n, d) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self._kind == "halfspace":
            t = (pts @ self._normal - self._offset) / self.a
            return self._profile.theta(t)
        radii = np.linalg.norm(pts - self._center, axis=1)
        return self.radial(radii)

    def contains(self, points):
        """Binary membership of the unblurred phantom (vectorized)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self._kind == "halfspace":
            return pts @ self._normal <= self._offset
        return np.linalg.norm(pts - self._center, axis=1) <= self.R


@lru_cache(maxsize=64)
def intensity_model(phantom: Phantom, psf: Psf, a: float) -> IntensityModel:
    return IntensityModel(phantom, psf, a)


def intensity(phantom: Phantom, psf: Psf, a: float, x) -> float:
    """Grey value theta_a(X)(x) at a single point (exact 1-D quadrature).

    Absolute accuracy ~1e-10; balls go through the radial cap integral,
    half-spaces through the edge profile.
    """
    if a <= 0:
        raise DomainError("blur scale a must be positive")
    x = np.asarray(x, dtype=float)
    if x.shape != (phantom.dim,):
        raise DomainError("point has wrong dimension")
    if isinstance(phantom, HalfSpace):
        prof = halfspace_profile(psf)
        return float(prof.theta((float(x @ np.asarray(phantom.normal))
                                 - phantom.offset) / a))
    if isinstance(phantom, TransformedBall):
        R = phantom.effective_radius
        r = float(np.linalg.norm(x - np.asarray(phantom.center)))
    elif isinstance(phantom, Ball):
        R = phantom.radius
        r = float(np.linalg.norm(x))
    else:
        raise DomainError(f"unsupported phantom {phantom!r}")
    return float(_ball_intensity_radii(psf, a, R, [r])[0])


def halfspace_gap(phantom: Phantom, psf: Psf, a: float, x) -> float:
    """|theta_a(X)(x) - theta_a(H)(x)| for the supporting half-space H at
    the boundary point nearest to x.  Zero for half-space phantoms."""
    x = np.asarray(x, dtype=float)
    if isinstance(phantom, HalfSpace):
        return 0.0
    if isinstance(phantom, TransformedBall):
        R, c = phantom.effective_radius, np.asarray(phantom.center)
    else:
        R, c = phantom.radius, np.zeros(phantom.dim)
    r = float(np.linalg.norm(x - c))
    prof = halfspace_profile(psf)
    flat = prof.theta((r - R) / a)
    return abs(intensity(phantom, psf, a, x) - flat)


@dataclass(frozen=True)
class TransitionOffsets:
    """Signed normal offsets where the grey value crosses omega / beta."""

    t_minus: float
    t_plus: float


def transition_offsets(phantom: Phantom, psf: Psf, a: float,
                       beta: float, omega: float) -> TransitionOffsets:
    """Offsets t with theta_a(X) = beta (t_plus, outside) and = omega
    (t_minus, inside) along the outward normal at a boundary point.

    For half-spaces these are exactly a*phi(beta), a*phi(omega).
    """
    if not (0.0 < beta < omega < 1.0):
        raise DomainError("need 0 < beta < omega < 1")
    prof = halfspace_profile(psf)
    if isinstance(phantom, HalfSpace):
        return TransitionOffsets(t_minus=a * prof.phi(omega),
                                 t_plus=a * prof.phi(beta))
    if isinstance(phantom, TransformedBall):
        R = phantom.effective_radius
    elif isinstance(phantom, Ball):
        R = phantom.radius
    else:
        raise DomainError(f"unsupported phantom {phantom!r}")

    W = psf_mod._integration_radius(psf)

    def solve(level: float) -> float:
        lo, hi = -a * W, a * W  # theta decreasing in the offset
        flo = _ball_intensity_radii(psf, a, R, [R + lo])[0]
        fhi = _ball_intensity_radii(psf, a, R, [R + hi])[0]
        if not (fhi < level < flo):
            raise DomainError(
                f"level {level:g} not bracketed in the transition zone")
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if _ball_intensity_radii(psf, a, R, [R + mid])[0] > level:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return TransitionOffsets(t_minus=solve(omega), t_plus=solve(beta))
