"""Spatial-domain variance oracle, shared by the variance and acceptance
suites.

Everything here is built on scipy primitives only: the blurred-ball
intensity comes from the noncentral chi-square cdf, the grey layer is a
spline table of the weighted intensity, and the variance of the shifted
estimator is an autocorrelation lattice sum.  No Fourier analysis, no
use of the package's dual-shell machinery, so agreement with
variance_exact_ball checks the whole Poisson-duality pathway.

Accuracy note: the variance is a difference E[T^2] - E[T]^2 that loses
about three digits to cancellation at a = b = 0.05, so the
autocorrelation must be good to ~1e-9.  That is why the angular windows
below are split at every kink circle of the layer (the weight's knots
are only C^3 there) and why the table is a cubic, not linear, spline.
32-node panels are machine-converged under node doubling.
"""

import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.stats import ncx2, norm


def theta_ball(r, R, a):
    """Blurred ball intensity from the noncentral chi-square cdf."""
    return ncx2.cdf((R / a) ** 2, df=2, nc=(np.asarray(r) / a) ** 2)


def crossing(level, R, a):
    return brentq(lambda r: float(theta_ball(r, R, a)) - level,
                  R - 8 * a, R + 8 * a, xtol=1e-14)


class GreyLayer:
    """Spline table of g(r) = f(theta(r)) with its support and kink
    radii, accurate to ~1e-13 on the plateau weight."""

    def __init__(self, f, R, a):
        self.kinks = sorted(crossing(k, R, a) for k in f.knots)
        self.r_in, self.r_out = self.kinks[0], self.kinks[-1]
        grid = np.linspace(self.r_in, self.r_out, 20001)
        self._spl = CubicSpline(grid, f(theta_ball(grid, R, a)))

    def __call__(self, r):
        r = np.asarray(r)
        out = self._spl(np.clip(r, self.r_in, self.r_out))
        return np.where((r <= self.r_in) | (r >= self.r_out), 0.0, out)


_GL_X, _GL_W = leggauss(32)


def composite(breaks):
    xs, ws = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi - lo < 1e-14:
            continue
        h = 0.5 * (hi - lo)
        xs.append(0.5 * (lo + hi) + h * _GL_X)
        ws.append(h * _GL_W)
    return np.concatenate(xs), np.concatenate(ws)


def radial_integral(layer, fn):
    x, w = composite(layer.kinks)
    return float(w @ fn(x))


def autocorrelation(layer, s):
    """C_g(s) = int g(x) g(x + s e1) dx in polar coordinates.

    The angular window where the shifted point stays inside the support
    is found in closed form; it is split again at every kink circle so
    each Gauss panel sees a smooth integrand.
    """
    g, r_in, r_out = layer, layer.r_in, layer.r_out
    if s <= 0.0:
        return 2 * math.pi * radial_integral(layer, lambda r: g(r) ** 2 * r)
    if s >= 2 * r_out:
        return 0.0
    cand = {abs(s - t) for t in layer.kinks} | {s + t for t in layer.kinks}
    breaks = sorted({r_in, r_out}
                    | {c for c in cand if r_in < c < r_out}
                    | {k for k in layer.kinks[1:-1]})
    x, w = composite(breaks)
    c_lo = np.maximum(-1.0, (x * x + s * s - r_out ** 2) / (2 * x * s))
    c_hi = np.minimum(1.0, (x * x + s * s - r_in ** 2) / (2 * x * s))
    live = c_hi > c_lo
    if not np.any(live):
        return 0.0
    x, w, c_lo, c_hi = x[live], w[live], c_lo[live], c_hi[live]
    cks = [np.clip((x * x + s * s - k * k) / (2 * x * s), -1.0, 1.0)
           for k in layer.kinks]
    edges = np.sort(np.stack([c_lo] + cks + [c_hi], axis=1), axis=1)
    edges = np.clip(edges, c_lo[:, None], c_hi[:, None])
    phis = np.arccos(edges[:, ::-1])
    ang = np.zeros(len(x))
    for j in range(phis.shape[1] - 1):
        half = 0.5 * (phis[:, j + 1] - phis[:, j])
        mid = 0.5 * (phis[:, j + 1] + phis[:, j])
        pp = mid[:, None] + half[:, None] * _GL_X[None, :]
        rho = np.sqrt(x[:, None] ** 2 + s * s
                      - 2 * s * x[:, None] * np.cos(pp))
        ang += 2.0 * half * (g(rho) @ _GL_W)
    return float(w @ (g(x) * x * ang))


def alpha_quad(f):
    val, err = quad(lambda t: float(f(norm.sf(t))), -5.0, 5.0,
                    points=[norm.ppf(k) for k in f.knots])
    assert err < 1e-9
    return val


def spatial_variance(f, R, a, b):
    """Variance of the surface estimator over a uniform lattice shift of
    b Z^2, with no Fourier analysis:

        Var = (a alpha)^{-2} (b^2 sum_{w in Z^2} C_g(b|w|) - (int g)^2).
    """
    layer = GreyLayer(f, R, a)
    int_g = 2 * math.pi * radial_integral(layer, lambda r: layer(r) * r)

    n_max = int(math.ceil((2 * layer.r_out / b) ** 2)) + 1
    reach = int(math.isqrt(n_max)) + 1
    span = np.arange(-reach, reach + 1)
    kx, ky = np.meshgrid(span, span, indexing="ij")
    nsq = (kx * kx + ky * ky).ravel()
    counts = np.bincount(nsq[(nsq > 0) & (nsq <= n_max)],
                         minlength=n_max + 1)
    total = autocorrelation(layer, 0.0)
    for n in np.nonzero(counts)[0]:
        total += counts[n] * autocorrelation(layer, b * math.sqrt(n))

    var_raw = b ** 2 * total - int_g ** 2
    return var_raw / (a * alpha_quad(f)) ** 2
