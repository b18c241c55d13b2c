"""Blurred phantom intensities.

The Gaussian-blurred ball has an exact reference: blurring with a
standard normal at scale a puts the grey value at distance r from the
center equal to the noncentral chi-square probability

    theta(r) = P( chi2_d(nc = (r/a)^2) <= (R/a)^2 ),

which scipy evaluates independently of everything in this package.  The
compact kernels are cross-checked with a dense polar convolution.
"""

import math

import numpy as np
import pytest
from scipy.stats import ncx2

from greyvar.errors import DomainError
from greyvar.phantom import (Ball, HalfSpace, IntensityModel,
                             TransformedBall, capfrac, halfspace_gap,
                             intensity, intensity_model, transition_offsets)
from greyvar.psf import (compact_bump, eval_rho, gaussian,
                         halfspace_profile)


def _gauss_ball_theta(r, R, a, d):
    return ncx2.cdf((R / a) ** 2, df=d, nc=(r / a) ** 2)


def _polar_theta_2d(psf, a, R, r, n_rad=4000, n_ang=4000):
    """Direct polar convolution for a centered disc, d=2 only."""
    rad = np.linspace(0.0, R, n_rad)
    ang = np.linspace(0.0, 2.0 * math.pi, n_ang, endpoint=False)
    rr, aa = np.meshgrid(rad, ang, indexing="ij")
    dist = np.sqrt(rr * rr + r * r - 2.0 * rr * r * np.cos(aa))
    vals = eval_rho(psf, dist / a) / a ** 2 * rr
    return float(np.trapezoid(np.sum(vals, axis=1) * (ang[1] - ang[0]),
                              rad))


@pytest.mark.parametrize("dim", [2, 3])
def test_ball_intensity_matches_noncentral_chi2(dim):
    psf = gaussian(dim)
    a, R = 0.07, 1.0
    for r in (0.0, 0.5, 0.9, 0.96, 1.0, 1.05, 1.2):
        expected = _gauss_ball_theta(r, R, a, dim)
        x = np.zeros(dim)
        x[0] = r
        assert intensity(Ball(dim, R), psf, a, x) == pytest.approx(
            expected, abs=1e-9)


def test_bump_ball_intensity_matches_polar_oracle():
    psf = compact_bump(2, 1.0)
    a, R = 0.1, 1.0
    for r in (0.93, 1.0, 1.06):
        expected = _polar_theta_2d(psf, a, R, r)
        got = intensity(Ball(2, R), psf, a, np.array([r, 0.0]))
        assert got == pytest.approx(expected, abs=2e-6)


def test_intensity_limits_and_monotonicity():
    psf = gaussian(2)
    ball = Ball(2, 1.0)
    assert intensity(ball, psf, 0.05, np.zeros(2)) == pytest.approx(
        1.0, abs=1e-12)
    assert intensity(ball, psf, 0.05, np.array([3.0, 0.0])) < 1e-12
    rs = np.linspace(0.7, 1.3, 41)
    vals = [intensity(ball, psf, 0.05, np.array([r, 0.0])) for r in rs]
    assert np.all(np.diff(vals) < 0.0)


def test_halfspace_intensity_is_the_profile():
    psf = gaussian(2)
    hs = HalfSpace(2, normal=(0.0, 1.0), offset=0.25)
    prof = halfspace_profile(psf)
    for y in (-0.5, 0.0, 0.25, 0.4):
        x = np.array([1.7, y])
        expected = prof.theta((y - 0.25) / 0.1)
        assert intensity(hs, psf, 0.1, x) == pytest.approx(expected,
                                                           abs=1e-12)


def test_transformed_ball_equivariance():
    psf = gaussian(2)
    plain = Ball(2, 0.8)
    moved = TransformedBall(2, radius=0.4, scale=2.0, center=(1.5, -0.3))
    for r in (0.75, 0.8, 0.85):
        x = np.array([r, 0.0])
        assert intensity(moved, psf, 0.06, x + np.array([1.5, -0.3])) == \
            pytest.approx(intensity(plain, psf, 0.06, x), abs=1e-11)


def test_capfrac_extremes_and_d3_closed_form():
    # sphere fully inside / outside the reference ball
    assert capfrac(0.2, 0.1, 1.0, 3) == 1.0
    assert capfrac(3.0, 0.5, 1.0, 3) == 0.0
    # generic position, d=3: cap height formula
    r, s, R = 0.9, 0.4, 1.0
    mu = (r * r + s * s - R * R) / (2 * r * s)
    assert capfrac(r, s, R, 3) == pytest.approx(0.5 * (1 - mu), rel=1e-12)
    # d=2: arc fraction
    assert capfrac(r, s, R, 2) == pytest.approx(math.acos(mu) / math.pi,
                                                rel=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_intensity_model_radial_table(dim):
    psf = gaussian(dim)
    a, R = 0.05, 1.0
    model = IntensityModel(Ball(dim, R), psf, a)
    r_lo, r_hi = model.table_range
    assert r_lo < R < r_hi
    rs = np.linspace(r_lo, r_hi, 201)
    expected = _gauss_ball_theta(rs, R, a, dim)
    np.testing.assert_allclose(model.radial(rs), expected, atol=2e-9)


def test_intensity_model_clamps_outside_table():
    model = IntensityModel(Ball(2, 1.0), gaussian(2), 0.05)
    assert model.radial(np.array([0.0]))[0] == pytest.approx(1.0,
                                                             abs=1e-10)
    assert model.radial(np.array([50.0]))[0] == 0.0


def test_intensity_model_cache_keyed_on_arguments():
    m1 = intensity_model(Ball(2, 1.0), gaussian(2), 0.05)
    m2 = intensity_model(Ball(2, 1.0), gaussian(2), 0.05)
    m3 = intensity_model(Ball(2, 1.0), gaussian(2), 0.04)
    assert m1 is m2 and m1 is not m3


def test_halfspace_gap_small_and_positive():
    # the curvature correction at the boundary is O(a) for fixed R
    psf = gaussian(2)
    gap_coarse = halfspace_gap(Ball(2, 1.0), psf, 0.1, np.array([1.0, 0.0]))
    gap_fine = halfspace_gap(Ball(2, 1.0), psf, 0.025, np.array([1.0, 0.0]))
    assert 0.0 < gap_fine < gap_coarse < 0.05
    assert halfspace_gap(HalfSpace(2), psf, 0.1, np.array([0.3, 2.0])) == 0.0


@pytest.mark.parametrize("dim", [2, 3])
def test_transition_offsets_match_chi2_roots(dim):
    # the reported offset t satisfies theta_ball(R + t) = level, so the
    # chi-square closed form pins it independently
    from scipy.optimize import brentq
    psf = gaussian(dim)
    a, R, beta, omega = 0.05, 1.0, 0.3, 0.7
    offs = transition_offsets(Ball(dim, R), psf, a, beta, omega)
    for level, t_off in ((omega, offs.t_minus), (beta, offs.t_plus)):
        r_cross = brentq(
            lambda r: _gauss_ball_theta(r, R, a, dim) - level,
            R - 6 * a, R + 6 * a, xtol=1e-14)
        assert t_off == pytest.approx(r_cross - R, abs=1e-8)
    # curvature pulls both crossings inward relative to the flat edge
    prof = halfspace_profile(psf)
    assert offs.t_minus < a * prof.phi(omega)
    assert offs.t_plus < a * prof.phi(beta)


def test_transition_offsets_shrink_with_a():
    # they are the curvature corrections, O(a) in the blur scale
    psf = gaussian(2)
    wide = transition_offsets(Ball(2, 1.0), psf, 0.1, 0.3, 0.7)
    narrow = transition_offsets(Ball(2, 1.0), psf, 0.0125, 0.3, 0.7)
    assert abs(narrow.t_minus) < abs(wide.t_minus)
    assert abs(narrow.t_plus) < abs(wide.t_plus)


def test_validation_errors():
    with pytest.raises(DomainError):
        Ball(2, -1.0)
    with pytest.raises(DomainError):
        HalfSpace(2, normal=(0.0, 0.0))
    with pytest.raises(DomainError):
        intensity(Ball(2, 1.0), gaussian(2), -0.1, np.zeros(2))
    with pytest.raises(DomainError):
        transition_offsets(Ball(2, 1.0), gaussian(2), 0.05, 0.7, 0.3)
    with pytest.raises(DomainError):
        IntensityModel(HalfSpace(2), gaussian(2), 0.05).table_range