"""Lattices, duals, shells, and random placements.

The dual convention is pinned end to end by Poisson summation with a
Gaussian (both sides computable to machine accuracy), and the shell
sieve is cross-checked against explicit point enumeration, including
the d=3 convolution path.
"""

import math

import numpy as np
import pytest

from greyvar.errors import DomainError
from greyvar.lattice import (Box, Lattice, LatticePlacement, centered_box,
                             dual_points, dual_shells, enumerate_points,
                             hexagonal_lattice, random_placement,
                             random_rotation, scaled_lattice, unit_lattice,
                             _sum_of_squares_counts)


@pytest.mark.parametrize("lattice", [
    unit_lattice(2),
    scaled_lattice(2, 0.7),
    hexagonal_lattice(),
    Lattice(((1.0, 0.3), (0.1, 0.8))),
    unit_lattice(3),
])
def test_poisson_summation_gaussian(lattice):
    """sum_{z in L} exp(-pi|z|^2) = c_L^{-1} sum_{xi in L*} exp(-pi|xi|^2).

    The Gaussian exp(-pi|x|^2) is its own Fourier transform, so any
    mismatch in the dual convention (transpose, inverse, determinant)
    breaks this identity at order one.
    """
    d = lattice.dim
    reach = 9
    rng = np.arange(-reach, reach + 1)
    k = np.stack(np.meshgrid(*([rng] * d), indexing="ij"),
                 axis=-1).reshape(-1, d)
    primal = np.exp(-math.pi * np.sum((k @ lattice.basis.T) ** 2,
                                      axis=1)).sum()
    dual = np.exp(-math.pi * np.sum((k @ lattice.dual_basis.T) ** 2,
                                    axis=1)).sum()
    assert primal == pytest.approx(dual / lattice.cell_volume, rel=1e-13)


def test_dual_basis_biorthogonal():
    lat = Lattice(((2.0, 0.5), (-0.3, 1.1)))
    gram = lat.basis @ lat.dual_basis.T
    np.testing.assert_allclose(gram, np.eye(2), atol=1e-14)


def test_lattice_validation():
    with pytest.raises(DomainError):
        Lattice(((1.0, 0.0), (2.0, 0.0)))  # singular
    with pytest.raises(DomainError):
        Lattice(((0.0, 1.0), (1.0, 0.0)))  # negative determinant
    with pytest.raises(DomainError):
        Lattice(((1.0,),))  # unsupported dimension


@pytest.mark.parametrize("dim", [2, 3])
def test_sum_of_squares_sieve_vs_enumeration(dim):
    n_max = 160
    counts = _sum_of_squares_counts(dim, n_max)
    reach = int(math.isqrt(n_max)) + 1
    rng = np.arange(-reach, reach + 1)
    k = np.stack(np.meshgrid(*([rng] * dim), indexing="ij"),
                 axis=-1).reshape(-1, dim)
    n = np.sum(k * k, axis=1)
    brute = np.bincount(n[n <= n_max], minlength=n_max + 1)
    np.testing.assert_array_equal(counts, brute)


def test_sieve_d3_known_values():
    # r_3(n) for small n: 0->1, 1->6, 2->12, 3->8, 4->6, 5->24, 6->24, 7->0
    counts = _sum_of_squares_counts(3, 7)
    np.testing.assert_array_equal(counts, [1, 6, 12, 8, 6, 24, 24, 0])


@pytest.mark.parametrize("lattice,scale", [
    (unit_lattice(2), 1.0),
    (scaled_lattice(2, 0.25), 0.25),
    (unit_lattice(3), 1.0),
])
def test_dual_shells_sieve_path_matches_points(lattice, scale):
    norms, counts = dual_shells(lattice, 5.0)
    pts = dual_points(lattice, 5.0)
    r = np.sort(np.linalg.norm(pts, axis=1))
    # same number of dual vectors, same multiset of norms
    assert int(counts.sum()) == len(r)
    expanded = np.repeat(norms, counts.astype(int))
    np.testing.assert_allclose(expanded, r, atol=1e-9)
    # shells of s Z^d live on sqrt(n)/s
    assert norms[0] == pytest.approx(1.0 / scale, rel=1e-12)


def test_dual_shells_hexagonal():
    # the dual of the unit hexagonal lattice is hexagonal with nearest
    # neighbours at 2/sqrt(3), six of them
    norms, counts = dual_shells(hexagonal_lattice(), 3.0)
    assert norms[0] == pytest.approx(2.0 / math.sqrt(3.0), rel=1e-12)
    assert counts[0] == 6
    pts = dual_points(hexagonal_lattice(), 3.0)
    assert int(counts.sum()) == len(pts)


def test_dual_shells_sorted_and_even():
    norms, counts = dual_shells(unit_lattice(2), 30.0)
    assert np.all(np.diff(norms) > 0)
    # inversion symmetry makes every multiplicity even
    assert np.all(counts % 2 == 0)


def test_enumerate_points_brute_force():
    lat = Lattice(((1.0, 0.4), (0.0, 0.9)))
    rng = np.random.default_rng(5)
    placement = random_placement(lat, 0.3, rng)
    box = Box((-1.0, -0.8), (1.2, 0.9))
    pts = enumerate_points(placement, box)
    # brute force over a generous integer range
    span = np.arange(-30, 31)
    k = np.stack(np.meshgrid(span, span, indexing="ij"),
                 axis=-1).reshape(-1, 2)
    raw = placement.b * (k @ lat.basis.T + placement.shift) \
        @ placement.rotation.T
    inside = raw[box.contains(raw)]
    assert len(pts) == len(inside)
    got = set(map(tuple, np.round(pts, 9)))
    want = set(map(tuple, np.round(inside, 9)))
    assert got == want


def test_box_half_open():
    box = centered_box((1.0, 1.0))
    pts = np.array([[1.0, 0.0], [-1.0, 0.0], [0.3, -0.2]])
    np.testing.assert_array_equal(box.contains(pts), [False, True, True])


def test_random_placement_lies_in_cell():
    lat = hexagonal_lattice()
    rng = np.random.default_rng(11)
    for _ in range(50):
        placement = random_placement(lat, 0.2, rng)
        u = np.linalg.solve(lat.basis, placement.shift)
        assert np.all(u >= 0.0) and np.all(u < 1.0)
        Q = placement.rotation
        np.testing.assert_allclose(Q @ Q.T, np.eye(2), atol=1e-12)
        assert np.linalg.det(Q) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_rotation_haar_uniformity(dim):
    """Chi-square test on the image of a fixed axis.

    For Haar rotations the image of e_1 is uniform on the sphere: in
    d=2 the angle is uniform, in d=3 the z-coordinate is uniform on
    [-1, 1].  40 bins, 40000 draws; the 1e-4 quantile of chi2(39) is
    about 85, so a sound sampler fails this with probability 1e-4.
    """
    rng = np.random.default_rng(123)
    n, bins = 40000, 40
    images = np.array([random_rotation(dim, rng)[:, 0]
                       for _ in range(n)])
    if dim == 2:
        stat = np.arctan2(images[:, 1], images[:, 0])
        edges = np.linspace(-math.pi, math.pi, bins + 1)
    else:
        stat = images[:, 2]
        edges = np.linspace(-1.0, 1.0, bins + 1)
    observed = np.histogram(stat, edges)[0]
    expected = n / bins
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    assert chi2 < 85.0


def test_rotation_determinant_and_orthogonality_d3():
    rng = np.random.default_rng(7)
    for _ in range(20):
        Q = random_rotation(3, rng)
        np.testing.assert_allclose(Q @ Q.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(Q) == pytest.approx(1.0, abs=1e-12)


def test_placement_validation():
    lat = unit_lattice(2)
    with pytest.raises(DomainError):
        LatticePlacement(lattice=lat, b=-0.1)
    with pytest.raises(DomainError):
        LatticePlacement(lattice=lat, b=0.1, shift=np.zeros(3))
    with pytest.raises(DomainError):
        dual_shells(lat, 0.0)
