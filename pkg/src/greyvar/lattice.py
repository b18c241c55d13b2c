"""Point lattices, their duals, and stationary random placements.

A lattice is A Z^d for an invertible matrix A (columns = basis vectors),
with fundamental cell C = A [0,1)^d of volume det A.  Sampling uses the
scaled, randomly shifted and rotated point set  b Q (A Z^d + c)  with c
uniform in C and Q Haar-distributed in SO(d); this makes the point process
stationary and isotropic in law.

The dual lattice is A^{-T} Z^d, normalized so that <xi, z> is an integer
for every dual/primal pair; Fourier lattice sums run over dual shells
grouped by norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Lattice:
    """Full-rank lattice A Z^d, stored row-major as a tuple of rows."""

    matrix: tuple

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError("lattice matrix must be square")
        if A.shape[0] not in (2, 3):
            raise DomainError("only dimensions 2 and 3 are supported")
        if np.linalg.det(A) <= 0:
            raise DomainError("lattice matrix must have positive determinant")
        object.__setattr__(self, "matrix",
                           tuple(tuple(float(v) for v in row) for row in A))

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @property
    def basis(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    @property
    def cell_volume(self) -> float:
        return float(np.linalg.det(self.basis))

    @property
    def dual_basis(self) -> np.ndarray:
        """Basis of the dual lattice, A^{-T}."""
        return np.linalg.inv(self.basis).T

    @property
    def cell_diameter(self) -> float:
        """Diameter of the fundamental cell (max over corner differences)."""
        d = self.dim
        signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * d))).reshape(d, -1).T
        return float(np.max(np.linalg.norm(signs @ self.basis.T, axis=1)))


def unit_lattice(dim: int) -> Lattice:
    return Lattice(tuple(tuple(float(i == j) for j in range(dim))
                         for i in range(dim)))


def scaled_lattice(dim: int, s: float) -> Lattice:
    return Lattice(tuple(tuple(s * float(i == j) for j in range(dim))
                         for i in range(dim)))


def hexagonal_lattice() -> Lattice:
    """Unit hexagonal lattice in d=2 (cell volume sqrt(3)/2)."""
    return Lattice(((1.0, 0.5), (0.0, math.sqrt(3.0) / 2.0)))


@dataclass
class LatticePlacement:
    """A realized placement b Q (A Z^d + c).

    c is the shift inside the fundamental cell (a d-vector, = A u with
    u in [0,1)^d); Q is a rotation matrix.
    """

    lattice: Lattice
    b: float
    shift: np.ndarray = field(default=None)
    rotation: np.ndarray = field(default=None)

    def __post_init__(self):
        d = self.lattice.dim
        if self.b <= 0:
            raise DomainError("lattice scale b must be positive")
        if self.shift is None:
            self.shift = np.zeros(d)
        self.shift = np.asarray(self.shift, dtype=float)
        if self.rotation is None:
            self.rotation = np.eye(d)
        self.rotation = np.asarray(self.rotation, dtype=float)
        if self.shift.shape != (d,) or self.rotation.shape != (d, d):
            raise DomainError("placement shapes inconsistent with lattice")


@dataclass(frozen=True)
class Box:
    """Axis-aligned half-open box prod_i [lo_i, hi_i)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or any(h <= l for l, h in zip(lo, hi)):
            raise DomainError("box must have lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((pts >= lo) & (pts < hi), axis=1)

    @property
    def inradius(self) -> float:
        """Radius of the largest origin-centered ball inside the box."""
        return float(min(min(-l for l in self.lo), min(self.hi)))


def centered_box(half_widths) -> Box:
    hw = tuple(float(h) for h in np.atleast_1d(half_widths))
    return Box(tuple(-h for h in hw), hw)


def integer_cover(placement: LatticePlacement, window: Box,
                  any_shift: bool = False) -> np.ndarray:
    """Integer coordinates k whose points can fall in the window.

    The window corners are pulled back through the placement map; the
    resulting integer box is padded by one cell (plus the whole shift
    range when any_shift is set, for reuse across placements).
    """
    A = placement.lattice.basis
    d = placement.lattice.dim
    corners = np.array(np.meshgrid(
        *[(window.lo[i], window.hi[i]) for i in range(d)])).reshape(d, -1).T
    y = corners @ placement.rotation / placement.b  # Q^T x / b
    k_corners = y @ np.linalg.inv(A).T
    if any_shift:
        shift_reach = 1.0
    else:
        u = np.linalg.solve(A, placement.shift)
        shift_reach = float(np.max(np.abs(u)))
    lo = np.floor(k_corners.min(axis=0) - shift_reach - 1e-9).astype(int)
    hi = np.ceil(k_corners.max(axis=0) + 1e-9).astype(int) + 1
    grids = np.meshgrid(*[np.arange(lo[i], hi[i]) for i in range(d)],
                        indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def enumerate_points(placement: LatticePlacement, window: Box) -> np.ndarray:
    """All placement points inside the half-open window, each once."""
    if window.dim != placement.lattice.dim:
        raise DomainError("window dimension mismatch")
    k = integer_cover(placement, window)
    A = placement.lattice.basis
    pts = placement.b * (k @ A.T + placement.shift) @ placement.rotation.T
    return pts[window.contains(pts)]


def dual_points(lattice: Lattice, xi_max: float) -> np.ndarray:
    """Nonzero dual vectors with norm <= xi_max."""
    if xi_max <= 0:
        raise DomainError("xi_max must be positive")
    B = lattice.dual_basis
    d = lattice.dim
    reach = int(np.ceil(np.linalg.norm(lattice.basis, 2) * xi_max)) + 1
    rng = np.arange(-reach, reach + 1)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    k = np.stack([g.ravel() for g in grids], axis=1)
    k = k[np.any(k != 0, axis=1)]
    xi = k @ B.T
    norms = np.linalg.norm(xi, axis=1)
    keep = norms <= xi_max + 1e-12
    return xi[keep]


_SHELL_TABLES: dict[int, np.ndarray] = {}


def _sum_of_squares_counts(dim: int, n_max: int) -> np.ndarray:
    """counts[n] = number of z in Z^dim with |z|^2 = n, for n <= n_max.

    Sieved exactly in integer arithmetic: d=2 by a weighted bincount
    over one quadrant, d=3 by folding one more coordinate into the d=2
    table.  This is what makes dual sums over the integer lattice cheap
    at large radii, where point enumeration would need |ball| memory.
    The largest table per dimension is kept and sliced for smaller
    requests, so geometric-growth sums pay for each radius once.
    """
    have = _SHELL_TABLES.get(dim)
    if have is not None and len(have) > n_max:
        return have[:n_max + 1]
    kmax = math.isqrt(n_max)
    ks = np.arange(kmax + 1)
    mult = np.where(ks == 0, 1, 2).astype(np.int32)
    sq = ks * ks
    counts2 = np.zeros(n_max + 1, dtype=np.int32)
    for x in range(kmax + 1):
        n = x * x + sq
        sel = n <= n_max
        np.add.at(counts2, n[sel], mult[x] * mult[sel])
    if dim == 2:
        _SHELL_TABLES[2] = counts2
        return counts2
    # fold the third coordinate in by convolution with the 1-D counts;
    # FFT keeps this near-linear, and the result is rounded back to the
    # exact integers (the residual is checked, not assumed)
    counts1 = np.zeros(n_max + 1)
    counts1[sq[sq <= n_max]] = mult[: np.count_nonzero(sq <= n_max)]
    size = 1 << int(2 * n_max + 1).bit_length()
    conv = np.fft.irfft(np.fft.rfft(counts2.astype(float), size)
                        * np.fft.rfft(counts1, size), size)[:n_max + 1]
    counts3 = np.rint(conv)
    if np.abs(conv - counts3).max() > 0.1:
        raise ArithmeticError("shell count convolution lost integrality")
    out = counts3.astype(np.int32)
    _SHELL_TABLES[3] = out
    return out


def _integer_scale(lattice: Lattice) -> float | None:
    """s if the lattice is s * Z^d, else None."""
    A = np.asarray(lattice.basis)
    s = A[0, 0]
    if s > 0 and np.allclose(A, s * np.eye(lattice.dim), atol=1e-12, rtol=0):
        return float(s)
    return None


def dual_shells(lattice: Lattice, xi_max: float, group_tol: float = 1e-9):
    """Dual-lattice shells: sorted norms with multiplicities.

    Returns (norms, counts) with equal norms (within group_tol) merged.
    Scaled integer lattices take an exact sum-of-squares sieve; other
    lattices enumerate points, which limits their practical radius.
    """
    if xi_max <= 0:
        raise DomainError("xi_max must be positive")
    s = _integer_scale(lattice)
    if s is not None:
        n_max = int((xi_max * s) ** 2 * (1 + 1e-12))
        counts = _sum_of_squares_counts(lattice.dim, n_max)
        n = np.flatnonzero(counts[1:]) + 1
        return np.sqrt(n.astype(float)) / s, counts[n].astype(int)
    xi = dual_points(lattice, xi_max)
    norms = np.sort(np.linalg.norm(xi, axis=1))
    if norms.size == 0:
        return np.empty(0), np.empty(0, dtype=int)
    breaks = np.flatnonzero(np.diff(norms) > group_tol)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks + 1, [norms.size]))
    shell_norms = np.array([norms[s:e].mean() for s, e in zip(starts, ends)])
    counts = (ends - starts).astype(int)
    return shell_norms, counts


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed rotation matrix (uniform angle / uniform quaternion)."""
    if dim == 2:
        t = rng.uniform(0.0, 2.0 * math.pi)
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, -s], [s, c]])
    if dim == 3:
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        w, x, y, z = q
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])
    raise DomainError("only dimensions 2 and 3 are supported")


def random_placement(lattice: Lattice, b: float,
                     rng: np.random.Generator) -> LatticePlacement:
    """Uniform shift in the fundamental cell + Haar rotation."""
    u = rng.uniform(0.0, 1.0, size=lattice.dim)
    c = lattice.basis @ u
    Q = random_rotation(lattice.dim, rng)
    return LatticePlacement(lattice=lattice, b=b, shift=c, rotation=Q)
