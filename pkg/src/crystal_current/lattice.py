"""Direct/reciprocal lattice geometry and Brillouin-zone sampling (2-D).

Conventions: a_i . b_j = 2 pi delta_ij. Brillouin-zone integrals are
approximated by the periodic trapezoid rule, i.e. a uniform average over an
n x n grid times the BZ area; per-unit-volume quantities carry an extra
(2 pi)^-2. Field and measurement directions are plain 2-vectors, not
necessarily normalized and not necessarily lattice vectors; "the derivative
along e" always means e . grad_k.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Lattice2D", "BZGrid", "reciprocal_basis", "make_grid",
           "cross2", "honeycomb_lattice", "square_lattice"]


def cross2(u, v):
    """z-component of the 2-D cross product u x v."""
    return u[0] * v[1] - u[1] * v[0]


def reciprocal_basis(a1, a2):
    """Reciprocal vectors b1, b2 with a_i . b_j = 2 pi delta_ij.

    Raises ValueError when a1, a2 are (numerically) linearly dependent.
    """
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    det = cross2(a1, a2)
    if abs(det) < 1e-14:
        raise ValueError("degenerate direct basis: |a1 x a2| < 1e-14")
    # rows of 2*pi*inv([a1; a2])
    b1 = 2.0 * np.pi / det * np.array([a2[1], -a2[0]])
    b2 = 2.0 * np.pi / det * np.array([-a1[1], a1[0]])
    return b1, b2


@dataclass(frozen=True)
class Lattice2D:
    """Direct and reciprocal bases of a 2-D Bravais lattice. Immutable."""

    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray = field(init=False)
    b2: np.ndarray = field(init=False)

    def __post_init__(self):
        a1 = np.asarray(self.a1, dtype=float).copy()
        a2 = np.asarray(self.a2, dtype=float).copy()
        b1, b2 = reciprocal_basis(a1, a2)
        for name, v in (("a1", a1), ("a2", a2), ("b1", b1), ("b2", b2)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def cell_area(self):
        return abs(cross2(self.a1, self.a2))

    @property
    def bz_area(self):
        return abs(cross2(self.b1, self.b2))

    def reciprocal_coords(self, K):
        """Fractional coordinates (m1, m2) of K in the (b1, b2) basis."""
        K = np.asarray(K, dtype=float)
        # K = m1 b1 + m2 b2  <=>  m_i = K . a_i / (2 pi)
        return np.array([K @ self.a1, K @ self.a2]) / (2.0 * np.pi)

    def in_reciprocal_lattice(self, K, tol=1e-8):
        m = self.reciprocal_coords(K)
        return np.all(np.abs(m - np.round(m)) < tol)


@dataclass(frozen=True)
class BZGrid:
    """Uniform n x n Brillouin-zone grid with trapezoid weights.

    points[i*n + j] = ((i + shift[0]) / n) b1 + ((j + shift[1]) / n) b2,
    every point carrying the same weight bz_area / n^2. `shift` is in
    fractional coordinates.
    """

    lattice: Lattice2D
    n: int
    shift: np.ndarray
    points: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid size n must be >= 1")
        shift = np.asarray(self.shift, dtype=float).copy()
        n = self.n
        idx = np.arange(n, dtype=float)
        frac1, frac2 = np.meshgrid((idx + shift[0] * n) / n,
                                   (idx + shift[1] * n) / n, indexing="ij")
        pts = (frac1.reshape(-1, 1) * self.lattice.b1
               + frac2.reshape(-1, 1) * self.lattice.b2)
        pts.setflags(write=False)
        shift.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "shift", shift)

    @property
    def weight(self):
        """Quadrature weight per point (uniform)."""
        return self.lattice.bz_area / self.n ** 2

    @property
    def weights(self):
        return np.full(len(self.points), self.weight)


def make_grid(lattice, n, shift=(0.0, 0.0)):
    """n x n uniform BZ grid; `shift` in fractional coordinates of (b1, b2)."""
    return BZGrid(lattice, int(n), np.asarray(shift, dtype=float))


def honeycomb_lattice():
    """The honeycomb Bravais basis a1 = (sqrt3/2, 1/2), a2 = (sqrt3/2, -1/2)."""
    s = np.sqrt(3.0) / 2.0
    return Lattice2D(np.array([s, 0.5]), np.array([s, -0.5]))


def square_lattice(a=1.0):
    return Lattice2D(np.array([a, 0.0]), np.array([0.0, a]))
