"""Resonator geometries, lattices and material parameters.

A Geometry is a disjoint collection of spheres (3D) or disks (2D).  A Lattice
repeats it periodically along d_l <= d axes; lattice vectors have zero
trailing components so the lattice is aligned with the leading coordinate
axes.  Materials carry per-resonator contrast delta_i and wave speed v_i
(both may be complex for gain/loss) plus the exterior speed v.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import AssemblyError, DomainError


@dataclass(frozen=True)
class Resonator:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError(f"radius must be positive, got {self.radius}")

    @property
    def volume(self):
        """|D_i|: ball volume in 3D, disk area in 2D."""
        if len(self.center) == 3:
            return 4.0 / 3.0 * np.pi * self.radius**3
        return np.pi * self.radius**2


@dataclass(frozen=True)
class Geometry:
    dimension: int
    resonators: tuple[Resonator, ...]

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise DomainError("dimension must be 2 or 3")
        for r in self.resonators:
            if len(r.center) != self.dimension:
                raise DomainError("resonator center dimension mismatch")
        for a, b in itertools.combinations(self.resonators, 2):
            gap = np.linalg.norm(np.subtract(a.center, b.center)) - a.radius - b.radius
            if gap <= 0:
                raise AssemblyError(f"overlapping resonators (gap {gap:.3e})")

    @property
    def n(self):
        return len(self.resonators)

    @property
    def centers(self):
        return np.array([r.center for r in self.resonators], dtype=float)

    @property
    def radii(self):
        return np.array([r.radius for r in self.resonators], dtype=float)

    @property
    def volumes(self):
        return np.array([r.volume for r in self.resonators], dtype=float)

    def translated(self, shift):
        shift = np.asarray(shift, dtype=float)
        return Geometry(self.dimension, tuple(Resonator(tuple(np.add(r.center, shift)), r.radius) for r in self.resonators))


def spheres(centers, radii, dimension=3):
    """Convenience constructor from center/radius arrays."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (centers.shape[0],))
    return Geometry(dimension, tuple(Resonator(tuple(c), float(r)) for c, r in zip(centers, radii)))


def disks(centers, radii):
    return spheres(centers, radii, dimension=2)


@dataclass(frozen=True)
class Lattice:
    """Periodic lattice of dimension d_l embedded in R^d, aligned with leading axes."""

    dim: int
    vectors: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        dl = V.shape[0]
        if not (1 <= dl <= self.dim):
            raise DomainError("need 1 <= d_l <= d lattice vectors")
        if V.shape[1] != self.dim:
            raise DomainError("lattice vector dimension mismatch")
        if dl < self.dim and np.any(np.abs(V[:, dl:]) > 1e-14):
            raise DomainError("lattice vectors must have zero trailing components")
        if abs(np.linalg.det(V[:, :dl])) < 1e-14:
            raise DomainError("degenerate lattice vectors")

    @property
    def lattice_dim(self):
        return len(self.vectors)

    @property
    def basis(self):
        """(d_l, d) array of lattice vectors."""
        return np.atleast_2d(np.asarray(self.vectors, dtype=float))

    @property
    def dual_basis(self):
        """Dual vectors a_i with a_i . l_j = 2 pi delta_ij and zero trailing parts."""
        dl = self.lattice_dim
        B = self.basis[:, :dl]
        A = 2 * np.pi * np.linalg.inv(B).T
        out = np.zeros((dl, self.dim))
        out[:, :dl] = A
        return out

    @property
    def periods(self):
        return np.linalg.norm(self.basis, axis=1)

    @property
    def cell_measure(self):
        """|Y_l|: length (d_l=1) or area (d_l=2) of the fundamental cell."""
        B = self.basis[:, : self.lattice_dim]
        return abs(np.linalg.det(B))

    def points(self, shells=None, radius=None):
        """Lattice points m within the given index shells or Euclidean radius."""
        return self._gen(self.basis, shells, radius)

    def dual_points(self, shells=None, radius=None):
        return self._gen(self.dual_basis, shells, radius)

    def _gen(self, B, shells, radius):
        dl = self.lattice_dim
        if radius is not None:
            lens = np.linalg.norm(B, axis=1)
            shells = int(np.ceil(radius / lens.min())) + 2
        if shells is None:
            shells = 6
        rng = range(-shells, shells + 1)
        idx = np.array(list(itertools.product(*([rng] * dl))), dtype=float)
        pts = idx @ B
        if radius is not None:
            pts = pts[np.linalg.norm(pts, axis=1) <= radius + 1e-12]
        return pts


def chain_lattice(L, dim=3):
    """1D-periodic lattice of period L along the first axis."""
    v = [0.0] * dim
    v[0] = float(L)
    return Lattice(dim, (tuple(v),))


def square_lattice(L=1.0):
    return Lattice(2, ((float(L), 0.0), (0.0, float(L))))


def hexagonal_lattice(L=1.0):
    """Honeycomb Bravais lattice: l1 = L(sqrt3/2, 1/2), l2 = L(sqrt3/2, -1/2)."""
    s = np.sqrt(3.0) / 2.0
    return Lattice(2, ((L * s, L / 2.0), (L * s, -L / 2.0)))


@dataclass(frozen=True)
class Materials:
    """Per-resonator contrast delta_i, wave speed v_i, and exterior speed v."""

    delta: tuple[complex, ...]
    v: tuple[complex, ...]
    v_out: float = 1.0

    def __post_init__(self):
        if len(self.delta) != len(self.v):
            raise DomainError("delta / v length mismatch")
        if any(abs(d) == 0 for d in self.delta):
            raise DomainError("contrasts must be nonzero")

    @property
    def n(self):
        return len(self.delta)

    @property
    def delta_v2(self):
        """delta_i v_i^2 (the gain/loss-carrying combination)."""
        return np.array(self.delta, dtype=complex) * np.array(self.v, dtype=complex) ** 2

    @staticmethod
    def uniform(n, delta, v=1.0, v_out=1.0):
        return Materials(tuple([complex(delta)] * n), tuple([complex(v)] * n), float(v_out))


@dataclass
class Scene:
    """A full problem description: geometry + materials (+ lattice, modulation)."""

    geometry: Geometry
    materials: Materials
    lattice: Lattice | None = None
    modulation: object | None = None
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.materials.n != self.geometry.n:
            raise DomainError("materials must list one entry per resonator")
        if self.lattice is not None and self.lattice.dim != self.geometry.dimension:
            raise DomainError("lattice/geometry dimension mismatch")
