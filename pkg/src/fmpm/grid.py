"""Background Cartesian grid, particle state, and nodal field storage.

Nodes are addressed by a single linear index (x fastest, then y).  Nodal
fields are dense per material velocity field: shape (nfields, nnodes, ...).
"""

from dataclasses import dataclass, field

import numpy as np

from .backends import kernels
from .errors import ConfigError

# Node active when m > tol * mean particle mass.  Nodal velocities are convex
# combinations of particle velocities (p/m is bounded for any positive mass),
# so the floor only needs to exclude exact zeros and denormal dust; a larger
# floor silently drops real momentum from low-weight nodes, which breaks the
# split-field/single-field equivalence at the 1e-11 level.
MASS_ACTIVITY_REL = 1e-14


def _as_axis_array(value, dim):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(dim, arr[0])
    if arr.shape != (dim,):
        raise ConfigError(f"expected {dim} per-axis values, got {value!r}")
    return arr


@dataclass(frozen=True)
class Grid:
    """Regular grid: per-axis spacing, node counts, and origin."""

    spacing: np.ndarray
    counts: np.ndarray
    origin: np.ndarray

    @classmethod
    def make(cls, spacing, counts, origin=0.0):
        counts = np.atleast_1d(np.asarray(counts, dtype=np.int64))
        dim = counts.size
        if dim not in (1, 2):
            raise ConfigError("only 1D and 2D grids are supported")
        if np.any(counts < 2):
            raise ConfigError("need at least 2 nodes per axis")
        spacing = _as_axis_array(spacing, dim)
        if np.any(spacing <= 0):
            raise ConfigError("cell size must be positive")
        origin = _as_axis_array(origin, dim)
        return cls(spacing=spacing, counts=counts, origin=origin)

    @property
    def dim(self):
        return self.counts.size

    @property
    def nnodes(self):
        return int(np.prod(self.counts))

    @property
    def min_spacing(self):
        return float(self.spacing.min())

    def node_positions(self):
        """(nnodes, dim) coordinates, x index fastest."""
        axes = [self.origin[d] + self.spacing[d] * np.arange(self.counts[d]) for d in range(self.dim)]
        if self.dim == 1:
            return axes[0][:, None]
        xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
        # linear index i = ix + nx*iy -> x varies fastest
        pos = np.empty((self.nnodes, 2))
        pos[:, 0] = xx.T.ravel()
        pos[:, 1] = yy.T.ravel()
        return pos

    def upper(self):
        return self.origin + self.spacing * (self.counts - 1)


class Particles:
    """Struct-of-arrays particle state."""

    def __init__(self, mass, pos, vel, halfsize, matid=None, rho=None):
        self.pos = np.atleast_2d(np.asarray(pos, dtype=float))
        n, dim = self.pos.shape
        self.mass = np.asarray(mass, dtype=float)
        self.vel = np.atleast_2d(np.asarray(vel, dtype=float))
        self.halfsize = np.atleast_2d(np.asarray(halfsize, dtype=float))
        if self.halfsize.shape == (1, dim):
            self.halfsize = np.repeat(self.halfsize, n, axis=0)
        self.halfsize0 = self.halfsize.copy()
        self.matid = np.zeros(n, dtype=np.int64) if matid is None else np.asarray(matid, dtype=np.int64)
        self.F = np.tile(np.eye(dim), (n, 1, 1))
        self.stress = np.zeros((n, dim, dim))       # Kirchhoff, scattered to the grid
        self.stress_work = self.stress              # elastic part, for energy accounting
        if np.any(self.mass <= 0):
            raise ConfigError("particle masses must be positive")
        # reference volume from mass/density when provided, else unit per particle
        if rho is not None:
            self.vol0 = self.mass / float(rho)
        else:
            self.vol0 = np.ones(n)

    @property
    def n(self):
        return self.pos.shape[0]

    @property
    def dim(self):
        return self.pos.shape[1]

    @property
    def nfields(self):
        return int(self.matid.max()) + 1 if self.n else 1


@dataclass
class NodalFields:
    """Per-material-field nodal storage: mass, momentum, force, velocity."""

    mass: np.ndarray      # (F, n)
    mom: np.ndarray       # (F, n, dim)
    force: np.ndarray     # (F, n, dim)
    vel: np.ndarray       # (F, n, dim)
    active: np.ndarray    # (F, n) bool
    inv_mass: np.ndarray  # (F, n); 0 on inactive nodes
    mass_tol: float = 0.0
    extras: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, nfields, nnodes, dim):
        return cls(
            mass=np.zeros((nfields, nnodes)),
            mom=np.zeros((nfields, nnodes, dim)),
            force=np.zeros((nfields, nnodes, dim)),
            vel=np.zeros((nfields, nnodes, dim)),
            active=np.zeros((nfields, nnodes), dtype=bool),
            inv_mass=np.zeros((nfields, nnodes)),
        )

    @property
    def nfields(self):
        return self.mass.shape[0]

    def clear(self):
        self.mass[:] = 0.0
        self.mom[:] = 0.0
        self.force[:] = 0.0
        self.vel[:] = 0.0
        self.active[:] = False
        self.inv_mass[:] = 0.0
        self.extras.clear()

    def refresh_activity(self, mean_particle_mass):
        self.mass_tol = MASS_ACTIVITY_REL * mean_particle_mass
        self.active = self.mass > self.mass_tol
        self.inv_mass = np.where(self.active, 1.0 / np.where(self.active, self.mass, 1.0), 0.0)


def scatter_mass_momentum(particles, table, fields):
    """Fig-1 task 1: push particle mass and momentum onto the grid."""
    m, p = kernels.scatter_mass_momentum(
        table.nodes, table.weights, particles.mass, particles.vel,
        particles.matid, fields.nfields, fields.mass.shape[1],
    )
    fields.mass = m
    fields.mom = p
    fields.refresh_activity(float(particles.mass.mean()))
    return fields


def scatter_forces(particles, table, fields, body=None):
    """Fig-1 task 2: internal forces from Kirchhoff stress plus body force."""
    dim = particles.dim
    body = np.zeros(dim) if body is None else np.asarray(body, dtype=float)
    fields.force = kernels.scatter_forces(
        table.nodes, table.weights, table.grads, particles.stress, particles.vol0,
        particles.mass, body, particles.matid, fields.nfields, fields.mass.shape[1],
    )
    return fields


def scatter_contact_moments(particles, table, fields):
    """Mass-weighted positions and mass gradients (contact geometry inputs)."""
    mx, gm = kernels.scatter_moments(
        table.nodes, table.weights, table.grads, particles.mass, particles.pos,
        particles.matid, fields.nfields, fields.mass.shape[1],
    )
    fields.extras["mass_pos"] = mx
    fields.extras["mass_grad"] = gm
    return mx, gm
