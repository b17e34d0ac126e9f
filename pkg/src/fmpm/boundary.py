"""Grid velocity boundary conditions.

Conditions set the velocity component along a unit direction at a node.
They are applied twice per step (lumped initialisation) and once per solver
pass (zeroing the controlled directions of each velocity increment), which
keeps every condition satisfied at any solve order.  Moving walls regenerate
their node set and target values every step.

Application uses per-node precomputed operators: zeroing all controlled
directions of v is the projector product P = prod_b (I - n_b n_b^T), and the
superposed targets add b = sum_b v_b n_b, reproducing the two-loop update
(for parallel conditions the repeated projector is idempotent, so later
conditions correctly subtract zero).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_ORTHO_TOL = 1e-9


@dataclass
class VelocityBC:
    node: int
    normal: np.ndarray  # unit direction
    value: float


class BCSet:
    """Validated, node-grouped collection of velocity conditions."""

    def __init__(self, conditions):
        self.conditions = []
        for c in conditions:
            n = np.asarray(c.normal, dtype=float)
            nrm = np.linalg.norm(n)
            if nrm == 0:
                raise ConfigError("BC direction must be nonzero")
            self.conditions.append(VelocityBC(int(c.node), n / nrm, float(c.value)))
        dim = self.conditions[0].normal.size if self.conditions else 1
        self.nodes = np.array([c.node for c in self.conditions], dtype=np.int64)
        self.normals = (
            np.array([c.normal for c in self.conditions])
            if self.conditions else np.zeros((0, dim))
        )
        self.values = np.array([c.value for c in self.conditions])
        self._validate()
        self._build_operators(dim)

    def __len__(self):
        return len(self.conditions)

    def _validate(self):
        by_node = {}
        for c in self.conditions:
            by_node.setdefault(c.node, []).append(c.normal)
        for node, normals in by_node.items():
            for i in range(len(normals)):
                for j in range(i + 1, len(normals)):
                    dot = abs(float(normals[i] @ normals[j]))
                    if dot > _ORTHO_TOL and abs(dot - 1.0) > _ORTHO_TOL:
                        raise ConfigError(
                            f"BCs on node {node} must be pairwise parallel or perpendicular"
                        )

    def _build_operators(self, dim):
        self.unodes, inv = np.unique(self.nodes, return_inverse=True) if len(self) else (
            np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
        u = self.unodes.size
        self.proj = np.tile(np.eye(dim), (u, 1, 1))
        self.target = np.zeros((u, dim))
        for c, g in zip(self.conditions, inv):
            nn = np.outer(c.normal, c.normal)
            self.proj[g] = (np.eye(dim) - nn) @ self.proj[g]
            self.target[g] += c.value * c.normal


def apply_lumped_bcs(vel, bcs, active=None, mass=None):
    """Set v . n = value at every condition (two-loop superposition).

    Applied to every material field, with targets added only on active
    field/node entries when an activity mask is given.  Returns the total
    momentum change when nodal masses are supplied (reaction diagnostic).
    """
    if len(bcs) == 0:
        return None
    un = bcs.unodes
    sub = vel[:, un]
    out = np.einsum("uij,fuj->fui", bcs.proj, sub) + bcs.target[None]
    if active is not None:
        out = np.where(active[:, un, None], out, sub)
    vel[:, un] = out
    if mass is None:
        return None
    return ((out - sub) * mass[:, un, None]).sum(axis=(0, 1))


def zero_bc_increment(dv, bcs):
    """Remove the controlled components from a velocity increment."""
    if len(bcs):
        dv[:, bcs.unodes] = np.einsum("uij,fuj->fui", bcs.proj, dv[:, bcs.unodes])
    return dv


def bc_violation(vel, bcs, active):
    """max |v . n - value| over conditions and active fields (diagnostic)."""
    if len(bcs) == 0:
        return 0.0
    err = np.abs(np.einsum("fcd,cd->fc", vel[:, bcs.nodes], bcs.normals) - bcs.values[None])
    err = np.where(active[:, bcs.nodes], err, 0.0)
    return float(err.max()) if err.size else 0.0


@dataclass
class MovingWall:
    """Plane wall projecting velocity BCs onto nearby nodes each step.

    ``side`` +1 means the wall bounds the body from above along ``axis``
    (exterior is x > position), -1 from below.  Nodes on the exterior side
    carrying mass, plus interior nodes within ``depth`` cells of the wall,
    receive v . axis = speed + gradient * (x - position).
    """

    axis: int
    side: int
    position: float
    speed: float = 0.0
    gradient: float = 0.0
    depth: float = 1.0
    schedule: object = None  # optional t -> (speed, gradient)

    def at_time(self, t):
        if self.schedule is not None:
            return self.schedule(t)
        return self.speed, self.gradient

    def advance(self, t, dt):
        v, _ = self.at_time(t)
        self.position += v * dt


def project_moving_wall(wall, grid, fields, t):
    """Generate this step's conditions for one wall (masses already scattered)."""
    if not (grid.origin[wall.axis] <= wall.position <= grid.upper()[wall.axis]):
        raise ConfigError(f"wall at {wall.position} lies outside the grid")
    coords = grid.node_positions()[:, wall.axis]
    massive = fields.active.any(axis=0)
    offset = (coords - wall.position) * wall.side
    reach = offset >= -wall.depth * grid.spacing[wall.axis]
    picked = np.flatnonzero(massive & reach)
    speed, gradient = wall.at_time(t)
    normal = np.zeros(grid.dim)
    normal[wall.axis] = 1.0
    return [
        VelocityBC(node=i, normal=normal, value=speed + gradient * (coords[i] - wall.position))
        for i in picked
    ]
