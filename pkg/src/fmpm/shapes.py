"""Shape function evaluation: linear hats, uGIMP, quadratic B-splines.

uGIMP integrates the linear grid functions over a fixed, undeformed particle
domain (half-size per axis).  2D functions are tensor products of the 1D
ones.  A particle whose support is not fully covered by existing nodes is a
hard error: benchmarks must never shed mass.
"""

from dataclasses import dataclass

import numpy as np

from .backends import kernels
from .errors import ConfigError, OutsideGridError

KINDS = {"linear": 0, "ugimp": 1, "bspline2": 2}


@dataclass
class ShapeTable:
    """Padded per-particle stencil: node ids, weights, weight gradients."""

    nodes: np.ndarray    # (N, K) int64
    weights: np.ndarray  # (N, K)
    grads: np.ndarray    # (N, K, dim)

    @property
    def width(self):
        return self.nodes.shape[1]


def kind_id(kind):
    try:
        return KINDS[kind]
    except KeyError:
        raise ConfigError(f"unknown shape kind {kind!r}; expected one of {sorted(KINDS)}") from None


def _check_interior(kind, grid, pos, half):
    lo = grid.origin[None, :].copy()
    hi = grid.upper()[None, :].copy()
    if kind == "ugimp":
        lo = lo + half
        hi = hi - half
    elif kind == "bspline2":
        lo = lo + 0.5 * grid.spacing
        hi = hi - 0.5 * grid.spacing
    eps = 1e-12 * grid.spacing
    bad = np.any((pos < lo - eps) | (pos > hi + eps), axis=1)
    if bad.any():
        p = int(np.argmax(bad))
        raise OutsideGridError(p, pos[p])


def build_shape_table(kind, grid, positions, halfsizes=None):
    """Sample all particles at once; raises OutsideGridError on the first offender."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if halfsizes is None:
        halfsizes = np.zeros_like(pos)
    half = np.atleast_2d(np.asarray(halfsizes, dtype=float))
    if half.shape == (1, pos.shape[1]):
        half = np.repeat(half, pos.shape[0], axis=0)
    if kind == "ugimp" and np.any((half <= 0) | (half > 0.5 * grid.spacing)):
        raise ConfigError("ugimp requires 0 < half-size <= cell/2 per axis")
    _check_interior(kind, grid, pos, half)
    nodes, weights, grads = kernels.sample_shapes(
        kind_id(kind), pos, half, grid.spacing, grid.origin, grid.counts
    )
    return ShapeTable(nodes=nodes, weights=weights, grads=grads)


def sample_shapes(kind, grid, position, halfsize=None):
    """Single-particle stencil with zero entries trimmed.

    Returns (node_ids, weights, gradients); entries are kept when either the
    weight or its gradient is nonzero (a particle sitting exactly on a node
    has zero weight but nonzero gradient at the neighbours).
    """
    pos = np.asarray(position, dtype=float)[None, :]
    half = None if halfsize is None else np.asarray(halfsize, dtype=float)[None, :]
    table = build_shape_table(kind, grid, pos, half)
    keep = (table.weights[0] != 0.0) | np.any(table.grads[0] != 0.0, axis=1)
    return table.nodes[0][keep], table.weights[0][keep], table.grads[0][keep]
