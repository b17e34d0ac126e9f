"""Multimaterial contact on the background grid.

Geometry (normals from symmetrised mass gradients, separation from
mass-weighted extrapolated positions, cell-face contact area) is computed
once per step and cached; the contact law is then evaluated on lumped
momenta before the velocity solve and on every velocity increment inside it.
Two incremental bookkeeping schemes are provided: "net" (contact force from
total uncorrected velocities, the default) and "evolving" (from corrected
velocities, kept for comparison).  Exactly two material fields are
supported.

The "stick" law applies the full center-of-mass restoration on every
multimaterial node, bypassing detection; with it, a split body reproduces
the single-material solution exactly at any solve order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

_NORMAL_TINY = 1e-14


@dataclass
class ContactModel:
    law: str = "stick"          # stick | frictionless | coulomb
    mu: float = 0.0
    offset_cells: float = 0.8   # separation offset, in cells
    method: str = "net"         # net | evolving

    def validate(self):
        if self.law not in ("stick", "frictionless", "coulomb"):
            raise ConfigError(f"unknown contact law {self.law!r}")
        if self.mu < 0:
            raise ConfigError("friction coefficient must be >= 0")
        if self.method not in ("net", "evolving"):
            raise ConfigError(f"unknown incremental method {self.method!r}")
        return self


@dataclass
class ContactGeometry:
    """Cached per-step quantities on multimaterial nodes."""

    nodes: np.ndarray    # (m,)
    normal: np.ndarray   # (m, dim)
    delta_n: np.ndarray  # (m,)
    area: np.ndarray     # (m,)
    mred: np.ndarray     # (m,)

    def __len__(self):
        return self.nodes.size


def compute_geometry(fields, grid, offset_cells):
    """Locate multimaterial nodes and cache normal, separation, area, mred.

    Needs the mass-weighted position and mass-gradient scatters in
    ``fields.extras``.  Nodes with a degenerate normal are dropped.
    """
    if fields.nfields != 2:
        raise ConfigError("contact supports exactly two material fields")
    both = fields.active[0] & fields.active[1]
    idx = np.flatnonzero(both)
    gm = fields.extras["mass_grad"]
    mx = fields.extras["mass_pos"]
    diff = gm[0, idx] - gm[1, idx]
    nrm = np.linalg.norm(diff, axis=1)
    keep = nrm > _NORMAL_TINY
    idx, diff, nrm = idx[keep], diff[keep], nrm[keep]
    normal = diff / nrm[:, None]
    ma = fields.mass[0, idx]
    mb = fields.mass[1, idx]
    xa = mx[0, idx] / ma[:, None]
    xb = mx[1, idx] / mb[:, None]
    # orient the normal from material 0 toward material 1; the raw gradient
    # difference flips on nodes past either body, inverting the N_c sign
    sense = np.einsum("md,md->m", xb - xa, normal)
    normal = np.where(sense[:, None] < 0.0, -normal, normal)
    dim = normal.shape[1]
    if dim == 1:
        axis_cell = np.full(idx.size, grid.spacing[0])
        area = np.ones(idx.size)
    else:
        dominant = np.argmax(np.abs(normal), axis=1)
        axis_cell = grid.spacing[dominant]
        area = grid.spacing[1 - dominant]
    delta_n = np.abs(sense) - offset_cells * axis_cell
    return ContactGeometry(
        nodes=idx, normal=normal, delta_n=delta_n, area=area,
        mred=ma * mb / (ma + mb),
    )


def lumped_contact_dp(dp0, geom, model, dt):
    """Momentum change applied to field 0 (and removed from field 1).

    dp = (dp0 . n) n + S_slide A dt t  with T_c >= 0 fixing the tangent sign
    and S_slide = 0 (frictionless) or min(T_c, mu N_c) (coulomb); stick
    returns dp0 unconditionally.  Returns (dp, in_contact, N_c).
    """
    dpn = np.einsum("md,md->m", dp0, geom.normal)
    nc = -dpn / (geom.area * dt)
    if model.law == "stick":
        return dp0.copy(), np.ones(len(geom), dtype=bool), nc
    in_contact = (nc > 0.0) & (geom.delta_n < 0.0)
    tang = dp0 - dpn[:, None] * geom.normal
    tnorm = np.linalg.norm(tang, axis=1)
    that = np.where(tnorm[:, None] > _NORMAL_TINY, tang / np.maximum(tnorm, _NORMAL_TINY)[:, None], 0.0)
    tc = tnorm / (geom.area * dt)
    if model.law == "frictionless":
        slide = np.zeros_like(tc)
    else:
        slide = np.minimum(tc, model.mu * nc)
    dp = dpn[:, None] * geom.normal + (slide * geom.area * dt)[:, None] * that
    dp[~in_contact] = 0.0
    return dp, in_contact, nc


def detect_contact(fields, grid, dt, model):
    """Law-independent detection from current momenta.

    Returns (geometry, dp0, N_c, in_contact) where in_contact applies the
    combined criterion N_c > 0 and delta_n < 0.
    """
    geom = compute_geometry(fields, grid, model.offset_cells)
    dp0 = delta_p0(fields.mom, fields.mass, geom)
    nc = -np.einsum("md,md->m", dp0, geom.normal) / (geom.area * dt)
    return geom, dp0, nc, (nc > 0.0) & (geom.delta_n < 0.0)


def delta_p0(mom, mass, geom):
    """Momentum change moving both fields to the center-of-mass velocity."""
    i = geom.nodes
    return (mass[0, i, None] * mom[1, i] - mass[1, i, None] * mom[0, i]) / (
        (mass[0, i] + mass[1, i])[:, None]
    )


class IncrementalContact:
    """Per-step contact state threaded through the velocity-solve passes."""

    def __init__(self, geom, model, dt, mass):
        self.geom = geom
        self.model = model.validate()
        self.dt = dt
        self.ma = mass[0, geom.nodes]
        self.mb = mass[1, geom.nodes]
        self.dp_prior = np.zeros_like(geom.normal)
        self.dp_net = np.zeros_like(geom.normal)
        self.contact_count = 0

    def lumped_apply(self, mom, mass, init_ledgers=False):
        """Standard lumped contact on grid momenta (tasks 1.a / 3.a).

        With ``init_ledgers`` the per-node running totals for the chosen
        incremental method are (re)seeded from this evaluation.
        """
        geom = self.geom
        dp0 = delta_p0(mom, mass, geom)
        dp, in_contact, _ = lumped_contact_dp(dp0, geom, self.model, self.dt)
        mom[0, geom.nodes] += dp
        mom[1, geom.nodes] -= dp
        self.contact_count = int(in_contact.sum())
        if init_ledgers:
            if self.model.method == "net":
                self.dp_prior = dp0.copy()
                self.dp_net = dp.copy()
            else:
                self.dp_prior = dp0 - dp
        return dp

    def increment_pass(self, dv, ell):
        """Contact hook: correct the pass-ell velocity increment in place."""
        geom = self.geom
        i = geom.nodes
        dpl0 = geom.mred[:, None] * (dv[1, i] - dv[0, i])
        dp0 = self.dp_prior + dpl0
        dp, _, _ = lumped_contact_dp(dp0, geom, self.model, self.dt)
        if self.model.method == "net":
            eff = dp - self.dp_net
            dv[0, i] += eff / self.ma[:, None]
            dv[1, i] -= eff / self.mb[:, None]
            self.dp_prior = dp0
            self.dp_net = dp
        else:
            dv[0, i] += dp / self.ma[:, None]
            dv[1, i] -= dp / self.mb[:, None]
            self.dp_prior = dp0 - dp
        return dv
