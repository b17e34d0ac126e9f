"""Incremental approximate full-mass-matrix velocity solver.

Grid velocities of order k are accumulated as v(k) = sum of increments
dv(l), where each increment is obtained from the previous one by one
grid->particle->grid round trip: dv(l) = dv(l-1) - S+ S dv(l-1).  Hooks run
on each increment, in order: boundary-condition zeroing, then contact
adjustment, then the optional dynamic-convergence exit.  Blending with a
lower-order mass matrix scales the increment by alpha on every m-th pass.
"""

from dataclasses import dataclass

import numpy as np

from .backends import kernels
from .errors import ConfigError

DENSE_ORACLE_MAX_NODES = 300

METRICS = ("none", "means", "changes")


@dataclass
class FmpmOptions:
    """Velocity-solve configuration: order, blending, periodic and dynamic modes."""

    order: int = 1
    blend_alpha: float = 1.0
    blend_m: int = 1
    periodic_cx: float = 0.0
    metric: str = "none"
    threshold: float = 0.0
    eps_fraction: float = 0.01

    def validate(self):
        if self.order < 1:
            raise ConfigError("order k must be >= 1")
        if not 0.0 < self.blend_alpha <= 1.0:
            raise ConfigError("blend alpha must be in (0, 1]")
        if self.blend_m < 1:
            raise ConfigError("blend base m must be >= 1")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}")
        if self.metric != "none" and self.threshold <= 0.0:
            raise ConfigError("dynamic metric needs threshold > 0")
        return self


def _scaled_pass(ell, opts):
    return opts.blend_m == 1 or (ell % opts.blend_m) == 1


def blend_coefficients(k, alpha, m):
    """Series coefficients c_l multiplying each power term, l = 1..k."""
    coeffs = np.ones(k)
    cur = 1.0
    for ell in range(2, k + 1):
        if m == 1 or (ell % m) == 1:
            cur *= alpha
        coeffs[ell - 1] = cur
    return coeffs


def convergence_metric(dv, vstar, kind, eps_fraction=0.01, active=None):
    """Scalar smallness measure of the latest increment against the total.

    means:   sum ||dv_i|| / sum ||v_i||
    changes: mean over active nodes of ||dv_i|| / (||v_i|| + eps),
             eps = eps_fraction * max ||v_i||
    """
    dv = np.asarray(dv, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    nd = np.linalg.norm(dv, axis=-1)
    nv = np.linalg.norm(vstar, axis=-1)
    if active is not None:
        nd = nd[active]
        nv = nv[active]
    if nd.size == 0:
        raise ConfigError("convergence metric needs at least one active node")
    if kind == "means":
        denom = nv.sum()
        if denom == 0.0:
            return 0.0 if nd.sum() == 0.0 else np.inf
        return float(nd.sum() / denom)
    if kind == "changes":
        vmax = nv.max()
        if vmax == 0.0:
            return 0.0 if nd.sum() == 0.0 else np.inf
        eps = eps_fraction * vmax
        return float(np.mean(nd / (nv + eps)))
    raise ConfigError(f"unknown metric kind {kind!r}")


def fmpm_velocity(fields, table, pmass, matid, opts,
                  init_hook=None, bc_hook=None, contact_hook=None):
    """Run the velocity-solve loop.

    Returns (v (F,n,dim), achieved order, exit metric value or None).
    Starts from the lumped velocity v(1) = p / m on active nodes;
    ``init_hook`` applies lumped BC values to that initial field (lumped
    contact is expected to have been applied to the momenta already).
    ``bc_hook(dv)`` zeroes controlled directions of each increment and
    ``contact_hook(dv, ell)`` keeps increments consistent with contact laws.
    """
    opts.validate()
    v1 = fields.mom * fields.inv_mass[:, :, None]
    if init_hook is not None:
        init_hook(v1)
    vstar = v1.copy()
    if opts.order == 1:
        return vstar, 1, None
    vprev = v1.copy()
    inv_m = fields.inv_mass[:, :, None]
    val = None
    for ell in range(2, opts.order + 1):
        vnext = kernels.pic_roundtrip(table.nodes, table.weights, pmass, matid, vprev) * inv_m
        vprev = vprev - vnext
        if opts.blend_alpha != 1.0 and _scaled_pass(ell, opts):
            vprev *= opts.blend_alpha
        if bc_hook is not None:
            bc_hook(vprev)
        if contact_hook is not None:
            contact_hook(vprev, ell)
        vstar += vprev
        if opts.metric != "none":
            val = convergence_metric(vprev, vstar, opts.metric, opts.eps_fraction, fields.active)
            if val < opts.threshold:
                return vstar, ell, val
    return vstar, opts.order, val


def legacy_fmpm_velocity(fields, table, pmass, matid, k):
    """Binomial-weighted form of the same series (test oracle, alpha = 1).

    v = sum_l (-1)^(l+1) vs_l with vs_1 = k v(1) and
    vs_l = ((k+1-l)/l) S+ S vs_(l-1).
    """
    if k < 1:
        raise ConfigError("order k must be >= 1")
    inv_m = fields.inv_mass[:, :, None]
    vs = float(k) * fields.mom * inv_m
    out = vs.copy()
    for ell in range(2, k + 1):
        vs = ((k + 1.0 - ell) / ell) * kernels.pic_roundtrip(
            table.nodes, table.weights, pmass, matid, vs
        ) * inv_m
        out += vs if ell % 2 == 1 else -vs
    return out


def dense_matrices(fields, table, pmass, matid, field_index):
    """Explicit S (restricted to one field's active nodes), lumped masses, A.

    Small instances only; the dense path is the independent check of the
    matrix-free loop.
    """
    act = np.flatnonzero(fields.active[field_index])
    if act.size > DENSE_ORACLE_MAX_NODES:
        raise ConfigError(f"dense oracle refused: {act.size} active nodes")
    col = -np.ones(fields.mass.shape[1], dtype=np.int64)
    col[act] = np.arange(act.size)
    rows = np.flatnonzero(matid == field_index)
    smat = np.zeros((rows.size, act.size))
    for r, p in enumerate(rows):
        for s in range(table.width):
            c = col[table.nodes[p, s]]
            if c >= 0:
                smat[r, c] += table.weights[p, s]
    mvec = smat.T @ pmass[rows]
    splus = (smat * pmass[rows][:, None]).T / mvec[:, None]
    amat = np.eye(act.size) - splus @ smat
    return act, smat, mvec, amat


def dense_oracle_velocity(fields, table, pmass, matid, k, alpha=1.0, m=1):
    """Truncated-series velocities via explicit matrices (per field, no hooks)."""
    if k < 1:
        raise ConfigError("order k must be >= 1")
    coeffs = blend_coefficients(k, alpha, m)
    out = np.zeros_like(fields.mom)
    for f in range(fields.nfields):
        act, _, mvec, amat = dense_matrices(fields, table, pmass, matid, f)
        v = fields.mom[f, act] / mvec[:, None]
        total = coeffs[0] * v
        for ell in range(2, k + 1):
            v = amat @ v
            total += coeffs[ell - 1] * v
        out[f, act] = total
    return out


def full_mass_residual(fields, table, pmass, matid, v, field_index=0):
    """|| m_full v - p || on active nodes (monotone in k for good instances)."""
    act, smat, _, _ = dense_matrices(fields, table, pmass, matid, field_index)
    mfull = smat.T @ (smat * pmass[matid == field_index][:, None])
    r = mfull @ v[field_index, act] - fields.mom[field_index, act]
    return float(np.linalg.norm(r))


def periodic_interval(courant, periodic_cx):
    """Steps between full velocity solves; 1 when the periodic mode is off."""
    if periodic_cx <= 0.0:
        return 1
    if courant <= 0.0:
        raise ConfigError("Courant number must be positive")
    return max(1, int(round(periodic_cx / courant)))


def periodic_schedule(step_index, courant, periodic_cx):
    """True when this step runs the full velocity solve."""
    return step_index % periodic_interval(courant, periodic_cx) == 0
