"""Pure-numpy kernels: the reference/fallback backend.

All functions operate on the padded shape-table layout produced by
``sample_shapes``: per particle a fixed-width list of node ids with weights
and weight gradients, zero-padded (node id 0, weight 0, gradient 0) so the
vectorised forms need no per-particle counts.  ``matid`` routes each particle
into its material velocity field.
"""

import numpy as np

NAME = "numpy"

KIND_LINEAR = 0
KIND_UGIMP = 1
KIND_BSPLINE2 = 2


# ---------------------------------------------------------------------------
# shape sampling


def _axis_linear(x, dx, o, nc):
    xi = (x - o) / dx
    base = np.clip(np.floor(xi).astype(np.int64), 0, nc - 2)
    f = xi - base
    w = np.stack([1.0 - f, f], axis=1)
    g = np.empty_like(w)
    g[:, 0] = -1.0 / dx
    g[:, 1] = 1.0 / dx
    return base, w, g


def _axis_ugimp(x, lp, dx, o, nc):
    base = np.clip(np.floor((x - lp - o) / dx).astype(np.int64), 0, nc - 3)
    r = x[:, None] - (o + (base[:, None] + np.arange(3)) * dx)
    a = np.abs(r)
    sgn = np.sign(r)
    outer = (a >= dx - lp[:, None]) & (a < dx + lp[:, None])
    mid = (a >= lp[:, None]) & (a < dx - lp[:, None])
    inner = a < lp[:, None]
    lp2 = lp[:, None]
    w = np.where(outer, (dx + lp2 - a) ** 2 / (4.0 * dx * lp2), 0.0)
    w = np.where(mid, 1.0 - a / dx, w)
    w = np.where(inner, 1.0 - (r * r + lp2 * lp2) / (2.0 * dx * lp2), w)
    g = np.where(outer, -(dx + lp2 - a) / (2.0 * dx * lp2) * sgn, 0.0)
    g = np.where(mid, -sgn / dx, g)
    g = np.where(inner, -r / (dx * lp2), g)
    return base, w, g


def _axis_bspline2(x, dx, o, nc):
    xi = (x - o) / dx
    base = np.clip(np.floor(xi + 0.5).astype(np.int64) - 1, 0, nc - 3)
    t = xi[:, None] - (base[:, None] + np.arange(3))
    a = np.abs(t)
    near = a < 0.5
    far = (a >= 0.5) & (a < 1.5)
    w = np.where(near, 0.75 - t * t, 0.0)
    w = np.where(far, 0.5 * (1.5 - a) ** 2, w)
    g = np.where(near, -2.0 * t / dx, 0.0)
    g = np.where(far, -(1.5 - a) * np.sign(t) / dx, g)
    return base, w, g


def _axis_weights(kind, x, lp, dx, o, nc):
    if kind == KIND_LINEAR:
        return _axis_linear(x, dx, o, nc)
    if kind == KIND_UGIMP:
        return _axis_ugimp(x, lp, dx, o, nc)
    if kind == KIND_BSPLINE2:
        return _axis_bspline2(x, dx, o, nc)
    raise ValueError(f"unknown shape kind id {kind}")


def sample_shapes(kind, pos, half, spacing, origin, counts):
    """Evaluate weights/gradients for every particle.

    Returns (nodes, weights, grads) with shapes (N, K), (N, K), (N, K, dim)
    where K = width**dim and width is 2 for linear, 3 otherwise.
    """
    npart, dim = pos.shape
    per = [
        _axis_weights(kind, pos[:, d], half[:, d], spacing[d], origin[d], counts[d])
        for d in range(dim)
    ]
    if dim == 1:
        base, w, g = per[0]
        nodes = base[:, None] + np.arange(w.shape[1])
        return nodes, w.copy(), g[:, :, None].copy()
    (bx, wx, gx), (by, wy, gy) = per
    width = wx.shape[1]
    ia, ib = np.meshgrid(np.arange(width), np.arange(width), indexing="ij")
    ia, ib = ia.ravel(), ib.ravel()
    nodes = (bx[:, None] + ia) + counts[0] * (by[:, None] + ib)
    weights = wx[:, ia] * wy[:, ib]
    grads = np.empty((npart, width * width, 2))
    grads[:, :, 0] = gx[:, ia] * wy[:, ib]
    grads[:, :, 1] = wx[:, ia] * gy[:, ib]
    return nodes, weights, grads


# ---------------------------------------------------------------------------
# particle <-> grid transfers


def scatter_mass_momentum(nodes, weights, pmass, pvel, matid, nfields, nnodes):
    dim = pvel.shape[1]
    m = np.zeros((nfields, nnodes))
    p = np.zeros((nfields, nnodes, dim))
    wm = weights * pmass[:, None]
    np.add.at(m, (matid[:, None], nodes), wm)
    np.add.at(
        p,
        (matid[:, None, None], nodes[:, :, None], np.arange(dim)[None, None, :]),
        wm[:, :, None] * pvel[:, None, :],
    )
    return m, p


def scatter_moments(nodes, weights, grads, pmass, ppos, matid, nfields, nnodes):
    """Mass-weighted positions and mass gradients per field (contact geometry)."""
    dim = ppos.shape[1]
    mx = np.zeros((nfields, nnodes, dim))
    gm = np.zeros((nfields, nnodes, dim))
    ax = np.arange(dim)[None, None, :]
    idx = (matid[:, None, None], nodes[:, :, None], ax)
    np.add.at(mx, idx, (weights * pmass[:, None])[:, :, None] * ppos[:, None, :])
    np.add.at(gm, idx, grads * pmass[:, None, None])
    return mx, gm


def scatter_forces(nodes, weights, grads, kirch, vol0, pmass, body, matid, nfields, nnodes):
    dim = grads.shape[2]
    f = np.zeros((nfields, nnodes, dim))
    # internal: f_a -= V0 * tau_ab * dS/dx_b ; body: f_a += S * M * B_a
    internal = -np.einsum("pab,pkb->pka", kirch * vol0[:, None, None], grads)
    vals = internal + (weights * pmass[:, None])[:, :, None] * body[None, None, :]
    np.add.at(
        f,
        (matid[:, None, None], nodes[:, :, None], np.arange(dim)[None, None, :]),
        vals,
    )
    return f


def pic_roundtrip(nodes, weights, pmass, matid, vel):
    """One grid->particle->grid pass: out_i = sum_p M_p S_pi (sum_j S_pj v_j).

    ``vel`` is (nfields, nnodes, dim); the per-field lumped-mass division is
    left to the caller.
    """
    nfields, nnodes, dim = vel.shape
    upart = np.einsum("pk,pkd->pd", weights, vel[matid[:, None], nodes])
    out = np.zeros_like(vel)
    np.add.at(
        out,
        (matid[:, None, None], nodes[:, :, None], np.arange(dim)[None, None, :]),
        (weights * pmass[:, None])[:, :, None] * upart[:, None, :],
    )
    return out


def gather_vec(nodes, weights, matid, vel):
    return np.einsum("pk,pkd->pd", weights, vel[matid[:, None], nodes])


def gather_grad(nodes, grads, matid, vel):
    # L[a,b] = sum_i v_i[a] * dS_i/dx_b
    return np.einsum("pka,pkb->pab", vel[matid[:, None], nodes], grads)
