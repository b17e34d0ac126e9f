"""Numba kernels: serial @njit loops over particles.

Same contracts as ``numpy_impl``; accumulation order matches the numpy
backend (particle-major, slot-minor) so results agree to rounding.  Kernels
stay serial: deterministic reductions are required by the test suite and the
per-step work at desk scale does not warrant threading.
"""

import numpy as np
from numba import njit

NAME = "numba"

KIND_LINEAR = 0
KIND_UGIMP = 1
KIND_BSPLINE2 = 2


@njit(cache=True)
def _fill_axis(kind, x, lp, dx, o, nc, w, g):
    """Per-axis weights into w[:], g[:]; returns the base node index."""
    if kind == KIND_LINEAR:
        xi = (x - o) / dx
        b = int(np.floor(xi))
        if b < 0:
            b = 0
        if b > nc - 2:
            b = nc - 2
        f = xi - b
        w[0] = 1.0 - f
        w[1] = f
        g[0] = -1.0 / dx
        g[1] = 1.0 / dx
        return b
    if kind == KIND_UGIMP:
        b = int(np.floor((x - lp - o) / dx))
        if b < 0:
            b = 0
        if b > nc - 3:
            b = nc - 3
        for j in range(3):
            r = x - (o + (b + j) * dx)
            a = abs(r)
            sgn = 1.0 if r > 0.0 else (-1.0 if r < 0.0 else 0.0)
            if a >= dx + lp:
                w[j] = 0.0
                g[j] = 0.0
            elif a >= dx - lp:
                w[j] = (dx + lp - a) ** 2 / (4.0 * dx * lp)
                g[j] = -(dx + lp - a) / (2.0 * dx * lp) * sgn
            elif a >= lp:
                w[j] = 1.0 - a / dx
                g[j] = -sgn / dx
            else:
                w[j] = 1.0 - (r * r + lp * lp) / (2.0 * dx * lp)
                g[j] = -r / (dx * lp)
        return b
    # quadratic B-spline
    xi = (x - o) / dx
    b = int(np.floor(xi + 0.5)) - 1
    if b < 0:
        b = 0
    if b > nc - 3:
        b = nc - 3
    for j in range(3):
        t = xi - (b + j)
        a = abs(t)
        if a < 0.5:
            w[j] = 0.75 - t * t
            g[j] = -2.0 * t / dx
        elif a < 1.5:
            w[j] = 0.5 * (1.5 - a) ** 2
            g[j] = -(1.5 - a) * (1.0 if t > 0.0 else -1.0) / dx
        else:
            w[j] = 0.0
            g[j] = 0.0
    return b


@njit(cache=True)
def _sample(kind, pos, half, spacing, origin, counts, width):
    npart, dim = pos.shape
    k = width**dim
    nodes = np.zeros((npart, k), dtype=np.int64)
    weights = np.zeros((npart, k))
    grads = np.zeros((npart, k, dim))
    wax = np.zeros((2, 3))
    gax = np.zeros((2, 3))
    base = np.zeros(2, dtype=np.int64)
    for p in range(npart):
        for d in range(dim):
            base[d] = _fill_axis(
                kind, pos[p, d], half[p, d], spacing[d], origin[d], counts[d], wax[d], gax[d]
            )
        if dim == 1:
            for a in range(width):
                nodes[p, a] = base[0] + a
                weights[p, a] = wax[0, a]
                grads[p, a, 0] = gax[0, a]
        else:
            slot = 0
            for a in range(width):
                for b in range(width):
                    nodes[p, slot] = (base[0] + a) + counts[0] * (base[1] + b)
                    weights[p, slot] = wax[0, a] * wax[1, b]
                    grads[p, slot, 0] = gax[0, a] * wax[1, b]
                    grads[p, slot, 1] = wax[0, a] * gax[1, b]
                    slot += 1
    return nodes, weights, grads


def sample_shapes(kind, pos, half, spacing, origin, counts):
    width = 2 if kind == KIND_LINEAR else 3
    return _sample(kind, pos, half, spacing, origin, counts, width)


@njit(cache=True)
def scatter_mass_momentum(nodes, weights, pmass, pvel, matid, nfields, nnodes):
    npart, k = nodes.shape
    dim = pvel.shape[1]
    m = np.zeros((nfields, nnodes))
    p = np.zeros((nfields, nnodes, dim))
    for q in range(npart):
        f = matid[q]
        for s in range(k):
            wm = weights[q, s] * pmass[q]
            i = nodes[q, s]
            m[f, i] += wm
            for d in range(dim):
                p[f, i, d] += wm * pvel[q, d]
    return m, p


@njit(cache=True)
def scatter_moments(nodes, weights, grads, pmass, ppos, matid, nfields, nnodes):
    npart, k = nodes.shape
    dim = ppos.shape[1]
    mx = np.zeros((nfields, nnodes, dim))
    gm = np.zeros((nfields, nnodes, dim))
    for q in range(npart):
        f = matid[q]
        for s in range(k):
            i = nodes[q, s]
            wm = weights[q, s] * pmass[q]
            for d in range(dim):
                mx[f, i, d] += wm * ppos[q, d]
                gm[f, i, d] += grads[q, s, d] * pmass[q]
    return mx, gm


@njit(cache=True)
def scatter_forces(nodes, weights, grads, kirch, vol0, pmass, body, matid, nfields, nnodes):
    npart, k = nodes.shape
    dim = grads.shape[2]
    f = np.zeros((nfields, nnodes, dim))
    for q in range(npart):
        fld = matid[q]
        for s in range(k):
            i = nodes[q, s]
            for a in range(dim):
                acc = weights[q, s] * pmass[q] * body[a]
                for b in range(dim):
                    acc -= vol0[q] * kirch[q, a, b] * grads[q, s, b]
                f[fld, i, a] += acc
    return f


@njit(cache=True)
def pic_roundtrip(nodes, weights, pmass, matid, vel):
    npart, k = nodes.shape
    nfields, nnodes, dim = vel.shape
    out = np.zeros((nfields, nnodes, dim))
    u = np.zeros(2)
    for q in range(npart):
        f = matid[q]
        for d in range(dim):
            u[d] = 0.0
        for s in range(k):
            i = nodes[q, s]
            for d in range(dim):
                u[d] += weights[q, s] * vel[f, i, d]
        for s in range(k):
            i = nodes[q, s]
            wm = weights[q, s] * pmass[q]
            for d in range(dim):
                out[f, i, d] += wm * u[d]
    return out


@njit(cache=True)
def gather_vec(nodes, weights, matid, vel):
    npart, k = nodes.shape
    dim = vel.shape[2]
    out = np.zeros((npart, dim))
    for q in range(npart):
        f = matid[q]
        for s in range(k):
            i = nodes[q, s]
            for d in range(dim):
                out[q, d] += weights[q, s] * vel[f, i, d]
    return out


@njit(cache=True)
def gather_grad(nodes, grads, matid, vel):
    npart, k = nodes.shape
    dim = vel.shape[2]
    out = np.zeros((npart, dim, dim))
    for q in range(npart):
        f = matid[q]
        for s in range(k):
            i = nodes[q, s]
            for a in range(dim):
                for b in range(dim):
                    out[q, a, b] += vel[f, i, a] * grads[q, s, b]
    return out
