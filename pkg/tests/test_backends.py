"""The numba kernels and the numpy fallback must agree to rounding."""

import numpy as np
import pytest

from fmpm.backends import load_backend

np_impl = load_backend("numpy")
try:
    nb_impl = load_backend("numba")
except ImportError:  # pragma: no cover
    nb_impl = None

needs_numba = pytest.mark.skipif(nb_impl is None, reason="numba unavailable")


def instance(dim, kind_id, n=60, seed=0):
    rng = np.random.default_rng(seed)
    counts = np.array([14] * dim, dtype=np.int64)
    spacing = np.ones(dim)
    origin = np.zeros(dim)
    pos = rng.uniform(2.0, 11.0, (n, dim))
    half = np.full((n, dim), 0.25)
    mass = rng.uniform(0.5, 2.0, n)
    vel = rng.normal(size=(n, dim))
    matid = rng.integers(0, 2, n)
    return counts, spacing, origin, pos, half, mass, vel, matid


@needs_numba
@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("kind_id", [0, 1, 2])
def test_sampling_agrees(dim, kind_id):
    counts, spacing, origin, pos, half, *_ = instance(dim, kind_id)
    a = np_impl.sample_shapes(kind_id, pos, half, spacing, origin, counts)
    b = nb_impl.sample_shapes(kind_id, pos, half, spacing, origin, counts)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_allclose(a[1], b[1], atol=1e-14)
    np.testing.assert_allclose(a[2], b[2], atol=1e-14)


@needs_numba
@pytest.mark.parametrize("dim", [1, 2])
def test_transfers_agree(dim):
    counts, spacing, origin, pos, half, mass, vel, matid = instance(dim, 1)
    nnodes = int(np.prod(counts))
    nodes, w, g = np_impl.sample_shapes(1, pos, half, spacing, origin, counts)
    for be in (np_impl, nb_impl):
        m, p = be.scatter_mass_momentum(nodes, w, mass, vel, matid, 2, nnodes)
        if be is np_impl:
            m0, p0 = m, p
    np.testing.assert_allclose(m, m0, rtol=1e-14)
    np.testing.assert_allclose(p, p0, rtol=1e-14, atol=1e-16)

    rng = np.random.default_rng(1)
    vfield = rng.normal(size=(2, nnodes, dim))
    a = np_impl.pic_roundtrip(nodes, w, mass, matid, vfield)
    b = nb_impl.pic_roundtrip(nodes, w, mass, matid, vfield)
    np.testing.assert_allclose(a, b, atol=1e-13)

    ga = np_impl.gather_vec(nodes, w, matid, vfield)
    gb = nb_impl.gather_vec(nodes, w, matid, vfield)
    np.testing.assert_allclose(ga, gb, atol=1e-13)

    la = np_impl.gather_grad(nodes, g, matid, vfield)
    lb = nb_impl.gather_grad(nodes, g, matid, vfield)
    np.testing.assert_allclose(la, lb, atol=1e-13)

    kirch = rng.normal(size=(len(pos), dim, dim))
    vol0 = rng.uniform(0.5, 1.5, len(pos))
    body = rng.normal(size=dim)
    fa = np_impl.scatter_forces(nodes, w, g, kirch, vol0, mass, body, matid, 2, nnodes)
    fb = nb_impl.scatter_forces(nodes, w, g, kirch, vol0, mass, body, matid, 2, nnodes)
    np.testing.assert_allclose(fa, fb, atol=1e-13)

    ma, gma = np_impl.scatter_moments(nodes, w, g, mass, pos, matid, 2, nnodes)
    mb, gmb = nb_impl.scatter_moments(nodes, w, g, mass, pos, matid, 2, nnodes)
    np.testing.assert_allclose(ma, mb, atol=1e-13)
    np.testing.assert_allclose(gma, gmb, atol=1e-13)


def test_env_flag_selects_backend(monkeypatch):
    import importlib

    import fmpm.backends as B

    monkeypatch.setenv("FMPM_BACKEND", "numpy")
    mod = importlib.reload(B)
    assert mod.backend_name == "numpy"
    monkeypatch.delenv("FMPM_BACKEND")
    importlib.reload(B)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        load_backend("cuda")
