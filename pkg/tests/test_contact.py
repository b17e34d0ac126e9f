import numpy as np
import pytest

from fmpm import ConfigError, ContactModel, Grid, IncrementalContact, NodalFields, Particles
from fmpm import build_shape_table, detect_contact, lumped_contact_dp
from fmpm.contact import ContactGeometry, compute_geometry
from fmpm.grid import scatter_contact_moments, scatter_mass_momentum


def two_field_instance(v0=1.0, v1=-1.0, x0=0.9, x1=1.1):
    """Two 1D particles of different materials straddling a node."""
    g = Grid.make(1.0, 6)
    parts = Particles(mass=[1.0, 1.0], pos=[[x0 + 1.0], [x1 + 1.0]], vel=[[v0], [v1]],
                      halfsize=[[0.25], [0.25]], matid=[0, 1])
    table = build_shape_table("ugimp", g, parts.pos, parts.halfsize)
    fields = NodalFields.empty(2, g.nnodes, 1)
    scatter_mass_momentum(parts, table, fields)
    scatter_contact_moments(parts, table, fields)
    return g, parts, table, fields


def test_comoving_fields_no_contact():
    g, parts, table, fields = two_field_instance(v0=0.5, v1=0.5)
    geom, dp0, nc, in_contact = detect_contact(fields, g, dt=0.1, model=ContactModel(law="coulomb"))
    np.testing.assert_allclose(dp0, 0.0, atol=1e-15)
    np.testing.assert_allclose(nc, 0.0, atol=1e-14)
    assert not in_contact.any()


def test_approaching_overlapping_fields_in_contact():
    g, parts, table, fields = two_field_instance(v0=1.0, v1=-1.0)
    geom, dp0, nc, in_contact = detect_contact(fields, g, dt=0.1, model=ContactModel(law="coulomb"))
    shared = np.flatnonzero(geom.nodes == 2)  # node between the particles
    assert shared.size == 1
    i = shared[0]
    assert nc[i] > 0 and geom.delta_n[i] < 0 and in_contact[i]
    # normal points from field 0 toward field 1
    assert geom.normal[i, 0] > 0


def test_separating_fields_not_in_contact_regardless_of_overlap():
    g, parts, table, fields = two_field_instance(v0=-1.0, v1=1.0)
    geom, dp0, nc, in_contact = detect_contact(fields, g, dt=0.1, model=ContactModel(law="coulomb"))
    assert (nc <= 1e-12).all()
    assert not in_contact.any()


def _unit_geom():
    return ContactGeometry(nodes=np.array([0]), normal=np.array([[1.0, 0.0]]),
                           delta_n=np.array([-0.1]), area=np.array([1.0]),
                           mred=np.array([0.5]))


def test_lumped_dp_stick_restores_center_of_mass():
    dp0 = np.array([[0.3, -0.2]])
    dp, in_contact, nc = lumped_contact_dp(dp0, _unit_geom(), ContactModel(law="stick"), dt=0.1)
    np.testing.assert_allclose(dp, dp0)
    assert in_contact.all()


def test_lumped_dp_frictionless_keeps_normal_part_only():
    dp0 = np.array([[-0.3, 0.4]])
    dp, in_contact, nc = lumped_contact_dp(dp0, _unit_geom(), ContactModel(law="frictionless"), dt=0.1)
    assert in_contact[0] and nc[0] > 0
    np.testing.assert_allclose(dp, [[-0.3, 0.0]])


def test_lumped_dp_coulomb_slide_cap():
    # mu=0.8 with T_c=2, N_c=1 -> S_slide = min(2, 0.8) = 0.8 (slip regime)
    dt, area = 0.1, 1.0
    dp0 = np.array([[-1.0 * area * dt, 2.0 * area * dt]])  # N_c = 1, T_c = 2
    dp, in_contact, nc = lumped_contact_dp(dp0, _unit_geom(), ContactModel(law="coulomb", mu=0.8), dt=dt)
    np.testing.assert_allclose(nc, [1.0])
    np.testing.assert_allclose(dp, [[-0.1, 0.8 * area * dt]])
    # high friction sticks at T_c instead
    dp2, _, _ = lumped_contact_dp(dp0, _unit_geom(), ContactModel(law="coulomb", mu=5.0), dt=dt)
    np.testing.assert_allclose(dp2, dp0)


def test_incremental_init_ledgers():
    g, parts, table, fields = two_field_instance()
    model = ContactModel(law="stick", method="net")
    geom = compute_geometry(fields, g, model.offset_cells)
    inc = IncrementalContact(geom, model, dt=0.1, mass=fields.mass)
    mom0 = fields.mom.copy()
    from fmpm.contact import delta_p0

    dp0_before = delta_p0(fields.mom, fields.mass, geom)
    inc.lumped_apply(fields.mom, fields.mass, init_ledgers=True)
    np.testing.assert_allclose(inc.dp_prior, dp0_before)
    np.testing.assert_allclose(inc.dp_net, dp0_before)  # stick: dp = dp0
    # momentum conserved by the application
    np.testing.assert_allclose(fields.mom.sum(axis=0), mom0.sum(axis=0), atol=1e-15)
    # evolving initialises prior to dp0 - dp = 0 under stick
    fields2 = NodalFields.empty(2, g.nnodes, 1)
    scatter_mass_momentum(parts, table, fields2)
    scatter_contact_moments(parts, table, fields2)
    inc2 = IncrementalContact(geom, ContactModel(law="stick", method="evolving"),
                              dt=0.1, mass=fields2.mass)
    inc2.lumped_apply(fields2.mom, fields2.mass, init_ledgers=True)
    np.testing.assert_allclose(inc2.dp_prior, 0.0, atol=1e-15)


def test_no_contact_detected_leaves_everything_untouched():
    g, parts, table, fields = two_field_instance(v0=-1.0, v1=1.0)  # separating
    model = ContactModel(law="coulomb", mu=0.5, method="net")
    geom = compute_geometry(fields, g, model.offset_cells)
    inc = IncrementalContact(geom, model, dt=0.1, mass=fields.mass)
    mom0 = fields.mom.copy()
    inc.lumped_apply(fields.mom, fields.mass, init_ledgers=True)
    np.testing.assert_allclose(fields.mom, mom0)
    assert inc.contact_count == 0
    np.testing.assert_allclose(inc.dp_net, 0.0)


def test_quiescent_increment_pass_is_a_no_op():
    g, parts, table, fields = two_field_instance()
    model = ContactModel(law="stick", method="net")
    geom = compute_geometry(fields, g, model.offset_cells)
    inc = IncrementalContact(geom, model, dt=0.1, mass=fields.mass)
    dv = np.zeros_like(fields.mom)
    inc.increment_pass(dv, 2)
    np.testing.assert_allclose(dv, 0.0)


@pytest.mark.parametrize("method", ["net", "evolving"])
def test_increment_pass_conserves_momentum(method):
    rng = np.random.default_rng(5)
    g, parts, table, fields = two_field_instance()
    model = ContactModel(law="coulomb", mu=0.4, method=method)
    geom = compute_geometry(fields, g, model.offset_cells)
    inc = IncrementalContact(geom, model, dt=0.1, mass=fields.mass)
    inc.lumped_apply(fields.mom, fields.mass, init_ledgers=True)
    for ell in range(2, 6):
        dv = rng.normal(size=fields.mom.shape) * fields.active[..., None]
        before = (fields.mass[..., None] * dv).sum(axis=(0, 1))
        inc.increment_pass(dv, ell)
        after = (fields.mass[..., None] * dv).sum(axis=(0, 1))
        np.testing.assert_allclose(after, before, atol=1e-13)


@pytest.mark.parametrize("method", ["net", "evolving"])
def test_stick_pass_reverts_to_center_of_mass(method):
    g, parts, table, fields = two_field_instance()
    model = ContactModel(law="stick", method=method)
    geom = compute_geometry(fields, g, model.offset_cells)
    inc = IncrementalContact(geom, model, dt=0.1, mass=fields.mass)
    inc.lumped_apply(fields.mom, fields.mass, init_ledgers=True)
    rng = np.random.default_rng(2)
    i = geom.nodes
    ma, mb = fields.mass[0, i, None], fields.mass[1, i, None]
    for ell in range(2, 7):
        dv = rng.normal(size=fields.mom.shape) * fields.active[..., None]
        com = (ma * dv[0, i] + mb * dv[1, i]) / (ma + mb)
        inc.increment_pass(dv, ell)
        np.testing.assert_allclose(dv[0, i], com, atol=1e-13)
        np.testing.assert_allclose(dv[1, i], com, atol=1e-13)


def test_three_materials_rejected():
    g = Grid.make(1.0, 6)
    parts = Particles(mass=[1.0, 1.0, 1.0], pos=[[1.9], [2.1], [2.3]], vel=[[0.0]] * 3,
                      halfsize=[[0.25]] * 3, matid=[0, 1, 2])
    table = build_shape_table("ugimp", g, parts.pos, parts.halfsize)
    fields = NodalFields.empty(3, g.nnodes, 1)
    scatter_mass_momentum(parts, table, fields)
    scatter_contact_moments(parts, table, fields)
    with pytest.raises(ConfigError):
        compute_geometry(fields, g, 0.8)


def test_model_validation():
    with pytest.raises(ConfigError):
        ContactModel(law="glue").validate()
    with pytest.raises(ConfigError):
        ContactModel(mu=-0.1).validate()
    with pytest.raises(ConfigError):
        ContactModel(method="both").validate()
