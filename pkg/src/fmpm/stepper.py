"""USL time stepping: update-strains-last with FLIP or PIC-style particle updates.

Step layout (per material velocity field):
  1  scatter mass and momentum            1.a lumped contact on momenta
  2  scatter internal and body forces     2.a lumped BC values (reaction logged)
  3  momentum update p+ = p + f dt        3.a lumped contact on p+, ledgers seeded
  3.b full velocity solve (or lumped velocities and accelerations)
  4  particle position/velocity update
  5  velocity gradients, deformation and stress update (same grid velocities)
  6  housekeeping (wall advance, diagnostics)
"""

from dataclasses import dataclass, field

import numpy as np

from . import boundary, contact, engine, grid as gridmod, materials as matmod
from .backends import kernels
from .errors import ConfigError
from .shapes import build_shape_table

ENERGY_COLUMNS = ("time", "kinetic", "work", "total", "dissipation", "order", "contact_nodes")


@dataclass
class StepConfig:
    courant: float = 0.2
    update: str = "fmpm"           # flip | fmpm
    alpha: float = 0.5             # time-integration parameter for position updates
    shape: str = "ugimp"
    deform_domains: bool = False   # stretch uGIMP domains with the axis stretches of F
    fmpm: engine.FmpmOptions = field(default_factory=engine.FmpmOptions)
    body_force: object = None

    def validate(self):
        if self.courant <= 0:
            raise ConfigError("Courant number must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.update not in ("flip", "fmpm"):
            raise ConfigError(f"unknown update mode {self.update!r}")
        self.fmpm.validate()
        return self


@dataclass
class EnergyReport:
    time: float
    kinetic: float
    work: float
    total: float
    dissipation: float


def compute_timestep(courant, grid, mats, particles):
    """dt = C dx_min / max(wave speed, particle speed), refreshed every step."""
    vwave = max(m.wave_speed() for m in mats)
    if vwave <= 0:
        raise ConfigError("material wave speed must be positive")
    vmax = float(np.linalg.norm(particles.vel, axis=1).max()) if particles.n else 0.0
    return courant * grid.min_spacing / max(vwave, vmax)


def flip_update(particles, table, vel, acc, dt, alpha):
    """V += S a dt ; X += S v dt - (1-alpha) S a dt^2."""
    sv = kernels.gather_vec(table.nodes, table.weights, particles.matid, vel)
    sa = kernels.gather_vec(table.nodes, table.weights, particles.matid, acc)
    particles.vel += sa * dt
    particles.pos += sv * dt - (1.0 - alpha) * sa * dt * dt
    return particles


def fmpm_update(particles, table, vel, dt, alpha):
    """PIC-style replacement: V = S v ; X += (alpha V_new + (1-alpha) V_old) dt."""
    vnew = kernels.gather_vec(table.nodes, table.weights, particles.matid, vel)
    particles.pos += (alpha * vnew + (1.0 - alpha) * particles.vel) * dt
    particles.vel = vnew
    return particles


def velocity_gradient(particles, table, vel):
    """grad(V)_p = sum_i v_i (x) grad(S)_pi."""
    return kernels.gather_grad(table.nodes, table.grads, particles.matid, vel)


class Simulation:
    """Owns the evolving state of one problem and advances it step by step."""

    def __init__(self, grid, particles, mats, config, bcs=(), walls=(), contact_model=None):
        self.grid = grid
        self.particles = particles
        self.materials = list(mats) if isinstance(mats, (list, tuple)) else [mats]
        self.config = config.validate()
        self.static_bcs = list(bcs)
        self.walls = list(walls)
        self.contact_model = contact_model
        self.nfields = max(particles.nfields, len(self.materials))
        if contact_model is not None and self.nfields != 2:
            raise ConfigError("contact runs need exactly two material fields")
        self.fields = gridmod.NodalFields.empty(self.nfields, grid.nnodes, grid.dim)
        self.time = 0.0
        self.nstep = 0
        self.work = 0.0
        self.dt = 0.0
        self.bc_violation = 0.0
        self.last_order = 1
        self.last_metric = None
        self.last_contact_nodes = 0
        self._static_bcset = None
        self.history = []
        self._record()  # t = 0 reference row

    # -- energy accounting ---------------------------------------------------

    def kinetic_energy(self):
        return float(0.5 * np.sum(self.particles.mass * np.sum(self.particles.vel**2, axis=1)))

    def energies(self):
        k = self.kinetic_energy()
        total = k + self.work
        ref = self.history[0][3] if self.history else total
        diss = 1.0 - total / ref if ref != 0.0 else 0.0
        return EnergyReport(self.time, k, self.work, total, diss)

    def _record(self):
        e = self.energies()
        self.history.append(
            (e.time, e.kinetic, e.work, e.total, e.dissipation, self.last_order, self.last_contact_nodes)
        )

    # -- one USL step ----------------------------------------------------------

    def _material_of(self, fid):
        return self.materials[fid] if fid < len(self.materials) else self.materials[0]

    def _bcset(self):
        if not self.walls:
            if self._static_bcset is None:
                self._static_bcset = boundary.BCSet(self.static_bcs)
            return self._static_bcset
        conds = list(self.static_bcs)
        for wall in self.walls:
            conds.extend(boundary.project_moving_wall(wall, self.grid, self.fields, self.time))
        return boundary.BCSet(conds)

    def step(self):
        cfg = self.config
        parts = self.particles
        self.dt = dt = compute_timestep(cfg.courant, self.grid, self.materials, parts)
        table = build_shape_table(cfg.shape, self.grid, parts.pos, parts.halfsize)
        f = self.fields
        f.clear()

        # task 1: extrapolate mass and momentum
        gridmod.scatter_mass_momentum(parts, table, f)
        inc = None
        if self.contact_model is not None:
            gridmod.scatter_contact_moments(parts, table, f)
            geom = contact.compute_geometry(f, self.grid, self.contact_model.offset_cells)
            inc = contact.IncrementalContact(geom, self.contact_model, dt, f.mass)
            inc.lumped_apply(f.mom, f.mass)                      # task 1.a
        bcset = self._bcset()
        v0 = f.mom * f.inv_mass[:, :, None]
        boundary.apply_lumped_bcs(v0, bcset, active=f.active)
        f.mom = v0 * f.mass[:, :, None]

        # task 2: grid forces
        gridmod.scatter_forces(parts, table, f, body=cfg.body_force)

        # task 3: momentum update, contact, velocity solve
        f.mom = f.mom + f.force * dt
        use_full = cfg.update == "fmpm" and engine.periodic_schedule(
            self.nstep, cfg.courant, cfg.fmpm.periodic_cx
        )
        if inc is not None:
            inc.lumped_apply(f.mom, f.mass, init_ledgers=use_full)  # task 3.a
            self.last_contact_nodes = inc.contact_count
        else:
            self.last_contact_nodes = 0

        if use_full:
            vel, order, metric = engine.fmpm_velocity(
                f, table, parts.mass, parts.matid, cfg.fmpm,
                init_hook=lambda v: boundary.apply_lumped_bcs(v, bcset, active=f.active),
                bc_hook=(lambda dv: boundary.zero_bc_increment(dv, bcset)) if len(bcset) else None,
                contact_hook=inc.increment_pass if inc is not None else None,
            )
            self.last_order, self.last_metric = order, metric
            f.vel = vel
            fmpm_update(parts, table, vel, dt, cfg.alpha)            # task 4
            vgrad_source = vel
        else:
            v1 = f.mom * f.inv_mass[:, :, None]
            boundary.apply_lumped_bcs(v1, bcset, active=f.active)
            acc = (v1 - v0) / dt
            self.last_order, self.last_metric = 1, None
            f.vel = v1
            flip_update(parts, table, v1, acc, dt, cfg.alpha)        # task 4
            vgrad_source = v1

        if len(bcset):
            self.bc_violation = max(
                self.bc_violation, boundary.bc_violation(f.vel, bcset, f.active)
            )

        # task 5: strain and stress update with the same grid velocities
        lgrad = velocity_gradient(parts, table, vgrad_source)
        parts.F = matmod.update_deformation(parts.F, lgrad, dt)
        rate = 0.5 * (lgrad + np.swapaxes(lgrad, 1, 2))
        tau_old = parts.stress_work
        tau_el = np.empty_like(parts.stress)
        tau_tot = np.empty_like(parts.stress)
        for fid in range(self.nfields):
            sel = parts.matid == fid
            if not sel.any():
                continue
            mat = self._material_of(fid)
            sig, jac = mat.cauchy(parts.F[sel])
            tau_el[sel] = sig * jac[:, None, None]
            if mat.viscosity:
                sig = matmod.artificial_viscosity(sig.copy(), jac, rate[sel], mat, self.grid.min_spacing)
                tau_tot[sel] = sig * jac[:, None, None]
            else:
                tau_tot[sel] = tau_el[sel]
        self.work += float(np.sum(
            parts.vol0 * np.einsum("pij,pij->p", 0.5 * (tau_old + tau_el), rate)
        ) * dt)
        parts.stress = tau_tot
        parts.stress_work = tau_el

        # task 6: housekeeping
        if cfg.deform_domains and cfg.shape == "ugimp":
            stretch = np.sqrt(np.einsum("pdk,pdk->pk", parts.F, parts.F))
            # closed-form uGIMP weights hold only for lp <= cell/2
            parts.halfsize = np.minimum(parts.halfsize0 * stretch, 0.5 * self.grid.spacing)
        for wall in self.walls:
            wall.advance(self.time, dt)
        self.time += dt
        self.nstep += 1
        self._record()
        return self

    def run(self, duration, guard_speed=None):
        """Advance until ``duration``; returns False on blow-up under the guard.

        With a guard, element inversion, a particle leaving the grid, or a
        degenerate state counts as catastrophic failure instead of raising.
        """
        from .errors import FmpmError

        tiny = 1e-12 * max(duration, 1.0)
        while self.time < duration - tiny:
            if guard_speed is None:
                self.step()
            else:
                try:
                    with np.errstate(over="ignore", invalid="ignore"):
                        self.step()
                except (FloatingPointError, FmpmError, OverflowError):
                    return False
                speeds = np.linalg.norm(self.particles.vel, axis=1)
                if not np.all(np.isfinite(speeds)) or speeds.max() > guard_speed:
                    return False
        return True
