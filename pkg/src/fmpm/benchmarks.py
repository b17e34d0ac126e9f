"""Desk-scale verification problems and their runners.

Each runner builds a Simulation from a default configuration (overridable
through the flat INI config), advances it, and returns a plain dict of
results; CSV writing is separate.  All runs are deterministic: serial
kernels, fixed particle order, no randomness outside the oracle suite's
seeded instances.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import engine
from .boundary import MovingWall, VelocityBC
from .contact import ContactModel
from .errors import ConfigError
from .grid import Grid, NodalFields, Particles, scatter_mass_momentum
from .materials import Material
from .shapes import build_shape_table
from .stepper import Simulation, StepConfig


# ---------------------------------------------------------------------------
# method tokens: flip | fmpm(4) | fmpm(40,alpha=0.8,m=2) | periodic(4,cx=2)


@dataclass(frozen=True)
class MethodSpec:
    update: str = "fmpm"
    order: int = 1
    blend_alpha: float = 1.0
    blend_m: int = 1
    periodic_cx: float = 0.0

    def label(self):
        if self.update == "flip":
            return "flip"
        parts = [f"fmpm({self.order}"]
        if self.blend_alpha != 1.0:
            parts.append(f",alpha={self.blend_alpha},m={self.blend_m}")
        if self.periodic_cx > 0:
            parts.append(f",cx={self.periodic_cx}")
        return "".join(parts) + ")"

    def options(self, **extra):
        return engine.FmpmOptions(
            order=self.order, blend_alpha=self.blend_alpha, blend_m=self.blend_m,
            periodic_cx=self.periodic_cx, **extra,
        )


def parse_method(token):
    tok = token.strip().lower()
    if tok == "flip":
        return MethodSpec(update="flip")
    for head, cx_default in (("fmpm", 0.0), ("periodic", 2.0)):
        if tok.startswith(head + "(") and tok.endswith(")"):
            body = tok[len(head) + 1:-1]
            items = [s.strip() for s in body.split(",") if s.strip()]
            if not items:
                raise ConfigError(f"method {token!r} needs an order")
            spec = dict(order=int(items[0]), periodic_cx=cx_default if head == "periodic" else 0.0)
            for item in items[1:]:
                key, _, val = item.partition("=")
                key = key.strip()
                if key in ("alpha", "a"):
                    spec["blend_alpha"] = float(val)
                elif key == "m":
                    spec["blend_m"] = int(val)
                elif key == "cx":
                    spec["periodic_cx"] = float(val)
                else:
                    raise ConfigError(f"unknown method option {key!r} in {token!r}")
            return MethodSpec(update="fmpm", **spec)
    raise ConfigError(f"cannot parse method token {token!r}")


def _fill_block(lo, hi, spacing, ppc):
    """Regular particle lattice filling [lo, hi) with ppc points per cell axis."""
    dim = len(lo)
    axes = [np.arange(lo[d] + spacing[d] / (2 * ppc), hi[d], spacing[d] / ppc) for d in range(dim)]
    if dim == 1:
        return axes[0][:, None]
    xx, yy = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


# ---------------------------------------------------------------------------
# vibrating bar (1D stability / energy study)

VIBRATE_PROFILES = {
    # calibrated uGIMP-family profiles, see README: "stability" reproduces the
    # published Courant-limit landscape, "energy" the elastic closure, "smooth"
    # is the most filtered variant (lumped-PIC dissipation study)
    "stability": dict(lp_scale=1.5, deform_domains=False),
    "energy": dict(lp_scale=1.0, deform_domains=True),
    "smooth": dict(lp_scale=2.0, deform_domains=True),
}

VIBRATE_DEFAULTS = dict(
    length=40.0, cell=1.0, ppc=2, youngs=2.0, rho=0.5, v0=0.16,
    periods=5.0, profile="stability", alpha=0.5, guard=100.0,
)


def make_vibrating_bar(method, courant, scale=1.0, **over):
    p = {**VIBRATE_DEFAULTS, **over}
    cell = p["cell"] / scale
    length = p["length"]
    prof = VIBRATE_PROFILES[p["profile"]]
    margin = 4 * cell
    nx = int(round((length + 2 * margin) / cell)) + 1
    grid = Grid.make(cell, nx, origin=-margin)
    pos = _fill_block([0.0], [length], np.array([cell]), p["ppc"])
    vel = p["v0"] * np.sin(np.pi * pos / (2.0 * length))
    lp = prof["lp_scale"] * cell / (2 * p["ppc"])
    mass = np.full(len(pos), p["rho"] * cell / p["ppc"])
    parts = Particles(mass=mass, pos=pos, vel=vel, halfsize=np.full((len(pos), 1), lp), rho=p["rho"])
    mat = Material.linear1d(E=p["youngs"], rho=p["rho"])
    nwall = int(round(margin / cell)) + 1
    bcs = [VelocityBC(node=i, normal=np.array([1.0]), value=0.0) for i in range(nwall)]
    cfg = StepConfig(
        courant=courant, update=method.update, alpha=p["alpha"],
        shape="ugimp", deform_domains=prof["deform_domains"], fmpm=method.options(),
    )
    return Simulation(grid, parts, mat, cfg, bcs=bcs)


def run_vibrating_bar(method, courant, scale=1.0, **over):
    p = {**VIBRATE_DEFAULTS, **over}
    sim = make_vibrating_bar(method, courant, scale=scale, **over)
    wave = np.sqrt(p["youngs"] / p["rho"])
    period = 4.0 * p["length"] / wave
    end0 = float(sim.particles.pos[-1, 0])
    dmax = 0.0
    duration = p["periods"] * period
    guard = p["guard"] * p["v0"]
    stable = True
    t0 = time.perf_counter()
    while sim.time < duration - 1e-9:
        if not sim.run(min(duration, sim.time + period / 8.0), guard_speed=guard):
            stable = False
            break
        dmax = max(dmax, float(sim.particles.pos[-1, 0]) - end0)
    e = sim.energies()
    return dict(
        method=method.label(), courant=courant, stable=stable,
        dissipation=e.dissipation if stable else float("nan"),
        d_max=dmax, d_max_expected=2.0 * p["length"] * p["v0"] / (np.pi * wave),
        history=sim.history, elapsed=time.perf_counter() - t0,
        profile=p["profile"],
    )


def stability_search(method, lo=0.01, hi=1.2, tol=0.005, scale=1.0, **over):
    """Bisected Courant stability limit (5 periods under the blow-up guard)."""
    def stable(c):
        return run_vibrating_bar(method, c, scale=scale, **over)["stable"]

    lo_checked = False
    if stable(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo, lo_checked = mid, True
        else:
            hi = mid
    if not lo_checked and not stable(lo):
        import warnings

        warnings.warn(f"{method.label()} unstable at the lower bracket C={lo}")
        return 0.0
    return lo


# ---------------------------------------------------------------------------
# manufactured-solution bar pulled by moving walls (2D plane strain)

MMS_DEFAULTS = dict(
    half_length=10.0, height=4.0, cell=0.25, ppc=2, shear=0.375, lam=0.0, rho=1.0,
    strain_rate=0.01, elongation=0.2, courant=0.1, depth=1.0, wall_alpha=0.5,
    deform_domains=True, shape="ugimp",
)


def _mms_wall(side, x0, rate):
    def schedule(t):
        return side * rate * x0, rate / (1.0 + rate * t)

    return MovingWall(axis=0, side=side, position=side * x0, depth=1.0, schedule=schedule)


def make_mms(method, scale=1.0, **over):
    p = {**MMS_DEFAULTS, **over}
    cell = p["cell"] / scale
    hl, h = p["half_length"], p["height"]
    rate = p["strain_rate"]
    xmargin = hl * p["elongation"] + 3 * cell
    nx = int(round(2 * (hl + xmargin) / cell)) + 1
    ny = int(round((h + 2 * 4 * cell) / cell)) + 1
    grid = Grid.make(cell, (nx, ny), origin=(-(hl + xmargin), -4 * cell))
    pos = _fill_block([-hl, 0.0], [hl, h], np.array([cell, cell]), p["ppc"])
    vel = np.zeros_like(pos)
    vel[:, 0] = rate * pos[:, 0]
    mass = np.full(len(pos), p["rho"] * (cell / p["ppc"]) ** 2)
    lp = cell / (2 * p["ppc"])
    parts = Particles(mass=mass, pos=pos, vel=vel, halfsize=np.full((len(pos), 2), lp), rho=p["rho"])
    mat = Material.neohookean(G=p["shear"], lam=p["lam"], rho=p["rho"])
    walls = [_mms_wall(-1, hl, rate), _mms_wall(+1, hl, rate)]
    for w in walls:
        w.depth = p["depth"]
    cfg = StepConfig(
        courant=p["courant"], update=method.update, alpha=p["wall_alpha"], shape=p["shape"],
        deform_domains=p["deform_domains"], fmpm=method.options(),
    )
    return Simulation(grid, parts, mat, cfg, walls=walls), p


def run_mms(method, scale=1.0, **over):
    """Average RMS velocity error (percent of end speed) over the pull."""
    sim, p = make_mms(method, scale=scale, **over)
    rate = p["strain_rate"]
    v_end = p["half_length"] * rate
    t_end = p["elongation"] / rate
    v_exact = sim.particles.vel.copy()
    rms = []
    stress_err = []
    while sim.time < t_end - 1e-12:
        sim.step()
        rms.append(float(np.sqrt(np.mean(np.sum((sim.particles.vel - v_exact) ** 2, axis=1)))))
        et = rate * sim.time
        sig_exact = 2 * p["shear"] * (2 + et) * et / (2 * (1 + et))
        sig = sim.particles.stress_work[:, 0, 0] / np.linalg.det(sim.particles.F).clip(1e-12)
        stress_err.append(float(np.abs(sig - sig_exact).max()))
    err = 100.0 / v_end * float(np.mean(rms))
    return dict(
        method=method.label(), error_percent=err, bc_violation=sim.bc_violation,
        v_end=v_end, steps=len(rms), rms=rms, stress_err_max=max(stress_err),
        history=sim.history,
    )


# ---------------------------------------------------------------------------
# split bar: stick-contact reversion, frictional interface, two-block impact

# separation offset 1.5 cells: the centroid-separation substitute for surface
# distance over-reads by ~0.5 cell on nodes off the interface plane; 0.8 leaves
# pressed fringe nodes undetected and unstable (see README on contact geometry)
SPLITBAR_DEFAULTS = dict(
    length=50.0, height=4.0, cell=1.0, ppc=2, split=40.0, youngs=10.0, nu=0.3,
    rho=1.0, wall_fraction=0.4, courant=0.2, duration=4.0, offset=1.5,
    viscosity=True, confine=True, shape="ugimp",
)


def make_splitbar(method, split=True, contact_method="net", law="stick", mu=0.3,
                  scale=1.0, **over):
    p = {**SPLITBAR_DEFAULTS, **over}
    cell = p["cell"] / scale
    length, h = p["length"], p["height"]
    grid = Grid.make(cell, (int(round((length + 6 * cell) / cell)) + 1,
                            int(round((h + 4 * cell) / cell)) + 1),
                     origin=(-2 * cell, -2 * cell))
    pos = _fill_block([0.0, 0.0], [length, h], np.array([cell, cell]), p["ppc"])
    mass = np.full(len(pos), p["rho"] * (cell / p["ppc"]) ** 2)
    lp = cell / (2 * p["ppc"])
    matid = (pos[:, 0] > p["split"]).astype(np.int64) if split else None
    parts = Particles(mass=mass, pos=pos, vel=np.zeros_like(pos),
                      halfsize=np.full((len(pos), 2), lp), matid=matid, rho=p["rho"])
    mat = Material.neohookean(E=p["youngs"], nu=p["nu"], rho=p["rho"], viscosity=p["viscosity"])
    mats = [mat, mat] if split else [mat]
    bulk = np.sqrt((mat.lam + 2 * mat.G / 3) / mat.rho)
    wall = MovingWall(axis=0, side=+1, position=length, speed=-p["wall_fraction"] * bulk, depth=1.0)
    bcs = []
    if p["confine"]:
        coords = grid.node_positions()
        yhat = np.array([0.0, 1.0])
        for i in np.flatnonzero((coords[:, 1] <= 1e-9) | (coords[:, 1] >= h - 1e-9)):
            bcs.append(VelocityBC(node=int(i), normal=yhat, value=0.0))
    cmodel = ContactModel(law=law, mu=mu, offset_cells=p["offset"], method=contact_method) if split else None
    cfg = StepConfig(courant=p["courant"], update=method.update, alpha=0.5, shape=p["shape"],
                     fmpm=method.options())
    return Simulation(grid, parts, mats, cfg, bcs=bcs, walls=[wall], contact_model=cmodel), p


def _active_velocity_table(sim):
    """(mask, velocities) on the union of active nodes, COM-combined per node."""
    f = sim.fields
    m = f.mass.sum(axis=0)
    mask = f.active.any(axis=0)
    v = np.zeros((f.mass.shape[1], f.mom.shape[2]))
    v[mask] = (f.mass[:, mask, None] * f.vel[:, mask]).sum(axis=0) / m[mask, None]
    return mask, v


def run_splitbar_reversion(order, contact_method="net", scale=1.0, update="fmpm", **over):
    """Stick-law two-field run vs the single-material run, step by step."""
    method = MethodSpec(update=update, order=order)
    sim1, p = make_splitbar(method, split=False, scale=scale, **over)
    sim2, _ = make_splitbar(method, split=True, contact_method=contact_method,
                            law="stick", scale=scale, **over)
    vscale = abs(sim1.walls[0].speed)  # the problem's characteristic speed
    worst_v = 0.0
    steps = int(np.ceil(p["duration"] / (p["courant"] * (p["cell"] / scale) /
                                         sim1.materials[0].wave_speed())))
    for _ in range(steps):
        sim1.step()
        sim2.step()
        mask1, v1 = _active_velocity_table(sim1)
        for fld in range(2):
            act = sim2.fields.active[fld]
            dv = np.abs(sim2.fields.vel[fld, act] - v1[act]).max() if act.any() else 0.0
            worst_v = max(worst_v, dv / vscale)
        worst_v = max(worst_v, np.abs(sim2.particles.vel - sim1.particles.vel).max() / vscale)
    return dict(order=order, contact_method=contact_method, max_rel_diff=worst_v, steps=steps)


def _pressure_profile(sim, cell, length):
    """In-plane mean compressive stress binned along the bar axis."""
    x = sim.particles.pos[:, 0]
    sig = sim.particles.stress_work / np.linalg.det(sim.particles.F).clip(1e-12)[:, None, None]
    pres = -0.5 * (sig[:, 0, 0] + sig[:, 1, 1])
    nbin = int(round(length / cell))
    idx = np.clip((x / cell).astype(int), 0, nbin - 1)
    prof = np.zeros(nbin)
    cnt = np.zeros(nbin)
    np.add.at(prof, idx, pres)
    np.add.at(cnt, idx, 1.0)
    good = cnt > 0
    prof[good] /= cnt[good]
    return prof, good


def run_splitbar_friction(order, contact_method="net", mu=0.3, scale=1.0, **over):
    """Frictional interface vs single-material pressure profile."""
    method = MethodSpec(update="fmpm", order=order)
    sim1, p = make_splitbar(method, split=False, scale=scale, **over)
    sim2, _ = make_splitbar(method, split=True, contact_method=contact_method,
                            law="coulomb", mu=mu, scale=scale, **over)
    cell = p["cell"] / scale
    for sim in (sim1, sim2):
        sim.run(p["duration"])
    prof1, good1 = _pressure_profile(sim1, cell, p["length"])
    prof2, good2 = _pressure_profile(sim2, cell, p["length"])
    good = good1 & good2
    diff = np.abs(prof1 - prof2)[good]
    xs = (np.arange(len(prof1)) + 0.5)[good] * cell
    away = np.abs(xs - p["split"]) > 3 * cell
    pscale = max(np.abs(prof1[good]).max(), 1e-30)
    return dict(
        order=order, contact_method=contact_method, mu=mu,
        max_dev=float(diff.max() / pscale),
        max_dev_away=float(diff[away].max() / pscale) if away.any() else 0.0,
        profile_single=prof1, profile_contact=prof2,
    )


BLOCKS_DEFAULTS = dict(
    block=(16.0, 6.0), gap=4.0, cell=1.0, ppc=2, youngs=10.0, nu=0.3, rho=1.0,
    speed_fraction=0.05, courant=0.2, duration=16.0,
)


def run_two_blocks(kmax=8, metric="means", threshold=0.5, scale=1.0, **over):
    """Two co-axial blocks impacting in single-material mode (dynamic order)."""
    p = {**BLOCKS_DEFAULTS, **over}
    cell = p["cell"] / scale
    bw, bh = p["block"]
    gap = p["gap"]
    x1 = 2 * cell
    grid = Grid.make(cell, (int(round((2 * bw + gap + 8 * cell) / cell)) + 1,
                            int(round((bh + 4 * cell) / cell)) + 1),
                     origin=(0.0, -2 * cell))
    sp = np.array([cell, cell])
    pos = np.vstack([
        _fill_block([x1, 0.0], [x1 + bw, bh], sp, p["ppc"]),
        _fill_block([x1 + bw + gap, 0.0], [x1 + 2 * bw + gap, bh], sp, p["ppc"]),
    ])
    mat = Material.neohookean(E=p["youngs"], nu=p["nu"], rho=p["rho"])
    speed = p["speed_fraction"] * mat.wave_speed()
    vel = np.zeros_like(pos)
    vel[:, 0] = np.where(pos[:, 0] < x1 + bw + gap / 2, speed, -speed)
    mass = np.full(len(pos), p["rho"] * (cell / p["ppc"]) ** 2)
    parts = Particles(mass=mass, pos=pos, vel=vel,
                      halfsize=np.full((len(pos), 2), cell / (2 * p["ppc"])), rho=p["rho"])
    opts = engine.FmpmOptions(order=kmax, metric=metric, threshold=threshold)
    cfg = StepConfig(courant=p["courant"], update="fmpm", alpha=0.5, shape="ugimp", fmpm=opts)
    sim = Simulation(grid, parts, mat, cfg)
    orders, metrics, times = [], [], []
    while sim.time < p["duration"] - 1e-12:
        sim.step()
        orders.append(sim.last_order)
        metrics.append(sim.last_metric if sim.last_metric is not None else 0.0)
        times.append(sim.time)
    orders = np.array(orders)
    metrics = np.array(metrics)
    times = np.array(times)
    interact = metrics > 1e-12
    impact_step = int(np.argmax(interact)) if interact.any() else len(orders)
    post = orders[impact_step:]
    return dict(
        kmax=kmax, metric=metric, threshold=threshold,
        orders=orders, metrics=metrics, times=times, impact_step=impact_step,
        pre_orders=orders[:impact_step], pre_metric_max=float(metrics[:impact_step].max()) if impact_step else 0.0,
        mean_post_order=float(post.mean()) if post.size else float("nan"),
        history=sim.history,
    )


# ---------------------------------------------------------------------------
# two-disk offset impact (2D, frictional contact)

DISKS_DEFAULTS = dict(
    radius=10.0, dx_centers=22.0, dy_centers=16.0, cell=1.0 / 3.0, ppc=2,
    youngs=1000.0, nu=0.33, rho=1.5e-3, speed=81.65, duration=0.16,
    courant=0.2, mu=0.0, offset=0.8, contact_method="net", shape="ugimp",
)


def make_disks(method, scale=1.0, **over):
    p = {**DISKS_DEFAULTS, **over}
    cell = p["cell"] / scale
    r = p["radius"]
    cx, cy = 30.0 - p["dx_centers"] / 2, 25.0 - p["dy_centers"] / 2
    centers = np.array([[cx, cy], [cx + p["dx_centers"], cy + p["dy_centers"]]])
    grid = Grid.make(cell, (int(round(60.0 / cell)) + 1, int(round(50.0 / cell)) + 1), origin=(0.0, 0.0))
    sp = np.array([cell, cell])
    blocks = []
    ids = []
    for i, c in enumerate(centers):
        cand = _fill_block([c[0] - r, c[1] - r], [c[0] + r, c[1] + r], sp, p["ppc"])
        keep = np.sum((cand - c) ** 2, axis=1) <= r * r
        blocks.append(cand[keep])
        ids.append(np.full(keep.sum(), i, dtype=np.int64))
    pos = np.vstack(blocks)
    matid = np.concatenate(ids)
    vel = np.zeros_like(pos)
    vel[:, 0] = np.where(matid == 0, p["speed"], -p["speed"])
    area = (cell / p["ppc"]) ** 2
    parts = Particles(mass=np.full(len(pos), p["rho"] * area), pos=pos, vel=vel,
                      halfsize=np.full((len(pos), 2), cell / (2 * p["ppc"])),
                      matid=matid, rho=p["rho"])
    mat = Material.neohookean(E=p["youngs"], nu=p["nu"], rho=p["rho"])
    cmodel = ContactModel(law="coulomb" if p["mu"] > 0 else "frictionless",
                          mu=p["mu"], offset_cells=p["offset"], method=p["contact_method"])
    cfg = StepConfig(courant=p["courant"], update=method.update, alpha=0.5,
                     shape=p["shape"], fmpm=method.options())
    return Simulation(grid, parts, [mat, mat], cfg, contact_model=cmodel), p


def run_disks(method, scale=1.0, traj_every=5, **over):
    sim, p = make_disks(method, scale=scale, **over)
    matid = sim.particles.matid
    masses = [sim.particles.mass[matid == i] for i in (0, 1)]
    traj = []

    def com_row():
        row = [sim.time]
        for i in (0, 1):
            sel = matid == i
            c = (sim.particles.pos[sel] * masses[i][:, None]).sum(axis=0) / masses[i].sum()
            row.extend(c)
        return row

    traj.append(com_row())
    n = 0
    while sim.time < p["duration"] - 1e-12:
        sim.step()
        n += 1
        if n % traj_every == 0:
            traj.append(com_row())
    traj.append(com_row())
    vels = []
    for i in (0, 1):
        sel = matid == i
        vels.append((sim.particles.vel[sel] * masses[i][:, None]).sum(axis=0) / masses[i].sum())
    deflection = float(np.degrees(np.arctan2(abs(vels[0][1]), abs(vels[0][0]))))
    e = sim.energies()
    return dict(
        method=method.label(), mu=p["mu"], dissipation=e.dissipation,
        deflection_deg=deflection, final_com_vel=vels, trajectory=np.array(traj),
        history=sim.history,
    )


# ---------------------------------------------------------------------------
# oracle self-checks (random small instances against the dense expansion)


def random_instance(rng, dim=1, kind="ugimp"):
    if dim == 1:
        grid = Grid.make(1.0, int(rng.integers(8, 15)))
        n = int(rng.integers(5, 9))
        pos = rng.uniform(1.6, grid.upper()[0] - 1.6, (n, 1))
    else:
        grid = Grid.make(1.0, (int(rng.integers(6, 9)), int(rng.integers(5, 8))))
        n = int(rng.integers(6, 12))
        pos = np.column_stack([
            rng.uniform(1.6, grid.upper()[0] - 1.6, n),
            rng.uniform(1.6, grid.upper()[1] - 1.6, n),
        ])
    half = np.full((n, dim), 0.25)
    parts = Particles(mass=rng.uniform(0.5, 2.0, n), pos=pos, vel=rng.normal(size=(n, dim)),
                      halfsize=half)
    table = build_shape_table(kind, grid, parts.pos, parts.halfsize)
    fields = NodalFields.empty(1, grid.nnodes, dim)
    scatter_mass_momentum(parts, table, fields)
    return parts, table, fields


def run_oracle_check(seed=20260811, count=50, perturb=None):
    """Loop-vs-dense-expansion and legacy-form equivalence on random instances.

    ``perturb`` optionally injects (instance_index, epsilon) into one shape
    weight to demonstrate sensitivity.
    """
    rng = np.random.default_rng(seed)
    ks = [1, 2, 3, 4, 8]
    blends = [(1.0, 1), (0.9, 1), (0.8, 2)]
    failures = []
    results = []
    for i in range(count):
        dim = 1 if i % 2 == 0 else 2
        kind = ("linear", "ugimp", "bspline2")[i % 3]
        parts, table, fields = random_instance(rng, dim=dim, kind=kind)
        if perturb is not None and perturb[0] == i:
            table.weights[0, 0] += perturb[1]
        k = ks[i % len(ks)]
        alpha, m = blends[i % len(blends)]
        opts = engine.FmpmOptions(order=k, blend_alpha=alpha, blend_m=m)
        v, _, _ = engine.fmpm_velocity(fields, table, parts.mass, parts.matid, opts)
        ref = engine.dense_oracle_velocity(fields, table, parts.mass, parts.matid, k, alpha, m)
        scale = max(np.abs(ref).max(), 1e-30)
        err = float(np.abs(v - ref).max() / scale)
        leg_err = 0.0
        if alpha == 1.0:
            leg = engine.legacy_fmpm_velocity(fields, table, parts.mass, parts.matid, k)
            leg_err = float(np.abs(v - leg).max() / scale)
        ok = err < 1e-10 and leg_err < 1e-10
        results.append(dict(instance=i, dim=dim, kind=kind, k=k, alpha=alpha, m=m,
                            err=err, legacy_err=leg_err, ok=ok))
        if not ok:
            failures.append(i)
    return dict(ok=not failures, failures=failures, results=results, seed=seed)


# ---------------------------------------------------------------------------
# backend comparison (numba kernels vs numpy fallback)


def run_backend_bench(n_particles=20000, passes=8, repeats=5):
    from .backends import load_backend

    rng = np.random.default_rng(0)
    grid = Grid.make(1.0, (64, 64))
    pos = rng.uniform(2.0, 61.0, (n_particles, 2))
    half = np.full((n_particles, 2), 0.25)
    mass = rng.uniform(0.5, 2.0, n_particles)
    vel = rng.normal(size=(n_particles, 2))
    matid = np.zeros(n_particles, dtype=np.int64)
    rows = []
    for name in ("numpy", "numba"):
        try:
            be = load_backend(name)
        except ImportError:
            rows.append(dict(backend=name, available=False))
            continue
        nodes, w, g = be.sample_shapes(1, pos, half, grid.spacing, grid.origin, grid.counts)
        m, p = be.scatter_mass_momentum(nodes, w, mass, vel, matid, 1, grid.nnodes)
        v = np.where(m > 0, 1.0, 0.0)[:, :, None] * p
        timings = {}
        for label, fn in (
            ("sample", lambda: be.sample_shapes(1, pos, half, grid.spacing, grid.origin, grid.counts)),
            ("scatter", lambda: be.scatter_mass_momentum(nodes, w, mass, vel, matid, 1, grid.nnodes)),
            ("roundtrip", lambda: [be.pic_roundtrip(nodes, w, mass, matid, v) for _ in range(passes)]),
        ):
            fn()  # warm-up / compile
            best = min(_timeit(fn) for _ in range(repeats))
            timings[label] = best
        rows.append(dict(backend=name, available=True, **timings))
    return rows


def _timeit(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0
