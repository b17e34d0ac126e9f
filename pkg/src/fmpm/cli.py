"""Benchmark command line.

    fmpm <problem> [--config file.ini] [--csv out.csv] [--scale f] [--deterministic] ...

Problems: vibrate, mms, splitbar, disks, oracle, backends.  The config file
is flat INI (key = value) with sections [grid], [material], [contact],
[bcs], [fmpm], [run]; recognised keys override the benchmark defaults, and
problem-specific command line flags override both.  CSV output carries a
header row and 17-significant-digit floats.
"""

import argparse
import configparser
import sys

import numpy as np

from . import benchmarks as bm
from .backends import backend_name
from .errors import ConfigError
from .stepper import ENERGY_COLUMNS


def _coerce(text):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(t)
        except ValueError:
            pass
    return t


def load_config(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        cp.read_file(fh)
    return {sec: {k: _coerce(v) for k, v in cp.items(sec)} for sec in cp.sections()}


# maps flat config keys onto runner keyword arguments, per problem
CONFIG_KEYS = {
    "vibrate": {
        ("grid", "cell"): "cell", ("grid", "length"): "length", ("grid", "ppc"): "ppc",
        ("material", "e"): "youngs", ("material", "rho"): "rho",
        ("run", "v0"): "v0", ("run", "periods"): "periods", ("run", "profile"): "profile",
        ("run", "alpha"): "alpha", ("run", "guard"): "guard",
    },
    "mms": {
        ("grid", "cell"): "cell", ("grid", "half_length"): "half_length",
        ("grid", "height"): "height", ("grid", "ppc"): "ppc",
        ("material", "g"): "shear", ("material", "lambda"): "lam", ("material", "rho"): "rho",
        ("run", "strain_rate"): "strain_rate", ("run", "elongation"): "elongation",
        ("run", "courant"): "courant", ("bcs", "wall_depth"): "depth",
        ("run", "deform_domains"): "deform_domains", ("run", "shape"): "shape",
    },
    "splitbar": {
        ("grid", "cell"): "cell", ("grid", "length"): "length", ("grid", "height"): "height",
        ("grid", "ppc"): "ppc", ("grid", "split"): "split",
        ("material", "e"): "youngs", ("material", "nu"): "nu", ("material", "rho"): "rho",
        ("material", "viscosity"): "viscosity",
        ("contact", "offset"): "offset",
        ("run", "courant"): "courant", ("run", "duration"): "duration",
        ("run", "wall_fraction"): "wall_fraction", ("run", "confine"): "confine",
        ("run", "shape"): "shape",
    },
    "disks": {
        ("grid", "cell"): "cell", ("grid", "ppc"): "ppc",
        ("material", "e"): "youngs", ("material", "nu"): "nu", ("material", "rho"): "rho",
        ("contact", "mu"): "mu", ("contact", "offset"): "offset",
        ("contact", "method"): "contact_method",
        ("run", "courant"): "courant", ("run", "duration"): "duration",
        ("run", "speed"): "speed", ("run", "shape"): "shape",
    },
    "oracle": {},
    "backends": {},
}


def config_kwargs(problem, cfg):
    out = {}
    for (sec, key), kw in CONFIG_KEYS.get(problem, {}).items():
        if sec in cfg and key in cfg[sec]:
            out[kw] = cfg[sec][key]
    return out


def fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_history_csv(path, history):
    write_csv(path, ENERGY_COLUMNS, history)


def _method_from_args(args, cfg=None):
    if args.method:
        return bm.parse_method(args.method)
    f = (cfg or {}).get("fmpm", {})
    if f:
        return bm.MethodSpec(
            update=f.get("update", "fmpm"), order=int(f.get("order", args.order)),
            blend_alpha=float(f.get("blend_alpha", 1.0)), blend_m=int(f.get("blend_m", 1)),
            periodic_cx=float(f.get("periodic_cx", 0.0)),
        )
    return bm.MethodSpec(update="fmpm", order=args.order)


def cmd_vibrate(args, cfg):
    kw = config_kwargs("vibrate", cfg)
    if args.profile:
        kw["profile"] = args.profile
    if args.search:
        rows = []
        for token in args.search.split(";"):
            method = bm.parse_method(token)
            cmax = bm.stability_search(method, scale=args.scale, **kw)
            print(f"{method.label():24s} C_max = {cmax:.4g}")
            rows.append((method.label(), cmax))
        if args.csv:
            write_csv(args.csv, ("method", "c_max"), rows)
        return 0
    method = _method_from_args(args, cfg)
    res = bm.run_vibrating_bar(method, args.courant, scale=args.scale, **kw)
    print(f"{res['method']} C={args.courant} profile={res['profile']}: "
          f"stable={res['stable']} dissipation={res['dissipation']:.6g} "
          f"d_max={res['d_max']:.4g} (expected {res['d_max_expected']:.4g})")
    if args.csv:
        write_history_csv(args.csv, res["history"])
    return 0


def cmd_mms(args, cfg):
    kw = config_kwargs("mms", cfg)
    if args.depth is not None:
        kw["depth"] = args.depth
    method = _method_from_args(args, cfg)
    res = bm.run_mms(method, scale=args.scale, **kw)
    print(f"{res['method']}: <velocity error> = {res['error_percent']:.6g} % "
          f"(bc violation {res['bc_violation']:.3g}, {res['steps']} steps)")
    if args.csv:
        write_csv(args.csv, ("step", "rms_velocity_error"),
                  list(enumerate(res["rms"], start=1)))
    return 0


def cmd_splitbar(args, cfg):
    kw = config_kwargs("splitbar", cfg)
    if args.mode == "stick":
        res = bm.run_splitbar_reversion(args.order, contact_method=args.contact,
                                        scale=args.scale, **kw)
        print(f"stick reversion fmpm({args.order}) {args.contact}: "
              f"max relative deviation = {res['max_rel_diff']:.3g} over {res['steps']} steps")
        if args.csv:
            write_csv(args.csv, ("order", "contact_method", "max_rel_diff"),
                      [(res["order"], res["contact_method"], res["max_rel_diff"])])
    elif args.mode == "friction":
        res = bm.run_splitbar_friction(args.order, contact_method=args.contact,
                                       mu=args.mu, scale=args.scale, **kw)
        print(f"friction fmpm({args.order}) {args.contact} mu={args.mu}: "
              f"max pressure deviation = {res['max_dev']:.3g} "
              f"(away from interface {res['max_dev_away']:.3g})")
        if args.csv:
            rows = list(zip(res["profile_single"], res["profile_contact"]))
            write_csv(args.csv, ("pressure_single", "pressure_contact"), rows)
    else:  # blocks
        f = cfg.get("fmpm", {})
        metric = f.get("metric", args.metric)
        threshold = float(f.get("threshold", args.threshold))
        res = bm.run_two_blocks(kmax=args.order, metric=metric,
                                threshold=threshold, scale=args.scale)
        print(f"two blocks kmax={args.order} {args.metric}<{args.threshold}: "
              f"mean post-impact order = {res['mean_post_order']:.3g} "
              f"(impact at step {res['impact_step']}, pre-impact metric max "
              f"{res['pre_metric_max']:.3g})")
        if args.csv:
            rows = list(zip(res["times"], res["orders"], res["metrics"]))
            write_csv(args.csv, ("time", "order", "metric"), rows)
    return 0


def cmd_disks(args, cfg):
    kw = config_kwargs("disks", cfg)
    if args.mu is not None:
        kw["mu"] = args.mu
    method = _method_from_args(args, cfg)
    res = bm.run_disks(method, scale=args.scale, **kw)
    print(f"{res['method']} mu={res['mu']}: deflection = {res['deflection_deg']:.3f} deg, "
          f"dissipation = {100 * res['dissipation']:.3f} %")
    if args.csv:
        write_csv(args.csv, ("time", "x0", "y0", "x1", "y1"), res["trajectory"])
    return 0


def cmd_oracle(args, cfg):
    res = bm.run_oracle_check(seed=args.seed, count=args.count)
    for r in res["results"]:
        status = "ok" if r["ok"] else "FAIL"
        print(f"instance {r['instance']:3d} {r['dim']}D {r['kind']:8s} k={r['k']} "
              f"alpha={r['alpha']} m={r['m']}: err={r['err']:.2e} "
              f"legacy={r['legacy_err']:.2e} {status}")
    print("oracle check:", "PASS" if res["ok"] else f"FAIL (instances {res['failures']})")
    if args.csv:
        rows = [(r["instance"], r["dim"], r["kind"], r["k"], r["alpha"], r["m"],
                 r["err"], r["legacy_err"], int(r["ok"])) for r in res["results"]]
        write_csv(args.csv, ("instance", "dim", "kind", "k", "alpha", "m",
                             "err", "legacy_err", "ok"), rows)
    return 0 if res["ok"] else 1


def cmd_backends(args, cfg):
    rows = bm.run_backend_bench(n_particles=args.particles, passes=args.order)
    print(f"active backend: {backend_name}")
    for r in rows:
        if not r.get("available", True):
            print(f"{r['backend']:8s} unavailable")
            continue
        print(f"{r['backend']:8s} sample={1e3 * r['sample']:.2f} ms "
              f"scatter={1e3 * r['scatter']:.2f} ms "
              f"roundtrip x{args.order}={1e3 * r['roundtrip']:.2f} ms")
    if args.csv:
        ok = [r for r in rows if r.get("available", True)]
        write_csv(args.csv, ("backend", "sample_s", "scatter_s", "roundtrip_s"),
                  [(r["backend"], r["sample"], r["scatter"], r["roundtrip"]) for r in ok])
    return 0


def build_parser():
    top = argparse.ArgumentParser(prog="fmpm", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = top.add_subparsers(dest="problem", required=True)

    def common(p):
        p.add_argument("--config", help="flat INI configuration file")
        p.add_argument("--csv", help="write results to this CSV path")
        p.add_argument("--scale", type=float, default=1.0,
                       help="resolution scale factor (cells per unit length multiplier)")
        p.add_argument("--deterministic", action="store_true",
                       help="fixed particle order, serial reductions (always on)")
        p.add_argument("--method", help="flip | fmpm(k[,alpha=..,m=..]) | periodic(k,cx=..)")
        p.add_argument("--order", "-k", type=int, default=4, help="solve order when --method absent")

    p = sub.add_parser("vibrate", help="freely vibrating bar: energy and stability")
    common(p)
    p.add_argument("--courant", type=float, default=0.4)
    p.add_argument("--profile", choices=sorted(bm.VIBRATE_PROFILES))
    p.add_argument("--search", help="semicolon list of method tokens to bisect, e.g. 'flip;fmpm(4)'")
    p.set_defaults(fn=cmd_vibrate)

    p = sub.add_parser("mms", help="manufactured-solution bar pulled by moving walls")
    common(p)
    p.add_argument("--depth", type=float, help="moving-wall BC depth in cells")
    p.set_defaults(fn=cmd_mms)

    p = sub.add_parser("splitbar", help="split-bar contact: stick reversion, friction, blocks")
    common(p)
    p.add_argument("--mode", choices=("stick", "friction", "blocks"), default="stick")
    p.add_argument("--contact", choices=("net", "evolving"), default="net")
    p.add_argument("--mu", type=float, default=0.3)
    p.add_argument("--metric", choices=("means", "changes"), default="means")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(fn=cmd_splitbar)

    p = sub.add_parser("disks", help="two-disk offset impact with frictional contact")
    common(p)
    p.add_argument("--mu", type=float)
    p.set_defaults(fn=cmd_disks)

    p = sub.add_parser("oracle", help="random-instance solver self checks")
    common(p)
    p.add_argument("--seed", type=int, default=20260811)
    p.add_argument("--count", type=int, default=50)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("backends", help="time numba kernels against the numpy fallback")
    common(p)
    p.add_argument("--particles", type=int, default=20000)
    p.set_defaults(fn=cmd_backends)
    return top


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config) if args.config else {}
    try:
        return args.fn(args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
