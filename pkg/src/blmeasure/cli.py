"""Command-line front end.

Every run writes a manifest.json holding the fully resolved configuration;
``--manifest FILE`` replays it.  Output files carry the config hash and
seed, and contain no timings, so equal configs give byte-identical files.

Exit codes: 0 ok, 1 bad input, 2 budget exceeded, 3 numerical failure,
4 invariant check failed (validate).
"""

import argparse
import cmath
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import BLError, BudgetExceeded, InputError
from .sphere import RationalMap, SpherePoint, sph_dist

PRESETS = {
    "z2": [0, 0, 1],
    "basilica": [-1, 0, 1],
    "dendrite": [1j, 0, 1],
    "siegel-like": [0, cmath.exp(2j * math.pi * (math.sqrt(5) + 1) / 2), 1],
}

# keys that may change without changing any output
_UNHASHED = ("out", "workers", "a", "b")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _complex_list(text):
    try:
        return [complex(t.replace(" ", "")) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"bad coefficient list {text!r}") from exc


def _jsonable_coeffs(c):
    return [[float(np.real(x)), float(np.imag(x))] for x in c]


def parse_map(preset=None, spec=None):
    """Coefficient form {"p": [[re, im], ...], "q": [...]} of a preset or a --map string.

    --map accepts "p0,p1,...[:q0,q1,...]" (low to high, Python complex
    syntax) or "@file.json" holding {"p": ..., "q": ...}.
    """
    if preset is not None:
        if preset not in PRESETS:
            raise InputError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        return {"p": _jsonable_coeffs(PRESETS[preset]), "q": [[1.0, 0.0]]}
    if spec is None:
        raise InputError("give --map or --preset")
    if spec.startswith("@"):
        try:
            with open(spec[1:]) as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read map file: {exc}") from exc
        R = RationalMap.from_json(obj)
        return {"p": _jsonable_coeffs(R.p), "q": _jsonable_coeffs(R.q)}
    p, _, q = spec.partition(":")
    return {"p": _jsonable_coeffs(_complex_list(p)), "q": _jsonable_coeffs(_complex_list(q) if q else [1])}


def build_map(mapspec):
    return RationalMap.from_json(mapspec)


def config_hash(config):
    core = {k: v for k, v in config.items() if k not in _UNHASHED}
    return hashlib.sha256(json.dumps(core, sort_keys=True).encode()).hexdigest()


class Run:
    """Resolved config plus helpers for writing outputs."""

    def __init__(self, config):
        self.config = config
        self.hash = config_hash(config)
        self.out = config["out"]
        os.makedirs(self.out, exist_ok=True)

    @property
    def seed(self):
        return self.config["seed"]

    @property
    def workers(self):
        return self.config["workers"]

    def meta(self, **extra):
        core = {k: v for k, v in self.config.items() if k not in _UNHASHED}
        return {"config": core, "config_hash": self.hash, "seed": self.seed, "version": __version__, **extra}

    def path(self, name):
        return os.path.join(self.out, name)

    def write_json(self, name, obj):
        with open(self.path(name), "w") as fh:
            fh.write(json.dumps(obj, sort_keys=True, indent=1) + "\n")

    def write_text(self, name, text):
        head = f"# config_hash={self.hash} seed={self.seed}\n"
        with open(self.path(name), "w") as fh:
            fh.write(head + text)

    def write_bytes(self, name, data):
        with open(self.path(name), "wb") as fh:
            fh.write(data)

    def write_measure(self, name, mu, **extra):
        with open(self.path(name), "w") as fh:
            fh.write(mu.dumps(self.meta(**extra)))

    def manifest(self):
        core = {k: v for k, v in self.config.items() if k not in ("out", "workers")}
        self.write_json("manifest.json", {"config": core, "config_hash": self.hash})

    @property
    def map(self):
        return build_map(self.config["map"])


def _table(rows, head):
    w = [max(len(str(x)) for x in col) for col in zip(head, *rows)]
    line = "  ".join(str(h).rjust(n) for h, n in zip(head, w))
    out = [line, "-" * len(line)]
    out += ["  ".join(str(x).rjust(n) for x, n in zip(r, w)) for r in rows]
    return "\n".join(out)


def _fmt(x):
    return f"{x:.6g}" if isinstance(x, float) else str(x)


# ------------------------------------------------------------------ oracles

def _julia_oracle(run, R):
    from .julia import filled_julia_outer, julia_inner
    from .walk import JuliaOracle

    if not R.is_polynomial:
        raise InputError("the Julia-set oracle needs a polynomial map")
    c = run.config
    cover = filled_julia_outer(R, c["h"], c["iterations"])
    cloud = julia_inner(R, c["depth"])
    return JuliaOracle(cover, cloud)


def _oracle(run):
    from .walk import DiskOracle

    c = run.config
    if c["oracle"] == "disk":
        return DiskOracle(c["radius"])
    return _julia_oracle(run, run.map)


def _walk_config(run, oracle):
    from .walk import WalkConfig

    c = run.config
    four_m = 4 * oracle.M
    rcap = c["rcap"] if c["rcap"] is not None else four_m
    rstart = c["rstart"] if c["rstart"] is not None else rcap
    return WalkConfig(eps=c["eps"], N=c["samples"], R_cap=rcap, R_start=rstart, seed=c["seed"],
                      workers=run.workers)


# ------------------------------------------------------------------ commands

def cmd_render(run):
    from .julia import critical_orbit_escapes, filled_julia_outer, hausdorff_report, julia_inner

    c = run.config
    R = run.map
    cloud = julia_inner(R, c["depth"])
    run.write_text("inner.csv", cloud.to_csv())
    info = {"inner_points": len(cloud.points), "inner_levels": cloud.levels,
            "inner_seed": [cloud.seed.point.z.real, cloud.seed.point.z.imag],
            "inner_seed_period": cloud.seed.period, "inner_max_residual": cloud.max_residual}
    if R.is_polynomial:
        cover = filled_julia_outer(R, c["h"], c["iterations"])
        run.write_bytes("outer.pgm", cover.to_pgm(f"config_hash={run.hash} seed={run.seed}"))
        run.write_json("outer.json", {**cover.to_json(), "meta": run.meta()})
        rep = hausdorff_report(cover, cloud)
        esc = critical_orbit_escapes(R)
        info.update(outer_cells=int(cover.mask.sum()), escape_radius=cover.M,
                    hausdorff=rep.distance, hausdorff_outer_to_inner=rep.forward,
                    hausdorff_inner_to_outer=rep.backward, cell_inflation=rep.inflation,
                    critical_orbit_escapes=bool(esc),
                    topology="Cantor set (critical orbit escapes)" if esc else "connected")
        print(rep)
    else:
        info["outer"] = "skipped: the escape-time cover needs a polynomial map"
        print(info["outer"])
    run.write_json("render.json", {**info, "meta": run.meta()})
    print(f"inner cloud: {len(cloud.points)} points (depth {c['depth']})")


def cmd_blmeasure(run):
    from .pullback import bl_measure

    c = run.config
    res = bl_measure(run.map, c["n"], c["seed"], atom_budget=c["budget_atoms"], workers=run.workers)
    hist = [{"m": m, "depth_gap": g1, "base_gap": g2} for m, g1, g2 in res.history]
    run.write_measure("measure.json", res.measure, m=res.m, depth_gap=res.depth_gap, base_gap=res.base_gap,
                      target=res.target, base=[res.z.z.real, res.z.z.imag],
                      base2=[res.z2.z.real, res.z2.z.imag], history=hist)
    print(_table([(m, _fmt(g1), _fmt(g2)) for m, g1, g2 in res.history], ("m", "W1 to m+1", "W1 to 2nd base")))
    print(f"certified depth m* = {res.m}, target {res.target:.4g}, atoms {len(res.measure)}")


def cmd_w1(run):
    from .measures import load_measure
    from .transport import w1

    c = run.config
    mu, nu = load_measure(c["a"]), load_measure(c["b"])
    val = w1(mu, nu, budget=c["budget_pairs"])
    run.write_json("w1.json", {"w1": val, "atoms_a": len(mu), "atoms_b": len(nu), "meta": run.meta()})
    print(f"W1 = {val:.12g}")


def cmd_harmonic(run):
    from .walk import harmonic_measure

    c = run.config
    oracle = _oracle(run)
    cfg = _walk_config(run, oracle)
    x0 = None if c["x0"] == "inf" else complex(c["x0"])
    res = harmonic_measure(oracle, x0, cfg)
    st = res.stats()
    f = st["flagged_fraction"]
    st["stderr"] = math.sqrt(f * (1 - f) / st["samples"])
    st["R_cap"], st["R_start"] = cfg.R_cap, cfg.R_start
    run.write_measure("measure.json", res.measure)
    run.write_json("stats.json", {**st, "meta": run.meta()})
    print(_table([(k, _fmt(v)) for k, v in sorted(st.items())], ("stat", "value")))


def cmd_capacity(run):
    from .walk import capacity

    oracle = _oracle(run)
    cfg = _walk_config(run, oracle)
    res = capacity(oracle, cfg)
    out = res.to_dict()
    out["flagged_count"] = out.pop("flagged")
    out["R_cap"], out["R_start"] = cfg.R_cap, cfg.R_start
    run.write_json("capacity.json", {**out, "meta": run.meta()})
    print(_table([(k, _fmt(v)) for k, v in sorted(out.items())], ("quantity", "value")))


def _raster(layers, size=512, span=None):
    """Grayscale PGM of point sets; later layers draw over earlier ones."""
    pts = np.concatenate([z for z, _ in layers])
    pts = pts[np.isfinite(pts)]
    if span is None:
        span = 1.05 * float(np.max(np.abs(np.r_[pts.real, pts.imag]))) if pts.size else 1.0
    img = np.full((size, size), 255, np.uint8)
    for z, shade in layers:
        z = z[np.isfinite(z)]
        ix = np.clip(((z.real + span) / (2 * span) * size).astype(int), 0, size - 1)
        iy = np.clip(((span - z.imag) / (2 * span) * size).astype(int), 0, size - 1)
        img[iy, ix] = shade
    return img


def cmd_convergence(run):
    from .julia import julia_inner
    from .pullback import _safe_base, convergence_study, pullback_measure

    c = run.config
    R = run.map
    if c["base"] is not None:
        z = SpherePoint.of(complex(c["base"]))
    else:
        z = _safe_base(R, np.random.default_rng(np.random.SeedSequence([c["seed"], 0xC0])))
    fit = convergence_study(R, z, c["m_min"], c["m_max"], seed=c["seed"], workers=run.workers,
                            atom_budget=c["budget_atoms"])
    rows = [{"m": int(m), "w1": float(d), "thinned": bool(t)} for m, d, t in zip(fit.depths, fit.distances, fit.thinned)]
    out = {"base": [z.z.real, z.z.imag], "table": rows, "alpha": fit.alpha, "slope": fit.slope,
           "A": fit.A, "ok": fit.ok, "message": fit.message, "meta": run.meta()}
    run.write_json("convergence.json", out)
    print(_table([(r["m"], _fmt(r["w1"]), "yes" if r["thinned"] else "") for r in rows], ("m", "W1 to m_max", "thinned")))
    print(f"fitted alpha = {fit.alpha:.4g}" + (f"  ({fit.message})" if fit.message else ""))
    if c["showcase"]:
        depth = c["showcase_depth"]
        mu = pullback_measure(R, z, depth, atom_budget=c["budget_atoms"], workers=run.workers).measure
        cloud = julia_inner(R, c["depth"])
        run.write_text("pullback.csv", mu.to_csv())
        run.write_text("inner.csv", cloud.to_csv())
        img = _raster([(cloud.values(), 160), (mu.values(), 0)])
        head = f"P5\n# config_hash={run.hash} seed={run.seed}\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
        run.write_bytes("showcase.pgm", head + img.tobytes())
        print(f"showcase: depth-{depth} pullback ({len(mu)} atoms) over inner cloud ({len(cloud.points)} points)")


def cmd_gapdemo(run):
    from .gapdomain import GapDomainSpec, gap_domain, gate_mass
    from .walk import WalkConfig

    c = run.config
    cfg = WalkConfig(eps=c["eps"], N=c["samples"], seed=c["seed"], workers=run.workers)
    if c["spec"] is not None:
        specs = {"custom": GapDomainSpec.from_json(c["spec"])}
    else:
        n = c["n"]
        specs = {"blocked": GapDomainSpec({n: "blocked"}), "open": GapDomainSpec({n: ("open", c["open_j"])})}
    results = {}
    for label, spec in specs.items():
        oracle = gap_domain(spec)
        for n in sorted(spec.gates):
            res = gate_mass(oracle, spec, n, cfg)
            results[f"{label}/{n}"] = {**res.to_dict(), "spec": spec.to_json()}
    out = {"results": results, "meta": run.meta()}
    if c["spec"] is None:
        b, o = results[f"blocked/{c['n']}"], results[f"open/{c['n']}"]
        out["ratio"] = o["estimate"] / b["estimate"] if b["estimate"] > 0 else math.inf
        out["intervals_overlap"] = not (b["hi"] < o["lo"] or o["hi"] < b["lo"])
    run.write_json("gapdemo.json", out)
    print(_table([(k, r["hits"], _fmt(r["estimate"]), f"[{r['lo']:.3g}, {r['hi']:.3g}]") for k, r in results.items()],
                 ("gate", "hits", "mass", "95% CI")))
    if "ratio" in out:
        print(f"open/blocked ratio = {out['ratio']:.4g}, intervals overlap: {out['intervals_overlap']}")


def _check(report, name, ok, **detail):
    report[name] = {"pass": bool(ok), **{k: v for k, v in detail.items()}}


def _validate_measure_file(path, report):
    from .measures import load_measure

    try:
        mu = load_measure(path)
    except InputError as exc:
        _check(report, "measure_file", False, error=str(exc))
        return
    _check(report, "measure_file", abs(mu.total() - 1) <= 1e-12 and np.all(mu.weights > 0), atoms=len(mu))


def cmd_validate(run):
    from .julia import filled_julia_outer, julia_inner
    from .measures import DiscreteMeasure
    from .pullback import _safe_base, balanced_defect, invariance_defect, pullback_measure
    from .transport import w1
    from .walk import DiskOracle, JuliaOracle, WalkConfig, run_walks

    c = run.config
    report = {}
    if c["measure"] is not None:
        _validate_measure_file(c["measure"], report)
    R = run.map
    rng = np.random.default_rng(np.random.SeedSequence([c["seed"], 0x7A1]))
    z = _safe_base(R, rng)
    lo, hi = 3, c["m"]
    mus = {m: pullback_measure(R, z, m, atom_budget=c["budget_atoms"], workers=run.workers).measure for m in (lo, hi)}
    _check(report, "measure_mass", abs(mus[hi].total() - 1) <= 1e-12, total=mus[hi].total())
    inv = {m: invariance_defect(R, mus[m], 64) for m in (lo, hi)}
    _check(report, "invariance_decay", inv[hi] <= 0.2 * inv[lo], low=inv[lo], high=inv[hi])
    bal = {m: balanced_defect(R, mus[m], 32, c["seed"]) for m in (lo, hi)}
    _check(report, "balanced_decay", bal[hi] <= 0.2 * bal[lo], low=bal[lo], high=bal[hi])

    # metric axioms on random sphere points
    pts = np.stack([rng.standard_normal(60) + 1j * rng.standard_normal(60), np.ones(60)], axis=1)
    D = sph_dist(pts[:, None, :], pts[None, :, :])
    # D[i, k] - D[i, j] - D[j, k] over all triples
    tri = float(np.max(D[:, None, :] - D[:, :, None] - D[None, :, :]))
    _check(report, "metric_axioms", np.allclose(D, D.T, atol=1e-15) and np.all(np.diag(D) <= 1e-12) and tri <= 1e-12,
           max_triangle_excess=tri)
    a = DiscreteMeasure(pts[:20], rng.random(20) + 0.1, strict=False)
    b = DiscreteMeasure(pts[20:40], rng.random(20) + 0.1, strict=False)
    e = DiscreteMeasure(pts[40:], rng.random(20) + 0.1, strict=False)
    ab, ba, ae, eb = w1(a, b), w1(b, a), w1(a, e), w1(e, b)
    _check(report, "w1_axioms", abs(ab - ba) <= 1e-12 and ab <= ae + eb + 1e-12 and w1(a, a) <= 1e-12,
           w1_ab=ab, w1_ba=ba)

    # walk stopping band on the unit disk
    cfg = WalkConfig(eps=1e-3, N=c["walks"], R_cap=4.0, seed=c["seed"], workers=run.workers)
    disk = DiskOracle(1.0)
    starts = 2.0 * np.exp(2j * np.pi * rng.random(c["walks"]))
    stops, _ = run_walks(disk, starts, cfg)
    d = disk.dist_lower(stops)
    _check(report, "stopping_band", np.all((d > cfg.eps / 2) & (d < cfg.eps)), samples=int(d.size))

    if R.is_polynomial:
        cover = filled_julia_outer(R, 1 / 128, 40)
        cloud = julia_inner(R, 10)
        inside = cover.contains(cloud.values(), inflate=cover.h * math.sqrt(2))
        _check(report, "sandwich", bool(np.all(inside)), violations=int((~inside).sum()), points=int(inside.size))
        supp = cover.contains(mus[hi].values(), inflate=cover.h * math.sqrt(2))
        _check(report, "support_in_cover", bool(np.all(supp)), violations=int((~supp).sum()))
        orc = JuliaOracle(cover, cloud)
        q = (rng.random(10_000) - 0.5) * 4 * cover.M + 1j * (rng.random(10_000) - 0.5) * 4 * cover.M
        _check(report, "oracle_sandwich", bool(np.all(orc.dist_lower(q) <= orc.dist_upper(q))), queries=int(q.size))

    ok = all(v["pass"] for v in report.values())
    run.write_json("validate.json", {"pass": ok, "checks": report, "meta": run.meta()})
    print(_table([(k, "pass" if v["pass"] else "FAIL") for k, v in report.items()], ("check", "verdict")))
    if not ok:
        failed = [k for k, v in report.items() if not v["pass"]]
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return 4
    return 0


# ------------------------------------------------------------------ parser

COMMANDS = {
    "render": cmd_render, "blmeasure": cmd_blmeasure, "w1": cmd_w1, "harmonic": cmd_harmonic,
    "capacity": cmd_capacity, "convergence": cmd_convergence, "gapdemo": cmd_gapdemo, "validate": cmd_validate,
}


def _common(p, needs_map=True):
    if needs_map:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--map", help='coefficients "p0,p1,..[:q0,q1,..]" low to high, or @file.json')
        g.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--budget-atoms", type=int, default=2 ** 20)


def _walk_flags(p, eps, samples, h, depth):
    p.add_argument("--eps", type=float, default=eps)
    p.add_argument("--samples", type=int, default=samples)
    p.add_argument("--rstart", type=float, default=None, help="start circle radius (default R_cap)")
    p.add_argument("--rcap", type=float, default=None, help="far-field cap (default 4 M)")
    p.add_argument("--oracle", choices=("julia", "disk"), default="julia")
    p.add_argument("--radius", type=float, default=1.0, help="disk radius for --oracle disk")
    p.add_argument("--h", type=float, default=h, help="outer cover cell size")
    p.add_argument("--iterations", type=int, default=60, help="escape iterations for the outer cover")
    p.add_argument("--depth", type=int, default=depth, help="inner cloud depth")


def make_parser():
    ap = _Parser(prog="blmeasure", description=__doc__.splitlines()[0])
    ap.add_argument("--manifest", help="re-run the configuration stored in a manifest.json")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("render", help="outer cover and inner cloud of the Julia set")
    _common(p)
    p.add_argument("--h", type=float, default=1 / 256)
    p.add_argument("--iterations", type=int, default=60)
    p.add_argument("--depth", type=int, default=15)

    p = sub.add_parser("blmeasure", help="certified pullback approximation of the balanced measure")
    _common(p)
    p.add_argument("--n", type=int, default=5, help="target W1 precision 2^-n / 4")

    p = sub.add_parser("w1", help="W1 distance between two measure files")
    _common(p, needs_map=False)
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--budget-pairs", type=int, default=2 ** 24)

    p = sub.add_parser("harmonic", help="harmonic measure by walk-on-spheres")
    _common(p)
    _walk_flags(p, 1e-3, 10_000, 1 / 512, 14)
    p.add_argument("--x0", default="inf")

    p = sub.add_parser("capacity", help="logarithmic capacity by walk-on-spheres")
    _common(p)
    _walk_flags(p, 5e-4, 100_000, 1 / 1024, 16)

    p = sub.add_parser("convergence", help="W1 convergence table and fitted rate")
    _common(p)
    p.add_argument("--m-min", type=int, default=2)
    p.add_argument("--m-max", type=int, default=12)
    p.add_argument("--base", default=None, help="base point (default: drawn from the seed)")
    p.add_argument("--showcase", action="store_true", help="also draw a deep pullback over the inner cloud")
    p.add_argument("--showcase-depth", type=int, default=12)
    p.add_argument("--depth", type=int, default=14, help="inner cloud depth for --showcase")

    p = sub.add_parser("gapdemo", help="gate mass in the gap domain, blocked vs open")
    _common(p, needs_map=False)
    p.add_argument("--spec", default=None, help="GapDomainSpec JSON file (default: paired demo)")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--open-j", type=int, default=1)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--samples", type=int, default=100_000)

    p = sub.add_parser("validate", help="run the invariant checks")
    _common(p)
    p.add_argument("--measure", default=None, help="also check a measure file")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--walks", type=int, default=2000)
    return ap


def _config_from_args(args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("manifest",)}
    if cfg["command"] in ("w1", "gapdemo"):
        cfg["map"] = None
    else:
        preset, spec = cfg.pop("preset"), cfg.pop("map")
        if preset is None and spec is None and cfg.get("oracle") == "disk":
            cfg["map"] = None
        else:
            cfg["map"] = parse_map(preset, spec)
        cfg["preset"] = preset
    if cfg["command"] == "gapdemo" and cfg["spec"] is not None:
        try:
            with open(cfg["spec"]) as fh:
                cfg["spec"] = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read gap spec: {exc}") from exc
    if cfg["command"] == "w1":
        # hash the inputs rather than their paths
        for k in ("a", "b"):
            with open(cfg[k], "rb") as fh:
                cfg[f"{k}_sha256"] = hashlib.sha256(fh.read()).hexdigest()
    if cfg["workers"] < 1:
        raise InputError("--workers must be >= 1")
    return cfg


def _from_manifest(path, argv_out, argv_workers):
    try:
        with open(path) as fh:
            cfg = json.load(fh)["config"]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"bad manifest {path}: {exc}") from exc
    cfg["out"] = argv_out if argv_out is not None else "out"
    cfg["workers"] = argv_workers if argv_workers is not None else 1
    return cfg


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = make_parser()
    try:
        if argv and argv[0] == "--manifest":
            # --manifest FILE [--out DIR] [--workers N]
            extra = _Parser(prog="blmeasure --manifest")
            extra.add_argument("--manifest", required=True)
            extra.add_argument("--out")
            extra.add_argument("--workers", type=int)
            ns = extra.parse_args(argv)
            config = _from_manifest(ns.manifest, ns.out, ns.workers)
        else:
            args = ap.parse_args(argv)
            if args.command is None:
                ap.print_help()
                return 1
            config = _config_from_args(args)
        run = Run(config)
        run.manifest()
        t0 = time.perf_counter()
        code = COMMANDS[config["command"]](run) or 0
        print(f"[{config['command']}] done in {time.perf_counter() - t0:.2f} s, output in {run.out}", file=sys.stderr)
        return code
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 2
    except BLError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
