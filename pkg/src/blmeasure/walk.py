"""Walk-on-spheres sampling of harmonic measure and logarithmic capacity.

A walker at x jumps to a uniform point of a circle around x that stays
inside the domain, which samples the Brownian exit law of that disk exactly.
Outside the circle |z| = R_cap the walker instead jumps straight onto that
circle with the exact exterior hitting law (Poisson kernel of the exterior,
sampled through a disk automorphism).
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import rng
from .errors import InputError, WalkBudgetExceeded
from .measures import DiscreteMeasure
from .sphere import from_complex

# rng streams
_ANGLE, _START = 0, 1


class CompactSetOracle:
    """Two-sided distance estimates to a compact set K in the plane."""

    M = 1.0            # K lies in the closed disk |z| <= M
    resolution = 0.0   # slack between the two bounds near K

    def dist_lower(self, z):
        raise NotImplementedError

    def dist_upper(self, z):
        raise NotImplementedError

    def snap(self, z):
        """Nearest known point of K and its distance."""
        raise NotImplementedError


class DiskOracle(CompactSetOracle):
    """Closed disk |z - center| <= radius, distances exact."""

    def __init__(self, radius=1.0, center=0j):
        self.radius = float(radius)
        self.center = complex(center)
        self.M = abs(self.center) + self.radius

    def dist_lower(self, z):
        return np.maximum(np.abs(np.asarray(z) - self.center) - self.radius, 0.0)

    dist_upper = dist_lower

    def snap(self, z):
        z = np.asarray(z, complex)
        w = z - self.center
        a = np.abs(w)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(a > self.radius, self.center + w / a * self.radius, z)
        return s, np.abs(z - s)


class JuliaOracle(CompactSetOracle):
    """K bracketed by an outer cell cover and an inner point cloud."""

    def __init__(self, cover, cloud):
        self.cover = cover
        self.h = cover.h
        z = cloud.values() if hasattr(cloud, "values") else np.asarray(cloud, complex)
        z = z[np.isfinite(z)]
        self.cloud = z
        self.tree = cKDTree(np.c_[z.real, z.imag])
        self.M = cover.M
        cover.boundary_tree()
        # distance from boundary-cell centers to the cloud bounds how far the
        # cover sticks out beyond the known part of K
        b = cover.centers(cover.boundary_cells())
        gap, _ = self.tree.query(np.c_[b.real, b.imag])
        self.cover_gap = float(np.max(gap)) if gap.size else 0.0
        self.resolution = self.cover_gap + self.h * math.sqrt(2)

    def dist_lower(self, z):
        z = np.asarray(z, complex)
        d = self.cover.center_distance(z) - self.h * math.sqrt(2) / 2
        d = np.maximum(d, 0.0)
        return np.where(self.cover.in_cell(z), 0.0, d)

    def dist_upper(self, z):
        z = np.asarray(z, complex)
        d, _ = self.tree.query(np.c_[z.real.ravel(), z.imag.ravel()])
        return d.reshape(z.shape)

    def snap(self, z):
        z = np.asarray(z, complex)
        d, i = self.tree.query(np.c_[z.real.ravel(), z.imag.ravel()])
        return self.cloud[i].reshape(z.shape), d.reshape(z.shape)


@dataclass(frozen=True)
class WalkConfig:
    eps: float = 1e-3
    N: int = 10_000
    R_cap: float = 16.0
    R_start: float = 16.0
    seed: int = 0
    step_cap: int = 1_000_000
    chunk: int = 4096
    workers: int = 1

    def check(self, oracle=None):
        if not self.eps > 0:
            raise InputError("eps must be positive")
        if self.N < 1:
            raise InputError("sample count N must be >= 1")
        if oracle is not None and self.R_cap < 4 * oracle.M:
            raise InputError(f"R_cap {self.R_cap} < 4 M = {4 * oracle.M}")

    def to_dict(self):
        d = asdict(self)
        d.pop("workers")
        return d


def _walk(oracle, x, idx, cfg):
    """Run walkers with indices ``idx`` from starting points ``x`` to the stopping band."""
    x = np.array(x, complex)
    n = x.size
    steps = np.zeros(n, np.int64)
    done = np.zeros(n, bool)
    eps = cfg.eps
    d0 = oracle.dist_lower(x)
    bad = d0 <= eps
    if np.any(bad):
        raise InputError(f"walk start at distance {float(d0[bad].min()):.3g} <= eps from K")
    act = np.arange(n)
    while act.size:
        xa = x[act]
        far = np.abs(xa) > cfg.R_cap
        theta = 2 * np.pi * rng.uniform(cfg.seed, idx[act], steps[act], _ANGLE)
        e = np.exp(1j * theta)
        new = xa.copy()
        if np.any(far):
            a = cfg.R_cap / xa[far]
            ef = e[far]
            u = (ef + a) / (1 + np.conj(a) * ef)
            new[far] = cfg.R_cap / u
        near = np.nonzero(~far)[0]
        if near.size:
            d = oracle.dist_lower(xa[near])
            stop = (d > eps / 2) & (d < eps)
            if np.any(d <= eps / 2):
                raise AssertionError("walker fell below the stopping band")
            mv = near[~stop]
            r = np.minimum(d[~stop] - 0.75 * eps, cfg.R_cap)
            new[mv] = xa[mv] + r * e[mv]
            done[act[near[stop]]] = True
            moved = np.ones(act.size, bool)
            moved[near[stop]] = False
        else:
            moved = np.ones(act.size, bool)
        x[act[moved]] = new[moved]
        steps[act[moved]] += 1
        act = act[~done[act]]
        if act.size and steps[act].max() >= cfg.step_cap:
            raise WalkBudgetExceeded(f"walk exceeded {cfg.step_cap} steps", completed=int(done.sum()))
    return x, steps


def _run_chunk(args):
    oracle, x0, idx, cfg = args
    return _walk(oracle, x0, idx, cfg)


def run_walks(oracle, starts, cfg, index_offset=0):
    """Stop points and step counts for walkers index_offset .. index_offset + len(starts) - 1."""
    starts = np.asarray(starts, complex)
    n = starts.size
    idx = np.arange(index_offset, index_offset + n, dtype=np.int64)
    jobs = [(oracle, starts[i:i + cfg.chunk], idx[i:i + cfg.chunk], cfg) for i in range(0, n, cfg.chunk)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    done = 0
    xs, st = [], []
    for p in parts:
        xs.append(p[0])
        st.append(p[1])
        done += len(p[0])
    return np.concatenate(xs), np.concatenate(st)


def circle_starts(cfg, radius, n=None):
    n = cfg.N if n is None else n
    th = 2 * np.pi * rng.uniform(cfg.seed, np.arange(n, dtype=np.int64), 0, _START)
    return radius * np.exp(1j * th)


def wos_sample(oracle, x0, cfg, index):
    """Stop point of walker ``index`` started at x0."""
    cfg.check(oracle)
    x, _ = _walk(oracle, np.array([complex(x0)]), np.array([index], np.int64), cfg)
    return complex(x[0])


@dataclass
class HarmonicResult:
    measure: DiscreteMeasure
    stops: np.ndarray
    snapped: np.ndarray
    snap_dist: np.ndarray
    flagged: np.ndarray
    steps: np.ndarray
    snap_radius: float

    def stats(self):
        n = len(self.stops)
        return {
            "samples": n,
            "mean_steps": float(self.steps.mean()),
            "max_steps": int(self.steps.max()),
            "flagged_count": int(self.flagged.sum()),
            "flagged_fraction": float(self.flagged.mean()),
            "max_snap_distance": float(self.snap_dist.max()),
            "snap_radius": self.snap_radius,
        }


def _starts_for(x0, cfg):
    if x0 is None or (isinstance(x0, str) and x0 == "inf") or not np.isfinite(complex(x0)):
        return circle_starts(cfg, cfg.R_start)
    return np.full(cfg.N, complex(x0))


def harmonic_measure(oracle, x0, cfg):
    """Equal-weight measure on snapped stop points; x0 = None or inf starts on |z| = R_start."""
    cfg.check(oracle)
    starts = _starts_for(x0, cfg)
    stops, steps = run_walks(oracle, starts, cfg)
    snapped, sd = oracle.snap(stops)
    radius = 2 * cfg.eps + oracle.resolution
    flagged = sd > radius
    pts = np.where(flagged, stops, snapped)
    mu = DiscreteMeasure(from_complex(pts), np.full(len(pts), 1.0 / len(pts)))
    return HarmonicResult(mu, stops, snapped, sd, flagged, steps, radius)


@dataclass
class CapacityResult:
    estimate: float
    stderr: float
    mean_log: float
    bias: float
    estimate_2r: float
    samples: int
    flagged: int
    mean_steps: float

    def to_dict(self):
        return asdict(self)


def _capacity_once(oracle, cfg, radius):
    starts = circle_starts(cfg, radius)
    stops, steps = run_walks(oracle, starts, cfg)
    snapped, sd = oracle.snap(stops)
    flagged = sd > 2 * cfg.eps + oracle.resolution
    pts = np.where(flagged, stops, snapped)
    logs = np.log(np.abs(pts))
    mean = math.fsum(logs) / len(logs)
    sd_log = float(np.std(logs, ddof=1)) if len(logs) > 1 else math.inf
    est = math.exp(mean)
    return est, est * sd_log / math.sqrt(len(logs)), mean, int(flagged.sum()), float(steps.mean())


def capacity(oracle, cfg, bias_check=True):
    """exp(E log|B_T|) for walkers started uniformly on |z| = R_start.

    Hitting points are snapped to the known points of K.  The bias estimate
    reruns with the same random streams from 2 R_start.
    """
    cfg.check(oracle)
    if cfg.R_start < 4 * oracle.M:
        raise InputError(f"R_start {cfg.R_start} < 4 M = {4 * oracle.M}")
    est, se, mean, fl, ms = _capacity_once(oracle, cfg, cfg.R_start)
    est2, bias = math.nan, math.nan
    if bias_check:
        est2 = _capacity_once(oracle, cfg, 2 * cfg.R_start)[0]
        bias = est2 - est
    return CapacityResult(est, se, mean, bias, est2, cfg.N, fl, ms)
