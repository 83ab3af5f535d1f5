"""Iterated-preimage measures and their diagnostics.

``lambda_{z,m}`` puts mass d^-m on each point of R^-m(z) (with multiplicity).
Levels are built breadth first; each level is a list of distinct atoms with
integer-valued multiplicities stored as weights, merged at ``tol.eq``.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import tolerances
from .errors import (
    BudgetExceeded, ExceptionalPointError, InputError, NoRepellingPointFound, NoValidBallError, RootConvergenceError,
)
from .measures import DiscreteMeasure, enumerate_family, merge_atoms, thin_measure, TestFunction
from .sphere import (
    SpherePoint, critical_points, critical_values, iterate, preimage_array, sph_dist,
    spherical_derivative, to_complex,
)
from .transport import w1

DEFAULT_ATOM_BUDGET = 2 ** 20
CHUNK = 4096


def _preimage_chunk(args):
    R, pts = args
    return preimage_array(R, pts)


def preimage_level(R, pts, workers=1, chunk=CHUNK):
    """Preimages of every row of ``pts``; identical output for any worker count."""
    n = len(pts)
    if workers <= 1 or n <= chunk:
        parts = [preimage_array(R, pts[i:i + chunk]) for i in range(0, n, chunk)]
    else:
        jobs = [(R, pts[i:i + chunk]) for i in range(0, n, chunk)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_preimage_chunk, jobs))
    roots = np.concatenate([p[0] for p in parts])
    resid = np.concatenate([p[1] for p in parts])
    return roots, resid


@dataclass
class Level:
    atoms: np.ndarray       # distinct atoms, canonical order
    mult: np.ndarray        # multiplicities (float, integer valued)
    residual: float         # max preimage residual at this level
    deriv: float            # max spherical derivative of R over the atoms


class PreimageTree:
    """Incrementally grown levels R^-k(z), k = 0, 1, ..."""

    def __init__(self, R, z, tol=None, workers=1, atom_budget=DEFAULT_ATOM_BUDGET):
        self.R = R
        self.tol = tolerances.resolve(tol) if tol else R.tol
        self.z = SpherePoint.of(z)
        self.workers = workers
        self.atom_budget = atom_budget
        self.levels = [Level(self.z.uv[None, :].copy(), np.ones(1), 0.0, 0.0)]

    @property
    def depth(self):
        return len(self.levels) - 1

    def grow(self, m):
        d = self.R.degree
        while self.depth < m:
            if d ** (self.depth + 1) > self.atom_budget:
                raise BudgetExceeded(f"depth {self.depth + 1} needs {d ** (self.depth + 1)} atoms "
                                     f"(budget {self.atom_budget})")
            lv = self.levels[-1]
            roots, resid = preimage_level(self.R, lv.atoms, self.workers)
            worst = float(resid.max())
            if not worst <= self.tol.root:
                row = int(np.argmax(resid.max(axis=1)))
                raise RootConvergenceError(
                    f"preimage residual {worst:.3e} at level {self.depth + 1}, parent atom {row}",
                    location=(self.depth + 1, row), residual=worst)
            atoms = roots.reshape(-1, 2)
            mult = np.repeat(lv.mult, d)
            atoms, mult = merge_atoms(atoms, mult, 2 * self.tol.eq)
            sd = spherical_derivative(self.R, atoms)
            deriv = float(np.nanmax(sd)) if np.any(np.isfinite(sd)) else 0.0
            self.levels.append(Level(atoms, np.rint(mult), worst, deriv))
        return self.levels[m]

    def measure(self, m):
        lv = self.grow(m)
        d = self.R.degree
        return DiscreteMeasure(lv.atoms, lv.mult / float(d) ** m, tol=self.tol, merge=False)


@dataclass
class PullbackResult:
    measure: DiscreteMeasure
    z: SpherePoint
    m: int
    atom_count: int
    max_residual: float
    forward_residual: float
    kappa: float
    meta: dict = field(default_factory=dict)


def exceptional_check(R, z, loose=1e-6):
    """True when z is safe as a base point (its backward orbit is infinite)."""
    z = SpherePoint.of(z)
    pts = z.uv[None, :]
    for _ in range(2):
        roots, _ = preimage_array(R, pts)
        pts = np.concatenate([pts, roots.reshape(-1, 2)])
        pts, _ = merge_atoms(pts, np.ones(len(pts)), loose)
    if len(pts) > 2:
        return True
    roots, _ = preimage_array(R, pts)
    back = roots.reshape(-1, 2)
    dist = sph_dist(back[:, None, :], pts[None, :, :]).min(axis=1)
    return not bool(np.all(dist <= loose))


def pullback_measure(R, z, m, atom_budget=DEFAULT_ATOM_BUDGET, workers=1, tol=None, tree=None):
    if m < 0:
        raise InputError("depth m must be >= 0")
    z = SpherePoint.of(z)
    if not exceptional_check(R, z):
        raise ExceptionalPointError(f"{z} has a finite backward orbit")
    tree = tree or PreimageTree(R, z, tol=tol, workers=workers, atom_budget=atom_budget)
    lv = tree.grow(m)
    mu = tree.measure(m)
    fwd = float(sph_dist(iterate(R, lv.atoms, m), z.uv).max()) if m else 0.0
    kappa = math.prod(max(1.0, l.deriv) for l in tree.levels[1:m + 1])
    return PullbackResult(mu, z, m, R.degree ** m, max((l.residual for l in tree.levels[:m + 1]), default=0.0),
                          fwd, kappa)


def random_base_point(rng):
    """Log-uniform modulus in [1/2, 2], uniform argument."""
    r = 2.0 ** rng.uniform(-1, 1)
    return SpherePoint.of(r * np.exp(2j * np.pi * rng.uniform()))


def _safe_base(R, rng):
    """Non-exceptional base point, drawn on J when a repelling point is available.

    Every atom of lambda_{z,m} then lies on J, so finite approximants never
    leave the support of the limit.  Falls back to ``random_base_point``.
    """
    from .julia import random_julia_point
    try:
        z = random_julia_point(R, rng)
        if exceptional_check(R, z):
            return z
    except NoRepellingPointFound:
        pass
    for _ in range(64):
        z = random_base_point(rng)
        if exceptional_check(R, z):
            return z
    raise ExceptionalPointError("could not draw a non-exceptional base point")


@dataclass
class BLResult:
    measure: DiscreteMeasure
    m: int
    depth_gap: float
    base_gap: float
    z: SpherePoint
    z2: SpherePoint
    target: float
    history: list


def bl_measure(R, n, seed, atom_budget=DEFAULT_ATOM_BUDGET, pair_budget=2 ** 24, workers=1, tol=None):
    """Pullback measure certified empirically to within 2^-n / 4 by two Cauchy witnesses.

    Witness one: the gap to the next depth.  Witness two: the gap to the same
    depth from an independently drawn base point.
    """
    if n < 1:
        raise InputError("precision n must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB1]))
    z1, z2 = _safe_base(R, rng), _safe_base(R, rng)
    t1 = PreimageTree(R, z1, tol=tol, workers=workers, atom_budget=atom_budget)
    t2 = PreimageTree(R, z2, tol=tol, workers=workers, atom_budget=atom_budget)
    target = 2.0 ** -n / 4
    best, history = math.inf, []
    m = 0
    while True:
        try:
            t1.grow(m + 1)
            t2.grow(m)
            mu, nxt, alt = t1.measure(m), t1.measure(m + 1), t2.measure(m)
            g1 = w1(mu, nxt, budget=pair_budget)
            g2 = w1(mu, alt, budget=pair_budget)
        except BudgetExceeded as exc:
            raise BudgetExceeded(f"bl_measure stopped at depth {m}: {exc}; best gap {best:.3e}",
                                 best=best) from exc
        history.append((m, g1, g2))
        best = min(best, max(g1, g2))
        if g1 < target and g2 < target:
            return BLResult(mu, m, g1, g2, z1, z2, target, history)
        m += 1


@dataclass
class RateFit:
    depths: np.ndarray
    distances: np.ndarray
    slope: float
    const: float
    alpha: float
    ok: bool
    thinned: np.ndarray = None
    message: str = ""

    @property
    def A(self):
        return math.exp(self.const) if np.isfinite(self.const) else math.nan


def fit_rate(depths, dist, m_fit_max):
    depths, dist = np.asarray(depths), np.asarray(dist)
    sel = (depths <= m_fit_max) & (dist > 0)
    if sel.sum() < 2:
        return math.nan, math.nan
    slope, const = np.polyfit(depths[sel], np.log(dist[sel]), 1)
    return float(slope), float(const)


def convergence_study(R, z, m_min, m_max, pair_budget=2 ** 23, seed=0, workers=1,
                      atom_budget=DEFAULT_ATOM_BUDGET, tol=None):
    """W[m] = W1(lambda_{z,m}, lambda_{z,m_max}) and a log-linear fit over m <= m_max - 2."""
    if m_min < 0 or m_max < m_min:
        raise InputError("need 0 <= m_min <= m_max")
    depths = np.arange(m_min, m_max + 1)
    if m_max - 2 < m_min + 1:
        return RateFit(depths, np.full(depths.size, np.nan), math.nan, math.nan, math.nan, False,
                       np.zeros(depths.size, bool), "degenerate depth range: need m_max - 2 > m_min")
    z = SpherePoint.of(z)
    if not exceptional_check(R, z):
        raise ExceptionalPointError(f"{z} has a finite backward orbit")
    tree = PreimageTree(R, z, tol=tol, workers=workers, atom_budget=atom_budget)
    ref = tree.measure(m_max)
    dist, thinned = [], []
    for m in depths:
        mu = tree.measure(m)
        try:
            val, th = w1(mu, ref, budget=pair_budget), False
        except BudgetExceeded:
            side = max(1, int(math.isqrt(pair_budget)))
            a = mu if len(mu) <= side else thin_measure(mu, side, seed + int(m))
            b = ref if len(ref) <= side else thin_measure(ref, side, seed + 7919)
            val, th = w1(a, b, budget=pair_budget), True
        dist.append(val)
        thinned.append(th)
    dist = np.array(dist)
    slope, const = fit_rate(depths, dist, m_max - 2)
    ok = np.isfinite(slope)
    return RateFit(depths, dist, slope, const, math.exp(-slope) if ok else math.nan, bool(ok),
                   np.array(thinned), "" if ok else "fewer than two positive distances in fit range")


def invariance_defect(R, mu, k):
    """max over the first k bumps of |int phi o R dmu - int phi dmu|."""
    if k < 1:
        raise InputError("k must be >= 1")
    img = R(mu.atoms)
    out = 0.0
    for phi in enumerate_family(k):
        out = max(out, abs(math.fsum(mu.weights * phi(img)) - math.fsum(mu.weights * phi(mu.atoms))))
    return out


def _safe_spherical_radius(z, r):
    """Largest rho with the spherical ball B(z, rho) inside the Euclidean disk B(z, r)."""
    a = abs(z)
    chord = 2 * r / math.sqrt((1 + a * a) * (1 + (a + r) ** 2))
    return 2 * math.asin(min(1.0, chord / 2))


@dataclass
class BallTrial:
    center: complex
    q: float
    r: float
    rho: float
    defect: float


def balanced_defect(R, mu, trials, seed, grid=256, return_trials=False):
    """Balancedness defect of mu on small balls where R is injective.

    For each sampled center z_i, q is half the distance from R(z_i) to the
    finite critical values, so an inverse branch exists on B(R(z_i), q); by
    the Koebe quarter theorem R is injective on B(z_i, q / (4|R'(z_i)|)).
    For phi supported in that ball, phi o R_i^-1 equals the sum of phi over
    all preimages, since at most one preimage lies in the ball.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    d = R.degree
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xBA1]))
    crit = to_complex(critical_points(R))
    cv = to_complex(critical_values(R))
    cv = cv[np.isfinite(cv)]
    crit = crit[np.isfinite(crit)]
    pre, _ = preimage_array(R, mu.atoms)
    pre = pre.reshape(-1, 2)
    wpre = np.repeat(mu.weights, d)
    pa = np.polynomial.polynomial
    out, rec = None, []
    for _ in range(trials):
        a = to_complex(mu.atoms[rng.choice(len(mu), p=mu.weights)])
        if not np.isfinite(a):
            continue
        zi = complex(round(a.real * grid) / grid, round(a.imag * grid) / grid)
        if crit.size and np.min(np.abs(crit - zi)) <= 1e-8:
            continue
        qz = pa.polyval(zi, R.q)
        if abs(qz) <= 1e-12:
            continue
        w = pa.polyval(zi, R.p) / qz
        der = (pa.polyval(zi, pa.polyder(R.p)) * qz - pa.polyval(zi, R.p) * pa.polyval(zi, pa.polyder(R.q))) / qz ** 2
        if abs(der) <= 1e-12:
            continue
        q = 0.5 * float(np.min(np.abs(cv - w))) if cv.size else 1.0
        if q <= 0:
            continue
        r = q / (4 * abs(der))
        rho = _safe_spherical_radius(zi, r)
        best = 0.0
        for s in (1, 2, 3):
            h = rho * 2.0 ** -s
            phi = TestFunction(SpherePoint.of(zi), h, h)
            i1 = math.fsum(wpre * phi(pre))
            i2 = math.fsum(mu.weights * phi(mu.atoms))
            best = max(best, abs(i1 - d * i2))
        rec.append(BallTrial(zi, q, r, rho, best))
        out = best if out is None else max(out, best)
    if out is None:
        raise NoValidBallError("every sampled center was critical or a pole")
    return (out, rec) if return_trials else out
