"""Finitely supported probability measures on the sphere and Lipschitz bumps."""

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import tolerances
from .errors import InputError, MeasureError
from .sphere import SpherePoint, as_points, canonical_order, from_complex, lift, normalize, sph_dist, to_complex

# sum of weights must be 1 to this accuracy before renormalization
WEIGHT_SUM_TOL = 1e-9


def merge_atoms(atoms, weights, radius):
    """Merge atoms closer than ``radius`` (chordal, on normalized coordinates).

    Returns canonically ordered (atoms, weights).  Each merged group keeps its
    first atom in canonical order as representative.
    """
    atoms = normalize(atoms)
    order = canonical_order(atoms)
    atoms, weights = atoms[order], np.asarray(weights, float)[order]
    n = len(atoms)
    if n > 1 and radius > 0:
        tree = cKDTree(lift(atoms))
        pairs = tree.query_pairs(radius, output_type="ndarray")
        if len(pairs):
            g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
            _, lab = connected_components(g, directed=False)
            # relabel groups by first member so the representative is canonical-first
            first = np.full(lab.max() + 1, n)
            np.minimum.at(first, lab, np.arange(n))
            rep = first[lab]
            keep = np.unique(rep)
            wsum = np.zeros(n)
            np.add.at(wsum, rep, weights)
            return atoms[keep], wsum[keep]
    return atoms, weights


class DiscreteMeasure:
    """Probability measure sum_i w_i delta_{a_i}; atoms are normalized (n, 2) arrays.

    Weights are always rescaled to total 1.  With ``strict`` the raw total
    must already be within WEIGHT_SUM_TOL of 1.
    """

    def __init__(self, atoms, weights=None, tol=None, merge=True, strict=True):
        tol = tolerances.resolve(tol)
        atoms = as_points(atoms)
        n = len(atoms)
        if n == 0:
            raise MeasureError("measure needs at least one atom")
        w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, float).ravel()
        if w.shape != (n,):
            raise MeasureError(f"{n} atoms but {w.size} weights")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise MeasureError("weights must be finite and nonnegative")
        total = math.fsum(w)
        self.raw_total = total
        if strict and abs(total - 1) > WEIGHT_SUM_TOL:
            raise MeasureError(f"weights sum to {total!r}, not 1")
        if not total > 0:
            raise MeasureError("all weights are zero")
        w = w / total
        pos = w > 0
        atoms, w = atoms[pos], w[pos]
        if len(atoms) == 0:
            raise MeasureError("all weights are zero")
        if merge:
            atoms, w = merge_atoms(atoms, w, 2 * tol.eq)
        else:
            order = canonical_order(atoms)
            atoms, w = atoms[order], w[order]
        self.atoms = atoms
        self.weights = w
        self.atoms.setflags(write=False)
        self.weights.setflags(write=False)

    @classmethod
    def dirac(cls, z):
        return cls(SpherePoint.of(z).uv[None, :], [1.0])

    @classmethod
    def uniform(cls, pts, **kw):
        pts = as_points(pts)
        return cls(pts, np.full(len(pts), 1.0 / len(pts)), **kw)

    def __len__(self):
        return len(self.atoms)

    @property
    def points(self):
        return [SpherePoint(*a) for a in self.atoms]

    def values(self):
        return to_complex(self.atoms)

    def total(self):
        return math.fsum(self.weights)

    def to_json(self, meta=None):
        z = self.values()
        atoms = ["inf" if not np.isfinite(c) else [float(c.real), float(c.imag)] for c in z]
        out = {"atoms": atoms, "weights": [float(x) for x in self.weights]}
        if meta is not None:
            out["meta"] = meta
        return out

    def dumps(self, meta=None):
        return json.dumps(self.to_json(meta), sort_keys=True, indent=1) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["re", "im", "weight"])
        for c, w in zip(self.values(), self.weights):
            if np.isfinite(c):
                wr.writerow([repr(float(c.real)), repr(float(c.imag)), repr(float(w))])
            else:
                wr.writerow(["inf", "", repr(float(w))])
        return buf.getvalue()

    def __repr__(self):
        return f"DiscreteMeasure(n={len(self)})"


def _parse_atom(a):
    if isinstance(a, str):
        if a.strip().lower() in ("inf", "infinity", "∞"):
            return complex(np.inf)
        return complex(a.replace(" ", ""))
    if isinstance(a, (list, tuple)) and len(a) == 2:
        return complex(float(a[0]), float(a[1]))
    raise MeasureError(f"cannot parse atom {a!r}")


def measure_from_json(obj, strict=True):
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        z = np.array([_parse_atom(a) for a in obj["atoms"]], complex)
        w = np.asarray(obj["weights"], float)
    except (KeyError, TypeError, ValueError) as exc:
        raise MeasureError(f"bad measure file: {exc}") from exc
    return DiscreteMeasure(from_complex(z), w, strict=strict)


def measure_from_csv(text, strict=True):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    try:
        z = np.array([complex(np.inf) if r["re"].strip() == "inf" else complex(float(r["re"]), float(r["im"] or 0))
                      for r in rows], complex)
        w = np.array([float(r["weight"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise MeasureError(f"bad measure csv: {exc}") from exc
    return DiscreteMeasure(from_complex(z), w, strict=strict)


def load_measure(path, strict=True):
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".csv"):
        return measure_from_csv(text, strict=strict)
    try:
        return measure_from_json(text, strict=strict)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc


# ---------------------------------------------------------------- test functions

@dataclass(frozen=True)
class TestFunction:
    """phi(x) = |1 - |d(x, s) - r|^+ / eps|^+ with d the spherical distance."""

    __test__ = False  # not a pytest class

    center: SpherePoint
    r: float
    eps: float

    def __post_init__(self):
        if not (self.r > 0 and self.eps > 0):
            raise InputError("test function needs r > 0 and eps > 0")

    def __call__(self, pts):
        d = sph_dist(as_points(pts), self.center.uv)
        return np.clip(1 - np.maximum(d - self.r, 0) / self.eps, 0.0, 1.0)

    def key(self):
        c = self.center
        return (c.u, c.v, self.r, self.eps)


def bump_eval(phi, x):
    return float(phi(SpherePoint.of(x).uv[None, :])[0])


def _level_points(level):
    """New dyadic grid points of spacing 2^-level in [-2, 2]^2 (exact rationals)."""
    step = Fraction(1, 2 ** level)
    n = 4 * 2 ** level
    pts = []
    for i in range(n + 1):
        for j in range(n + 1):
            x, y = -2 + i * step, -2 + j * step
            if level > 0 and (x / (step * 2)).denominator == 1 and (y / (step * 2)).denominator == 1:
                continue
            pts.append((x * x + y * y, x, y))
    pts.sort()
    return [(x, y) for _, x, y in pts]


@lru_cache(maxsize=None)
def _centers(count):
    """First ``count`` ideal centers: per dyadic level, z-chart grid then 1/z-chart grid."""
    out, seen = [], set()
    level = 0
    while len(out) < count:
        grid = _level_points(level)
        for chart in ("z", "w"):
            for x, y in grid:
                c = complex(float(x), float(y))
                if chart == "z":
                    pt = SpherePoint(c, 1)
                else:
                    pt = SpherePoint(1, c)
                key = (round(pt.u.real, 12), round(pt.u.imag, 12), round(pt.v.real, 12), round(pt.v.imag, 12))
                if key in seen:
                    continue
                seen.add(key)
                out.append(pt)
        level += 1
    return tuple(out[:count])


def _unpair(t):
    """Inverse Cantor pairing, ordered so that index 0 -> (0, 0)."""
    w = int((math.isqrt(8 * t + 1) - 1) // 2)
    b = t - w * (w + 1) // 2
    return w - b, b


def enumerate_family(k):
    """Deterministic enumeration of the first k bumps over (center, r, eps) triples."""
    if k < 1:
        raise InputError("k must be >= 1")
    idx = [_unpair(t) for t in range(k)]
    centers = _centers(max(c for c, _ in idx) + 1)
    out = []
    for c, s in idx:
        j, l = _unpair(s)
        out.append(TestFunction(centers[c], 2.0 ** -(j + 1), 2.0 ** -(l + 1)))
    return out


def integrate(mu, f):
    """sum_i w_i f(a_i); ``f`` takes an (n, 2) point array (or a SpherePoint)."""
    try:
        vals = np.asarray(f(mu.atoms), float)
    except (TypeError, AttributeError, ValueError):
        vals = None
    if vals is None or vals.shape != (len(mu),):
        vals = np.array([float(f(p)) for p in mu.points])
    return math.fsum(mu.weights * vals)


def thin_measure(mu, n_target, seed):
    """Equal-weight resampling of ``mu`` with ``n_target`` atoms (systematic scheme)."""
    if n_target < 1:
        raise InputError("n_target must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x7417]))
    cdf = np.cumsum(mu.weights)
    cdf /= cdf[-1]
    pos = (np.arange(n_target) + rng.random()) / n_target
    idx = np.minimum(np.searchsorted(cdf, pos, side="right"), len(mu) - 1)
    return DiscreteMeasure(mu.atoms[idx], np.full(n_target, 1.0 / n_target))


def uniform_circle(n, radius=1.0, phase=0.0):
    """Uniform measure on n equally spaced points of |z| = radius."""
    z = radius * np.exp(1j * (phase + 2 * np.pi * np.arange(n) / n))
    return DiscreteMeasure(from_complex(z), np.full(n, 1.0 / n))
