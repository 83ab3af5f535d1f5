"""Gate geometry: unit disk plus small disks D_n, with arcs L_n of the unit circle removed.

Angles are in turns.  Gate n sits at c_n = position * 2^-n with half-width
w_n = width * 2^-2n.  D_n has the chord from c_n - w_n to c_n + w_n as a
diameter.  A blocked gate is one solid arc leaving end gaps of w_n * gap; an
open gate is a comb of short teeth with spacing w_n * 2^-j.  The literal
constants (``literal=True``) underflow doubles almost at once; the default
scale keeps every feature large enough for double precision and Monte Carlo.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import GeometryUnderflowError, InputError
from .walk import CompactSetOracle, run_walks

TAU_EQ = 1e-12

DEFAULT_SCALE = {
    "position": 0.25,   # c_n = position * 2^-n
    "width": 0.125,     # w_n = width * 2^-2n
    "gap": 2.0 ** -8,   # blocked-arc end gap, as a fraction of w_n
    "tooth": 2.0 ** -20,  # open-gate tooth length, as a fraction of the spacing
    "sample": 1e-3,     # spacing of the inner point cloud (radians of arc)
}


@dataclass
class GapDomainSpec:
    gates: dict                          # n -> "blocked" | ("open", j)
    scale: dict = field(default_factory=dict)
    literal: bool = False                # use the unscaled constants

    @property
    def n_range(self):
        ks = sorted(self.gates)
        return ks[0], ks[-1]

    def param(self, key):
        return self.scale.get(key, DEFAULT_SCALE[key])

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        gates = {}
        try:
            for k, v in obj["gates"].items():
                n = int(k)
                if v == "blocked":
                    gates[n] = "blocked"
                elif isinstance(v, dict) and "open" in v:
                    gates[n] = ("open", int(v["open"]))
                else:
                    raise InputError(f"bad gate state {v!r}")
        except (KeyError, AttributeError, ValueError) as exc:
            raise InputError(f"bad gap-domain spec: {exc}") from exc
        return cls(gates, dict(obj.get("scale", {})), bool(obj.get("literal", False)))

    def to_json(self):
        g = {str(n): ("blocked" if v == "blocked" else {"open": v[1]}) for n, v in sorted(self.gates.items())}
        return {"gates": g, "scale": dict(sorted(self.scale.items())), "literal": self.literal}


@dataclass
class Gate:
    n: int
    c: float          # turns
    w: float          # turns
    center: complex   # of D_n
    radius: float
    arcs: np.ndarray  # (k, 2) turn intervals


def _gate(spec, n):
    if n < 1:
        raise InputError("gate index n must be >= 1")
    state = spec.gates[n]
    if spec.literal:
        c, w = 2.0 ** -n, 2.0 ** -(2 * n)
        g = 2.0 ** -(10 * n)
    else:
        c = spec.param("position") * 2.0 ** -n
        w = spec.param("width") * 2.0 ** -(2 * n)
        g = w * spec.param("gap")
    phi = 2 * math.pi * w
    center = math.cos(phi) * complex(math.cos(2 * math.pi * c), math.sin(2 * math.pi * c))
    radius = math.sin(phi)
    if state == "blocked":
        arcs = np.array([[c - w + g, c + w - g]])
        sizes = [g, 2 * (w - g)]
    else:
        j = state[1]
        if spec.literal:
            j = max(j, 8 * n)
            s = 2.0 ** (-2 * n - j)
            # exp(-2^(2n+2j)) is far below any representable length
            length = math.exp(-min(2.0 ** (2 * n + 2 * j), 1e4))
        else:
            s = w * 2.0 ** -j
            length = s * spec.param("tooth")
        k = np.arange(-(2 ** j - 1), 2 ** j)
        arcs = np.c_[c + k * s, c + k * s + length]
        sizes = [s - length, length]
    for size in sizes + [w]:
        if 2 * math.pi * size < 10 * TAU_EQ:
            raise GeometryUnderflowError(f"gate {n}: feature of {size:.3g} turns is below resolution")
    return Gate(n, c, w, center, radius, arcs)


def _arc_distance(z, a0, a1):
    """Distance from points z to the arcs [a0, a1] (turns) of the unit circle, (len(z), k)."""
    z = np.asarray(z, complex)[:, None]
    ang = np.angle(z) / (2 * np.pi)
    mid = 0.5 * (a0 + a1)[None, :]
    rel = (ang - mid + 0.5) % 1.0 - 0.5
    half = 0.5 * (a1 - a0)[None, :]
    inside = np.abs(rel) <= half
    e0 = np.exp(2j * np.pi * a0)[None, :]
    e1 = np.exp(2j * np.pi * a1)[None, :]
    ends = np.minimum(np.abs(z - e0), np.abs(z - e1))
    return np.where(inside, np.abs(np.abs(z) - 1), ends)


def _semicircle_distance(z, gate):
    """Distance to S_n, the half of the boundary of D_n outside the unit disk."""
    z = np.asarray(z, complex)
    u = np.exp(2j * np.pi * gate.c)
    rel = (z - gate.center) / u
    on = rel.real >= 0
    ends = np.minimum(np.abs(rel - 1j * gate.radius), np.abs(rel + 1j * gate.radius))
    return np.where(on, np.abs(np.abs(rel) - gate.radius), ends)


class GapDomainOracle(CompactSetOracle):
    """K = C minus (unit disk and the D_n, without the arcs)."""

    def __init__(self, spec):
        self.spec = spec
        self.gates = [_gate(spec, n) for n in sorted(spec.gates)]
        for a, b in zip(self.gates, self.gates[1:]):
            if a.c - a.w <= b.c + b.w:
                raise InputError(f"gates {a.n} and {b.n} overlap")
        self.arcs = np.concatenate([g.arcs for g in self.gates])
        self.centers = np.array([g.center for g in self.gates])
        self.radii = np.array([g.radius for g in self.gates])
        self.M = max(1.0, float(np.max(np.abs(self.centers) + self.radii)))
        self.cloud = self._sample(spec.param("sample"))
        self.tree = cKDTree(np.c_[self.cloud.real, self.cloud.imag])
        self.resolution = spec.param("sample")

    def in_domain(self, z):
        z = np.asarray(z, complex)
        lam = np.abs(z) < 1
        for g in self.gates:
            lam |= np.abs(z - g.center) < g.radius
        return lam

    def _sample(self, step):
        pts = []
        # unit circle outside the gate windows
        n = int(math.ceil(2 * math.pi / step))
        t = np.arange(n) / n
        keep = np.ones(n, bool)
        for g in self.gates:
            keep &= np.abs((t - g.c + 0.5) % 1.0 - 0.5) >= g.w
        pts.append(np.exp(2j * np.pi * t[keep]))
        for g in self.gates:
            m = max(2, int(math.ceil(math.pi * g.radius / step)))
            phi = np.linspace(-np.pi / 2, np.pi / 2, m + 1)
            pts.append(g.center + g.radius * np.exp(1j * phi) * np.exp(2j * np.pi * g.c))
        for a0, a1 in self.arcs:
            m = max(1, int(math.ceil(2 * math.pi * (a1 - a0) / step)))
            pts.append(np.exp(2j * np.pi * np.linspace(a0, a1, m + 1)))
        return np.concatenate(pts)

    def dist_lower(self, z):
        z = np.atleast_1d(np.asarray(z, complex))
        shape = z.shape
        z = z.ravel()
        arcs = _arc_distance(z, self.arcs[:, 0], self.arcs[:, 1]).min(axis=1)
        inner = 1 - np.abs(z)
        for g in self.gates:
            inner = np.maximum(inner, g.radius - np.abs(z - g.center))
        d = np.minimum(arcs, inner)
        d = np.where(self.in_domain(z), np.maximum(d, 0.0), 0.0)
        return d.reshape(shape)

    def dist_upper(self, z):
        z = np.asarray(z, complex)
        d, _ = self.tree.query(np.c_[z.real.ravel(), z.imag.ravel()])
        return d.reshape(z.shape)

    def snap(self, z):
        z = np.asarray(z, complex)
        d, i = self.tree.query(np.c_[z.real.ravel(), z.imag.ravel()])
        return self.cloud[i].reshape(z.shape), d.reshape(z.shape)

    def gate(self, n):
        for g in self.gates:
            if g.n == n:
                return g
        raise InputError(f"no gate {n}")


def gap_domain(spec):
    return GapDomainOracle(spec)


def wilson(k, n, z=1.959963984540054):
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


@dataclass
class GateMass:
    n: int
    estimate: float
    lo: float
    hi: float
    hits: int
    samples: int
    mean_steps: float

    def to_dict(self):
        return dict(self.__dict__)


def gate_mass(oracle, spec, n, cfg):
    """Fraction of walks from 0 that stop within 2 eps of S_n, with a 95% Wilson interval."""
    if cfg.N < 1:
        raise InputError("gate_mass needs at least one sample")
    if not cfg.eps > 0:
        raise InputError("eps must be positive")
    g = oracle.gate(n)
    stops, steps = run_walks(oracle, np.zeros(cfg.N, complex), cfg)
    hit = _semicircle_distance(stops, g) < 2 * cfg.eps
    k = int(hit.sum())
    lo, hi = wilson(k, cfg.N)
    return GateMass(n, k / cfg.N, lo, hi, k, cfg.N, float(steps.mean()))
