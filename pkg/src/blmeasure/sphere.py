"""Riemann sphere arithmetic and rational maps in homogeneous coordinates.

Points are pairs ``[u : v]`` with ``z = u / v``.  Arrays of points are complex
arrays of shape ``(..., 2)``; :func:`normalize` puts them in the canonical
chart form (``v == 1`` when ``|u| <= |v|``, else ``u == 1``) which gives every
point a unique representation with ``max(|u|, |v|) == 1``.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import tolerances
from .errors import CoprimalityError, InputError, RootConvergenceError
from .roots import binary_form_roots

INF = np.array([1, 0], complex)


def normalize(uv):
    uv = np.asarray(uv, complex)
    u, v = uv[..., 0], uv[..., 1]
    zchart = np.abs(u) <= np.abs(v)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        nu = np.where(zchart, u / v, 1)
        nv = np.where(zchart, 1, v / u)
    return np.stack([nu, nv], axis=-1)


def from_complex(z):
    """Complex numbers (``np.inf`` allowed) to homogeneous points."""
    z = np.asarray(z, complex)
    fin = np.isfinite(z)
    return np.stack([np.where(fin, z, 1), np.where(fin, 1, 0)], axis=-1).astype(complex)


def to_complex(uv):
    """Homogeneous points to complex values; infinity maps to ``inf``."""
    uv = np.asarray(uv, complex)
    u, v = uv[..., 0], uv[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v != 0, u / np.where(v != 0, v, 1), np.inf + 0j)


def lift(uv):
    """Stereographic lift to the unit sphere in R^3 (north pole = infinity)."""
    uv = np.asarray(uv, complex)
    u, v = uv[..., 0], uv[..., 1]
    nrm = np.abs(u) ** 2 + np.abs(v) ** 2
    uvb = u * np.conj(v)
    return np.stack([2 * uvb.real, 2 * uvb.imag, np.abs(u) ** 2 - np.abs(v) ** 2], axis=-1) / nrm[..., None]


def sph_dist(a, b):
    """Geodesic distance on the unit sphere (radians, in [0, pi])."""
    x, y = lift(a), lift(b)
    cross = np.linalg.norm(np.cross(x, y), axis=-1)
    dot = np.sum(x * y, axis=-1)
    return np.arctan2(cross, dot)


def chordal(a, b):
    a = np.asarray(a, complex)
    b = np.asarray(b, complex)
    num = 2 * np.abs(a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])
    den = np.sqrt((np.abs(a[..., 0]) ** 2 + np.abs(a[..., 1]) ** 2)
                  * (np.abs(b[..., 0]) ** 2 + np.abs(b[..., 1]) ** 2))
    return num / den


def canonical_order(uv):
    """Indices sorting points lexicographically on their canonical coordinates."""
    uv = normalize(uv)
    inf_chart = (uv[..., 1] != 1).astype(int)
    val = np.where(inf_chart == 1, uv[..., 1], uv[..., 0])
    return np.lexsort((val.imag, val.real, inf_chart))


@dataclass(frozen=True, eq=False)
class SpherePoint:
    u: complex
    v: complex

    def __post_init__(self):
        if self.u == 0 and self.v == 0:
            raise InputError("[0:0] is not a point of the sphere")
        nu, nv = normalize(np.array([self.u, self.v]))
        object.__setattr__(self, "u", complex(nu))
        object.__setattr__(self, "v", complex(nv))

    @classmethod
    def of(cls, z):
        if isinstance(z, SpherePoint):
            return z
        if z is None or (isinstance(z, str) and z == "inf") or not np.isfinite(complex(z)):
            return cls(1, 0)
        return cls(complex(z), 1)

    @classmethod
    def infinity(cls):
        return cls(1, 0)

    @property
    def is_infinity(self):
        return self.v == 0

    @property
    def z(self):
        return complex(np.inf) if self.v == 0 else self.u / self.v

    @property
    def uv(self):
        return np.array([self.u, self.v], complex)

    def same(self, other, tol=None):
        tol = tolerances.resolve(tol)
        o = SpherePoint.of(other)
        return abs(self.u * o.v - self.v * o.u) <= tol.eq

    def __eq__(self, other):
        try:
            return self.same(other)
        except (TypeError, ValueError):
            return NotImplemented

    __hash__ = None

    def __repr__(self):
        return "SpherePoint(inf)" if self.is_infinity else f"SpherePoint({self.z!r})"


def as_points(x):
    """Accept SpherePoint(s), complex scalars/arrays or (n, 2) arrays."""
    if isinstance(x, SpherePoint):
        return x.uv[None, :]
    if isinstance(x, (list, tuple)) and x and isinstance(x[0], SpherePoint):
        return np.array([p.uv for p in x])
    arr = np.asarray(x)
    if arr.ndim >= 1 and arr.shape[-1] == 2 and arr.dtype.kind == "c" and arr.ndim == 2:
        return normalize(arr)
    return normalize(from_complex(np.atleast_1d(arr)))


def _trim(c):
    c = np.asarray(c, complex).ravel()
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1] if nz.size else c[:0]


def _hom_eval(coef, uv):
    """sum coef[k] u^k v^(d-k) for homogeneous degree d = len(coef) - 1."""
    u, v = uv[..., 0], uv[..., 1]
    d = len(coef) - 1
    out = np.zeros(u.shape, complex)
    for k, a in enumerate(coef):
        if a != 0:
            out = out + a * u ** k * v ** (d - k)
    return out


@dataclass(frozen=True, eq=False)
class RationalMap:
    """R = P / Q with coefficients low-to-high, padded to the common degree."""

    p: np.ndarray
    q: np.ndarray
    degree: int = field(init=False)
    tol: tolerances.Tolerances = field(default=None, repr=False)

    def __post_init__(self):
        p, q = _trim(self.p), _trim(self.q)
        if p.size == 0 or q.size == 0:
            raise CoprimalityError("P and Q must both be nonzero polynomials")
        d = max(p.size, q.size) - 1
        if d < 2:
            raise InputError(f"degree {d} < 2")
        p = np.pad(p, (0, d + 1 - p.size))
        q = np.pad(q, (0, d + 1 - q.size))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "degree", d)
        object.__setattr__(self, "tol", tolerances.resolve(self.tol))
        if self.resultant() <= self.tol.res:
            raise CoprimalityError("P and Q are not numerically coprime")

    @classmethod
    def polynomial(cls, coeffs, tol=None):
        return cls(np.asarray(coeffs, complex), np.array([1], complex), tol=tol)

    @property
    def is_polynomial(self):
        return bool(np.all(self.q[1:] == 0))

    def poly_coeffs(self):
        """Coefficients of P/Q when Q is constant."""
        if not self.is_polynomial:
            raise InputError("map is not a polynomial")
        return self.p / self.q[0]

    def resultant(self):
        """|Res(P_hom, Q_hom)| after scaling both to unit max coefficient."""
        d = self.degree
        s = max(np.abs(self.p).max(), np.abs(self.q).max())
        a, b = self.p[::-1] / s, self.q[::-1] / s
        syl = np.zeros((2 * d, 2 * d), complex)
        for i in range(d):
            syl[i, i:i + d + 1] = a
            syl[d + i, i:i + d + 1] = b
        return float(abs(np.linalg.det(syl)))

    def eval_hom(self, uv):
        return _hom_eval(self.p, uv), _hom_eval(self.q, uv)

    def __call__(self, pts):
        """Evaluate on an array of homogeneous points; returns normalized points."""
        uv = normalize(np.asarray(pts, complex))
        a, b = self.eval_hom(uv)
        scale = max(np.abs(self.p).max(), np.abs(self.q).max())
        bad = np.maximum(np.abs(a), np.abs(b)) <= self.tol.res * scale
        if np.any(bad):
            raise CoprimalityError("P and Q vanish simultaneously")
        return normalize(np.stack([a, b], axis=-1))

    def to_json(self):
        return {"p": [[c.real, c.imag] for c in self.p], "q": [[c.real, c.imag] for c in self.q]}

    @classmethod
    def from_json(cls, obj, tol=None):
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            p = [complex(*c) if isinstance(c, (list, tuple)) else complex(c) for c in obj["p"]]
            q = [complex(*c) if isinstance(c, (list, tuple)) else complex(c) for c in obj.get("q", [[1, 0]])]
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad map description: {exc}") from exc
        return cls(np.array(p, complex), np.array(q, complex), tol=tol)

    def __repr__(self):
        return f"RationalMap(p={self.p.tolist()}, q={self.q.tolist()})"


def evaluate(R, z):
    """Single-point convenience wrapper around ``R(...)``."""
    return SpherePoint(*R(SpherePoint.of(z).uv[None, :])[0])


def iterate(R, pts, n):
    out = normalize(np.asarray(pts, complex))
    for _ in range(n):
        out = R(out)
    return out


def preimage_array(R, w):
    """All d preimages of each point of ``w`` ((n, 2) array) -> ((n, d, 2), residuals (n, d))."""
    w = normalize(np.asarray(w, complex).reshape(-1, 2))
    a, b = w[:, 0:1], w[:, 1:2]
    C = b * R.p[None, :] - a * R.q[None, :]
    roots = normalize(binary_form_roots(C, cluster_radius=10 * R.tol.root))
    n, d = roots.shape[:2]
    img = R(roots.reshape(-1, 2)).reshape(n, d, 2)
    resid = sph_dist(img, np.broadcast_to(w[:, None, :], img.shape))
    return roots, resid


def preimages(R, w, tol=None):
    """The d preimages of ``w`` counted with multiplicity, as SpherePoints."""
    roots, resid = preimage_array(R, SpherePoint.of(w).uv[None, :])
    check_residual(resid, tolerances.resolve(tol).root if tol else R.tol.root)
    return [SpherePoint(*r) for r in roots[0]]


def check_residual(resid, limit, where=""):
    worst = float(np.max(resid)) if np.size(resid) else 0.0
    if not worst <= limit:
        loc = int(np.argmax(np.max(resid.reshape(len(resid), -1), axis=1))) if np.size(resid) else None
        raise RootConvergenceError(
            f"preimage residual {worst:.3e} exceeds {limit:.1e}{where}", location=loc, residual=worst)
    return worst


def _chart_polys(R, chart):
    """(A, B) low-to-high in the chart variable t, with R = A/B there."""
    if chart == "z":
        return R.p, R.q
    return R.p[::-1], R.q[::-1]


def chart_of(uv):
    uv = normalize(np.asarray(uv, complex))
    return "z" if uv[1] == 1 else "w"


def chart_derivative(R, z, src=None, dst=None):
    """Derivative of R at a point, from chart ``src`` to chart ``dst``.

    The z-chart is t = z, the w-chart is t = 1/z.  Charts default to the one in
    which the respective point has modulus <= 1.
    """
    uv = normalize(SpherePoint.of(z).uv)
    src = src or chart_of(uv)
    t = uv[0] / uv[1] if src == "z" else uv[1] / uv[0]
    A, B = _chart_polys(R, src)
    pa = np.polynomial.polynomial
    a, b = pa.polyval(t, A), pa.polyval(t, B)
    da, db = pa.polyval(t, pa.polyder(A)), pa.polyval(t, pa.polyder(B))
    if dst is None:
        dst = chart_of(normalize(np.array([a, b])))
    if dst == "z":
        return complex((da * b - a * db) / b ** 2)
    return complex((db * a - b * da) / a ** 2)


def multiplier(R, z):
    """Chart-aware derivative; for (near-)fixed points both charts coincide."""
    p = SpherePoint.of(z)
    img = R(p.uv[None, :])[0]
    if sph_dist(img, p.uv) <= R.tol.fix:
        c = chart_of(p.uv)
        return chart_derivative(R, p, c, c)
    return chart_derivative(R, p)


def spherical_derivative(R, pts):
    """|R'| measured in the spherical metric, vectorized over finite points."""
    z = to_complex(pts)
    fin = np.isfinite(z)
    zz = np.where(fin, z, 0)
    pa = np.polynomial.polynomial
    P, Q = pa.polyval(zz, R.p), pa.polyval(zz, R.q)
    dP, dQ = pa.polyval(zz, pa.polyder(R.p)), pa.polyval(zz, pa.polyder(R.q))
    num = np.abs(dP * Q - P * dQ) * (1 + np.abs(zz) ** 2)
    den = np.abs(Q) ** 2 + np.abs(P) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / den, np.inf)
    return np.where(fin, out, np.nan)


def critical_points(R):
    """The 2d - 2 critical points (with multiplicity) as an (2d-2, 2) array."""
    d = R.degree
    k = np.arange(d + 1)
    pu, pv = (k * R.p)[1:], ((d - k) * R.p)[:-1]
    qu, qv = (k * R.q)[1:], ((d - k) * R.q)[:-1]
    jac = np.convolve(pu, qv) - np.convolve(pv, qu)
    return normalize(binary_form_roots(jac[None, :], cluster_radius=10 * R.tol.root)[0])


def critical_values(R):
    return R(critical_points(R))


def compose_hom(R, n):
    """Homogeneous coefficient vectors (P_n, Q_n) of R^n, degree d^n."""
    pa = np.polynomial.polynomial
    d = R.degree
    P, Q, deg = np.array([0, 1], complex), np.array([1], complex), 1
    # P, Q are stored low-to-high in u with implicit v powers (homogeneous of degree `deg`)
    for _ in range(n):
        Pp = np.pad(P, (0, deg + 1 - P.size))
        Qp = np.pad(Q, (0, deg + 1 - Q.size))
        newP = np.zeros(deg * d + 1, complex)
        newQ = np.zeros(deg * d + 1, complex)
        powP = [np.array([1], complex)]
        powQ = [np.array([1], complex)]
        for _ in range(d):
            powP.append(pa.polymul(powP[-1], Pp))
            powQ.append(pa.polymul(powQ[-1], Qp))
        for i in range(d + 1):
            term = pa.polymul(powP[i], powQ[d - i])
            term = np.pad(term, (0, deg * d + 1 - term.size))[: deg * d + 1]
            newP += R.p[i] * term
            newQ += R.q[i] * term
        P, Q, deg = newP, newQ, deg * d
    return P, Q


@dataclass(frozen=True)
class PeriodicPoint:
    point: SpherePoint
    period: int
    multiplier: complex
    kind: str

    @property
    def repelling(self):
        return self.kind == "repelling"


def classify(lam, margin=1e-6):
    a = abs(lam)
    if a == 0 or a < 1e-12:
        return "superattracting"
    if a > 1 + margin:
        return "repelling"
    if a < 1 - margin:
        return "attracting"
    return "indifferent"


def cycle_multiplier(R, uv, p):
    """D(R^p) along the orbit of ``uv``, charts chosen per orbit point."""
    orbit = [normalize(np.asarray(uv, complex))]
    for _ in range(p - 1):
        orbit.append(R(orbit[-1][None, :])[0])
    charts = [chart_of(x) for x in orbit] + [chart_of(orbit[0])]
    lam = 1 + 0j
    for k in range(p):
        lam *= chart_derivative(R, SpherePoint(*orbit[k]), charts[k], charts[k + 1])
    return lam


def periodic_points(R, p, tol=None):
    """All solutions of R^p(z) = z with multipliers, exact periods and type."""
    tol = tolerances.resolve(tol) if tol else R.tol
    if p < 1:
        raise InputError("period must be >= 1")
    P, Q = compose_hom(R, p)
    D = R.degree ** p
    # v * P_p(u, v) - u * Q_p(u, v): homogeneous of degree D + 1
    F = np.zeros(D + 2, complex)
    F[: D + 1] += P
    F[1:] -= Q
    roots = normalize(binary_form_roots(F[None, :], cluster_radius=10 * tol.root)[0])
    img = iterate(R, roots, p)
    resid = sph_dist(img, roots)
    if np.max(resid) > tol.fix:
        raise RootConvergenceError(f"periodic point residual {np.max(resid):.3e}", residual=float(np.max(resid)))
    roots = roots[canonical_order(roots)]
    out = []
    for uv in roots:
        period = p
        for q in range(1, p):
            if p % q == 0 and sph_dist(iterate(R, uv[None, :], q)[0], uv) <= tol.fix:
                period = q
                break
        lam = cycle_multiplier(R, uv, p)
        out.append(PeriodicPoint(SpherePoint(*uv), period, lam, classify(lam)))
    return out
