"""Outer cell covers of filled Julia sets and inner point clouds of Julia sets."""

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import binary_dilation
from scipy.spatial import cKDTree

from .errors import EmptySetError, InputError, NoRepellingPointFound
from .measures import merge_atoms
from .sphere import (
    PeriodicPoint, SpherePoint, critical_points, from_complex, lift, normalize, periodic_points,
    preimage_array, sph_dist, to_complex,
)

REPELLING_MARGIN = 1e-6


def _poly(P):
    if not P.is_polynomial:
        raise InputError("outer covers need a polynomial map (Q constant)")
    return P.poly_coeffs()


def escape_radius(P):
    """M >= 1 with |P(z)| >= 2|z| whenever |z| >= M."""
    a = _poly(P)
    M = max(1.0, (2 + float(np.sum(np.abs(a[:-1])))) / abs(a[-1]))
    # the bound is analytic; the check guards against coefficient mishaps
    for _ in range(60):
        if verify_escape_radius(P, M):
            return M
        M *= 1.25
    raise InputError("could not verify an escape radius")


def verify_escape_radius(P, M, samples=360, shells=(1.0, 1.5, 2.0, 4.0)):
    a = _poly(P)
    th = 2 * np.pi * np.arange(samples) / samples
    for s in shells:
        z = M * s * np.exp(1j * th)
        if np.any(np.abs(np.polynomial.polynomial.polyval(z, a)) < 2 * np.abs(z) * (1 - 1e-12)):
            return False
    return True


def _taylor(a):
    """Rows k = 0..d: coefficients of P^(k)/k! (low-to-high)."""
    d = len(a) - 1
    rows = []
    for k in range(d + 1):
        c = np.array([math.comb(i, k) * a[i] for i in range(k, d + 1)], complex)
        rows.append(c)
    return rows


def _disk_escape(a, M, c, rho, N):
    """Escape step (1..N) certified by disk arithmetic, 0 if none."""
    tay = _taylor(a)
    pv = np.polynomial.polynomial.polyval
    esc = np.zeros(c.shape, int)
    live = np.ones(c.shape, bool)
    big = 1e150 ** (1.0 / max(1, len(a) - 1))
    for t in range(1, N + 1):
        idx = np.nonzero(live)[0]
        if idx.size == 0:
            break
        cc, rr = c[idx], rho[idx]
        nc = pv(cc, tay[0])
        nr = np.zeros(idx.size)
        rk = np.ones(idx.size)
        for k in range(1, len(tay)):
            rk = rk * rr
            nr = nr + np.abs(pv(cc, tay[k])) * rk
        # rounding guard on the radius
        nr = nr * (1 + 1e-12) + 1e-15 * (np.abs(nc) + 1)
        ok = np.abs(nc) - nr >= M
        esc[idx[ok]] = t
        stop = ok | ~np.isfinite(nr) | (nr > big) | (np.abs(nc) > big)
        live[idx[stop]] = False
        c[idx], rho[idx] = nc, nr
    return esc


@dataclass
class CellCover:
    """Closed cells [i h, (i+1) h] x [j h, (j+1) h] of a grid; occupied cells cover K."""

    h: float
    K: int                  # grid indices run over -K .. K-1
    mask: np.ndarray        # (2K, 2K) bool, [ix + K, iy + K]
    N: int
    M: float
    _tree: object = field(default=None, repr=False)
    _btree: object = field(default=None, repr=False)

    @property
    def origin(self):
        return complex(-self.K * self.h, -self.K * self.h)

    @property
    def occupied(self):
        ij = np.argwhere(self.mask) - self.K
        return ij

    def centers(self, cells=None):
        ij = self.occupied if cells is None else cells
        return (ij[:, 0] + 0.5) * self.h + 1j * (ij[:, 1] + 0.5) * self.h

    def boundary_cells(self):
        """Occupied cells with an unoccupied 4-neighbour (or on the grid edge)."""
        pad = np.pad(self.mask, 1)
        inner = pad[1:-1, 1:-1] & pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
        return np.argwhere(self.mask & ~inner) - self.K

    def boundary_tree(self):
        if self._btree is None:
            b = self.centers(self.boundary_cells())
            self._btree = cKDTree(np.c_[b.real, b.imag]) if b.size else None
        return self._btree

    def cell_of(self, z):
        z = np.asarray(z, complex)
        return (np.floor(z.real / self.h).astype(np.int64), np.floor(z.imag / self.h).astype(np.int64))

    def in_cell(self, z):
        """Whether z lies in an occupied closed cell."""
        z = np.asarray(z, complex)
        out = np.zeros(z.shape, bool)
        fin = np.isfinite(z)
        fx = np.where(fin, z.real, 0) / self.h
        fy = np.where(fin, z.imag, 0) / self.h
        x0, y0 = np.floor(fx).astype(np.int64), np.floor(fy).astype(np.int64)
        # points on a cell edge also belong to the neighbouring cell
        for x, okx in ((x0, fin), (x0 - 1, fin & (fx == x0))):
            for y, oky in ((y0, fin), (y0 - 1, fin & (fy == y0))):
                ok = okx & oky & (x >= -self.K) & (x < self.K) & (y >= -self.K) & (y < self.K)
                hit = np.zeros(z.shape, bool)
                hit[ok] = self.mask[x[ok] + self.K, y[ok] + self.K]
                out |= hit
        return out

    def distance(self, z):
        """Euclidean distance from z to the union of occupied cells (0 inside)."""
        z = np.atleast_1d(np.asarray(z, complex))
        out = np.zeros(z.shape)
        inside = self.in_cell(z)
        tree = self.boundary_tree()
        if tree is None:
            return np.where(inside, 0.0, np.inf)
        q = np.nonzero(~inside)[0]
        if q.size:
            pts = np.c_[z[q].real, z[q].imag]
            d0, _ = tree.query(pts)
            hd = self.h * math.sqrt(2) / 2
            cand = tree.query_ball_point(pts, d0 + hd + 1e-15)
            cells = self.boundary_cells()
            for n, (p, lst) in enumerate(zip(pts, cand)):
                c = cells[lst]
                lo = c * self.h
                dx = np.maximum(np.maximum(lo[:, 0] - p[0], p[0] - lo[:, 0] - self.h), 0)
                dy = np.maximum(np.maximum(lo[:, 1] - p[1], p[1] - lo[:, 1] - self.h), 0)
                out[q[n]] = np.sqrt(dx * dx + dy * dy).min()
        return out

    def center_distance(self, z):
        """Distance from z to the nearest boundary-cell center (fast, vectorized)."""
        tree = self.boundary_tree()
        z = np.asarray(z, complex)
        d, _ = tree.query(np.c_[z.real.ravel(), z.imag.ravel()])
        return d.reshape(z.shape)

    def contains(self, z, inflate=0.0):
        z = np.atleast_1d(np.asarray(z, complex))
        inside = self.in_cell(z)
        if inflate <= 0:
            return inside
        rest = np.nonzero(~inside)[0]
        if rest.size:
            inside[rest] = self.distance(z[rest]) <= inflate + 1e-15
        return inside

    def to_pgm(self, comment=None):
        """Binary PGM, row 0 at the top (largest imaginary part), 255 = occupied."""
        img = np.where(self.mask.T[::-1, :], 255, 0).astype(np.uint8)
        note = f"# {comment}\n" if comment else ""
        head = f"P5\n{note}{img.shape[1]} {img.shape[0]}\n255\n".encode()
        return head + img.tobytes()

    def to_json(self):
        return {"h": self.h, "K": self.K, "N": self.N, "M": self.M, "origin": [self.origin.real, self.origin.imag],
                "cells": self.occupied.tolist()}


def _candidates(K, h, M):
    """Cells meeting the open disk |z| < M."""
    idx = np.arange(-K, K)
    ix, iy = np.meshgrid(idx, idx, indexing="ij")
    # nearest point of each cell to the origin
    nx = np.clip(0.0, ix * h, (ix + 1) * h)
    ny = np.clip(0.0, iy * h, (iy + 1) * h)
    return nx ** 2 + ny ** 2 < M * M


def _cells_escape(a, M, sel, K, h, N, s):
    """Whether all s x s subcells of each selected cell are certified to escape."""
    sub = (np.arange(s) + 0.5) / s
    ox, oy = np.meshgrid(sub, sub, indexing="ij")
    off = (ox + 1j * oy).ravel() * h
    base = (sel[:, 0] - K) * h + 1j * (sel[:, 1] - K) * h
    c = (base[:, None] + off[None, :]).ravel()
    esc = _disk_escape(a, M, c.astype(complex), np.full(len(c), h / s * math.sqrt(2) / 2), N)
    return (esc.reshape(len(sel), -1) > 0).all(axis=1)


def filled_julia_outer(P, h, N, refine=2, direct_cells=1024):
    """Cells of B(0, M) not certified to escape within N steps.

    A cell escapes when the disk circumscribing it is certified (Taylor disk
    arithmetic) to lie outside B(0, M) after some t <= N iterations.  Cells
    near escaped ones get further chances with 2x2 (then 4x4) subcells,
    repeated until no new cell escapes.

    Grids wider than ``direct_cells`` start from the cover at 2h, and only
    cells near escaped ones are tested; the rest stay occupied.
    """
    if h <= 0:
        raise InputError("cell size must be positive")
    a = _poly(P)
    M = escape_radius(P)
    K = int(math.ceil(M / h))
    if N > 0 and 2 * K > direct_cells:
        coarse = filled_julia_outer(P, 2 * h, N, refine, direct_cells)
        K = 2 * coarse.K
        mask = np.repeat(np.repeat(coarse.mask, 2, axis=0), 2, axis=1) & _candidates(K, h, M)
    else:
        mask = _candidates(K, h, M)
        if N > 0:
            sel = np.argwhere(mask)
            esc = _cells_escape(a, M, sel, K, h, N, 1)
            mask[sel[esc, 0], sel[esc, 1]] = False
    if N > 0:
        tested = np.zeros_like(mask)
        ring = np.ones((5, 5), bool)
        while True:
            band = mask & ~tested & binary_dilation(~mask, structure=ring)
            sel = np.argwhere(band)
            if sel.size == 0:
                break
            tested |= band
            esc = np.zeros(len(sel), bool)
            for level in range(refine + 1):
                todo = np.nonzero(~esc)[0]
                if todo.size == 0:
                    break
                esc[todo] = _cells_escape(a, M, sel[todo], K, h, N, 2 ** level)
            mask[sel[esc, 0], sel[esc, 1]] = False
    return CellCover(h, K, mask, N, M)


def critical_orbit_escapes(P, N=200):
    """Diagnostic for the connected/Cantor dichotomy: does a finite critical point escape?"""
    a = _poly(P)
    M = escape_radius(P)
    crit = to_complex(critical_points(P))
    crit = crit[np.isfinite(crit)]
    pv = np.polynomial.polynomial.polyval
    z = crit.copy()
    for _ in range(N):
        z = pv(z, a)
        if np.any(np.abs(z) > M):
            return True
    return False


@dataclass
class PointCloud:
    points: np.ndarray          # (n, 2) normalized homogeneous
    depth: int
    seed: PeriodicPoint
    levels: list                # sizes per level
    max_residual: float

    def values(self):
        return to_complex(self.points)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("re,im\n")
        for z in self.values():
            buf.write("inf,\n" if not np.isfinite(z) else f"{float(z.real)!r},{float(z.imag)!r}\n")
        return buf.getvalue()


def find_repelling_point(R, max_period=3, orbit_steps=8):
    """First strictly repelling periodic point (periods 1..max_period, canonical order).

    Points on short forward orbits of critical points are skipped: their
    backward orbits start with a double root.
    """
    crit = critical_points(R)
    orbit = [crit]
    for _ in range(orbit_steps):
        orbit.append(R(orbit[-1]))
    post = np.concatenate(orbit)
    for p in range(1, max_period + 1):
        for pp in periodic_points(R, p):
            if pp.period != p or abs(pp.multiplier) <= 1 + REPELLING_MARGIN:
                continue
            if np.min(sph_dist(post, pp.point.uv)) < 1e-6:
                continue
            return pp
    raise NoRepellingPointFound(f"no repelling periodic point of period <= {max_period}")


def random_julia_point(R, rng, depth=40, pp=None):
    """Endpoint of a random backward branch of length ``depth`` from a repelling periodic point.

    The result lies on J exactly (up to root residuals), since J is completely
    invariant.  Roots at each step are put in canonical order before the draw.
    """
    pp = pp if pp is not None else find_repelling_point(R)
    pt = pp.point.uv[None, :].copy()
    for _ in range(depth):
        roots, _ = preimage_array(R, pt)
        r = normalize(roots[0])
        z = to_complex(r)
        order = np.lexsort((np.angle(z), np.abs(z)))
        pt = r[order[int(rng.integers(len(order)))]][None, :]
    return SpherePoint(*pt[0])


def julia_inner(R, k, seed=None, merge_tol=None):
    """Union of R^-j(w), j = 0..k, for a repelling periodic point w."""
    if k < 0:
        raise InputError("depth must be >= 0")
    pp = seed if isinstance(seed, PeriodicPoint) else find_repelling_point(R)
    tol = merge_tol if merge_tol is not None else 2 * R.tol.eq
    level = pp.point.uv[None, :].copy()
    allpts, sizes, worst = [level], [1], 0.0
    for _ in range(k):
        roots, resid = preimage_array(R, level)
        worst = max(worst, float(resid.max()))
        level, _ = merge_atoms(roots.reshape(-1, 2), np.ones(roots.shape[0] * roots.shape[1]), tol)
        allpts.append(level)
        sizes.append(len(level))
    pts, _ = merge_atoms(np.concatenate(allpts), np.ones(sum(len(x) for x in allpts)), tol)
    return PointCloud(pts, k, pp, sizes, worst)


def _as_sphere_array(A):
    if isinstance(A, PointCloud):
        return A.points, 0.0
    if isinstance(A, CellCover):
        c = A.centers()
        return from_complex(c), A.h * math.sqrt(2) / 2
    if hasattr(A, "atoms"):
        return A.atoms, 0.0
    arr = np.asarray(A)
    if arr.ndim == 2 and arr.shape[1] == 2 and arr.dtype.kind == "c":
        return normalize(arr), 0.0
    return normalize(from_complex(np.atleast_1d(arr))), 0.0


def directed_hausdorff(A, B):
    """max over a in A of the spherical distance to B."""
    if len(A) == 0 or len(B) == 0:
        raise EmptySetError("Hausdorff distance of an empty set")
    tree = cKDTree(lift(B))
    chord, _ = tree.query(lift(A))
    return float(2 * np.arcsin(np.minimum(1.0, chord.max() / 2)))


@dataclass
class HausdorffReport:
    distance: float
    forward: float
    backward: float
    inflation: float

    def __str__(self):
        s = f"hausdorff = {self.distance:.6g} (A->B {self.forward:.6g}, B->A {self.backward:.6g})"
        if self.inflation:
            s += f"; cells taken at their centers, add up to {self.inflation:.3g} for the cells themselves"
        return s


def hausdorff_report(A, B):
    a, ia = _as_sphere_array(A)
    b, ib = _as_sphere_array(B)
    f, g = directed_hausdorff(a, b), directed_hausdorff(b, a)
    return HausdorffReport(max(f, g), f, g, max(ia, ib))


def hausdorff(A, B):
    """Spherical Hausdorff distance; cells contribute their centers."""
    return hausdorff_report(A, B).distance
