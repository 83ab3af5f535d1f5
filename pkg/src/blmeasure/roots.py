"""Batched simultaneous-iteration root finder for binary forms.

A row of coefficients ``c[0..d]`` describes ``F(u, v) = sum c_k u^k v^(d-k)``.
Roots are returned as homogeneous pairs, so roots at infinity (vanishing
top coefficients) and at zero need no special casing by callers.

Every row is iterated independently (frozen once converged), so the result
for a row never depends on which other rows share its batch.
"""

import numpy as np

from .errors import RootConvergenceError

# coefficient below this fraction of the row scale is rounding noise
_ZERO_COEF = 1e-15
_MAX_ITER = 800


def _horner(p, z):
    """p: (rows, n+1) low-to-high, z: (rows, k) -> values and derivatives."""
    val = np.broadcast_to(p[:, -1:], z.shape).astype(complex)
    der = np.zeros_like(val)
    for k in range(p.shape[1] - 2, -1, -1):
        der = der * z + val
        val = val * z + p[:, k:k + 1]
    return val, der


def aberth(p, max_iter=_MAX_ITER):
    """Roots of each row of monic-normalizable polynomials ``p`` (low-to-high).

    All rows must share degree n >= 1 with p[:, 0] != 0 and p[:, -1] != 0.
    Returns (roots (rows, n), iterations used per row).
    """
    rows, n1 = p.shape
    n = n1 - 1
    p = p / p[:, -1:]
    if n == 1:
        return -p[:, :1].copy(), np.zeros(rows, int)
    rho = np.abs(p[:, 0]) ** (1.0 / n)
    ang = 2 * np.pi * np.arange(n) / n + 0.4
    z = rho[:, None] * np.exp(1j * ang)[None, :]
    active = np.ones(rows, bool)
    iters = np.zeros(rows, int)
    for it in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        zi = z[idx]
        val, der = _horner(p[idx], zi)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(val == 0, 0, val / der)
            s = np.zeros_like(zi)
            for j in range(n):
                diff = zi - zi[:, j:j + 1]
                term = np.where(diff == 0, 0, 1.0 / diff)
                s = s + term
            w = np.where(ratio == 0, 0, ratio / (1 - ratio * s))
        w = np.where(np.isfinite(w), w, 0)
        zi = zi - w
        z[idx] = zi
        iters[idx] = it + 1
        scale = np.maximum(np.abs(zi), 1e-300)
        done = np.all(np.abs(w) <= 4e-16 * scale, axis=1)
        active[idx[done]] = False
    return z, iters


def _polish(p, z, steps=2):
    """Newton steps in the chart where |root| <= 1; keep only improving steps."""
    out = z.copy()
    big = np.abs(z) > 1
    prev = p[:, ::-1]
    for chart_p, mask, inv in ((p, ~big, False), (prev, big, True)):
        if not mask.any():
            continue
        r, c = np.nonzero(mask)
        x = 1.0 / z[r, c] if inv else z[r, c]
        coef = chart_p[r]
        for _ in range(steps):
            val, der = _horner(coef, x[:, None])
            val, der = val[:, 0], der[:, 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(der != 0, val / der, 0)
            cand = x - step
            cval, _ = _horner(coef, cand[:, None])
            better = np.isfinite(cand) & (np.abs(cval[:, 0]) < np.abs(val))
            x = np.where(better, cand, x)
        out[r, c] = 1.0 / x if inv else x
    return out


def _cluster(z, radius):
    """Average roots closer than ``radius`` (chordal) to each other."""
    rows, n = z.shape
    if n < 2:
        return z
    nrm = np.sqrt(1 + np.abs(z) ** 2)
    out = z.copy()
    for i in range(n):
        for j in range(i + 1, n):
            chord = 2 * np.abs(z[:, i] - z[:, j]) / (nrm[:, i] * nrm[:, j])
            close = chord < radius
            if close.any():
                m = 0.5 * (out[close, i] + out[close, j])
                out[close, i] = m
                out[close, j] = m
    return out


def binary_form_roots(C, cluster_radius=1e-9):
    """Roots of binary forms.

    C: (rows, d+1) complex coefficients, low-to-high in u.
    Returns (rows, d, 2) homogeneous coordinates (unnormalized).
    """
    C = np.atleast_2d(np.asarray(C, complex))
    rows, d1 = C.shape
    d = d1 - 1
    scale = np.abs(C).max(axis=1)
    if np.any(scale == 0):
        raise RootConvergenceError("identically vanishing form", location=int(np.argmin(scale)))
    c = C / scale[:, None]
    nz = np.abs(c) > _ZERO_COEF
    k0 = np.argmax(nz, axis=1)
    top = d - np.argmax(nz[:, ::-1], axis=1)
    out = np.zeros((rows, d, 2), complex)
    keys = k0 * (d + 1) + top
    for key in np.unique(keys):
        sel = np.nonzero(keys == key)[0]
        lo, hi = divmod(int(key), d + 1)
        deg = hi - lo
        col = 0
        # zeros: u = 0
        out[sel, col:col + lo, 1] = 1
        col += lo
        if deg > 0:
            p = c[sel, lo:hi + 1]
            z, iters = aberth(p)
            z = _polish(p / p[:, -1:], z)
            z = _cluster(z, cluster_radius)
            out[sel, col:col + deg, 0] = z
            out[sel, col:col + deg, 1] = 1
            col += deg
        # infinity: v = 0
        out[sel, col:, 0] = 1
    return out
