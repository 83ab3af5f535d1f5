"""Exact Wasserstein-1 distance on the sphere by discrete optimal transport."""

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import BudgetExceeded, InputError, SolverError
from .sphere import lift, sph_dist

DEFAULT_PAIR_BUDGET = 4_000_000

_ot = None


def _emd():
    # POT probes every installed array backend on import; only numpy is used here
    global _ot
    if _ot is None:
        for b in ("PYTORCH", "JAX", "TENSORFLOW", "CUPY"):
            os.environ.setdefault(f"POT_BACKEND_DISABLE_{b}", "1")
        import ot
        _ot = ot
    return _ot.emd


@dataclass(frozen=True)
class TransportPlan:
    i: np.ndarray
    j: np.ndarray
    mass: np.ndarray
    objective: float

    def marginals(self, n, m):
        return (np.bincount(self.i, self.mass, minlength=n),
                np.bincount(self.j, self.mass, minlength=m))


def _shared(mu, nu, radius=1e-12):
    """Index pairs of atoms present in both measures."""
    if radius <= 0:
        return np.zeros(0, int), np.zeros(0, int)
    t = cKDTree(lift(nu.atoms))
    d, j = t.query(lift(mu.atoms), distance_upper_bound=radius)
    hit = np.nonzero(np.isfinite(d))[0]
    # at most one partner per target atom
    _, first = np.unique(j[hit], return_index=True)
    hit = hit[np.sort(first)]
    return hit, j[hit]


def w1(mu, nu, budget=DEFAULT_PAIR_BUDGET, return_plan=False, share_radius=2e-12):
    """W1(mu, nu) with ground cost the spherical distance.

    Mass common to both measures stays in place (optimal for any metric
    cost), and the remainder goes to the network simplex solver.
    """
    a = np.array(mu.weights, float)
    b = np.array(nu.weights, float)
    ii, jj = _shared(mu, nu, share_radius)
    keep_mass = np.minimum(a[ii], b[jj])
    a[ii] -= keep_mass
    b[jj] -= keep_mass
    # clean rounding residue so fully shared atoms leave the problem
    a[a <= 1e-15] = 0
    b[b <= 1e-15] = 0
    ra, rb = np.nonzero(a)[0], np.nonzero(b)[0]
    pi, pj, pm = [ii], [jj], [keep_mass]
    obj = math.fsum(keep_mass * sph_dist(mu.atoms[ii], nu.atoms[jj]))
    if ra.size and rb.size:
        if ra.size * rb.size > budget:
            raise BudgetExceeded(f"transport problem {ra.size}x{rb.size} exceeds pair budget {budget}")
        A, B = a[ra], b[rb]
        sa, sb = math.fsum(A), math.fsum(B)
        s = 0.5 * (sa + sb)
        A, B = A / sa, B / sb
        M = sph_dist(mu.atoms[ra][:, None, :], nu.atoms[rb][None, :, :])
        emd = _emd()
        G, log = emd(A, B, M, numItermax=1_000_000_000, log=True, check_marginals=False)
        if log.get("result_code", 1) != 1:
            raise SolverError(f"network simplex did not reach optimality: {log.get('warning')}")
        r, c = np.nonzero(G > 0)
        mass = G[r, c] * s
        obj = math.fsum(np.concatenate([[obj], mass * M[r, c]]))
        pi.append(ra[r])
        pj.append(rb[c])
        pm.append(mass)
    elif ra.size or rb.size:
        # mass left on one side only: weights did not balance
        left = math.fsum(a) + math.fsum(b)
        if left > 1e-9:
            raise InputError("measures have different total mass")
    if not return_plan:
        return obj
    plan = TransportPlan(np.concatenate(pi), np.concatenate(pj), np.concatenate(pm), obj)
    return obj, plan


def w1_dual_lb(mu, nu, family, scale=1.0):
    """max over bumps phi of |int eps*phi d(mu - nu)| * scale, a lower bound on W1."""
    if not family:
        raise InputError("empty test-function family")
    if not 0 < scale <= 1:
        raise InputError("scale must lie in (0, 1]")
    best = 0.0
    for phi in family:
        diff = math.fsum(mu.weights * phi(mu.atoms)) - math.fsum(nu.weights * phi(nu.atoms))
        best = max(best, abs(diff) * phi.eps * scale)
    return best
