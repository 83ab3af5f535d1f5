import math

import numpy as np
import pytest
from scipy import stats

from blmeasure.errors import InputError, WalkBudgetExceeded
from blmeasure.julia import filled_julia_outer, julia_inner
from blmeasure.measures import integrate
from blmeasure.sphere import RationalMap, to_complex
from blmeasure.walk import (
    DiskOracle, JuliaOracle, WalkConfig, capacity, circle_starts, harmonic_measure, run_walks, wos_sample,
)

DISK = DiskOracle()


def poisson_cdf(theta, x0=2.0):
    # harmonic measure of the unit circle seen from x0 > 1 on the real axis;
    # inversion sends x0 to 1/x0 inside, where the Poisson kernel integrates in closed form
    r = 1 / x0
    k = (1 + r) / (1 - r)
    return 0.5 + np.arctan(k * np.tan(theta / 2)) / np.pi


def in_band(oracle, x, eps):
    d = oracle.dist_lower(x)
    return (d > eps / 2) & (d < eps)


# ---------------------------------------------------------------- config and errors

def test_config_checks():
    with pytest.raises(InputError):
        WalkConfig(eps=0).check()
    with pytest.raises(InputError):
        WalkConfig(N=0).check()
    with pytest.raises(InputError):
        WalkConfig(R_cap=3.9).check(DISK)
    WalkConfig(R_cap=4).check(DISK)


def test_start_inside_band_rejected():
    with pytest.raises(InputError):
        wos_sample(DISK, 1.0005, WalkConfig(eps=1e-3, R_cap=4), 0)


def test_step_cap():
    with pytest.raises(WalkBudgetExceeded) as info:
        run_walks(DISK, np.full(10, 3.0 + 0j), WalkConfig(eps=1e-9, R_cap=4, step_cap=3))
    assert info.value.completed == 0


# ---------------------------------------------------------------- stopping band and determinism

def test_stopping_band_disk():
    cfg = WalkConfig(eps=1e-3, N=20_000, R_cap=4, seed=5)
    x, steps = run_walks(DISK, np.full(cfg.N, 2 + 0j), cfg)
    assert in_band(DISK, x, cfg.eps).all()
    assert steps.min() >= 1


def test_stopping_band_julia_oracle():
    P = RationalMap.polynomial([-1, 0, 1])
    oracle = JuliaOracle(filled_julia_outer(P, 1 / 128, 40), julia_inner(P, 10))
    cfg = WalkConfig(eps=1e-2, N=2000, R_cap=4 * oracle.M, seed=1)
    x, _ = run_walks(oracle, circle_starts(cfg, cfg.R_cap), cfg)
    assert in_band(oracle, x, cfg.eps).all()


def test_same_index_same_walk():
    cfg = WalkConfig(eps=1e-3, R_cap=4, seed=9)
    a, b = wos_sample(DISK, 2, cfg, 17), wos_sample(DISK, 2, cfg, 17)
    assert a == b
    assert wos_sample(DISK, 2, cfg, 18) != a


def test_batching_and_workers_do_not_change_walks():
    base = WalkConfig(eps=1e-3, N=3000, R_cap=4, seed=2)
    starts = circle_starts(base, 4)
    ref, _ = run_walks(DISK, starts, base)
    for cfg in (WalkConfig(eps=1e-3, N=3000, R_cap=4, seed=2, chunk=7),
                WalkConfig(eps=1e-3, N=3000, R_cap=4, seed=2, chunk=500, workers=2)):
        x, _ = run_walks(DISK, starts, cfg)
        assert np.array_equal(x, ref)
    one = wos_sample(DISK, starts[1234], base, 1234)
    assert one == ref[1234]


def test_far_field_return():
    # a walker far outside R_cap comes back with the exact exterior law; its stop is still in the band
    cfg = WalkConfig(eps=1e-3, N=500, R_cap=4, seed=3)
    x, _ = run_walks(DISK, np.full(cfg.N, 1e6 + 0j), cfg)
    assert in_band(DISK, x, cfg.eps).all()


# ---------------------------------------------------------------- laws

def test_poisson_kernel_ks():
    cfg = WalkConfig(eps=1e-3, N=10_000, R_cap=4, seed=11)
    x, _ = run_walks(DISK, np.full(cfg.N, 2 + 0j), cfg)
    res = stats.kstest(np.angle(x), poisson_cdf)
    assert res.statistic <= 1.63 / math.sqrt(cfg.N)


def test_poisson_kernel_chi_square():
    cfg = WalkConfig(eps=1e-3, N=100_000, R_cap=4, seed=12)
    x, _ = run_walks(DISK, np.full(cfg.N, 2 + 0j), cfg)
    edges = np.linspace(-np.pi, np.pi, 37)
    obs, _ = np.histogram(np.angle(x), edges)
    exp = np.diff(poisson_cdf(edges)) * cfg.N
    assert stats.chisquare(obs, exp).pvalue > 0.01


def test_harmonic_measure_from_infinity_on_circle():
    cfg = WalkConfig(eps=1e-3, N=10_000, R_cap=4, R_start=4, seed=4)
    res = harmonic_measure(DISK, None, cfg)
    mu = res.measure
    tol = 3 / math.sqrt(cfg.N)
    assert abs(integrate(mu, lambda p: to_complex(p).real)) <= tol
    assert abs(integrate(mu, lambda p: np.abs(to_complex(p))) - 1) <= tol
    assert not res.flagged.any()
    assert res.stats()["samples"] == cfg.N


def test_single_sample_measure():
    res = harmonic_measure(DISK, 3, WalkConfig(N=1, R_cap=4))
    assert len(res.measure) == 1 and res.measure.weights[0] == 1


def test_capacity_of_disk():
    cfg = WalkConfig(eps=1e-3, N=20_000, R_cap=4, R_start=4, seed=8)
    res = capacity(DISK, cfg)
    assert abs(res.estimate - 1) <= 3 * res.stderr
    assert abs(res.estimate_2r - 1) <= 0.02


def test_capacity_scales_with_radius():
    cfg = WalkConfig(eps=1e-3, N=20_000, R_cap=12, R_start=12, seed=8)
    res = capacity(DiskOracle(3.0), cfg, bias_check=False)
    assert abs(res.estimate - 3) <= 3 * res.stderr + 1e-12
    with pytest.raises(InputError):
        capacity(DiskOracle(3.0), WalkConfig(R_cap=12, R_start=11))


# ---------------------------------------------------------------- oracle sandwich

def _random_queries(n, seed, M):
    rng = np.random.default_rng(seed)
    r = M * 1.5 * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


@pytest.mark.parametrize("coeffs", [[0, 0, 1], [-1, 0, 1], [1j, 0, 1]])
def test_julia_oracle_sandwich(coeffs):
    P = RationalMap.polynomial(coeffs)
    oracle = JuliaOracle(filled_julia_outer(P, 1 / 128, 40), julia_inner(P, 10))
    z = _random_queries(100_000, 0, oracle.M)
    lo, hi = oracle.dist_lower(z), oracle.dist_upper(z)
    assert np.all(lo <= hi)
    assert np.all(lo <= hi + 2 * oracle.h * math.sqrt(2))


def test_disk_oracle_is_exact():
    z = _random_queries(1000, 1, 1)
    assert np.array_equal(DISK.dist_lower(z), DISK.dist_upper(z))
    s, d = DISK.snap(z)
    out = np.abs(z) > 1
    assert np.allclose(np.abs(s[out]), 1) and np.allclose(d[out], np.abs(z[out]) - 1)
