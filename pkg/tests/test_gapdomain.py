import json

import numpy as np
import pytest
from scipy import stats

from blmeasure.errors import GeometryUnderflowError, InputError
from blmeasure.gapdomain import GapDomainSpec, gap_domain, gate_mass, wilson
from blmeasure.walk import WalkConfig


def blocked(n=1):
    return GapDomainSpec({n: "blocked"})


def opened(n=1, j=1):
    return GapDomainSpec({n: ("open", j)})


def on_circle(turns):
    return np.exp(2j * np.pi * np.atleast_1d(turns))


def test_blocked_gate_midpoint_is_in_K():
    oracle = gap_domain(blocked())
    g = oracle.gate(1)
    assert oracle.dist_lower(on_circle(g.c))[0] == 0
    # points just inside and outside the arc, at the gate center, are in the domain
    for r in (0.99, 1.01):
        assert oracle.in_domain(r * on_circle(g.c))[0]


def test_open_gate_gap_between_teeth():
    spec = opened(j=1)
    oracle = gap_domain(spec)
    g = oracle.gate(1)
    s = g.w / 2
    mid = g.c + s / 2
    assert oracle.dist_lower(on_circle(mid))[0] > 0
    assert oracle.dist_lower(on_circle(g.c + s * 2 ** -21))[0] == 0


def test_dist_lower_matches_brute_force_far_from_gates():
    oracle = gap_domain(blocked())
    z = np.array([0.2, -0.5j, 0.9 * on_circle(0.6)[0]])
    assert np.allclose(oracle.dist_lower(z), 1 - np.abs(z))


def test_sandwich_on_random_points():
    for spec in (blocked(), opened(), GapDomainSpec({1: "blocked", 2: ("open", 2)})):
        oracle = gap_domain(spec)
        rng = np.random.default_rng(0)
        z = 1.3 * np.sqrt(rng.random(100_000)) * np.exp(2j * np.pi * rng.random(100_000))
        # gate corners are in the cloud, so both bounds can be the same distance up to rounding
        assert np.all(oracle.dist_lower(z) <= oracle.dist_upper(z) + 1e-12)


def test_literal_constants_underflow():
    with pytest.raises(GeometryUnderflowError):
        gap_domain(GapDomainSpec({1: ("open", 1)}, literal=True))
    with pytest.raises(GeometryUnderflowError):
        gap_domain(GapDomainSpec({4: "blocked"}, literal=True))


def test_overlapping_gates_rejected():
    with pytest.raises(InputError):
        gap_domain(GapDomainSpec({1: "blocked", 2: "blocked"}, scale={"position": 0.001, "width": 0.5}))


def test_json_round_trip():
    text = json.dumps({"gates": {"1": "blocked", "2": {"open": 3}}, "scale": {"gap": 0.01}})
    spec = GapDomainSpec.from_json(text)
    assert spec.gates == {1: "blocked", 2: ("open", 3)}
    assert spec.n_range == (1, 2) and spec.param("gap") == 0.01
    assert GapDomainSpec.from_json(spec.to_json()) == spec
    with pytest.raises(InputError):
        GapDomainSpec.from_json({"gates": {"1": "half-open"}})


@pytest.mark.parametrize("k,n", [(0, 10), (3, 100), (50, 100), (100, 100), (11, 100_000)])
def test_wilson_interval(k, n):
    ci = stats.binomtest(k, n).proportion_ci(method="wilson")
    lo, hi = wilson(k, n)
    assert lo == pytest.approx(ci.low, abs=1e-12) and hi == pytest.approx(ci.high, abs=1e-12)


def test_gate_mass_needs_samples():
    spec = blocked()
    with pytest.raises(InputError):
        gate_mass(gap_domain(spec), spec, 1, WalkConfig(N=0, eps=1e-3, R_cap=8))


def test_gate_mass_dichotomy_small():
    # a small paired run; the acceptance suite repeats this at full size
    cfg = WalkConfig(eps=1e-4, N=20_000, R_cap=8, seed=0)
    b, o = blocked(), opened()
    mb = gate_mass(gap_domain(b), b, 1, cfg)
    mo = gate_mass(gap_domain(o), o, 1, cfg)
    assert mo.estimate >= 10 * mb.estimate
    assert mb.hi < mo.lo
