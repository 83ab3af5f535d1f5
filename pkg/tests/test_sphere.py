import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blmeasure.errors import CoprimalityError, InputError
from blmeasure.sphere import (
    RationalMap, SpherePoint, chart_derivative, chordal, critical_points, critical_values, evaluate, from_complex, iterate,
    multiplier, normalize, periodic_points, preimage_array, preimages, sph_dist, to_complex,
)

Z2 = RationalMap.polynomial([0, 0, 1])
BASILICA = RationalMap.polynomial([-1, 0, 1])
INV = RationalMap(np.array([1, 0, 0]), np.array([0, 0, 1]))  # 1/z^2 written as z^0 / z^2

finite = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)


def P(z):
    return SpherePoint.of(z)


def d(a, b):
    return float(sph_dist(P(a).uv, P(b).uv))


# ---------------------------------------------------------------- points

def test_zero_vector_rejected():
    with pytest.raises(InputError):
        SpherePoint(0, 0)


def test_normalization_puts_one_in_larger_coordinate():
    p = SpherePoint(3, 6)
    assert p.v == 1 and p.u == 0.5
    q = SpherePoint(6j, 3)
    assert q.u == 1
    assert SpherePoint.infinity().v == 0


@given(finite, st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_equality_is_projective(z, s):
    a = SpherePoint(z, 1)
    b = SpherePoint(z * s, s)
    assert a == b


def test_sph_dist_examples():
    assert d(0, np.inf) == pytest.approx(math.pi, abs=1e-15)
    assert d(0.3 + 2j, 0.3 + 2j) == 0
    assert d(1, -1) == pytest.approx(math.pi, abs=1e-15)
    assert d(0, 1) == pytest.approx(math.pi / 2, abs=1e-15)


@given(finite, finite, finite)
def test_metric_axioms(a, b, c):
    x, y, z = P(a).uv, P(b).uv, P(c).uv
    dxy, dyx = sph_dist(x, y), sph_dist(y, x)
    assert dxy == dyx
    assert 0 <= dxy <= math.pi
    assert sph_dist(x, z) <= dxy + sph_dist(y, z) + 4 * np.finfo(float).eps


@given(finite, finite)
def test_distance_matches_chordal_formula(a, b):
    # independent route: chord length from the plane formula
    za, zb = complex(a), complex(b)
    ch = 2 * abs(za - zb) / math.sqrt((1 + abs(za) ** 2) * (1 + abs(zb) ** 2))
    assert float(sph_dist(P(a).uv, P(b).uv)) == pytest.approx(2 * math.asin(min(1, ch / 2)), abs=1e-7)
    assert float(chordal(P(a).uv, P(b).uv)) == pytest.approx(ch, abs=1e-12)


# ---------------------------------------------------------------- maps

def test_degree_and_coprimality_checks():
    with pytest.raises(InputError):
        RationalMap.polynomial([1, 2])
    with pytest.raises(CoprimalityError):
        RationalMap(np.array([0, 0, 0]), np.array([0, 0, 0]))
    with pytest.raises(CoprimalityError):
        # (z - 1)(z + 2) / (z - 1)(z + 3)
        RationalMap(np.array([-2, 1, 1]), np.array([-3, 2, 1]))
    assert RationalMap.polynomial([0, 0, 1, 0, 0]).degree == 2


def test_eval_examples():
    assert evaluate(Z2, 2) == P(4)
    assert evaluate(Z2, np.inf).is_infinity


def test_reciprocal_at_zero():
    R = RationalMap(np.array([1, 0, 0]), np.array([0, 1, 1]))  # 1 / (z + z^2)
    assert evaluate(R, 0).is_infinity
    assert evaluate(INV, 0).is_infinity
    assert evaluate(INV, np.inf) == P(0)


@given(st.complex_numbers(min_magnitude=0.9, max_magnitude=1.1))
def test_chart_consistency(z):
    # evaluate in the z-chart and in the 1/z chart
    w1_ = to_complex(Z2(P(z).uv[None, :])[0])
    inv = 1 / complex(z)
    w2_ = 1 / (inv * inv)
    assert float(sph_dist(from_complex(w1_), from_complex(w2_))) <= 1e-12


def test_preimage_examples():
    pre = preimages(Z2, P(1))
    assert sorted(p.z.real for p in pre) == pytest.approx([-1, 1])
    pre0 = preimages(Z2, P(0))
    assert len(pre0) == 2 and all(p == P(0) for p in pre0)
    preinf = preimages(BASILICA, SpherePoint.infinity())
    assert len(preinf) == 2 and all(p.is_infinity for p in preinf)


@given(st.complex_numbers(min_magnitude=0.05, max_magnitude=50))
def test_preimage_round_trip(w):
    R = RationalMap(np.array([0.3, 1, 1j]), np.array([1, 0.5, 0.2]))
    cv = to_complex(critical_values(R))
    if np.min(np.abs(cv - w)) < 1e-3:
        return
    roots, resid = preimage_array(R, from_complex(np.array([w])))
    pts = roots[0]
    assert len(pts) == R.degree
    gaps = sph_dist(pts[:, None, :], pts[None, :, :]) + np.eye(len(pts)) * 10
    assert gaps.min() > 1e-8
    back = R(pts)
    assert float(sph_dist(back, from_complex(w)).max()) <= 1e-10


# ---------------------------------------------------------------- periodic points and multipliers

def test_fixed_points_of_z2():
    pts = periodic_points(Z2, 1)
    got = {(round(p.point.z.real, 9) if not p.point.is_infinity else "inf"): p for p in pts}
    assert set(got) == {0.0, 1.0, "inf"}
    assert abs(got[0.0].multiplier) < 1e-12 and got[0.0].kind == "superattracting"
    assert got[1.0].multiplier == pytest.approx(2)
    assert got["inf"].kind == "superattracting"


def test_fixed_points_of_basilica():
    pts = [p for p in periodic_points(BASILICA, 1) if not p.point.is_infinity]
    s5 = math.sqrt(5)
    want = {(1 + s5) / 2: 1 + s5, (1 - s5) / 2: 1 - s5}
    assert len(pts) == 2
    for p in pts:
        z = p.point.z
        key = min(want, key=lambda k: abs(k - z))
        assert abs(z - key) < 1e-12
        assert p.multiplier == pytest.approx(want[key], abs=1e-10)


def test_period_two_cycle_of_z2():
    pts = [p for p in periodic_points(Z2, 2) if p.period == 2]
    assert len(periodic_points(Z2, 2)) == 5  # degree 4 + 1, fixed points included
    assert {round(cmath.phase(p.point.z) / (2 * math.pi / 3)) % 3 for p in pts} == {1, 2}
    for p in pts:
        assert p.period == 2
        assert abs(p.point.z) == pytest.approx(1)
        assert p.multiplier == pytest.approx(4, abs=1e-9)


@pytest.mark.parametrize("coeffs", [[0, 0, 1], [1j, 0, 1], [0.2, 0.1, 0.3, 1]])
def test_fixed_point_count_with_multiplicity(coeffs):
    R = RationalMap.polynomial(coeffs)
    pts = periodic_points(R, 1)
    assert len(pts) == R.degree + 1


def test_fixed_point_count_rational():
    R = RationalMap(np.array([1, 0, 0.5, 1]), np.array([0.3, 2, 0, 1]))
    assert len(periodic_points(R, 1)) == R.degree + 1


def test_multiplier_examples():
    assert multiplier(Z2, P(1)) == pytest.approx(2)
    assert abs(multiplier(Z2, P(0))) < 1e-15
    assert multiplier(BASILICA, P((1 + math.sqrt(5)) / 2)) == pytest.approx(1 + math.sqrt(5))


def test_multiplier_at_infinity_uses_the_other_chart():
    # R(z) = (z^2 + 1) / (2 z) fixes infinity; in w = 1/z it reads w -> 2w / (1 + w^2), multiplier 2
    R = RationalMap(np.array([1, 0, 1]), np.array([0, 2, 0]))
    assert multiplier(R, SpherePoint.infinity()) == pytest.approx(2)


def test_chart_derivative_between_charts():
    z = 0.5 + 0.5j
    assert chart_derivative(BASILICA, P(z), "z", "z") == pytest.approx(2 * z)
    # R(z) = z^2 - 1 has modulus > 1 here, so the default target chart is 1/w
    w = z * z - 1
    assert abs(w) > 1
    assert chart_derivative(BASILICA, P(z)) == pytest.approx(-2 * z / w ** 2)


def test_critical_points_of_z2():
    cps = critical_points(Z2)
    vals = sorted(("inf" if not np.isfinite(z) else abs(z)) == "inf" for z in to_complex(cps))
    assert len(cps) == 2 and vals == [False, True]
    assert abs(to_complex(cps)[np.isfinite(to_complex(cps))][0]) < 1e-12


def test_iterate_matches_repeated_eval():
    z = from_complex(np.array([0.3 + 0.2j, 1.1]))
    a = iterate(BASILICA, z, 3)
    b = BASILICA(BASILICA(BASILICA(z)))
    assert np.allclose(normalize(a), normalize(b))
