import numpy as np
import pytest
from hypothesis import given, strategies as st

from blmeasure.errors import RootConvergenceError
from blmeasure.roots import aberth, binary_form_roots
from blmeasure.sphere import normalize, sph_dist


def _match(a, b):
    """Max spherical distance under the best greedy pairing of two root multisets."""
    a, b = list(normalize(a)), list(normalize(b))
    worst = 0.0
    for x in a:
        d = [float(sph_dist(x, y)) for y in b]
        k = int(np.argmin(d))
        worst = max(worst, d[k])
        b.pop(k)
    return worst


coef = st.complex_numbers(min_magnitude=0.1, max_magnitude=10)


@given(st.lists(coef, min_size=3, max_size=9))
def test_aberth_against_companion_eigenvalues(c):
    p = np.array(c, complex)
    z, _ = aberth(p[None, :])
    ref = np.roots(p[::-1])  # independent route: companion matrix eigenvalues
    got = np.stack([z[0], np.ones(len(ref))], axis=1)
    want = np.stack([ref, np.ones(len(ref))], axis=1)
    assert _match(got, want) < 1e-7


def test_zero_and_infinity_roots():
    # u^1 v^2 * (u - 2 v): coefficients of u^k v^(4-k) low-to-high in u, degree 4 form
    C = np.array([0, 0, -2, 1, 0], complex)
    r = normalize(binary_form_roots(C)[0])
    z = [complex(u / v) if v != 0 else np.inf for u, v in r]
    assert sorted(z, key=abs) == pytest.approx([0, 0, 2, np.inf])


def test_rows_are_independent():
    rng = np.random.default_rng(3)
    C = rng.standard_normal((6, 5)) + 1j * rng.standard_normal((6, 5))
    full = binary_form_roots(C)
    for i in range(6):
        assert np.array_equal(binary_form_roots(C[i:i + 1])[0], full[i])


def test_double_root_clusters():
    # (u - v)^2 (u + v)
    C = np.array([1, -1, -1, 1], complex)
    r = normalize(binary_form_roots(C, cluster_radius=1e-6)[0])
    z = np.sort_complex(r[:, 0] / r[:, 1])
    assert z[0] == pytest.approx(-1)
    assert z[1] == z[2]
    assert z[1] == pytest.approx(1, abs=1e-7)


def test_vanishing_form_rejected():
    with pytest.raises(RootConvergenceError):
        binary_form_roots(np.zeros(4))
