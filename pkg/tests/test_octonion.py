import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from g2kit import models, octonion as O
from g2kit.exterior import interior, wedge

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def imag(rng, n=None):
    shape = (7,) if n is None else (n, 7)
    return O.from_imag(rng.standard_normal(shape))


def brute_mul_table():
    """Products of basis units, computed one pair at a time."""
    E = np.eye(8)
    return np.array([[O.mul(E[a], E[b]) for b in range(8)] for a in range(8)])


def test_quaternion_subalgebra():
    i, j, k = O.basis("i"), O.basis("j"), O.basis("k")
    assert np.array_equal(O.mul(i, j), k)
    assert np.array_equal(O.mul(j, i), -k)
    assert np.array_equal(O.mul(O.basis("e"), O.basis("e")), -O.basis("1"))


def test_units_square_to_minus_one_and_anticommute():
    T = brute_mul_table()
    for a in range(1, 8):
        assert np.array_equal(T[a, a], -np.eye(8)[0])
        for b in range(1, 8):
            if a != b:
                assert np.array_equal(T[a, b], -T[b, a])


def test_norm_multiplicative(rng):
    x = rng.standard_normal((1000, 8))
    y = rng.standard_normal((1000, 8))
    assert np.abs(O.norm(O.mul(x, y)) - O.norm(x) * O.norm(y)).max() <= 1e-10 * O.norm(x).max() * O.norm(y).max()


def test_alternativity(rng):
    x, y = rng.standard_normal((2, 200, 8))
    assert np.allclose(O.mul(O.mul(x, x), y), O.mul(x, O.mul(x, y)), atol=1e-12)


def test_cross2_basics(rng):
    assert np.allclose(O.cross2(O.basis("i"), O.basis("j")), O.basis("k"))
    x = imag(rng)
    assert np.allclose(O.cross2(x, x), 0.0)


def test_cross2_is_imaginary_part_of_product(rng):
    x, y = imag(rng, 50), imag(rng, 50)
    assert np.allclose(O.cross2(x, y), O.im(O.mul(x, y)), atol=1e-12)


@given(seeds)
def test_phi_fully_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    u, v, w = imag(rng), imag(rng), imag(rng)
    val = O.inner(O.cross2(u, v), w)
    for perm in itertools.permutations(range(3)):
        args = [(u, v, w)[p] for p in perm]
        sign = np.linalg.det(np.eye(3)[list(perm)])
        assert O.inner(O.cross2(args[0], args[1]), args[2]) == pytest.approx(sign * val, abs=1e-12)


def test_cross3_against_product_expansion():
    i, j, k = O.basis("i"), O.basis("j"), O.basis("k")
    yb = O.conj(j)
    expected = 0.5 * (O.mul(i, O.mul(yb, k)) - O.mul(k, O.mul(yb, i)))
    assert np.allclose(O.cross3(i, j, k), expected)
    # i (-j k) = i(-i) = 1 and k (-j i) = k k = -1, so i × j × k = 1
    assert np.allclose(O.cross3(i, j, k), O.basis("1"))


def test_cross3_repeated_and_zero(rng):
    x, y = imag(rng), imag(rng)
    expected = 0.5 * (O.mul(x, O.mul(O.conj(x), y)) - O.mul(y, O.mul(O.conj(x), x)))
    assert np.allclose(O.cross3(x, x, y), expected)
    assert np.allclose(O.cross3(np.zeros(8), x, y), 0.0)


def test_real_part_of_triple_cross_is_phi(rng):
    x, y, z = imag(rng, 100), imag(rng, 100), imag(rng, 100)
    assert np.allclose(O.re(O.cross3(x, y, z)), O.inner(O.cross2(x, y), z), atol=1e-12)


def test_associator_values():
    i, j, k, e = (O.basis(n) for n in ("i", "j", "k", "e"))
    assert np.allclose(O.associator(i, j, k), 0.0)
    got = O.associator(i, j, e)
    assert np.allclose(got, 0.5 * O.raw_associator(i, j, e))
    assert np.abs(got).max() > 0.5


def test_associator_alternates(rng):
    u, w = imag(rng), imag(rng)
    assert np.allclose(O.associator(u, u, w), 0.0, atol=1e-12)


def test_associator_rejects_real_parts():
    with pytest.raises(ValueError):
        O.associator(O.basis("1"), O.basis("i"), O.basis("j"))


def test_half_associator_is_imaginary_triple_cross(rng):
    x, y, z = imag(rng, 1000), imag(rng, 1000), imag(rng, 1000)
    half = 0.5 * O.raw_associator(x, y, z)
    assert np.abs(half - O.im(O.cross3(x, y, z))).max() <= 1e-12 * max(1.0, np.abs(half).max())


def test_metric_is_euclidean_on_imaginaries(rng):
    u, v = imag(rng, 100), imag(rng, 100)
    assert np.allclose(O.metric(u, v), O.inner(u, v), atol=1e-12)


def test_identification_reproduces_phi0_termwise():
    S = O.identification()
    assert np.array_equal(np.abs(S), np.abs(S).astype(int))
    assert np.array_equal(np.abs(S).sum(axis=0), np.ones(7))
    pulled = np.einsum("ai,bj,ck,abc->ijk", S, S, S, O.phi_tensor())
    assert np.array_equal(pulled, models.phi0().tensor())


def test_identification_pointwise(rng):
    S = O.identification()
    phi0 = models.phi0()
    for _ in range(20):
        x, y, z = rng.standard_normal((3, 7))
        lhs = phi0(x, y, z)
        rhs = O.inner(O.cross2(O.from_imag(S @ x), O.from_imag(S @ y)), O.from_imag(S @ z))
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_six_g_volume_identity_random_pairs(rng):
    phi0 = models.phi0()
    for _ in range(100):
        u, v = rng.standard_normal((2, 7))
        a, b = interior(u, phi0), interior(v, phi0)
        top = wedge(wedge(a, b), phi0).top_coefficient()
        assert top == pytest.approx(6.0 * u @ v, abs=1e-10)
