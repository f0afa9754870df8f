import numpy as np
import pytest
from hypothesis import given, strategies as st

from g2kit.poly import MAX_DEGREE, Poly

coef = st.floats(min_value=-3, max_value=3, allow_nan=False)


def polys(nvars=3, max_deg=3):
    mono = st.tuples(*[st.integers(0, max_deg)] * nvars).filter(lambda e: sum(e) <= max_deg)
    return st.dictionaries(mono, coef, max_size=5).map(lambda t: Poly(nvars, t))


def test_arithmetic_and_evaluation():
    x, y = Poly.var(2, 0), Poly.var(2, 1)
    p = (x + 2.0 * y) ** 2 - 1.0
    assert p(np.array([1.0, 1.0])) == pytest.approx(8.0)
    assert p.degree() == 2 and not p.is_constant()
    assert p.constant_term() == -1.0


def test_vectorized_evaluation():
    x = Poly.var(3, 0)
    pts = np.arange(12.0).reshape(4, 3)
    assert np.array_equal((x * x)(pts), pts[:, 0] ** 2)


def test_degree_cap():
    x = Poly.var(1, 0)
    with pytest.raises(ValueError):
        x ** (MAX_DEGREE + 1)


def test_derivative():
    x, y = Poly.var(2, 0), Poly.var(2, 1)
    p = x * x * y + 3.0 * y
    assert p.deriv(0) == 2.0 * x * y
    assert p.deriv(1) == x * x + 3.0


def test_composition():
    x, y = Poly.var(2, 0), Poly.var(2, 1)
    p = x * y
    t = Poly.var(1, 0)
    assert p.compose([t + 1.0, t - 1.0]) == t * t - 1.0


@given(polys(), polys(), st.tuples(coef, coef, coef))
def test_product_rule(p, q, point):
    x = np.array(point)
    lhs = (p * q).deriv(1)(x)
    rhs = (p.deriv(1) * q + p * q.deriv(1))(x)
    assert lhs == pytest.approx(rhs, abs=1e-9)


@given(polys())
def test_json_round_trip(p):
    assert Poly.from_json(p.to_json(), 3) == p
