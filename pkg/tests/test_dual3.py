import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import central1, central2, richardson
from spherical4r import dual3 as d3
from spherical4r.dual3 import DomainError, Dual3


def triple(d):
    return np.array([float(d.val), float(d.d1), float(d.d2)])


@pytest.mark.parametrize("x", [0.0, np.pi, 2.5])
def test_seed(x):
    assert np.array_equal(triple(d3.seed(x)), [x, 1.0, 0.0])


def test_const_lifts_with_zero_derivatives():
    assert np.array_equal(triple(d3.const(3.0)), [3.0, 0.0, 0.0])


def test_arith_examples():
    a = Dual3(3.0, 2.0, 1.0)
    assert np.allclose(triple(d3.arith(a, a, "mul")), [9, 12, 14])
    assert np.allclose(triple(d3.arith(d3.const(1.0), d3.const(2.0), "add")), [3, 0, 0])
    assert np.allclose(triple(d3.arith(Dual3(4.0, 4.0, 2.0), d3.const(2.0), "div")), [2, 2, 1])


def test_division_by_zero():
    with pytest.raises(DomainError):
        Dual3(1.0, 1.0, 0.0) / d3.const(0.0)


def test_compose_examples():
    sq = d3.compose(lambda u: u * u, lambda u: 2 * u, lambda u: 2.0 + 0 * u, Dual3(3.0, 2.0, 1.0))
    assert np.allclose(triple(sq), [9, 12, 14])
    assert np.allclose(triple(d3.sin(Dual3(np.pi / 2, 1.0, 0.0))), [1, 0, -1], atol=1e-15)
    assert np.allclose(triple(d3.exp(Dual3(0.0, 2.0, 3.0))), [1, 2, 7])


def test_elementary_examples():
    assert np.allclose(triple(d3.cos(d3.seed(0.0))), [1, 0, -1])
    assert np.allclose(triple(d3.sqrt(Dual3(4.0, 1.0, 0.0))), [2, 0.25, -0.03125])
    assert np.allclose(triple(d3.atan2(Dual3(1.0, 1.0, 0.0), d3.const(1.0))), [np.pi / 4, 0.5, -0.5])


def test_atan2_against_finite_differences():
    f = lambda t: np.arctan2(t, 1.0)
    assert np.isclose(richardson(central1, f, 1.0), 0.5, rtol=1e-10)
    assert np.isclose(richardson(central2, f, 1.0), -0.5, rtol=1e-8)


@pytest.mark.parametrize(
    "name, args",
    [
        ("sqrt", (0.0,)),
        ("sqrt", (-1.0,)),
        ("log", (0.0,)),
        ("acos", (1.0,)),
        ("asin", (-1.0,)),
        ("abs", (0.0,)),
        ("atan2", (0.0, 0.0)),
    ],
)
def test_domain_errors(name, args):
    with pytest.raises(DomainError):
        d3.elementary(name, *(d3.seed(a) for a in args))


def test_unknown_elementary():
    with pytest.raises(ValueError):
        d3.elementary("sinh", d3.seed(0.0))


# composite expressions exercising every catalogue entry, on (0.2, 0.8)
EXPRESSIONS = {
    "sin": lambda x, m: m.sin(x * 1.3) * m.cos(x),
    "tan": lambda x, m: m.tan(x) + m.exp(-x),
    "asin": lambda x, m: m.asin(x * 0.9) / (1.0 + x),
    "acos": lambda x, m: m.acos(x) * x,
    "atan": lambda x, m: m.atan(x * 3.0) - m.log(x),
    "atan2": lambda x, m: m.atan2(m.sin(x), x - 2.0),
    "sqrt": lambda x, m: m.sqrt(x + 1.0) * m.absolute(x - 1.0),
}


class _Np:
    sin, cos, tan, exp, log, sqrt = np.sin, np.cos, np.tan, np.exp, np.log, np.sqrt
    asin, acos, atan, atan2, absolute = np.arcsin, np.arccos, np.arctan, np.arctan2, np.abs


@pytest.mark.parametrize("name", sorted(EXPRESSIONS))
@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.2, 0.8))
def test_chain_rule_matches_richardson(name, x):
    expr = EXPRESSIONS[name]
    d = expr(d3.seed(x), d3)
    f = lambda t: expr(t, _Np)
    ref1 = richardson(central1, f, x, h0=0.02)
    ref2 = richardson(central2, f, x, h0=0.02)
    assert abs(d.d1 - ref1) <= 1e-6 * max(1.0, abs(ref1))
    assert abs(d.d2 - ref2) <= 1e-4 * max(1.0, abs(ref2))


duals = st.builds(
    Dual3,
    st.floats(-10, 10),
    st.floats(-10, 10),
    st.floats(-10, 10),
)


@given(a=duals, b=duals, c=duals)
def test_mul_commutative_and_associative(a, b, c):
    ab, ba = a * b, b * a
    assert np.array_equal(triple(ab), triple(ba))
    lhs, rhs = (a * b) * c, a * (b * c)
    assert np.allclose(triple(lhs), triple(rhs), rtol=1e-12, atol=1e-9)


@given(x=st.floats(-3, 3), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_linearity(x, a, b):
    u = d3.seed(x)
    lhs = a * d3.sin(u) + b * d3.exp(u)
    rhs = Dual3(
        a * np.sin(x) + b * np.exp(x),
        a * np.cos(x) + b * np.exp(x),
        -a * np.sin(x) + b * np.exp(x),
    )
    assert np.allclose(triple(lhs), triple(rhs), rtol=1e-12, atol=1e-12)


@given(c=st.floats(0.1, 5.0))
def test_constants_annihilate(c):
    k = d3.const(c)
    expr = d3.sqrt(k) * d3.sin(k) + d3.log(k) / d3.exp(k) - d3.atan2(k, k + 1.0)
    assert expr.d1 == 0.0 and expr.d2 == 0.0


def test_batched_arrays_match_scalar():
    xs = np.linspace(0.1, 1.0, 7)
    batch = d3.sin(d3.seed(xs)) * d3.seed(xs)
    for i, x in enumerate(xs):
        one = d3.sin(d3.seed(x)) * d3.seed(x)
        assert np.array_equal(triple(one), [batch.val[i], batch.d1[i], batch.d2[i]])


def test_pow_matches_repeated_multiplication():
    x = Dual3(1.7, 0.3, -0.2)
    assert np.allclose(triple(x**3), triple(x * x * x), rtol=1e-14)
    with pytest.raises(DomainError):
        Dual3(-1.0, 1.0, 0.0) ** 0.5


def test_is_finite():
    assert d3.is_finite(d3.seed(1.0))
    assert not d3.is_finite(Dual3(1.0, np.nan, 0.0))
