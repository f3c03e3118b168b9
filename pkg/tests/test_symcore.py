from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcmoments.symcore import (
    HBAR,
    I,
    ONE,
    ZERO,
    E,
    InvalidFamilyError,
    MissingBindingError,
    MomentKey,
    MomentPoly,
    NonRealError,
    P,
    ParseError,
    Q,
    const,
    format_poly,
    moment,
    parse_poly,
    substitute_moment_family,
)

G11 = moment(1, 1)
G20 = moment(2, 0)
G02 = moment(0, 2)


def test_add_examples():
    assert G20 + G20 == 2 * G20
    assert G20 + ZERO == G20
    x = HBAR**2 / 4 + G11**2
    assert x + x == HBAR**2 / 2 + 2 * G11**2


def test_mul_examples():
    assert I * I == -ONE
    lhs = (G11 - HBAR / 2 * I) * (G11 + HBAR / 2 * I)
    assert lhs == G11**2 + HBAR**2 / 4
    assert len(Q * G02) == 1


def test_centred_collapse():
    assert moment(0, 0) == ONE
    assert moment(1, 0) == ZERO
    assert moment(0, 1, "C") == ZERO
    assert (G20 * moment(1, 0) + 3).constant_term() == 3


@pytest.mark.parametrize(
    "expr, binds, expected",
    [
        (HBAR**2 / 4 + G11**2, {"hbar": 1, MomentKey(1, 1): 0}, Fraction(1, 4)),
        (ZERO, {}, 0),
        (2 * G20, {"G[2,0]": Fraction(1, 2)}, 1),
    ],
)
def test_evaluate_examples(expr, binds, expected):
    assert expr.evaluate(binds) == expected


def test_evaluate_errors():
    with pytest.raises(MissingBindingError):
        (G20 * Q).evaluate({MomentKey(2, 0): 1})
    with pytest.raises(NonRealError):
        (I * G20).evaluate({MomentKey(2, 0): 1})


def _fact_family(a, b):
    return factorial(a) * factorial(b)


def test_moment_family_examples():
    assert substitute_moment_family(G20 * G02, _fact_family) == 4
    assert substitute_moment_family(G11, _fact_family) == 1
    assert substitute_moment_family(moment(0, 0), _fact_family) == 1


def test_moment_family_rejects_bad_conventions():
    with pytest.raises(InvalidFamilyError):
        substitute_moment_family(G20, lambda a, b: 2)


def test_i_parity_and_split():
    x = G11 - HBAR / 2 * I
    re_, im = x.split_i()
    assert re_ == G11
    assert im == -HBAR / 2
    assert x.i_parity is None
    assert re_.i_parity == 0


def test_truncate_and_relabel():
    x = Q * moment(3, 0) + G20 * G02 + G11
    assert x.truncate(2) == G20 * G02 + G11
    assert x.relabel("C") == Q * moment(3, 0, "C") + moment(2, 0, "C") * moment(0, 2, "C") + moment(1, 1, "C")


def test_derivative():
    x = Q**2 * G20 + 3 * G20**2 * P
    assert x.derivative("q") == 2 * Q * G20
    assert x.derivative(MomentKey(2, 0)) == Q**2 + 6 * G20 * P


def test_set_symbol_and_substitute():
    x = HBAR**2 * G20 + G02
    assert x.set_symbol("hbar", 0) == G02
    assert x.substitute(MomentKey(2, 0), 5) == 5 * HBAR**2 + G02


@pytest.mark.parametrize(
    "text",
    [
        "1/4*hbar^2 + G[1,1]^2",
        "-2*G[0,3]",
        "-hbar*i + 3/7*q^2*p*E*G[0,2]^3*G[2,0]",
        "0",
        "-1 + C[0,4]*C[4,0]",
    ],
)
def test_format_parse_round_trip(text):
    x = parse_poly(text)
    assert format_poly(x) == text
    assert parse_poly(format_poly(x)) == x


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        parse_poly("G[1,1] + * 2")
    assert err.value.position > 0


# -- property tests -------------------------------------------------------------

_atoms = st.sampled_from([Q, P, HBAR, E, I, G20, G02, G11, moment(3, 1), moment(2, 2), moment(1, 0), ONE])


@st.composite
def polys(draw):
    n = draw(st.integers(0, 4))
    out = ZERO
    for _ in range(n):
        c = Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 4)))
        term = const(c)
        for _ in range(draw(st.integers(0, 3))):
            term = term * draw(_atoms)
        out = out + term
    return out


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_laws(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x
    assert x - x == ZERO


_BIND = {"q": Fraction(2, 3), "p": Fraction(-1, 2), "hbar": Fraction(3), "E": Fraction(5, 4),
         MomentKey(2, 0): Fraction(1, 3), MomentKey(0, 2): Fraction(7), MomentKey(1, 1): Fraction(-2),
         MomentKey(3, 1): Fraction(1, 5), MomentKey(2, 2): Fraction(9, 2)}


@settings(max_examples=60, deadline=None)
@given(polys(), polys())
def test_evaluate_is_homomorphism(x, y):
    rx, ry = x.split_i().re, y.split_i().re
    assert (rx * ry).evaluate(_BIND) == rx.evaluate(_BIND) * ry.evaluate(_BIND)
    assert (rx + ry).evaluate(_BIND) == rx.evaluate(_BIND) + ry.evaluate(_BIND)


@settings(max_examples=60, deadline=None)
@given(polys())
def test_canonical_idempotent_and_text_round_trip(x):
    assert MomentPoly(x.terms) == x
    assert parse_poly(format_poly(x)) == x
