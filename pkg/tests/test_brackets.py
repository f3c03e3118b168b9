import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcmoments.brackets import (
    KindMismatchError,
    bracket_oracle,
    centroid_bracket,
    classical_bracket,
    k_coefficient,
    moment_bracket,
    poisson_bracket,
    quantum_bracket,
)
from qcmoments.symcore import HBAR, ONE, ZERO, MomentKey, Q, P, moment


def G(a, b):
    return MomentKey(a, b, "G")


def C(a, b):
    return MomentKey(a, b, "C")


@pytest.mark.parametrize(
    "args, expected",
    [((1, 1, 2, 0, 1), 2), ((1, 1, 1, 1, 1), 0), ((3, 1, 4, 2, 0), 1), ((0, 0, 0, 0, 0), 1)],
)
def test_k_coefficient(args, expected):
    assert k_coefficient(*args) == expected


def test_named_quantum_values():
    assert quantum_bracket(G(1, 2), G(0, 2)) == -2 * moment(0, 3)
    assert quantum_bracket(G(1, 1), G(2, 0)) == 2 * moment(2, 0)


def test_named_classical_values():
    assert classical_bracket(C(1, 1), C(2, 0)) == 2 * moment(2, 0, "C")
    assert classical_bracket(C(1, 2), C(0, 2)) == -2 * moment(0, 3, "C")


def test_hbar_term_appears_at_third_order():
    # {G[3,0], G[0,3]} carries an hbar^2 correction
    br = quantum_bracket(G(3, 0), G(0, 3))
    assert br.degree("hbar") == 2
    assert br.set_symbol("hbar", 0).relabel("C") == classical_bracket(C(3, 0), C(0, 3))


@pytest.mark.parametrize("a, b", [(2, 3), (4, 4), (0, 6), (5, 1)])
def test_pure_momentum_moments_commute(a, b):
    assert quantum_bracket(G(a, 0), G(b, 0)) == ZERO


def test_centroid_brackets():
    assert centroid_bracket("q", "p") == ONE
    assert centroid_bracket("p", "q") == -ONE
    assert centroid_bracket("q", "q") == ZERO
    assert centroid_bracket("q", G(3, 2)) == ZERO
    assert centroid_bracket("p", C(2, 2)) == ZERO


def test_kind_mismatch():
    with pytest.raises(KindMismatchError):
        moment_bracket(G(2, 0), C(0, 2))
    with pytest.raises(KindMismatchError):
        quantum_bracket(C(2, 0), C(0, 2))


_keys5 = [G(a, n - a) for n in range(2, 6) for a in range(n + 1)]


@pytest.mark.parametrize("x", _keys5, ids=str)
def test_oracle_equivalence_row(x):
    for y in _keys5:
        assert moment_bracket(x, y) == bracket_oracle(x, y)


def test_classical_limit_to_order_eight():
    for n1 in range(2, 9):
        for n2 in range(2, 9):
            for a in range(n1 + 1):
                for c in range(n2 + 1):
                    q = quantum_bracket(G(a, n1 - a), G(c, n2 - c)).set_symbol("hbar", 0).relabel("C")
                    assert q == classical_bracket(C(a, n1 - a), C(c, n2 - c))


def test_second_order_brackets_have_no_hbar():
    for x in [G(2, 0), G(1, 1), G(0, 2)]:
        for y in _keys5:
            assert not quantum_bracket(x, y).has_symbol("hbar")


@pytest.mark.parametrize("x, y", list(itertools.combinations(_keys5, 2))[::7], ids=str)
def test_order_window(x, y):
    top = x.order + y.order - 2
    for k in quantum_bracket(x, y).keys():
        assert k.order <= top


_idx = st.integers(0, 5)


@settings(max_examples=80, deadline=None)
@given(_idx, _idx, _idx, _idx)
def test_antisymmetry(a, b, c, d):
    assert moment_bracket(G(a, b), G(c, d)) == -moment_bracket(G(c, d), G(a, b))
    assert moment_bracket(C(a, b), C(c, d)) == -moment_bracket(C(c, d), C(a, b))


@pytest.mark.parametrize("triple", [(G(2, 0), G(1, 1), G(0, 2)), (G(2, 1), G(0, 2), G(1, 2)), (G(3, 0), G(1, 1), G(0, 3))], ids=str)
def test_jacobi_before_truncation(triple):
    x, y, z = (moment(k.a, k.b) for k in triple)
    total = (
        poisson_bracket(x, poisson_bracket(y, z))
        + poisson_bracket(y, poisson_bracket(z, x))
        + poisson_bracket(z, poisson_bracket(x, y))
    )
    assert total == ZERO


def test_poisson_bracket_centroid():
    assert poisson_bracket(Q, P) == ONE
    assert poisson_bracket(Q * moment(2, 0), P) == moment(2, 0)
    assert poisson_bracket(HBAR * moment(1, 2), moment(0, 2)) == -2 * HBAR * moment(0, 3)
