"""Words in the centred operators P = (p^ - p) and Q = (q^ - q).

Products are reduced with ``P Q = Q P - i hbar`` into normal order (all Q
letters to the left of all P letters).  Expectation values of arbitrary words
are rewritten in the Weyl-symmetric moments ``G[a,b]`` by solving the
triangular relation between normal-ordered monomials and Weyl moments.

Internally a normal-ordered sum is a ``{(a, b): coef}`` table standing for
``sum coef * z**k * Q**b P**a`` with ``z = i*hbar`` and ``k`` fixed by the
word length ``L = a + b + 2k``.
"""

from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from .symcore import (
    HBAR,
    ONE,
    ZERO,
    MomentKey,
    MomentPoly,
    RealImagPair,
    const,
    moment,
    poly_sum,
)

__all__ = [
    "OperatorSum",
    "commutator_reduce",
    "weyl_moment",
    "to_moments",
    "word_moments",
    "expectation_of_product",
    "adjoint",
    "commutator",
    "all_words",
]

_WORD_RE = re.compile(r"[PQ]*")


def check_word(word: str) -> str:
    if not isinstance(word, str) or not _WORD_RE.fullmatch(word):
        raise ValueError(f"operator words use only the letters P and Q, got {word!r}")
    return word


def adjoint(word: str) -> str:
    """Hermitian conjugate of a word: P and Q are self-adjoint, order reverses."""
    return word[::-1]


def _z_power(k: int) -> MomentPoly:
    # (i hbar)^k
    return MomentPoly({(0, 0, k, 0, k, ()): 1})


class OperatorSum:
    """Linear combination of operator words with MomentPoly coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[str, MomentPoly | int | Fraction] | None = None):
        clean: dict[str, MomentPoly] = {}
        for w, c in (terms or {}).items():
            check_word(w)
            c = c if isinstance(c, MomentPoly) else const(c)
            c = clean.get(w, ZERO) + c
            if c:
                clean[w] = c
            else:
                clean.pop(w, None)
        self.terms = clean

    @classmethod
    def word(cls, word: str, coef=1) -> "OperatorSum":
        return cls({word: coef})

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, ZERO) + c
        return OperatorSum(out)

    def __neg__(self) -> "OperatorSum":
        return OperatorSum({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, OperatorSum):
            out: dict[str, MomentPoly] = {}
            for w1, c1 in self.terms.items():
                for w2, c2 in other.terms.items():
                    w = w1 + w2
                    out[w] = out.get(w, ZERO) + c1 * c2
            return OperatorSum(out)
        return OperatorSum({w: c * other for w, c in self.terms.items()})

    def __rmul__(self, other):
        return OperatorSum({w: c * other for w, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorSum):
            return NotImplemented
        return self.terms == other.terms

    def adjoint(self) -> "OperatorSum":
        # coefficients are conjugated by flipping the sign of odd-i parts
        out = {}
        for w, c in self.terms.items():
            re_, im = c.split_i()
            out[adjoint(w)] = re_ - im * MomentPoly({(0, 0, 0, 0, 1, ()): 1})
        return OperatorSum(out)

    def is_normal(self) -> bool:
        return all("PQ" not in w for w in self.terms)

    def __repr__(self) -> str:
        body = " + ".join(f"({c})*{w or '1'}" for w, c in sorted(self.terms.items()))
        return f"OperatorSum({body or '0'})"


def commutator(x: OperatorSum, y: OperatorSum) -> OperatorSum:
    return x * y - y * x


# -- normal ordering -------------------------------------------------------

@lru_cache(maxsize=None)
def _normal_table(word: str) -> tuple[tuple[tuple[int, int], Fraction], ...]:
    """Normal-ordered expansion of a word as ``((a, b), coef)`` pairs."""
    table: dict[tuple[int, int], Fraction] = {(0, 0): Fraction(1)}
    for letter in word:
        nxt: dict[tuple[int, int], Fraction] = {}
        if letter == "P":
            for (a, b), c in table.items():
                nxt[(a + 1, b)] = nxt.get((a + 1, b), 0) + c
        else:
            # Q^b P^a Q = Q^(b+1) P^a - a z Q^b P^(a-1)
            for (a, b), c in table.items():
                nxt[(a, b + 1)] = nxt.get((a, b + 1), 0) + c
                if a:
                    key = (a - 1, b)
                    nxt[key] = nxt.get(key, 0) - a * c
        table = {k: v for k, v in nxt.items() if v}
    return tuple(sorted(table.items()))


def _normal_word(a: int, b: int) -> str:
    return "Q" * b + "P" * a


def commutator_reduce(x: OperatorSum) -> OperatorSum:
    """Rewrite every word in normal order (Q letters before P letters)."""
    out: dict[str, MomentPoly] = {}
    for w, c in x.terms.items():
        length = len(w)
        for (a, b), coef in _normal_table(w):
            k = (length - a - b) // 2
            nw = _normal_word(a, b)
            out[nw] = out.get(nw, ZERO) + c * coef * _z_power(k)
    return OperatorSum(out)


# -- Weyl moments ----------------------------------------------------------

def _arrangements(a: int, b: int) -> Iterable[str]:
    n = a + b
    for ps in itertools.combinations(range(n), a):
        letters = ["Q"] * n
        for i in ps:
            letters[i] = "P"
        yield "".join(letters)


def weyl_moment(a: int, b: int) -> OperatorSum:
    """Totally symmetric product of ``a`` P letters and ``b`` Q letters."""
    if a < 0 or b < 0:
        raise ValueError("indices must be non-negative")
    w = Fraction(math.factorial(a) * math.factorial(b), math.factorial(a + b))
    return OperatorSum({word: w for word in _arrangements(a, b)})


@lru_cache(maxsize=None)
def _weyl_normal(a: int, b: int) -> dict[tuple[int, int], Fraction]:
    """Normal-ordered expansion of the Weyl moment operator (a, b)."""
    acc: dict[tuple[int, int], Fraction] = {}
    for word in _arrangements(a, b):
        for key, c in _normal_table(word):
            acc[key] = acc.get(key, 0) + c
    scale = Fraction(math.factorial(a) * math.factorial(b), math.factorial(a + b))
    return {k: v * scale for k, v in acc.items() if v}


@lru_cache(maxsize=None)
def _normal_in_weyl(a: int, b: int) -> dict[tuple[int, int], Fraction]:
    """``Q**b P**a`` as ``{(a', b'): coef}`` meaning ``sum coef z**k W(a', b')``.

    Solves ``W(a,b) = N(a,b) + sum_k w_k z**k N(a-k, b-k)`` downward in order.
    """
    out: dict[tuple[int, int], Fraction] = {(a, b): Fraction(1)}
    for (a2, b2), w in _weyl_normal(a, b).items():
        if (a2, b2) == (a, b):
            continue
        for key, c in _normal_in_weyl(a2, b2).items():
            out[key] = out.get(key, 0) - w * c
    return {k: v for k, v in out.items() if v}


@lru_cache(maxsize=None)
def word_moments(word: str) -> tuple[tuple[tuple[int, int], Fraction], ...]:
    """Expectation of a word as ``((a, b), coef)`` with implicit ``z**k``.

    ``k = (len(word) - a - b) / 2`` and the term stands for
    ``coef * (i hbar)**k * G[a,b]``.
    """
    check_word(word)
    acc: dict[tuple[int, int], Fraction] = {}
    for (a, b), c in _normal_table(word):
        for key, w in _normal_in_weyl(a, b).items():
            acc[key] = acc.get(key, 0) + c * w
    return tuple(sorted((k, v) for k, v in acc.items() if v))


def _word_poly(word: str, kind: str = "G") -> MomentPoly:
    length = len(word)
    terms = {}
    for (a, b), c in word_moments(word):
        k = (length - a - b) // 2
        terms[(0, 0, k, 0, k, (MomentKey(a, b, kind),))] = c
    return MomentPoly(terms)


def to_moments(x: OperatorSum | str) -> MomentPoly:
    """Expectation value of an operator sum in Weyl moments ``G[a,b]``."""
    if isinstance(x, str):
        return _word_poly(x)
    return poly_sum(c * _word_poly(w) for w, c in x.terms.items())


def classical_moments(word: str) -> MomentPoly:
    """Classical expectation: letters commute, so only the letter counts matter."""
    check_word(word)
    return moment(word.count("P"), word.count("Q"), "C")


def expectation_of_product(f: str, g: str) -> RealImagPair:
    """``<f^dagger g>`` split into real and imaginary parts."""
    check_word(f)
    check_word(g)
    return _word_poly(adjoint(f) + g).split_i()


def all_words(min_len: int, max_len: int) -> list[str]:
    """Every letter sequence over {P, Q} with length in the given range."""
    out = []
    for n in range(min_len, max_len + 1):
        out.extend("".join(t) for t in itertools.product("PQ", repeat=n))
    return out
