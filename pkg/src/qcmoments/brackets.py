"""Poisson brackets between moments and centroid coordinates.

The closed forms are the primary route.  :func:`bracket_oracle` recomputes a
quantum bracket from the commutation relation alone (via :mod:`opalgebra`)
and is used to verify the closed forms.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

from .opalgebra import OperatorSum, commutator, to_moments, weyl_moment
from .symcore import (
    CLASSICAL,
    HBAR,
    ONE,
    QUANTUM,
    ZERO,
    MomentKey,
    MomentPoly,
    moment,
)

__all__ = [
    "k_coefficient",
    "quantum_bracket",
    "classical_bracket",
    "moment_bracket",
    "centroid_bracket",
    "bracket_oracle",
    "poisson_bracket",
    "KindMismatchError",
]


class KindMismatchError(TypeError):
    """Raised when quantum and classical moments are mixed in one bracket."""


@lru_cache(maxsize=None)
def k_coefficient(a: int, b: int, c: int, d: int, n: int) -> int:
    if min(a, b, c, d, n) < 0:
        raise ValueError("indices must be non-negative")
    total = 0
    for m in range(n + 1):
        term = factorial(m) * factorial(n - m) * comb(a, m) * comb(b, n - m) * comb(c, n - m) * comb(d, m)
        total += -term if m % 2 else term
    return total


def _key(x) -> MomentKey:
    if isinstance(x, MomentKey):
        return x
    return MomentKey(*x)


def _common_part(a, b, c, d, kind) -> MomentPoly:
    out = ZERO
    if a and d:
        out = out + a * d * moment(a - 1, b, kind) * moment(c, d - 1, kind)
    if b and c:
        out = out - b * c * moment(a, b - 1, kind) * moment(c - 1, d, kind)
    return out


@lru_cache(maxsize=None)
def _quantum_bracket(a: int, b: int, c: int, d: int) -> MomentPoly:
    out = _common_part(a, b, c, d, QUANTUM)
    big_m = min(a + c, b + d, a + b, c + d)
    for m in range(0, (big_m - 1) // 2 + 1) if big_m >= 1 else ():
        k = k_coefficient(a, b, c, d, 2 * m + 1)
        if not k:
            continue
        coef = Fraction(k * (-1) ** m, 4**m)
        out = out + coef * HBAR ** (2 * m) * moment(a + c - 2 * m - 1, b + d - 2 * m - 1)
    return out


def quantum_bracket(x, y) -> MomentPoly:
    """``{G[a,b], G[c,d]}`` with its even-power hbar series."""
    x, y = _key(x), _key(y)
    if x.kind != QUANTUM or y.kind != QUANTUM:
        raise KindMismatchError("quantum_bracket needs two quantum moments")
    return _quantum_bracket(x.a, x.b, y.a, y.b)


@lru_cache(maxsize=None)
def _classical_bracket(a: int, b: int, c: int, d: int) -> MomentPoly:
    out = _common_part(a, b, c, d, CLASSICAL)
    if a + c >= 1 and b + d >= 1 and b * c - a * d:
        out = out + (b * c - a * d) * moment(a + c - 1, b + d - 1, CLASSICAL)
    return out


def classical_bracket(x, y) -> MomentPoly:
    x, y = _key(x), _key(y)
    if x.kind != CLASSICAL or y.kind != CLASSICAL:
        raise KindMismatchError("classical_bracket needs two classical moments")
    return _classical_bracket(x.a, x.b, y.a, y.b)


def moment_bracket(x: MomentKey, y: MomentKey) -> MomentPoly:
    """Bracket of two moments of the same kind; order <= 1 keys give 0."""
    if x.kind != y.kind:
        raise KindMismatchError(f"cannot bracket {x} with {y}")
    if x.order <= 1 or y.order <= 1:
        return ZERO
    if x.kind == QUANTUM:
        return _quantum_bracket(x.a, x.b, y.a, y.b)
    return _classical_bracket(x.a, x.b, y.a, y.b)


def centroid_bracket(sym: str, other) -> MomentPoly:
    """Brackets involving ``q`` or ``p``: ``{q,p} = 1``, moments commute with both."""
    if sym not in ("q", "p"):
        raise ValueError("first argument must be 'q' or 'p'")
    if isinstance(other, str):
        if other not in ("q", "p"):
            raise ValueError("second argument must be 'q', 'p' or a moment key")
        if sym == other:
            return ZERO
        return ONE if sym == "q" else -ONE
    return ZERO


def bracket_oracle(x, y) -> MomentPoly:
    """Quantum bracket from first principles.

    ``(-i/hbar) <[W_ab, W_cd]>`` at fixed centroid, plus the chain-rule terms
    coming from the centroid dependence of the centred operators
    (``dG[a,b]/dp = -a G[a-1,b]``, ``dG[a,b]/dq = -b G[a,b-1]``), each fed by
    the commutators ``[Q, W]`` and ``[P, W]`` computed with the same algebra.
    """
    x, y = _key(x), _key(y)
    wx, wy = weyl_moment(x.a, x.b), weyl_moment(y.a, y.b)

    def pb(u: OperatorSum, v: OperatorSum) -> MomentPoly:
        val = to_moments(commutator(u, v))
        # (-i/hbar) * val ; val is i*hbar*(...) when the bracket is real
        re_, im = val.split_i()
        if re_:
            raise ArithmeticError("commutator expectation has a real part")
        return _div_hbar(im)

    qop, pop = OperatorSum.word("Q"), OperatorSum.word("P")
    core = pb(wx, wy)
    # derivatives of each moment w.r.t. the centroid
    dx_dp = -x.a * moment(x.a - 1, x.b) if x.a else ZERO
    dx_dq = -x.b * moment(x.a, x.b - 1) if x.b else ZERO
    dy_dp = -y.a * moment(y.a - 1, y.b) if y.a else ZERO
    dy_dq = -y.b * moment(y.a, y.b - 1) if y.b else ZERO
    p_y = pb(pop, wy)  # {p, <W_y>}
    q_y = pb(qop, wy)
    x_p = pb(wx, pop)  # {<W_x>, p}
    x_q = pb(wx, qop)
    return (
        core
        + dx_dp * p_y
        + dx_dq * q_y
        + dy_dp * x_p
        + dy_dq * x_q
        - dx_dp * dy_dq  # {p, q} = -1
        + dx_dq * dy_dp  # {q, p} = 1
    )


def _div_hbar(x: MomentPoly) -> MomentPoly:
    out = {}
    for m, c in x._terms.items():
        if m[2] < 1:
            raise ArithmeticError("term without hbar in commutator expectation")
        out[(m[0], m[1], m[2] - 1, m[3], m[4], m[5])] = c
    return MomentPoly(out)


def poisson_bracket(f: MomentPoly, g: MomentPoly) -> MomentPoly:
    """Bracket of two polynomials in ``q``, ``p`` and moments.

    Extended by the Leibniz rule from ``{q,p} = 1``, moment/centroid brackets
    equal to zero and the moment/moment closed forms.
    """
    out = f.derivative("q") * g.derivative("p") - f.derivative("p") * g.derivative("q")
    fk = sorted(f.keys())
    gk = sorted(g.keys())
    if fk and gk:
        dg = {k: g.derivative(k) for k in gk}
        for k1 in fk:
            df = f.derivative(k1)
            for k2 in gk:
                br = moment_bracket(k1, k2)
                if br:
                    out = out + df * dg[k2] * br
    return out
