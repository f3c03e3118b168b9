"""Moment inequalities generated from the Cauchy-Schwarz inequality.

Quantum relations come from ``|<f^dagger g>|^2 <= <f^dagger f><g^dagger g>`` with
``f`` and ``g`` words in the centred operators; classical relations from the
commutative analogue.  Every relation is stored in canonical form through its
difference ``rhs - lhs >= 0``; two relations are duplicates exactly when
their differences coincide.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Iterable, Sequence

import sympy

from .opalgebra import OperatorSum, adjoint, all_words, expectation_of_product, to_moments
from .symcore import (
    CLASSICAL,
    QUANTUM,
    ZERO,
    MomentKey,
    MomentPoly,
    format_poly,
    moment,
    parse_poly,
    poly_sum,
)

__all__ = [
    "Inequality",
    "Catalog",
    "MomentFamily",
    "DegenerateEqualityError",
    "CoverageError",
    "classical_ineq_type1",
    "classical_ineq_type2",
    "quantum_ineq_from_words",
    "quantum_ineq_symmetric_choice",
    "positivity_relations",
    "enumerate_catalog",
    "classify_uncertainty",
    "reduce_to_pure_pair",
    "pure_pair_constants",
    "equal_uncertainty_reduction",
    "strongest_binomial_constraints",
    "check_family",
    "verify_appendix",
    "FAMILIES",
    "SIXTH_ORDER_RELATIONS",
]

UNCERTAINTY = "uncertainty"
ORDINARY = "ordinary"
EQUALITY = "equality"


class DegenerateEqualityError(ValueError):
    """The requested choice of functions yields an identity, not an inequality."""


class CoverageError(ValueError):
    """The catalog was not generated to a high enough order for the request."""


def _split(diff: MomentPoly) -> tuple[MomentPoly, MomentPoly]:
    # negative terms of rhs - lhs become the left-hand side
    neg = {m: -c for m, c in diff._terms.items() if c < 0}
    pos = {m: c for m, c in diff._terms.items() if c > 0}
    return MomentPoly._raw(neg), MomentPoly._raw(pos)


@dataclass(frozen=True, eq=False)
class Inequality:
    """``lhs <= rhs``; ``provenance`` records the generating pair(s)."""

    lhs: MomentPoly
    rhs: MomentPoly
    kind: str = QUANTUM
    provenance: tuple = ()

    @property
    def difference(self) -> MomentPoly:
        return self.rhs - self.lhs

    def canonical(self) -> "Inequality":
        lhs, rhs = _split(self.difference)
        return Inequality(lhs, rhs, self.kind, self.provenance)

    def is_equality(self) -> bool:
        return self.difference.is_zero()

    def holds(self, bindings, slack: float = 0.0) -> tuple[bool, float]:
        """``(ok, margin)`` with margin ``rhs - lhs`` under numeric bindings."""
        d = self.difference
        margin = d.evaluate(bindings)
        if slack:
            scale = sum(abs(float(c) * float(MomentPoly._raw({m: Fraction(1)}).evaluate(bindings)))
                        for m, c in d._terms.items())
            return margin >= -slack * max(scale, 1e-300), margin
        return margin >= 0, margin

    def max_moment_order(self) -> int:
        return max(self.lhs.max_moment_order(), self.rhs.max_moment_order())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Inequality):
            return NotImplemented
        return self.kind == other.kind and self.difference == other.difference

    def __hash__(self) -> int:
        return hash((self.kind, self.difference))

    def __str__(self) -> str:
        return f"{format_poly(self.lhs)} <= {format_poly(self.rhs)}"

    def to_line(self, classification: str | None = None) -> str:
        line = f"{self} ; provenance={_provenance_text(self.provenance)}"
        if classification:
            line += f" ; class={classification}"
        return line


def _provenance_text(prov: tuple) -> str:
    if not prov:
        return "-"
    head, tail = prov[0]
    if isinstance(tail, str):
        return f"f:{head},g:{tail}"
    return f"{head}:" + ",".join(str(v) for v in tail)


# -- classical generators ----------------------------------------------------

def classical_ineq_type1(a: int, b: int, c: int, d: int) -> Inequality:
    """``(C[a+c,b+d])^2 <= C[2a,2b] C[2c,2d]`` from product-form functions."""
    if min(a, b, c, d) < 0:
        raise ValueError("indices must be non-negative")
    lhs = moment(a + c, b + d, CLASSICAL) ** 2
    rhs = moment(2 * a, 2 * b, CLASSICAL) * moment(2 * c, 2 * d, CLASSICAL)
    return Inequality(lhs, rhs, CLASSICAL, (("type1", (a, b, c, d)),))


def _binomial_sum(n: int, kind: str) -> MomentPoly:
    return poly_sum(comb(n, j) * moment(j, n - j, kind) for j in range(n + 1))


def _sum_choice(a: int, b: int, kind: str, label: str) -> Inequality:
    if a == b:
        raise DegenerateEqualityError(f"a = b = {a}: both sides coincide")
    if a < 0 or b < 0:
        raise ValueError("powers must be non-negative")
    lhs = _binomial_sum(a + b, kind) ** 2
    rhs = _binomial_sum(2 * a, kind) * _binomial_sum(2 * b, kind)
    return Inequality(lhs, rhs, kind, ((label, (a, b)),))


def classical_ineq_type2(a: int, b: int) -> Inequality:
    """Relation from ``f = (dq + dp)^a``, ``g = (dq + dp)^b``."""
    return _sum_choice(a, b, CLASSICAL, "type2")


def quantum_ineq_symmetric_choice(a: int, b: int) -> Inequality:
    """Quantum counterpart of :func:`classical_ineq_type2`; carries no hbar."""
    return _sum_choice(a, b, QUANTUM, "symmetric")


def symmetric_choice_from_operators(a: int, b: int) -> Inequality:
    """Same relation built by expanding ``(P + Q)^n`` as operator words."""
    s = OperatorSum({"P": 1, "Q": 1})

    def power(n):
        out = OperatorSum({"": 1})
        for _ in range(n):
            out = out * s
        return out

    fa, fb = power(a), power(b)
    cross = to_moments(fa.adjoint() * fb).split_i()
    lhs = cross.abs2()
    rhs = to_moments(fa.adjoint() * fa).split_i().re * to_moments(fb.adjoint() * fb).split_i().re
    return Inequality(lhs, rhs, QUANTUM, (("symmetric-ops", (a, b)),))


# -- quantum generators ------------------------------------------------------

def quantum_ineq_from_words(f: str, g: str) -> Inequality:
    """``|<f^dagger g>|^2 <= <f^dagger f><g^dagger g>`` in Weyl moments."""
    cross = expectation_of_product(f, g)
    lhs = cross.abs2()
    rhs = expectation_of_product(f, f).re * expectation_of_product(g, g).re
    return Inequality(lhs, rhs, QUANTUM, ((f, g),))


def positivity_relations(max_n_plus_m: int = 5, kind: str = QUANTUM) -> list[Inequality]:
    """``0 <= G[2n,2m]`` for ``1 <= n + m <= max_n_plus_m``."""
    out = []
    for s in range(1, max_n_plus_m + 1):
        for n in range(s + 1):
            out.append(Inequality(ZERO, moment(2 * n, 2 * (s - n), kind), kind, (("positivity", (n, s - n)),)))
    return out


# -- catalog -----------------------------------------------------------------

CONVENTION = (
    "f, g range over every letter sequence in {P, Q} with 1 <= length <= K "
    "(internal orderings counted separately); each unordered pair {f, g} "
    "(including f = g) generates one relation; relations are identified when "
    "their canonical differences rhs - lhs coincide exactly; equalities "
    "(identically vanishing difference) are reported separately"
)


@dataclass
class Catalog:
    """Deduplicated relations plus bookkeeping about how they were generated."""

    kind: str
    max_order_per_side: int
    inequalities: list[Inequality]
    equalities: list[Inequality] = field(default_factory=list)
    pairs_considered: int = 0
    raw_split_count: int = 0
    convention: str = CONVENTION

    def __iter__(self):
        return iter(self.inequalities)

    def __len__(self) -> int:
        return len(self.inequalities)

    def __contains__(self, item: Inequality) -> bool:
        return item.difference in self._index

    @property
    def _index(self) -> dict[MomentPoly, Inequality]:
        idx = self.__dict__.get("_idx")
        if idx is None or len(idx) != len(self.inequalities):
            idx = {x.difference: x for x in self.inequalities}
            self.__dict__["_idx"] = idx
        return idx

    def find(self, diff: MomentPoly) -> Inequality | None:
        return self._index.get(diff)

    def classification_counts(self) -> dict[str, int]:
        counts = {UNCERTAINTY: 0, ORDINARY: 0, EQUALITY: len(self.equalities)}
        for x in self.inequalities:
            counts[classify_uncertainty(x)] += 1
        return counts

    def restricted(self, max_moment_order: int) -> list[Inequality]:
        return [x for x in self.inequalities if x.max_moment_order() <= max_moment_order]

    def report(self) -> str:
        counts = self.classification_counts() if self.kind == QUANTUM else {}
        lines = [
            f"kind: {'quantum' if self.kind == QUANTUM else 'classical'}",
            f"max order per side: {self.max_order_per_side}",
            f"word pairs considered: {self.pairs_considered}",
            f"distinct inequalities: {len(self.inequalities)}",
            f"distinct (lhs, rhs) splits before canonical merge: {self.raw_split_count}",
            f"equalities: {len(self.equalities)}",
        ]
        if counts:
            lines.append(f"uncertainty: {counts[UNCERTAINTY]}")
            lines.append(f"ordinary: {counts[ORDINARY]}")
        lines.append(f"convention: {self.convention}")
        return "\n".join(lines)

    def export_lines(self) -> list[str]:
        out = []
        for x in self.inequalities:
            cls = classify_uncertainty(x) if self.kind == QUANTUM else None
            out.append(x.canonical().to_line(cls))
        return out


def _merge(items: Iterable[Inequality], kind: str, max_order: int, pairs: int, raw: int) -> Catalog:
    by_diff: dict[MomentPoly, Inequality] = {}
    for x in items:
        d = x.difference
        prev = by_diff.get(d)
        if prev is None:
            by_diff[d] = Inequality(x.lhs, x.rhs, kind, x.provenance)
        else:
            by_diff[d] = Inequality(prev.lhs, prev.rhs, kind, prev.provenance + x.provenance)
    ineqs = [x for d, x in by_diff.items() if not d.is_zero()]
    eqs = [x for d, x in by_diff.items() if d.is_zero()]
    ineqs.sort(key=lambda x: (x.max_moment_order(), format_poly(x.difference)))
    return Catalog(kind, max_order, ineqs, eqs, pairs, raw)


def enumerate_catalog(max_order_per_side: int, classical: bool = False) -> Catalog:
    """All word-pair relations with word lengths from 1 to ``max_order_per_side``.

    With ``classical=True`` the quantum relations are taken at ``hbar = 0`` and
    relabelled, then merged with the product-form and sum-form classical
    generators over the same index range.
    """
    if max_order_per_side < 1:
        raise ValueError("max_order_per_side must be at least 1")
    words = all_words(1, max_order_per_side)
    generated = []
    splits = set()
    for i, f in enumerate(words):
        for g in words[i:]:
            x = quantum_ineq_from_words(f, g)
            generated.append(x)
            if not x.is_equality():
                splits.add((x.lhs, x.rhs))
    pairs = len(generated)
    if not classical:
        return _merge(generated, QUANTUM, max_order_per_side, pairs, len(splits))
    k = max_order_per_side
    limited = [
        Inequality(x.lhs.set_symbol("hbar", 0).relabel(CLASSICAL), x.rhs.set_symbol("hbar", 0).relabel(CLASSICAL),
                   CLASSICAL, x.provenance)
        for x in generated
    ]
    extra = []
    for n1 in range(1, k + 1):
        for n2 in range(1, k + 1):
            for a in range(n1 + 1):
                for c in range(n2 + 1):
                    extra.append(classical_ineq_type1(a, n1 - a, c, n2 - c))
    for a in range(0, k + 1):
        for b in range(a + 1, k + 1):
            extra.append(classical_ineq_type2(a, b))
    splits = {(x.lhs, x.rhs) for x in limited + extra if not x.is_equality()}
    return _merge(limited + extra, CLASSICAL, k, pairs + len(extra), len(splits))


def _zero_moments(x: MomentPoly) -> MomentPoly:
    return x.substitute_moments(lambda k: 0)


def classify_uncertainty(x: Inequality) -> str:
    """Whether the relation forbids all moments vanishing.

    Returns ``"uncertainty"`` when the hbar-only part of the difference is
    negative, ``"equality"`` for an identity and ``"ordinary"`` otherwise.
    """
    d = x.difference
    if d.is_zero():
        return EQUALITY
    z = _zero_moments(d)
    if z.is_zero():
        return ORDINARY
    # graded: a single hbar power survives
    value = z.evaluate({"hbar": 1, "q": 0, "p": 0, "E": 0})
    return UNCERTAINTY if value < 0 else ORDINARY


# -- reductions -------------------------------------------------------------

def _pure_even(k: MomentKey) -> bool:
    return (k.a == 0 or k.b == 0) and k.a % 2 == 0 and k.b % 2 == 0


def pure_pair_constants(catalog: Catalog) -> dict[int, Fraction]:
    """Largest ``gamma`` for each ``n`` in ``gamma hbar^(2n) <= G[0,2n] G[2n,0]``.

    Every moment except the pure even ones ``G[2a,0]``, ``G[0,2a]`` is set to
    zero in each uncertainty relation; those collapsing to a single product
    ``c hbar^j G[0,2n] G[2n,0]`` against a constant give ``gamma = const / c``.
    """
    best: dict[int, Fraction] = {}
    for x in catalog.inequalities:
        if classify_uncertainty(x) != UNCERTAINTY:
            continue
        reduced = x.difference.substitute_moments(lambda k: None if _pure_even(k) else 0)
        items = list(reduced._terms.items())
        if len(items) != 2:
            continue
        (m1, c1), (m2, c2) = sorted(items, key=lambda t: t[1])
        if m1[5] or len(m2[5]) != 2:
            continue
        k1, k2 = sorted(m2[5])
        if not (k1.a == 0 and k2.b == 0 and k1.b == k2.a):
            continue
        n = k1.b // 2
        gamma = -c1 / c2
        if gamma > best.get(n, -1):
            best[n] = gamma
    return dict(sorted(best.items()))


def reduce_to_pure_pair(catalog: Catalog, n: int) -> Fraction:
    """``gamma_n`` of the strongest relation ``gamma hbar^(2n) <= G[0,2n] G[2n,0]``."""
    if catalog.kind != QUANTUM:
        raise ValueError("pure-pair reduction needs a quantum catalog")
    if n < 1:
        raise ValueError("n must be positive")
    if catalog.max_order_per_side < n:
        raise CoverageError(f"catalog built to order {catalog.max_order_per_side} per side; n={n} needs {n}")
    consts = pure_pair_constants(catalog)
    if n not in consts:
        raise CoverageError(f"no uncertainty relation reduces to the n={n} pure pair")
    return consts[n]


def _g_symbols(n: int):
    return sympy.symbols(f"g1:{n + 1}", positive=True)


def equal_uncertainty_reduction(catalog: Catalog, max_moment_order: int = 8) -> list[sympy.Expr]:
    """Relations after ``G[2a,0] = G[0,2a] = g_a hbar^a`` and all other moments zero.

    Only relations whose moments stay within ``max_moment_order`` are used.
    Each returned expression must be non-negative; hbar drops out by grading.
    """
    gs = _g_symbols(max_moment_order // 2)
    hb = sympy.Symbol("hbar", positive=True)
    out = []
    seen = set()
    for x in catalog.restricted(max_moment_order):
        d = x.difference
        expr = sympy.Integer(0)
        for m, c in d._terms.items():
            term = sympy.Rational(c.numerator, c.denominator) * hb ** m[2]
            for k in m[5]:
                if not _pure_even(k):
                    term = 0
                    break
                a = (k.a + k.b) // 2
                term *= gs[a - 1] * hb**a
            expr += term
        expr = sympy.expand(expr.subs(hb, 1))
        if expr != 0 and expr not in seen:
            seen.add(expr)
            out.append(expr)
    return out


def strongest_binomial_constraints(relations: Sequence[sympy.Expr]) -> dict[tuple, Fraction]:
    """For relations ``A*m1 - B*m2 >= 0`` keep the largest ``B/A`` per ``(m1, m2)``.

    Keys are ``(str(m1), str(m2))``; ``m2`` is ``1`` for constant bounds.
    """
    best: dict[tuple, Fraction] = {}
    for expr in relations:
        terms = sympy.Add.make_args(sympy.expand(expr))
        if len(terms) != 2:
            continue
        pos = [t for t in terms if t.as_coeff_Mul()[0] > 0]
        neg = [t for t in terms if t.as_coeff_Mul()[0] < 0]
        if len(pos) != 1 or len(neg) != 1:
            continue
        ca, ma = pos[0].as_coeff_Mul()
        cb, mb = neg[0].as_coeff_Mul()
        ratio = Fraction(int((-cb / ca).p), int((-cb / ca).q))
        key = (str(ma), str(mb))
        if ratio > best.get(key, Fraction(-1)):
            best[key] = ratio
    return best


# -- moment families ----------------------------------------------------------

def _pow0(base: int, exp: int) -> Fraction:
    # 0**anything is taken as 1 so that pure moments are well defined
    if base == 0:
        return Fraction(1)
    return Fraction(base) ** exp


@dataclass(frozen=True)
class MomentFamily:
    """Closed-form assignment ``(a, b) -> value``; ``scale`` multiplies by hbar^((a+b)/2)."""

    label: str
    rule: Callable[[int, int], Fraction]
    hbar_scaling: bool = True

    def value(self, a: int, b: int, hbar) -> float | Fraction:
        if a + b == 0:
            return Fraction(1)
        if a + b == 1:
            return Fraction(0)
        base = self.rule(a, b)
        if not self.hbar_scaling:
            return base
        n = a + b
        if isinstance(hbar, (int, Fraction)):
            if n % 2 == 0:
                return base * Fraction(hbar) ** (n // 2)
            root = math.isqrt(int(hbar)) if Fraction(hbar).denominator == 1 else None
            if root is not None and root * root == hbar:
                return base * Fraction(root) ** n
        return float(base) * float(hbar) ** (n / 2)

    def bindings(self, keys: Iterable[MomentKey], hbar) -> dict:
        out = {"hbar": hbar}
        for k in keys:
            out[k] = self.value(k.a, k.b, hbar)
        return out


FAMILIES: dict[str, MomentFamily] = {
    "factorial": MomentFamily("a! b!", lambda a, b: Fraction(factorial(a) * factorial(b))),
    "order-factorial": MomentFamily("(a+b)!", lambda a, b: Fraction(factorial(a + b))),
    "power": MomentFamily("a^a b^b", lambda a, b: _pow0(a, a) * _pow0(b, b)),
    "power-1": MomentFamily("a^(a-1) b^(b-1)", lambda a, b: _pow0(a, a - 1) * _pow0(b, b - 1)),
    "power-2": MomentFamily("a^(a-2) b^(b-2)", lambda a, b: _pow0(a, a - 2) * _pow0(b, b - 2)),
    "power-3": MomentFamily("a^(a-3) b^(b-3)", lambda a, b: _pow0(a, a - 3) * _pow0(b, b - 3)),
    "unit": MomentFamily("1", lambda a, b: Fraction(1)),
}


@dataclass
class FamilyReport:
    family: str
    hbar: object
    results: list[tuple[Inequality, bool, object]]

    @property
    def failures(self) -> list[tuple[Inequality, object]]:
        return [(x, m) for x, ok, m in self.results if not ok]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        n_fail = len(self.failures)
        verdict = "PASS" if not n_fail else "FAIL"
        return f"{self.family}: {len(self.results) - n_fail}/{len(self.results)} satisfied; verdict {verdict}"


def check_family(fam: MomentFamily, inequalities: Iterable[Inequality], max_order: int, hbar) -> FamilyReport:
    """Test a moment family against every relation with moments up to ``max_order``.

    Exact inputs are compared with zero tolerance; float inputs allow a
    relative slack of 1e-12 on the margin.
    """
    exact = isinstance(hbar, (int, Fraction))
    results = []
    for x in inequalities:
        if x.max_moment_order() > max_order:
            continue
        binds = fam.bindings(x.difference.keys() | x.lhs.keys(), hbar)
        if exact and all(isinstance(v, (int, Fraction)) for v in binds.values()):
            ok, margin = x.holds(binds)
        else:
            ok, margin = x.holds({k: float(v) for k, v in binds.items()}, slack=1e-12)
        results.append((x, bool(ok), margin))
    return FamilyReport(fam.label, hbar, results)


# -- reference relations with moments up to sixth order ------------------------

SIXTH_ORDER_RELATIONS: list[tuple[str, str]] = [
    ("1/4*hbar^4 + G[2,2]^2", "G[2,0]*G[2,4] + hbar^2*(3*G[0,2]*G[2,0] - G[2,2])"),
    ("1/4*hbar^4 + G[2,2]^2", "G[2,0]*G[2,4] + hbar^2*(G[0,2]*G[2,0] + G[2,2] - 4*G[1,1]^2)"),
    ("1/4*hbar^4 + G[2,2]^2", "G[0,4]*G[4,0] + hbar^2*(G[2,2] - 4*G[1,1]^2)"),
    ("1/4*hbar^4 + G[2,2]^2", "G[0,2]*G[4,2] + hbar^2*(3*G[0,2]*G[2,0] - G[2,2])"),
    ("1/4*hbar^4 + G[2,2]^2", "G[0,2]*G[4,2] + hbar^2*(G[0,2]*G[2,0] + G[2,2] - 4*G[1,1]^2)"),
    ("9/16*hbar^6 + G[3,3]^2",
     "G[2,4]*G[4,2] + hbar^4*(3*G[0,2]*G[2,0] - 9/4*(G[1,1]^2 + G[2,2]))"
     " + hbar^2*(-9/4*G[2,2]^2 + 3*G[2,0]*G[2,4] - 3*G[1,1]*G[3,3] + G[0,2]*G[4,2])"),
    ("1/16*hbar^6 + G[3,3]^2",
     "G[2,4]*G[4,2] + hbar^4*(-9/4*G[1,1]^2 + 3*G[0,2]*G[2,0] - 1/4*G[2,2])"
     " + hbar^2*(-1/4*G[2,2]^2 + 3*G[2,0]*G[2,4] - 3*G[1,1]*G[3,3] + G[0,2]*G[4,2])"),
    ("1/16*hbar^6 + G[3,3]^2",
     "G[2,4]*G[4,2] + hbar^4*(-1/4*G[1,1]^2 + G[0,2]*G[2,0] - 3/4*G[2,2])"
     " + hbar^2*(-9/4*G[2,2]^2 + G[2,0]*G[2,4] - G[1,1]*G[3,3] + G[0,2]*G[4,2])"),
    ("1/16*hbar^6 + G[3,3]^2",
     "G[2,4]*G[4,2] + hbar^4*(-1/4*G[1,1]^2 + G[0,2]*G[2,0] - 5/4*G[2,2])"
     " + hbar^2*(-25/4*G[2,2]^2 + G[2,0]*G[2,4] + G[1,1]*G[3,3] + G[0,2]*G[4,2])"),
    ("1/16*hbar^6 + G[3,3]^2",
     "G[2,4]*G[4,2] + hbar^4*(-25/4*G[1,1]^2 + G[0,2]*G[2,0] + 7/4*G[2,2])"
     " + hbar^2*(-49/4*G[2,2]^2 + G[2,0]*G[2,4] + 5*G[1,1]*G[3,3] + G[0,2]*G[4,2])"),
    ("9/16*hbar^6 + G[3,3]^2",
     "G[2,4]*G[4,2] + hbar^4*(3*G[0,2]*G[2,0] - 9/4*(G[1,1]^2 + G[2,2]))"
     " + hbar^2*(-9/4*G[2,2]^2 + G[2,0]*G[2,4] - 3*G[1,1]*G[3,3] + 3*G[0,2]*G[4,2])"),
    ("1/16*hbar^6 + G[3,3]^2",
     "G[2,4]*G[4,2] + hbar^4*(-9/4*G[1,1]^2 + 3*G[0,2]*G[2,0] - 1/4*G[2,2])"
     " + hbar^2*(-1/4*G[2,2]^2 + G[2,0]*G[2,4] - 3*G[1,1]*G[3,3] + 3*G[0,2]*G[4,2])"),
    ("1/16*hbar^6 + G[3,3]^2",
     "G[2,4]*G[4,2] + hbar^4*(-9/4*G[1,1]^2 + 9*G[0,2]*G[2,0] - 1/4*G[2,2])"
     " + hbar^2*(-1/4*G[2,2]^2 + 3*G[2,0]*G[2,4] - 3*G[1,1]*G[3,3] + 3*G[0,2]*G[4,2])"),
    ("9/16*hbar^6 + G[3,3]^2",
     "G[0,6]*G[6,0] - 27/4*hbar^4*(3*G[1,1]^2 - G[2,2]) + hbar^2*(-81/4*G[2,2]^2 + 9*G[1,1]*G[3,3])"),
]

# averaged form of the first two fourth-order relations
COMBINED_RELATION = ("1/4*hbar^4 + G[2,2]^2", "G[2,0]*G[2,4] + 2*hbar^2*(G[2,0]*G[0,2] - G[1,1]^2)")


def reference_inequalities() -> list[Inequality]:
    return [Inequality(parse_poly(l), parse_poly(r), QUANTUM, (("reference", i),))
            for i, (l, r) in enumerate(SIXTH_ORDER_RELATIONS)]


@dataclass
class AppendixReport:
    matches: list[tuple[Inequality, Inequality | None, Inequality | None]]
    combined_ok: bool

    @property
    def all_found(self) -> bool:
        return all(found is not None for _, found, _ in self.matches)

    def lines(self) -> list[str]:
        out = []
        for ref, found, near in self.matches:
            if found is not None:
                f, g = found.provenance[0]
                out.append(f"found   {ref}   [f={f}, g={g}]")
            else:
                out.append(f"MISSING {ref}   nearest: {near}")
        out.append(f"combined relation equals the average of the first two: {self.combined_ok}")
        return out


def _nearest(catalog: Catalog, diff: MomentPoly) -> Inequality | None:
    target = set(diff._terms.items())
    return min(catalog.inequalities, key=lambda x: len(set(x.difference._terms.items()) ^ target), default=None)


def verify_appendix(catalog: Catalog) -> AppendixReport:
    """Locate each reference relation in the catalog by exact canonical match."""
    if catalog.max_order_per_side < 3:
        raise CoverageError("reference relations need words up to length 3")
    refs = reference_inequalities()
    matches = []
    for ref in refs:
        found = catalog.find(ref.difference)
        matches.append((ref, found, None if found is not None else _nearest(catalog, ref.difference)))
    combined = Inequality(parse_poly(COMBINED_RELATION[0]), parse_poly(COMBINED_RELATION[1]))
    avg = (refs[0].difference + refs[1].difference) * Fraction(1, 2)
    return AppendixReport(matches, combined.difference == avg)
