"""Stationary states: equilibria of truncated systems and the position-moment recursion.

For ``H = p^2/2 + V(q)`` an energy eigenstate satisfies, for every polynomial
``g``, ``2E<g''> - 2<g'' V> - <g' V'> + (hbar^2/4) <g''''> = 0``.  Choosing
``g = (q^ - q)^(k+2)/(k+2)`` turns this into a linear relation among the
position moments ``G[0,j]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Mapping

import sympy

from .eomgen import EomSystem, HamiltonianSpec
from .symcore import CLASSICAL, QUANTUM, E, HBAR, MomentKey, MomentPoly, Q, moment, poly_sum

__all__ = [
    "StationaryProblem",
    "SeedingError",
    "EquilibriumReport",
    "equilibrium_system",
    "recursion_step",
    "stationary_condition",
    "moment_table",
]


class SeedingError(ValueError):
    """The lower moments supplied cannot seed the requested recursion step."""


def _to_sympy(x):
    if isinstance(x, sympy.Basic):
        return x
    if isinstance(x, Fraction):
        return sympy.Rational(x.numerator, x.denominator)
    if isinstance(x, str):
        return sympy.sympify(x)
    if isinstance(x, int):
        return sympy.Integer(x)
    return sympy.Float(x) if isinstance(x, float) else sympy.sympify(x)


@dataclass(frozen=True)
class StationaryProblem:
    """Particle in a polynomial potential ``V(q) = sum_j v[j] q^j``.

    ``E`` and ``hbar`` may be numbers, sympy expressions or names; ``kind`` is
    ``"quantum"`` or ``"classical"`` (the latter forces ``hbar = 0``).
    """

    potential: Mapping[int, Fraction]
    E: object = sympy.Symbol("E")
    kind: str = "quantum"
    hbar: object = sympy.Symbol("hbar")

    def __post_init__(self):
        if self.kind not in ("quantum", "classical"):
            raise ValueError("kind must be 'quantum' or 'classical'")
        if any(j < 0 for j in self.potential):
            raise ValueError("potential exponents must be non-negative")

    @classmethod
    def from_hamiltonian(cls, h: HamiltonianSpec, **kw) -> "StationaryProblem":
        pot = {}
        for (a, b), c in h.terms.items():
            if a == 0:
                pot[b] = Fraction(c)
            elif (a, b) != (2, 0):
                raise ValueError("Hamiltonian must be p^2/2 + V(q)")
        if Fraction(h.terms.get((2, 0), 0)) != Fraction(1, 2):
            raise ValueError("kinetic term must be exactly p^2/2")
        return cls(pot, **kw)

    @classmethod
    def monomial(cls, m: int, **kw) -> "StationaryProblem":
        return cls({m: Fraction(1)}, **kw)

    @property
    def letter(self) -> str:
        return QUANTUM if self.kind == "quantum" else CLASSICAL

    @property
    def hbar_value(self):
        return sympy.Integer(0) if self.kind == "classical" else _to_sympy(self.hbar)

    def pure_power(self) -> int:
        if len(self.potential) != 1 or Fraction(next(iter(self.potential.values()))) != 1:
            raise ValueError("recursion needs V = q^m")
        return next(iter(self.potential))


# -- equilibria ---------------------------------------------------------------

@dataclass
class EquilibriumReport:
    equations: list
    unknowns: list
    solutions: list[dict]
    free: list

    @property
    def rank_deficient(self) -> bool:
        return bool(self.free)

    def to_text(self) -> str:
        lines = ["# equilibrium equations"]
        lines += [f"0 = {e}" for e in self.equations]
        for i, sol in enumerate(self.solutions):
            lines.append(f"# solution {i + 1}")
            lines += [f"{k} = {v}" for k, v in sol.items()]
        if self.free:
            lines.append("# undetermined: " + ", ".join(str(f) for f in self.free))
        return "\n".join(lines) + "\n"


def _sym(var) -> sympy.Symbol:
    return sympy.Symbol(str(var))


def equilibrium_system(sys: EomSystem) -> EquilibriumReport:
    """Solve ``rhs = 0`` for every evolved variable; report undetermined ones."""
    unknowns = [_sym(v) for v in sys.variables]
    eqs = [e.to_sympy() for e in sys.rhs.values()]
    eqs = [e for e in eqs if e != 0]
    sols = sympy.solve(eqs, unknowns, dict=True) if eqs else [{}]
    free = set(unknowns)
    for s in sols:
        bound = set(s)
        free = {u for u in free if u not in bound}
    # a variable is also free when it only appears in its own parametrisation
    for s in sols:
        for v in s.values():
            free |= v.free_symbols & set(unknowns)
    ordered_free = [u for u in unknowns if u in free]
    return EquilibriumReport(eqs, unknowns, sols, ordered_free)


# -- recursion ---------------------------------------------------------------

def _lower_value(lower: Mapping, j: int):
    if j == 0:
        return sympy.Integer(1)
    if j == 1 or j < 0:
        return sympy.Integer(0)
    for key in (j, MomentKey(0, j, QUANTUM), MomentKey(0, j, CLASSICAL), f"G[0,{j}]", f"C[0,{j}]"):
        if key in lower:
            return _to_sympy(lower[key])
    raise SeedingError(f"lower moments lack G[0,{j}]")


def recursion_step(prob: StationaryProblem, n: int, lower: Mapping | None = None):
    """``G[0,n+m]`` for ``V = q^m`` at vanishing position expectation.

    ``(2n+m+2) G[0,n+m] = 2E(n+1) G[0,n] + (hbar^2/4)(n+1)n(n-1) G[0,n-2]``.
    ``lower`` maps ``n`` (or the matching key) to values; ``G[0,0] = 1`` and
    ``G[0,1] = 0`` are implied.
    """
    m = prob.pure_power()
    if n < 0:
        raise ValueError("n must be non-negative")
    lower = lower or {}
    hb = prob.hbar_value
    if m % 2 == 0:
        for j in (n, n - 2):
            if j % 2 and j > 1:
                try:
                    val = _lower_value(lower, j)
                except SeedingError:
                    continue
                if val != 0:
                    raise SeedingError(f"odd moment G[0,{j}] must vanish for an even potential at q = 0")
    g_n = _lower_value(lower, n)
    tail = sympy.Integer(0)
    coef = (n + 1) * n * (n - 1)
    if coef and hb != 0:
        tail = hb**2 / 4 * coef * _lower_value(lower, n - 2)
    num = 2 * _to_sympy(prob.E) * (n + 1) * g_n + tail
    return sympy.expand(num / (2 * n + m + 2))


def moment_table(prob: StationaryProblem, max_order: int, seeds: Mapping | None = None) -> dict[int, object]:
    """Position moments ``G[0,j]`` for ``j <= max_order`` from the recursion.

    Moments the recursion cannot reach (``2 <= j < m``) are taken from
    ``seeds``, set to zero when odd under an even potential, or left as symbols.
    """
    m = prob.pure_power()
    letter = prob.letter
    table: dict[int, object] = {0: sympy.Integer(1), 1: sympy.Integer(0)}
    seeds = dict(seeds or {})
    for j in range(2, max_order + 1):
        n = j - m
        if n >= 0:
            table[j] = recursion_step(prob, n, table)
        elif j in seeds:
            table[j] = _to_sympy(seeds[j])
        elif m % 2 == 0 and j % 2:
            # even potential at q = 0
            table[j] = sympy.Integer(0)
        else:
            table[j] = sympy.Symbol(f"{letter}[0,{j}]")
    return table


# -- general condition -------------------------------------------------------

def stationary_condition(prob: StationaryProblem, g_power: int) -> MomentPoly:
    """``2E<g''> - 2<g''V> - <g'V'> + (hbar^2/4)<g''''>`` for ``g = (q^-q)^(k+2)/(k+2)``.

    The expectation of a function of position is expanded about the centroid
    with binomial weights; ``E``, ``q`` and ``hbar`` stay symbolic.
    """
    k = g_power
    if k < 0:
        raise ValueError("g_power must be non-negative")
    letter = prob.letter
    out = 2 * (k + 1) * E * moment(0, k, letter)
    for j, v in prob.potential.items():
        v = Fraction(v)
        # <Q^k (q+Q)^j> = sum_i C(j,i) q^(j-i) G[0,k+i]
        gv = poly_sum(comb(j, i) * Q ** (j - i) * moment(0, k + i, letter) for i in range(j + 1))
        out = out - 2 * (k + 1) * v * gv
        if j:
            dv = poly_sum(comb(j - 1, i) * Q ** (j - 1 - i) * moment(0, k + 1 + i, letter) for i in range(j))
            out = out - j * v * dv
    if prob.kind == "quantum" and k >= 2:
        out = out + Fraction((k + 1) * k * (k - 1), 4) * HBAR**2 * moment(0, k - 2, letter)
    return out
