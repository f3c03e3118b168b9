"""Effective Hamiltonians and truncated equations of motion for moments."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Mapping, Union

from .brackets import moment_bracket, poisson_bracket
from .symcore import (
    CLASSICAL,
    ONE,
    P,
    Q,
    QUANTUM,
    ZERO,
    MomentKey,
    MomentPoly,
    const,
    moment,
    parse_poly,
    poly_sum,
)

__all__ = [
    "HamiltonianSpec",
    "EomSystem",
    "NotHarmonicError",
    "NotLinearError",
    "effective_hamiltonian",
    "derive_eom",
    "exact_rhs",
    "harmonic_eom",
    "linear_eom_subsystem",
    "heisenberg_drift",
    "heisenberg_combination",
    "chain_rule_derivative",
    "split_linear",
    "parse_eom_system",
]

Variable = Union[str, MomentKey]


class NotHarmonicError(ValueError):
    pass


class NotLinearError(ValueError):
    pass


def _kind_letter(kind: str) -> str:
    if kind in ("quantum", QUANTUM):
        return QUANTUM
    if kind in ("classical", CLASSICAL):
        return CLASSICAL
    raise ValueError(f"unknown kind {kind!r}; use 'quantum' or 'classical'")


@dataclass(frozen=True)
class HamiltonianSpec:
    """Polynomial ``H(q, p) = sum c * p**a * q**b`` stored as ``{(a, b): c}``."""

    terms: Mapping[tuple[int, int], Fraction]

    def __post_init__(self):
        clean = {}
        for (a, b), c in self.terms.items():
            if a < 0 or b < 0:
                raise ValueError("powers must be non-negative")
            c = Fraction(c) if not isinstance(c, float) else Fraction(c).limit_denominator(10**12)
            if c:
                clean[(int(a), int(b))] = clean.get((int(a), int(b)), 0) + c
        object.__setattr__(self, "terms", {k: v for k, v in sorted(clean.items()) if v})

    @classmethod
    def from_lines(cls, text: str) -> "HamiltonianSpec":
        """Parse config lines ``coeff p^a q^b`` (blank lines and ``#`` comments skipped)."""
        terms: dict[tuple[int, int], Fraction] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            coef = Fraction(parts[0])
            a = b = 0
            for tok in parts[1:]:
                base, _, exp = tok.partition("^")
                power = int(exp) if exp else 1
                if base == "p":
                    a += power
                elif base == "q":
                    b += power
                else:
                    raise ValueError(f"line {lineno}: unknown factor {tok!r}")
            terms[(a, b)] = terms.get((a, b), 0) + coef
        return cls(terms)

    def to_lines(self) -> str:
        rows = []
        for (a, b), c in self.terms.items():
            rows.append(" ".join([str(c)] + ([f"p^{a}"] if a else []) + ([f"q^{b}"] if b else [])))
        return "\n".join(rows) + "\n"

    def as_poly(self) -> MomentPoly:
        return MomentPoly({(b, a, 0, 0, 0, ()): c for (a, b), c in self.terms.items()})

    @property
    def degree(self) -> int:
        return max((a + b for a, b in self.terms), default=0)

    def degree_in(self, var: str) -> int:
        idx = 0 if var == "p" else 1
        return max((k[idx] for k in self.terms), default=0)

    def derivative(self, a: int, b: int) -> MomentPoly:
        """``d^(a+b) H / dp^a dq^b`` as a polynomial in ``q`` and ``p``."""
        out = {}
        for (pa, qb), c in self.terms.items():
            if pa < a or qb < b:
                continue
            f = Fraction(factorial(pa), factorial(pa - a)) * Fraction(factorial(qb), factorial(qb - b))
            out[(qb - b, pa - a, 0, 0, 0, ())] = c * f
        return MomentPoly(out)

    def __call__(self, q: float, p: float) -> float:
        return sum(float(c) * p**a * q**b for (a, b), c in self.terms.items())

    def __str__(self) -> str:
        return str(self.as_poly())


@dataclass(frozen=True)
class EomSystem:
    """Right-hand sides of the moment equations at truncation order ``order``.

    ``open_keys`` lists moments referenced by the right-hand sides that are
    not themselves evolved (only non-empty for explicitly open subsystems).
    """

    kind: str
    order: int
    route: int | None
    rhs: dict = field(default_factory=dict)
    open_keys: tuple = ()

    @property
    def variables(self) -> list:
        return list(self.rhs)

    @property
    def moment_keys(self) -> list[MomentKey]:
        return [v for v in self.rhs if isinstance(v, MomentKey)]

    def relabel(self, kind: str) -> "EomSystem":
        letter = _kind_letter(kind)
        rhs = {}
        for v, e in self.rhs.items():
            nv = v.relabel(letter) if isinstance(v, MomentKey) else v
            rhs[nv] = e.relabel(letter)
        return EomSystem(letter, self.order, self.route, rhs, tuple(k.relabel(letter) for k in self.open_keys))

    def same_equations(self, other: "EomSystem") -> bool:
        return self.rhs == other.rhs

    def to_text(self) -> str:
        kind = "quantum" if self.kind == QUANTUM else "classical"
        lines = [f"# kind={kind} order={self.order} route={self.route if self.route is not None else '-'}"]
        for v, e in self.rhs.items():
            lines.append(f"d/dt {v} = {e}")
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return self.to_text()


def parse_eom_system(text: str) -> EomSystem:
    """Inverse of :meth:`EomSystem.to_text`."""
    kind, order, route = QUANTUM, 0, None
    rhs: dict = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                k, _, v = tok.partition("=")
                if k == "kind":
                    kind = _kind_letter(v)
                elif k == "order":
                    order = int(v)
                elif k == "route":
                    route = None if v == "-" else int(v)
            continue
        lhs, _, body = line.partition("=")
        name = lhs.strip()
        if not name.startswith("d/dt "):
            raise ValueError(f"malformed equation line: {line!r}")
        name = name[5:].strip()
        if name in ("q", "p"):
            var: Variable = name
        else:
            key = parse_poly(name)
            (var,) = key.keys()
        rhs[var] = parse_poly(body)
    return EomSystem(kind, order, route, rhs)


def effective_hamiltonian(h: HamiltonianSpec, kind: str = "quantum", max_order: int = 2) -> MomentPoly:
    """``H(q,p) + sum_{2<=a+b<=max_order} d^(a+b)H/dp^a dq^b G[a,b] / (a! b!)``."""
    if max_order < 2:
        raise ValueError("max_order must be at least 2")
    letter = _kind_letter(kind)
    out = h.as_poly()
    for n in range(2, max_order + 1):
        for a in range(n + 1):
            b = n - a
            d = h.derivative(a, b)
            if d:
                out = out + d * Fraction(1, factorial(a) * factorial(b)) * moment(a, b, letter)
    return out


def _retained_keys(order: int, kind: str) -> list[MomentKey]:
    # ordered by moment order, then decreasing momentum index
    return [MomentKey(a, n - a, kind) for n in range(2, order + 1) for a in range(n, -1, -1)]


def exact_rhs(var: Variable, h_q: MomentPoly) -> MomentPoly:
    """Untruncated ``{var, H_Q}`` for a given effective Hamiltonian."""
    if var == "q":
        return h_q.derivative("p")
    if var == "p":
        return -h_q.derivative("q")
    return poisson_bracket(moment(var.a, var.b, var.kind), h_q)


def derive_eom(h: HamiltonianSpec, kind: str = "quantum", order: int = 2, route: int = 2) -> EomSystem:
    """Truncated equations of motion for ``q``, ``p`` and moments up to ``order``.

    Route 1 truncates the effective Hamiltonian at ``order`` before taking
    brackets; route 2 keeps it up to ``2*order``.  Both discard every term
    containing a moment above ``order`` afterwards.
    """
    if order < 2:
        raise ValueError("truncation order must be at least 2")
    if route not in (1, 2):
        raise ValueError("route must be 1 or 2")
    letter = _kind_letter(kind)
    h_q = effective_hamiltonian(h, letter, order if route == 1 else 2 * order)
    rhs: dict = {
        "q": h_q.derivative("p").truncate(order),
        "p": (-h_q.derivative("q")).truncate(order),
    }
    ham_keys = sorted(h_q.keys())
    coeffs = {k: h_q.derivative(k) for k in ham_keys}
    for key in _retained_keys(order, letter):
        terms = []
        for hk in ham_keys:
            br = moment_bracket(key, hk)
            if br:
                terms.append(coeffs[hk] * br.truncate(order))
        rhs[key] = poly_sum(terms).truncate(order)
    return EomSystem(letter, order, route, rhs)


def _second_derivs(h: HamiltonianSpec) -> tuple[Fraction, Fraction, Fraction]:
    def c(a, b):
        return h.derivative(a, b).constant_term()

    return c(2, 0), c(1, 1), c(0, 2)


def harmonic_eom(h: HamiltonianSpec, kind: str = "quantum", order: int = 2) -> EomSystem:
    """Closed-form equations for a Hamiltonian of total degree at most two."""
    if h.degree > 2:
        raise NotHarmonicError(f"Hamiltonian has degree {h.degree}; harmonic needs <= 2")
    if order < 2:
        raise ValueError("truncation order must be at least 2")
    letter = _kind_letter(kind)
    hpp, hpq, hqq = _second_derivs(h)
    rhs: dict = {"q": h.derivative(1, 0), "p": -h.derivative(0, 1)}
    for key in _retained_keys(order, letter):
        a, b = key.a, key.b
        e = ZERO
        if b:
            e = e + b * hpp * moment(a + 1, b - 1, letter)
        e = e + (b - a) * hpq * moment(a, b, letter)
        if a:
            e = e - a * hqq * moment(a - 1, b + 1, letter)
        rhs[key] = e
    return EomSystem(letter, order, None, rhs)


def _p_poly(spec) -> dict[int, Fraction]:
    """Coefficients of a polynomial in p given as a HamiltonianSpec, mapping or sequence."""
    if isinstance(spec, HamiltonianSpec):
        if any(b for _, b in spec.terms):
            raise NotLinearError("phi and xi must depend on p only")
        return {a: c for (a, _), c in spec.terms.items()}
    if isinstance(spec, Mapping):
        return {int(k): Fraction(v) for k, v in spec.items() if v}
    return {i: Fraction(c) for i, c in enumerate(spec) if c}


def _p_derivative(coefs: dict[int, Fraction], n: int) -> MomentPoly:
    out = {}
    for k, c in coefs.items():
        if k >= n:
            out[(0, k - n, 0, 0, 0, ())] = c * Fraction(factorial(k), factorial(k - n))
    return MomentPoly(out)


def split_linear(h: HamiltonianSpec) -> tuple[dict[int, Fraction], dict[int, Fraction]]:
    """Write ``H = q*phi(p) + xi(p)``; raise NotLinearError otherwise."""
    phi: dict[int, Fraction] = {}
    xi: dict[int, Fraction] = {}
    for (a, b), c in h.terms.items():
        if b == 0:
            xi[a] = c
        elif b == 1:
            phi[a] = c
        else:
            raise NotLinearError("Hamiltonian is not linear in q")
    return phi, xi


def linear_eom_subsystem(phi, xi, max_a: int, kind: str = "quantum") -> EomSystem:
    """Equations for ``q``, ``p``, ``G[a,0]`` and ``G[b,1]`` of ``H = q phi(p) + xi(p)``.

    The subsystem is closed only as an infinite hierarchy: right-hand sides
    reference moments beyond ``max_a``, which are listed in ``open_keys``.
    """
    if max_a < 1:
        raise ValueError("max_a must be at least 1")
    letter = _kind_letter(kind)
    ph, xc = _p_poly(phi), _p_poly(xi)
    nmax = max(list(ph) + list(xc) + [0])

    def g(a, b):
        return moment(a, b, letter)

    def dphi(n):
        return _p_derivative(ph, n)

    def dxi(n):
        return _p_derivative(xc, n)

    rhs: dict = {}
    dq = Q * dphi(1) + dxi(1)
    for n in range(1, nmax + 1):
        dq = dq + Fraction(1, factorial(n + 1)) * (Q * dphi(n + 2) + dxi(n + 2)) * g(n + 1, 0)
        dq = dq + Fraction(1, factorial(n)) * dphi(n + 1) * g(n, 1)
    rhs["q"] = dq
    dp = -dphi(0)
    for n in range(2, nmax + 1):
        dp = dp - Fraction(1, factorial(n)) * dphi(n) * g(n, 0)
    rhs["p"] = dp
    for a in range(2, max_a + 1):
        e = ZERO
        for n in range(1, nmax + 1):
            e = e + a * Fraction(1, factorial(n)) * dphi(n) * (g(a - 1, 0) * g(n, 0) - g(a + n - 1, 0))
        rhs[MomentKey(a, 0, letter)] = e
    for b in range(1, max_a + 1):
        e = ZERO
        for n in range(1, nmax + 1):
            inv = Fraction(1, factorial(n))
            e = e + inv * (Q * dphi(n + 1) + dxi(n + 1)) * (g(b + n, 0) - g(b, 0) * g(n, 0))
            e = e + inv * dphi(n) * (b * g(b - 1, 1) * g(n, 0) - n * g(b, 0) * g(n - 1, 1) + (n - b) * g(b + n - 1, 1))
        rhs[MomentKey(b, 1, letter)] = e
    evolved = set(rhs)
    referenced = set()
    for e in rhs.values():
        referenced |= e.keys()
    open_keys = tuple(sorted(referenced - evolved))
    order = max([k.order for k in referenced | {k for k in evolved if isinstance(k, MomentKey)}] + [2])
    return EomSystem(letter, order, None, rhs, open_keys)


def heisenberg_combination(kind: str = "quantum") -> MomentPoly:
    letter = _kind_letter(kind)
    return moment(2, 0, letter) * moment(0, 2, letter) - moment(1, 1, letter) ** 2


def heisenberg_drift(h: HamiltonianSpec, kind: str = "quantum") -> MomentPoly:
    """``d/dt [G20 G02 - G11^2]`` from third and higher derivatives of ``H`` only."""
    letter = _kind_letter(kind)

    def g(a, b):
        return moment(a, b, letter)

    out = ZERO
    for n in range(3, h.degree + 1):
        for a in range(n + 1):
            b = n - a
            d = h.derivative(a, b)
            if not d:
                continue
            bracket = ZERO
            if a:
                bracket = bracket + a * g(2, 0) * g(a - 1, b + 1)
            if b:
                bracket = bracket - b * g(0, 2) * g(a + 1, b - 1)
            bracket = bracket + (b - a) * g(1, 1) * g(a, b)
            out = out + Fraction(2, factorial(a) * factorial(b)) * d * bracket
    return out


def chain_rule_derivative(expr: MomentPoly, system: EomSystem) -> MomentPoly:
    """``d/dt expr`` by the chain rule through the right-hand sides of ``system``."""
    out = ZERO
    for var in ("q", "p"):
        d = expr.derivative(var)
        if d:
            out = out + d * system.rhs[var]
    for key in expr.keys():
        out = out + expr.derivative(key) * system.rhs[key]
    return out
