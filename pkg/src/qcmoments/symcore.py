"""Exact polynomial arithmetic over moments, centroid coordinates, hbar and E.

A :class:`MomentPoly` is a finite sum of monomials with :class:`fractions.Fraction`
coefficients.  A monomial is a product of powers of ``q``, ``p``, ``hbar``, ``E``,
at most one factor of the imaginary unit ``i`` and a multiset of moment symbols
``G[a,b]`` (quantum) or ``C[a,b]`` (classical).

Centred-moment identities are applied on construction: a moment of order 0 is
the constant 1 and a moment of order 1 vanishes.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Mapping, NamedTuple, Union

__all__ = [
    "MomentKey",
    "MomentPoly",
    "RealImagPair",
    "SymcoreError",
    "MissingBindingError",
    "NonRealError",
    "InvalidFamilyError",
    "ParseError",
    "moment",
    "symbol",
    "const",
    "Q",
    "P",
    "HBAR",
    "E",
    "I",
    "ZERO",
    "ONE",
    "parse_poly",
    "substitute_moment_family",
]

QUANTUM = "G"
CLASSICAL = "C"


class SymcoreError(Exception):
    """Base class for errors raised by the symbolic core."""


class MissingBindingError(SymcoreError, KeyError):
    pass


class NonRealError(SymcoreError, ValueError):
    pass


class InvalidFamilyError(SymcoreError, ValueError):
    pass


class ParseError(SymcoreError, ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class MomentKey(NamedTuple):
    """Index pair ``(a, b)`` of a centred moment; ``a`` counts momenta."""

    a: int
    b: int
    kind: str = QUANTUM

    @property
    def order(self) -> int:
        return self.a + self.b

    def relabel(self, kind: str) -> "MomentKey":
        return MomentKey(self.a, self.b, kind)

    def __str__(self) -> str:
        return f"{self.kind}[{self.a},{self.b}]"


# (q power, p power, hbar power, E power, i parity, sorted moment keys)
Monomial = tuple
_UNIT: Monomial = (0, 0, 0, 0, 0, ())

Scalar = Union[int, Fraction]


def _mono_mul(x: Monomial, y: Monomial) -> tuple[int, Monomial]:
    ipar = x[4] + y[4]
    sign = 1
    if ipar == 2:
        sign, ipar = -1, 0
    if not x[5]:
        keys = y[5]
    elif not y[5]:
        keys = x[5]
    else:
        keys = tuple(sorted(x[5] + y[5]))
    return sign, (x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3], ipar, keys)


def _mono_sort_key(m: Monomial):
    keys = m[5]
    return (sum(k.a + k.b for k in keys), m[0], m[1], m[2], m[3], keys, m[4])


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, Rational):
        return Fraction(c.numerator, c.denominator)
    if isinstance(c, float):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


class MomentPoly:
    """Immutable polynomial with exact rational coefficients.

    Instances compare equal when their canonical term tables coincide, so
    structural equality is symbolic equality.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Scalar] | None = None):
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coef in terms.items():
                mono = _normalize_monomial(mono)
                if mono is None:
                    continue
                sign, mono = mono
                c = _as_fraction(coef) * sign
                if c:
                    c = clean.get(mono, 0) + c
                    if c:
                        clean[mono] = c
                    else:
                        clean.pop(mono, None)
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict[Monomial, Fraction]) -> "MomentPoly":
        # terms already canonical and zero-free
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    # -- inspection -----------------------------------------------------
    @property
    def terms(self) -> dict[Monomial, Fraction]:
        """Canonically ordered copy of the term table."""
        return {m: self._terms[m] for m in sorted(self._terms, key=_mono_sort_key)}

    def items(self):
        return self.terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and _UNIT in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get(_UNIT, Fraction(0))

    def keys(self) -> set[MomentKey]:
        """All moment symbols appearing in the polynomial."""
        out: set[MomentKey] = set()
        for m in self._terms:
            out.update(m[5])
        return out

    def max_moment_order(self) -> int:
        return max((k.order for k in self.keys()), default=0)

    def has_symbol(self, name: str) -> bool:
        idx = _SYMBOL_INDEX[name]
        return any(m[idx] for m in self._terms)

    def degree(self, name: str) -> int:
        idx = _SYMBOL_INDEX[name]
        return max((m[idx] for m in self._terms), default=0)

    @property
    def i_parity(self) -> int | None:
        """0 if every term is real, 1 if every term carries ``i``, None if mixed."""
        pars = {m[4] for m in self._terms}
        if not pars:
            return 0
        if len(pars) == 1:
            return pars.pop()
        return None

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v += c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return MomentPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return MomentPoly._raw({m: -c for m, c in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return ZERO
            return MomentPoly._raw({m: c * other for m, c in self._terms.items()})
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                sign, m = _mono_mul(m1, m2)
                c = c1 * c2 if sign == 1 else -(c1 * c2)
                v = out.get(m)
                if v is None:
                    out[m] = c
                else:
                    v += c
                    if v:
                        out[m] = v
                    else:
                        del out[m]
        return MomentPoly._raw(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, Rational)) and not isinstance(other, bool):
            return self * (Fraction(1) / _as_fraction(other))
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, MomentPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == _coerce(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- transformations ------------------------------------------------
    def map_monomials(self, fn: Callable[[Monomial], tuple[Scalar, Monomial] | None]) -> "MomentPoly":
        """Rebuild the polynomial applying ``fn`` to each monomial.

        ``fn`` returns ``(factor, new_monomial)`` or None to drop the term.
        """
        out: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            r = fn(m)
            if r is None:
                continue
            f, nm = r
            if f:
                out[nm] = out.get(nm, 0) + c * f
        return MomentPoly(out)

    def truncate(self, max_order: int) -> "MomentPoly":
        """Drop every term containing a moment of order above ``max_order``."""
        return MomentPoly._raw(
            {m: c for m, c in self._terms.items() if all(k.order <= max_order for k in m[5])}
        )

    def relabel(self, kind: str) -> "MomentPoly":
        """Swap every moment symbol to ``kind`` (``"G"`` or ``"C"``)."""
        return self.map_monomials(
            lambda m: (1, m[:5] + (tuple(sorted(k.relabel(kind) for k in m[5])),))
        )

    def set_symbol(self, name: str, value) -> "MomentPoly":
        """Substitute an exact number for one of ``q``, ``p``, ``hbar``, ``E``."""
        idx = _SYMBOL_INDEX[name]
        value = _as_fraction(value)

        def sub(m):
            k = m[idx]
            if not k:
                return 1, m
            nm = list(m)
            nm[idx] = 0
            return value**k, tuple(nm)

        return self.map_monomials(sub)

    def substitute(self, key: MomentKey, value: "MomentPoly | Scalar") -> "MomentPoly":
        """Replace every occurrence of moment ``key`` by ``value``."""
        value = _coerce(value)
        out = ZERO
        for m, c in self._terms.items():
            n = m[5].count(key)
            if not n:
                out = out + MomentPoly._raw({m: c})
                continue
            rest = tuple(k for k in m[5] if k != key)
            out = out + MomentPoly({m[:5] + (rest,): c}) * value**n
        return out

    def substitute_moments(self, rule: Callable[[MomentKey], "MomentPoly | Scalar | None"]) -> "MomentPoly":
        """Replace moments by ``rule(key)``; keys mapped to None are kept."""
        cache: dict[MomentKey, MomentPoly | None] = {}
        out = ZERO
        for m, c in self._terms.items():
            term = MomentPoly({m[:5] + ((),): c})
            kept = []
            for k in m[5]:
                if k not in cache:
                    v = rule(k)
                    cache[k] = None if v is None else _coerce(v)
                v = cache[k]
                if v is None:
                    kept.append(k)
                else:
                    term = term * v
            if kept:
                term = term * MomentPoly({(0, 0, 0, 0, 0, tuple(kept)): 1})
            out = out + term
        return out

    def split_i(self) -> "RealImagPair":
        re_t = {m: c for m, c in self._terms.items() if m[4] == 0}
        im_t = {m[:4] + (0,) + m[4 + 1:]: c for m, c in self._terms.items() if m[4] == 1}
        return RealImagPair(MomentPoly._raw(re_t), MomentPoly._raw(im_t))

    def derivative(self, target: "str | MomentKey") -> "MomentPoly":
        """Partial derivative with respect to a symbol name or a moment."""
        if isinstance(target, MomentKey):
            def d(m):
                n = m[5].count(target)
                if not n:
                    return None
                keys = list(m[5])
                keys.remove(target)
                return n, m[:5] + (tuple(keys),)
        else:
            idx = _SYMBOL_INDEX[target]

            def d(m):
                n = m[idx]
                if not n:
                    return None
                nm = list(m)
                nm[idx] = n - 1
                return n, tuple(nm)

        return self.map_monomials(d)

    # -- numeric evaluation --------------------------------------------
    def evaluate(self, bindings: Mapping) -> float | Fraction:
        """Numeric value under ``bindings``.

        Keys of ``bindings`` may be symbol names (``"q"``, ``"hbar"``, ...),
        :class:`MomentKey` instances or their text form (``"G[1,1]"``).
        The result is a Fraction when every used binding is exact.
        """
        if any(m[4] for m in self._terms):
            raise NonRealError("polynomial has odd powers of the imaginary unit")
        norm = _normalize_bindings(bindings)
        total = 0
        for m, c in self._terms.items():
            v = c
            for idx, name in enumerate(_SYMBOLS):
                k = m[idx]
                if k:
                    try:
                        v = v * norm[name] ** k
                    except KeyError:
                        raise MissingBindingError(f"no binding for symbol {name!r}") from None
            for key in m[5]:
                try:
                    v = v * norm[key]
                except KeyError:
                    raise MissingBindingError(f"no binding for moment {key}") from None
            total = total + v
        return total

    def to_sympy(self, hbar=None):
        import sympy

        syms = {n: sympy.Symbol("hbar" if n == "hbar" else n) for n in _SYMBOLS}
        expr = sympy.Integer(0)
        for m, c in self._terms.items():
            t = sympy.Rational(c.numerator, c.denominator)
            for idx, name in enumerate(_SYMBOLS):
                if m[idx]:
                    t *= syms[name] ** m[idx]
            if m[4]:
                t *= sympy.I
            for k in m[5]:
                t *= sympy.Symbol(str(k))
            expr += t
        if hbar is not None:
            expr = expr.subs(syms["hbar"], hbar)
        return expr

    # -- text form ------------------------------------------------------
    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"MomentPoly({format_poly(self)!r})"


class RealImagPair(NamedTuple):
    """``re + i*im`` with both parts free of the imaginary unit."""

    re: MomentPoly
    im: MomentPoly

    def abs2(self) -> MomentPoly:
        return self.re * self.re + self.im * self.im

    def conjugate(self) -> "RealImagPair":
        return RealImagPair(self.re, -self.im)


_SYMBOLS = ("q", "p", "hbar", "E")
_SYMBOL_INDEX = {"q": 0, "p": 1, "hbar": 2, "E": 3, "i": 4}


def _normalize_monomial(mono) -> tuple[int, Monomial] | None:
    q, p, h, e, ipow, keys = mono
    sign = 1
    ipow %= 4
    if ipow >= 2:
        sign = -1
        ipow -= 2
    kept = []
    for k in keys:
        if not isinstance(k, MomentKey):
            k = MomentKey(*k)
        o = k.a + k.b
        if o == 1:
            return None
        if o == 0:
            continue
        kept.append(k)
    return sign, (q, p, h, e, ipow, tuple(sorted(kept)))


def _coerce(x) -> MomentPoly:
    if isinstance(x, MomentPoly):
        return x
    if isinstance(x, bool):
        return NotImplemented
    if isinstance(x, (int, Fraction, Rational)):
        c = _as_fraction(x)
        return MomentPoly._raw({_UNIT: c} if c else {})
    return NotImplemented


def _normalize_bindings(bindings: Mapping) -> dict:
    norm: dict = {}
    for k, v in bindings.items():
        if isinstance(k, MomentKey):
            norm[k] = v
        elif isinstance(k, tuple):
            norm[MomentKey(*k)] = v
        elif k in _SYMBOLS:
            norm[k] = v
        else:
            mk = _KEY_RE.fullmatch(k.replace(" ", ""))
            if not mk:
                raise KeyError(f"unknown symbol {k!r}")
            norm[MomentKey(int(mk.group(2)), int(mk.group(3)), mk.group(1))] = v
    return norm


# -- constructors ----------------------------------------------------------

def const(c: Scalar) -> MomentPoly:
    return _coerce(_as_fraction(c))


def moment(a: int, b: int, kind: str = QUANTUM) -> MomentPoly:
    """The moment ``G[a,b]`` (or ``C[a,b]``) with centred-moment collapse."""
    if a < 0 or b < 0:
        raise ValueError("moment indices must be non-negative")
    return MomentPoly({(0, 0, 0, 0, 0, (MomentKey(a, b, kind),)): 1})


def symbol(name: str, power: int = 1) -> MomentPoly:
    mono = [0, 0, 0, 0, 0, ()]
    mono[_SYMBOL_INDEX[name]] = power
    return MomentPoly({tuple(mono): 1})


ZERO = MomentPoly()
ONE = MomentPoly({_UNIT: 1})
Q = symbol("q")
P = symbol("p")
HBAR = symbol("hbar")
E = symbol("E")
I = symbol("i")


def substitute_moment_family(x: MomentPoly, family: Callable[[int, int], float], bindings: Mapping | None = None):
    """Evaluate ``x`` with every moment ``(a, b)`` replaced by ``family(a, b)``.

    ``bindings`` supplies values for any remaining plain symbols.
    """
    # order-1 moments vanish identically, so only the normalisation is checked
    got = family(0, 0)
    if got != 1:
        raise InvalidFamilyError(f"family(0,0) = {got!r}, expected 1")
    binds: dict = dict(bindings or {})
    for k in x.keys():
        binds[k] = family(k.a, k.b)
    return x.evaluate(binds)


# -- text serialisation -------------------------------------------------------

def _format_coef(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def _format_monomial(m: Monomial) -> list[str]:
    factors = []
    for idx, name in ((0, "q"), (1, "p"), (2, "hbar"), (3, "E")):
        k = m[idx]
        if k == 1:
            factors.append(name)
        elif k:
            factors.append(f"{name}^{k}")
    if m[4]:
        factors.append("i")
    keys = m[5]
    j = 0
    while j < len(keys):
        n = 1
        while j + n < len(keys) and keys[j + n] == keys[j]:
            n += 1
        factors.append(str(keys[j]) if n == 1 else f"{keys[j]}^{n}")
        j += n
    return factors


def format_poly(x: MomentPoly) -> str:
    """Canonical text, e.g. ``1/4*hbar^2 + G[1,1]^2``."""
    if not x._terms:
        return "0"
    parts = []
    for m, c in x.terms.items():
        factors = _format_monomial(m)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if not factors:
            body = _format_coef(a)
        elif a == 1:
            body = "*".join(factors)
        else:
            body = _format_coef(a) + "*" + "*".join(factors)
        parts.append((sign, body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


_KEY_RE = re.compile(r"([GC])\[(\d+),(\d+)\]")
_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<key>[GC]\[\s*\d+\s*,\s*\d+\s*\])|(?P<sym>hbar|q|p|E|i)"
    r"|(?P<op>[-+*^()]))"
)


def parse_poly(text: str) -> MomentPoly:
    """Parse the textual form produced by :func:`format_poly`.

    Accepts sums and differences of products of factors, each factor a
    coefficient ``n`` or ``n/d``, a symbol, or a moment ``G[a,b]``/``C[a,b]``,
    optionally raised to a non-negative integer power with ``^``.
    Parenthesised sub-expressions are allowed.
    """
    tokens = []
    pos = 0
    text_len = len(text)
    while pos < text_len:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", text_len))
    parser = _Parser(tokens)
    result = parser.expr()
    if parser.peek()[0] != "end":
        raise ParseError("trailing input", parser.peek()[2])
    return result


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expr(self) -> MomentPoly:
        sign = 1
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        total = self.term() * sign
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                total = total + t if val == "+" else total - t
            else:
                return total

    def term(self) -> MomentPoly:
        result = self.power()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.take()
                result = result * self.power()
            else:
                return result

    def power(self) -> MomentPoly:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or "/" in val:
                raise ParseError("exponent must be a non-negative integer", pos)
            return base ** int(val)
        return base

    def atom(self) -> MomentPoly:
        kind, val, pos = self.take()
        if kind == "num":
            return const(Fraction(val))
        if kind == "sym":
            return symbol(val)
        if kind == "key":
            m = _KEY_RE.fullmatch(val.replace(" ", ""))
            return moment(int(m.group(2)), int(m.group(3)), m.group(1))
        if kind == "op" and val == "(":
            inner = self.expr()
            k2, v2, p2 = self.take()
            if v2 != ")":
                raise ParseError("expected ')'", p2)
            return inner
        raise ParseError(f"unexpected token {val!r}", pos)


def poly_sum(items: Iterable[MomentPoly]) -> MomentPoly:
    out: dict[Monomial, Fraction] = {}
    for x in items:
        for m, c in x._terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return MomentPoly._raw(out)


def factorial(n: int) -> int:
    return math.factorial(n)
