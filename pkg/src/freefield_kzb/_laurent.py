"""Sparse Laurent polynomials with exact rational coefficients.

Used as the scalar field for exact operator identities where the level
``kappa`` (and sometimes unknown constants) stay symbolic.  Negative
exponents are allowed, so ``1/kappa`` is a monomial.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

import sympy

Monomial = tuple  # sorted tuple of (name, exponent) with exponent != 0


def _mul_monomials(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for name, e in b:
        e2 = exps.get(name, 0) + e
        if e2:
            exps[name] = e2
        else:
            del exps[name]
    return tuple(sorted(exps.items()))


class LPoly:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        self.terms = {} if terms is None else {m: c for m, c in terms.items() if c}

    @classmethod
    def const(cls, value) -> "LPoly":
        value = Fraction(value)
        return cls({(): value} if value else {})

    @classmethod
    def var(cls, name: str, exponent: int = 1) -> "LPoly":
        return cls({((name, exponent),): Fraction(1)})

    @staticmethod
    def coerce(x) -> "LPoly":
        if isinstance(x, LPoly):
            return x
        if isinstance(x, (int, Rational)):
            return LPoly.const(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to LPoly")

    def __add__(self, other):
        other = LPoly.coerce(other)
        if not other.terms:
            return self
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        r = LPoly()
        r.terms = out
        return r

    __radd__ = __add__

    def __neg__(self):
        r = LPoly()
        r.terms = {m: -c for m, c in self.terms.items()}
        return r

    def __sub__(self, other):
        return self + (-LPoly.coerce(other))

    def __rsub__(self, other):
        return LPoly.coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            if not other:
                return LPoly()
            r = LPoly()
            r.terms = {m: c * other for m, c in self.terms.items()}
            return r
        other = LPoly.coerce(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mul_monomials(m1, m2)
                v = out.get(m, 0) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        r = LPoly()
        r.terms = out
        return r

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Rational)):
            return self * (Fraction(1) / Fraction(other))
        other = LPoly.coerce(other)
        if len(other.terms) != 1:
            raise ZeroDivisionError("only division by a single monomial is exact")
        (m, c), = other.terms.items()
        inv = tuple((name, -e) for name, e in m)
        return self * LPoly({inv: 1 / c})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        try:
            other = LPoly.coerce(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def variables(self) -> set[str]:
        return {name for m in self.terms for name, _ in m}

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def evaluate(self, values: Mapping[str, object]):
        total = 0
        for m, c in self.terms.items():
            t = c
            for name, e in m:
                t = t * values[name] ** e
            total = total + t
        return total

    def subs(self, values: Mapping[str, "LPoly | int | Fraction"]) -> "LPoly":
        out = LPoly()
        for m, c in self.terms.items():
            t = LPoly.const(c)
            for name, e in m:
                if name in values:
                    v = LPoly.coerce(values[name])
                    t = t * v**e
                else:
                    t = t * LPoly.var(name, e)
            out = out + t
        return out

    def __pow__(self, n: int):
        if n < 0:
            return _inverse_power(self, -n)
        r = LPoly.const(1)
        for _ in range(n):
            r = r * self
        return r

    def coefficient(self, name: str, exponent: int = 1) -> "LPoly":
        """Collect the terms carrying ``name**exponent`` with that factor removed."""
        out = {}
        for m, c in self.terms.items():
            d = dict(m)
            if d.get(name, 0) == exponent:
                d.pop(name, None)
                out[tuple(sorted(d.items()))] = c
        return LPoly(out)

    def to_sympy(self, symbols: Mapping[str, sympy.Symbol] | None = None):
        expr = sympy.Integer(0)
        for m, c in self.terms.items():
            t = sympy.Rational(c.numerator, c.denominator)
            for name, e in m:
                s = symbols[name] if symbols and name in symbols else sympy.Symbol(name)
                t = t * s**e
            expr += t
        return expr

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items(), key=lambda it: (it[0], it[1])):
            mono = "*".join(f"{n}^{e}" if e != 1 else n for n, e in m)
            parts.append(f"{c}" if not mono else (mono if c == 1 else f"{c}*{mono}"))
        return " + ".join(parts)


def _inverse_power(v: LPoly, n: int) -> LPoly:
    if len(v.terms) != 1:
        raise ZeroDivisionError("only monomials are invertible")
    (m, c), = v.terms.items()
    inv = tuple((name, -e * n) for name, e in m)
    return LPoly({inv: Fraction(1) / c**n})


def lsum(items: Iterable[LPoly]) -> LPoly:
    out = LPoly()
    for x in items:
        out = out + x
    return out


KAPPA = LPoly.var("kappa")
