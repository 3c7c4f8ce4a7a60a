"""First-order differential operators on the big cell N_+ of the flag variety.

The chart is n(x) = exp(x_1 e_{b_1}) ... exp(x_s e_{b_s}) with the positive
roots b_k in the order fixed by :mod:`lie`.  For X in g the operator R_lam(X)
comes from the right action: writing n(x) exp(sX) = b(s) n(y(s)) with b lower
triangular, the y-velocity gives the vector field and lam(Cartan part of
b'(0)) the multiplication term.  Concretely, with Y = n X n^{-1} split as
Y_- + Y_+ (lower incl. diagonal, strictly upper),

    sum_k ydot_k (d_k n) n^{-1} = Y_+ ,   scalar = lam(diag Y_-).

The screening operators use the left action of n_+:
Scr(X) = -L_X with (L_X f)(n) = d/ds f(exp(sX) n).  This sign makes
Scr a homomorphism of n_+ and makes iterated screenings reproduce the
pairing ``jmath`` with positive sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import sympy

from .lie import LieAlgebraData, LieError, add, build_algebra

Polynomial = sympy.Expr


def coordinates(alg: LieAlgebraData) -> tuple[sympy.Symbol, ...]:
    return tuple(sympy.Symbol(f"x{k + 1}") for k in range(alg.n_pos))


def lambda_symbols(alg: LieAlgebraData) -> tuple[sympy.Symbol, ...]:
    """Formal symbols standing for lam(H_i)."""
    return tuple(sympy.Symbol(f"lam{i + 1}") for i in range(alg.rank))


@dataclass(frozen=True)
class DiffOp:
    """sum_k vector[k] * d/dx_k + scalar."""

    xs: tuple[sympy.Symbol, ...]
    vector: tuple[sympy.Expr, ...]
    scalar: sympy.Expr = sympy.Integer(0)

    def __post_init__(self):
        object.__setattr__(self, "vector", tuple(sympy.expand(v) for v in self.vector))
        object.__setattr__(self, "scalar", sympy.expand(self.scalar))

    def apply(self, P) -> sympy.Expr:
        P = sympy.sympify(P)
        out = self.scalar * P
        for v, x in zip(self.vector, self.xs):
            if v != 0:
                out += v * sympy.diff(P, x)
        return sympy.expand(out)

    def derivation(self, P) -> sympy.Expr:
        """The vector-field part alone applied to P."""
        P = sympy.sympify(P)
        return sympy.expand(sum((v * sympy.diff(P, x) for v, x in zip(self.vector, self.xs)),
                                sympy.Integer(0)))

    def commutator(self, other: "DiffOp") -> "DiffOp":
        vec = tuple(self.derivation(b) - other.derivation(a)
                    for a, b in zip(self.vector, other.vector))
        sc = self.derivation(other.scalar) - other.derivation(self.scalar)
        return DiffOp(self.xs, vec, sc)

    def __add__(self, other: "DiffOp") -> "DiffOp":
        return DiffOp(self.xs, tuple(a + b for a, b in zip(self.vector, other.vector)),
                      self.scalar + other.scalar)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + other.scale(-1)

    def scale(self, c) -> "DiffOp":
        return DiffOp(self.xs, tuple(c * v for v in self.vector), c * self.scalar)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.vector) and self.scalar == 0

    def free_lambda(self) -> set:
        syms = set(self.scalar.free_symbols)
        for v in self.vector:
            syms |= v.free_symbols
        return {s for s in syms if s.name.startswith("lam")}

    def __str__(self):
        parts = []
        for v, x in zip(self.vector, self.xs):
            if v != 0:
                parts.append(f"({v})*d/d{x}")
        if self.scalar != 0:
            parts.append(f"({self.scalar})")
        return " + ".join(parts) if parts else "0"


class _Chart:
    def __init__(self, alg: LieAlgebraData):
        self.alg = alg
        self.xs = coordinates(alg)
        n = alg.rank + 1
        N = sympy.eye(n)
        for x, r in zip(self.xs, alg.positive_roots):
            E = alg.root_matrix(r)
            N = N * (sympy.eye(n) + x * E)  # E nilpotent of order 2
        self.n = N.applyfunc(sympy.expand)
        self.ninv = self.n.inv().applyfunc(sympy.expand)
        self.mc = [(self.n.diff(x) * self.ninv).applyfunc(sympy.expand) for x in self.xs]
        self.upper = [(i, j) for i in range(n) for j in range(i + 1, n)]
        A = sympy.Matrix([[m[i, j] for m in self.mc] for (i, j) in self.upper])
        self.mc_inv = A.inv().applyfunc(sympy.expand)

    def solve_vector(self, Yplus: sympy.Matrix) -> tuple:
        rhs = sympy.Matrix([Yplus[i, j] for (i, j) in self.upper])
        return tuple(sympy.expand(e) for e in self.mc_inv * rhs)


@lru_cache(maxsize=None)
def _chart(label: str) -> _Chart:
    return _Chart(build_algebra(label))


def realize_matrix(alg: LieAlgebraData, X: sympy.Matrix, lam: Sequence | None = None) -> DiffOp:
    """R_lam(X) for an arbitrary traceless matrix X.

    ``lam`` gives lam(H_i); by default the formal symbols lam1..laml.
    """
    ch = _chart(alg.label)
    lam = lambda_symbols(alg) if lam is None else tuple(sympy.sympify(v) for v in lam)
    Y = (ch.n * X * ch.ninv).applyfunc(sympy.expand)
    size = alg.rank + 1
    Yplus = sympy.zeros(size, size)
    for (i, j) in ch.upper:
        Yplus[i, j] = Y[i, j]
    diag = sympy.diag(*[Y[i, i] for i in range(size)])
    coeffs = alg.cartan_part(diag)
    scalar = sum((c * l for c, l in zip(coeffs, lam)), sympy.Integer(0))
    return DiffOp(ch.xs, ch.solve_vector(Yplus), scalar)


def realize(alg: LieAlgebraData, tag: str, lam: Sequence | None = None) -> DiffOp:
    return realize_matrix(alg, alg.generator(tag), lam)


def realize_cartan(alg: LieAlgebraData, h_weight: Sequence, lam: Sequence | None = None) -> DiffOp:
    return realize_matrix(alg, alg.cartan_matrix_of(h_weight), lam)


@lru_cache(maxsize=None)
def _screen(label: str, root: tuple) -> DiffOp:
    alg = build_algebra(label)
    ch = _chart(label)
    X = alg.root_matrix(root)
    vec = ch.solve_vector(X)
    return DiffOp(ch.xs, tuple(-v for v in vec), sympy.Integer(0))


def screen_left(alg: LieAlgebraData, root: Sequence[int]) -> DiffOp:
    root = tuple(root)
    alg.root_index(root)  # raises for non-positive roots
    return _screen(alg.label, root)


@lru_cache(maxsize=None)
def _raising(label: str, i: int) -> DiffOp:
    alg = build_algebra(label)
    return realize_matrix(alg, alg.root_matrix(alg.simple_root(i)), [0] * alg.rank)


def jmath(alg: LieAlgebraData, P, word: Sequence[int]) -> Fraction:
    """R(E_{i(n)}) ... R(E_{i(1)}) P evaluated at x = 0.

    ``word`` holds 1-based simple-root indices, applied left to right.  The
    raising operators carry no multiplication term, so no weight enters.
    """
    xs = coordinates(alg)
    P = sympy.expand(sympy.sympify(P))
    for i in word:
        if not 1 <= i <= alg.rank:
            raise LieError(f"simple-root index {i} out of range")
        P = _raising(alg.label, i - 1).apply(P)
        if P == 0:
            return Fraction(0)
    val = P.subs({x: 0 for x in xs})
    val = sympy.Rational(val)
    return Fraction(int(val.p), int(val.q))


def constant_term(alg: LieAlgebraData, P) -> Fraction:
    xs = coordinates(alg)
    val = sympy.Rational(sympy.expand(sympy.sympify(P)).subs({x: 0 for x in xs}))
    return Fraction(int(val.p), int(val.q))


def polynomial_terms(alg: LieAlgebraData, P) -> dict[tuple[int, ...], Fraction]:
    """Exponent vector -> rational coefficient."""
    xs = coordinates(alg)
    P = sympy.expand(sympy.sympify(P))
    if P == 0:
        return {}
    out = {}
    for mono, c in sympy.Poly(P, *xs).terms():
        c = sympy.Rational(c)
        out[tuple(int(e) for e in mono)] = Fraction(int(c.p), int(c.q))
    return out


@dataclass
class RealizationReport:
    label: str
    checked: list
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_realization(alg: LieAlgebraData, lam: Sequence | None = None,
                       check_screening: bool = True) -> RealizationReport:
    """[R(X),R(Y)] = R([X,Y]) on generator pairs, plus the screening relations.

    The screening checks are [R(E_i), Scr_a] = 0, [R(H_i), Scr_a] = a(H_i) Scr_a
    and [Scr_a, Scr_b] = f Scr_{a+b}.
    """
    tags = alg.generator_tags()
    ops = {t: realize(alg, t, lam) for t in tags}
    checked, failures = [], []
    for a in range(len(tags)):
        for b in range(a + 1, len(tags)):
            X, Y = alg.generator(tags[a]), alg.generator(tags[b])
            lhs = ops[tags[a]].commutator(ops[tags[b]])
            rhs = realize_matrix(alg, X * Y - Y * X, lam)
            name = f"[{tags[a]},{tags[b]}]"
            checked.append(name)
            if not (lhs - rhs).is_zero():
                failures.append(name)
    if check_screening:
        # left and right n_+ actions commute; H rescales Scr_a by a(H)
        for t in tags:
            if t[0] == "F":
                continue
            i = int(t[1:]) - 1
            for r in alg.positive_roots:
                name = f"[{t},Scr{list(r)}]"
                checked.append(name)
                scr = screen_left(alg, r)
                expected = scr.scale(alg.dynkin_labels(r)[i]) if t[0] == "H" else scr.scale(0)
                if not (ops[t].commutator(scr) - expected).is_zero():
                    failures.append(name)
        for a in alg.positive_roots:
            for b in alg.positive_roots:
                s = add(a, b)
                lhs = screen_left(alg, a).commutator(screen_left(alg, b))
                f = alg.structure_constant(a, b)
                rhs = screen_left(alg, s).scale(f) if f else lhs.scale(0)
                name = f"[Scr{list(a)},Scr{list(b)}]"
                checked.append(name)
                if not (lhs - rhs).is_zero():
                    failures.append(name)
    return RealizationReport(alg.label, checked, failures)
