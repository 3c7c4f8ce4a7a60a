"""Exact data for the simple Lie algebras of type A_n.

Everything is realized in the defining representation gl(n+1): the root
vector of alpha_i + ... + alpha_j is the matrix unit E_{i,j+1} and its
negative is the transpose.  The trace form then gives (e_a|e_-a) = 1 and
(alpha|alpha) = 2 without rescaling, and all structure constants are +-1.

Weights are tuples of ``Fraction`` in the simple-root basis.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import sympy

Root = tuple[int, ...]
Weight = tuple[Fraction, ...]


class LieError(ValueError):
    pass


@dataclass(frozen=True)
class LieAlgebraData:
    label: str
    rank: int
    cartan_matrix: tuple[tuple[int, ...], ...]
    positive_roots: tuple[Root, ...]
    dual_coxeter: int
    weyl_vector: Weight
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._index.update({r: k for k, r in enumerate(self.positive_roots)})

    @property
    def dim(self) -> int:
        return 2 * len(self.positive_roots) + self.rank

    @property
    def n_pos(self) -> int:
        return len(self.positive_roots)

    @property
    def roots(self) -> tuple[Root, ...]:
        """All roots: positive ones first, then their negatives in the same order."""
        return self.positive_roots + tuple(neg(r) for r in self.positive_roots)

    def simple_root(self, i: int) -> Root:
        return tuple(int(k == i) for k in range(self.rank))

    def root_index(self, root: Sequence[int]) -> int:
        try:
            return self._index[tuple(root)]
        except KeyError:
            raise LieError(f"{tuple(root)} is not a positive root of {self.label}") from None

    def is_root(self, v: Sequence) -> bool:
        v = tuple(v)
        return v in self._index or neg(v) in self._index

    def height(self, root: Sequence[int]) -> int:
        return sum(root)

    def inner(self, mu: Sequence, nu: Sequence) -> Fraction:
        A = self.cartan_matrix
        return sum(
            (Fraction(mu[i]) * A[i][j] * Fraction(nu[j])
             for i in range(self.rank) for j in range(self.rank) if mu[i] and nu[j]),
            Fraction(0),
        )

    def dynkin_labels(self, mu: Sequence) -> Weight:
        """lambda(H_i) for each simple coroot."""
        A = self.cartan_matrix
        return tuple(sum((A[i][j] * Fraction(mu[j]) for j in range(self.rank)), Fraction(0))
                     for i in range(self.rank))

    def from_dynkin_labels(self, labels: Sequence) -> Weight:
        Ainv = sympy.Matrix(self.cartan_matrix).inv()
        v = Ainv * sympy.Matrix([sympy.Rational(str(Fraction(x))) for x in labels])
        return tuple(Fraction(int(c.p), int(c.q)) for c in v)

    def casimir_value(self, lam: Sequence) -> Fraction:
        two_rho = tuple(2 * r for r in self.weyl_vector)
        return self.inner(lam, tuple(Fraction(a) + b for a, b in zip(lam, two_rho)))

    # defining representation -------------------------------------------------

    def _span(self, root: Root) -> tuple[int, int]:
        nz = [k for k, c in enumerate(root) if c]
        return nz[0], nz[-1]

    def root_matrix(self, root: Sequence[int]) -> sympy.Matrix:
        root = tuple(root)
        n = self.rank + 1
        M = sympy.zeros(n, n)
        if root in self._index:
            i, j = self._span(root)
            M[i, j + 1] = 1
        elif neg(root) in self._index:
            i, j = self._span(neg(root))
            M[j + 1, i] = 1
        else:
            raise LieError(f"{root} is not a root of {self.label}")
        return M

    def coroot_matrix(self, i: int) -> sympy.Matrix:
        n = self.rank + 1
        M = sympy.zeros(n, n)
        M[i, i] = 1
        M[i + 1, i + 1] = -1
        return M

    def cartan_matrix_of(self, weight: Sequence) -> sympy.Matrix:
        """The element of h identified with a weight through the invariant form."""
        M = sympy.zeros(self.rank + 1, self.rank + 1)
        for i, c in enumerate(weight):
            if c:
                M += sympy.Rational(str(Fraction(c))) * self.coroot_matrix(i)
        return M

    def generator(self, tag: str) -> sympy.Matrix:
        """Matrix of a Chevalley generator tag such as ``"E1"``, ``"F2"``, ``"H1"``."""
        m = re.fullmatch(r"([EFH])(\d+)", tag)
        if not m or not 1 <= int(m.group(2)) <= self.rank:
            raise LieError(f"unknown generator {tag!r} for {self.label}")
        i = int(m.group(2)) - 1
        kind = m.group(1)
        if kind == "E":
            return self.root_matrix(self.simple_root(i))
        if kind == "F":
            return self.root_matrix(neg(self.simple_root(i)))
        return self.coroot_matrix(i)

    def generator_tags(self) -> list[str]:
        return [f"{k}{i + 1}" for k in "EFH" for i in range(self.rank)]

    def form(self, X: sympy.Matrix, Y: sympy.Matrix):
        return (X * Y).trace()

    def cartan_part(self, D: sympy.Matrix) -> list:
        """Coordinates c_i of the diagonal of D in the basis H_i."""
        out, acc = [], 0
        for i in range(self.rank):
            acc = acc + D[i, i]
            out.append(sympy.expand(acc))
        return out

    def structure_constant(self, a: Sequence[int], b: Sequence[int]) -> int:
        """f with [e_a, e_b] = f e_{a+b}; zero when a+b is not a root."""
        s = tuple(x + y for x, y in zip(a, b))
        if not self.is_root(s):
            return 0
        Xa, Xb = self.root_matrix(a), self.root_matrix(b)
        return int(self.form(Xa * Xb - Xb * Xa, self.root_matrix(neg(s))))

    def decompose(self, X: sympy.Matrix) -> dict:
        """Coefficients of X in the basis {e_a (a in roots)} and {H_i}."""
        out = {}
        for r in self.roots:
            c = self.form(X, self.root_matrix(neg(r)))
            if c != 0:
                out[r] = c
        for i, c in enumerate(self.cartan_part(X)):
            if c != 0:
                out[("H", i)] = c
        return out

    def alpha_of(self, root: Sequence[int], h_weight: Sequence) -> Fraction:
        """alpha(H) for H identified with a weight in simple-root coordinates."""
        return self.inner(root, h_weight)

    def describe(self) -> dict:
        return {
            "label": self.label,
            "rank": self.rank,
            "dim": self.dim,
            "dual_coxeter": self.dual_coxeter,
            "cartan_matrix": [list(r) for r in self.cartan_matrix],
            "positive_roots": [list(r) for r in self.positive_roots],
            "weyl_vector": [str(x) for x in self.weyl_vector],
            "structure_constants": [
                {"alpha": list(a), "beta": list(b), "f": self.structure_constant(a, b)}
                for a in self.positive_roots for b in self.positive_roots
                if self.structure_constant(a, b)
            ],
        }


def neg(r: Sequence) -> tuple:
    return tuple(-x for x in r)


def add(a: Sequence, b: Sequence) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


@lru_cache(maxsize=None)
def build_algebra(label: str) -> LieAlgebraData:
    m = re.fullmatch(r"A(\d+)", label.strip())
    if not m or int(m.group(1)) < 1:
        raise LieError(f"unsupported type label {label!r}; only A_n (n >= 1) is available")
    n = int(m.group(1))
    A = tuple(tuple(2 if i == j else (-1 if abs(i - j) == 1 else 0) for j in range(n))
              for i in range(n))
    roots = [tuple(int(i <= k <= j) for k in range(n)) for i in range(n) for j in range(i, n)]
    # height first, then the root starting at the smaller simple index
    roots.sort(key=lambda r: (sum(r), tuple(-c for c in r)))
    rho = tuple(sum((Fraction(r[k]) for r in roots), Fraction(0)) / 2 for k in range(n))
    return LieAlgebraData(label=f"A{n}", rank=n, cartan_matrix=A, positive_roots=tuple(roots),
                          dual_coxeter=n + 1, weyl_vector=rho)


def root_inner(alg: LieAlgebraData, mu: Sequence, nu: Sequence) -> Fraction:
    return alg.inner(mu, nu)


def orthonormal_basis(alg: LieAlgebraData) -> list[Weight | tuple]:
    """Float coordinates (simple-root basis) of an orthonormal basis of h.

    Gram-Schmidt on the simple coroots; used only by numerical code.
    """
    import numpy as np

    G = np.array(alg.cartan_matrix, dtype=float)
    L = np.linalg.cholesky(G)
    # rows of inv(L) give coefficient vectors u_r with (u_r|u_s) = delta
    return [tuple(row) for row in np.linalg.inv(L)]
