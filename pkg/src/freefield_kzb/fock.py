"""Ghost and boson Fock spaces, mode operators and graded traces.

A basis state is a monomial in creation operators acting on
|0>_gh (x) |mu>.  It is stored as ``(momentum, occupation)`` where the
occupation is a sorted tuple of ``((kind, label, mode), count)`` with kind
``"b"`` (beta_a[m], m < 0), ``"g"`` (gamma^a[m], m <= 0) or ``"p"``
(phi_i[m], m < 0).  Ghost labels are indices into the positive roots,
boson labels are simple-coroot indices (both 0-based).

Vectors are plain dicts ``state -> coefficient``.  Coefficients are any
ring elements supporting + and * (``LPoly`` for exact work with symbolic
kappa, ``complex`` for numerics).  Annihilators act as derivations on the
creation monomials, so every action is exact: nothing is ever truncated
while applying operators.  Truncation only enters when a finite basis is
chosen for matrices and traces.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from ._laurent import KAPPA, LPoly
from .lie import LieAlgebraData

BETA, GAMMA, PHI, BOOST = "beta", "gamma", "phi", "boost"
_CODE = {BETA: "b", GAMMA: "g", PHI: "p"}
_BASE_WEIGHT = {BETA: 1, GAMMA: 0, PHI: 1}


class FockError(ValueError):
    pass


class _Rat(Fraction):
    """Fraction with a cached hash; momenta sit inside every state key."""

    __slots__ = ("_h",)

    def __hash__(self):
        try:
            return self._h
        except AttributeError:
            self._h = Fraction.__hash__(self)
            return self._h


def momentum_key(mu: Sequence) -> tuple:
    return tuple(x if type(x) is _Rat else _Rat(x) for x in mu)


@dataclass(frozen=True)
class ModeSymbol:
    kind: str
    label: int
    mode: int = 0

    def __post_init__(self):
        if self.kind not in (BETA, GAMMA, PHI, BOOST):
            raise FockError(f"unknown mode kind {self.kind!r}")

    @property
    def annihilates_vacuum(self) -> bool:
        """Placed to the right by normal ordering (phi_i[0] included)."""
        if self.kind == BETA:
            return self.mode >= 0
        if self.kind == GAMMA:
            return self.mode > 0
        if self.kind == PHI:
            return self.mode >= 0
        return False

    def __str__(self):
        name = {BETA: "beta", GAMMA: "gamma", PHI: "phi", BOOST: "e^p"}[self.kind]
        return f"{name}{self.label + 1}" if self.kind == BOOST else f"{name}{self.label + 1}[{self.mode}]"


class FreeFields:
    """Commutation data of the ghost and boson algebras for one Lie algebra.

    ``kappa`` is the boson normalization (symbolic by default).
    """

    def __init__(self, alg: LieAlgebraData, kappa=KAPPA):
        self.alg = alg
        self.kappa = kappa
        self.A = alg.cartan_matrix
        self._label_cache: dict = {}

    def _labels(self, mom):
        v = self._label_cache.get(mom)
        if v is None:
            v = self._label_cache[mom] = self.alg.dynkin_labels(mom)
        return v

    # single modes ------------------------------------------------------------

    def commutator(self, a: ModeSymbol, b: ModeSymbol):
        """Scalar [a, b] for two non-boost modes."""
        if a.kind == BETA and b.kind == GAMMA:
            return 1 if a.label == b.label and a.mode + b.mode == 0 else 0
        if a.kind == GAMMA and b.kind == BETA:
            return -1 if a.label == b.label and a.mode + b.mode == 0 else 0
        if a.kind == PHI and b.kind == PHI:
            if a.mode + b.mode != 0 or a.mode == 0:
                return 0
            return self.kappa * (self.A[a.label][b.label] * a.mode)
        return 0

    def apply_mode(self, s: ModeSymbol, vec: dict) -> dict:
        out: dict = {}
        for state, c in vec.items():
            for st2, c2 in self._apply_on_state(s, state):
                _acc(out, st2, c * c2)
        return out

    def _apply_on_state(self, s: ModeSymbol, state):
        mom, occ = state
        if s.kind == BOOST:
            e = self.alg.simple_root(s.label)
            return [((momentum_key(Fraction(x) + y for x, y in zip(mom, e)), occ), 1)]
        if not s.annihilates_vacuum:
            return [((mom, _create(occ, (_CODE[s.kind], s.label, s.mode))), 1)]
        return self._annihilate(state, s.kind, s.label, s.mode)

    def _annihilate(self, state, kind, label, n):
        mom, occ = state
        if kind == BETA:
            key = ("g", label, -n)
            cnt = _count(occ, key)
            return [((mom, _remove(occ, key)), cnt)] if cnt else []
        if kind == GAMMA:
            key = ("b", label, -n)
            cnt = _count(occ, key)
            return [((mom, _remove(occ, key)), -cnt)] if cnt else []
        # boson
        if n == 0:
            val = self._labels(mom)[label]
            return [(state, val)] if val else []
        res = []
        for (k, j, m), cnt in occ:
            if k == "p" and m == -n and self.A[label][j]:
                res.append(((mom, _remove(occ, (k, j, m))), self.kappa * (self.A[label][j] * n * cnt)))
        return res

    # normal ordering -----------------------------------------------------------

    def normal_order(self, monomial: Sequence[ModeSymbol]) -> list[tuple[object, tuple[ModeSymbol, ...]]]:
        """Rewrite a product as sum_k coeff_k * (normal ordered monomial_k).

        The input equals the returned sum; the first entry is the reordered
        monomial itself with coefficient 1, the rest are commutator terms.
        """
        out: list = []
        self._order(1, tuple(monomial), out)
        merged: dict = {}
        for c, mono in out:
            merged[mono] = merged.get(mono, 0) + c
        return [(c, m) for m, c in merged.items() if not _is_zero(c)]

    def _order(self, coeff, mono, out):
        for k in range(len(mono) - 1):
            a, b = mono[k], mono[k + 1]
            if a.annihilates_vacuum and not b.annihilates_vacuum:
                swapped = mono[:k] + (b, a) + mono[k + 2:]
                self._order(coeff, swapped, out)
                if b.kind == BOOST:
                    if a.kind == PHI and a.mode == 0 and self.A[a.label][b.label]:
                        self._order(coeff * self.A[a.label][b.label], mono[:k] + (b,) + mono[k + 2:], out)
                else:
                    c = self.commutator(a, b)
                    if not _is_zero(c):
                        self._order(coeff * c, mono[:k] + mono[k + 2:], out)
                return
        out.append((coeff, mono))

    # composite fields ------------------------------------------------------------

    def field_mode(self, factors: Sequence[tuple[str, int, int]], m: int, vec: dict) -> dict:
        """Mode m of the normally ordered product of fields.

        ``factors`` are ``(kind, label, d)`` meaning the d-th derivative of
        gamma^a(z) (kind gamma), beta_a(z) or d/dz phi_i(z) (kind phi).  The
        product has conformal weight sum(h0 + d) and mode m means the
        coefficient of z^{-m-h}.
        """
        out: dict = {}
        for state, c in vec.items():
            for st2, c2 in self.field_mode_on_state(tuple(factors), m, state).items():
                _acc(out, st2, c * c2)
        return out

    def field_mode_on_state(self, factors: tuple, m: int, state) -> dict:
        out: dict = {}
        k = len(factors)
        for mask in range(1 << k):
            ann = [factors[i] for i in range(k) if mask >> i & 1]
            cre = [factors[i] for i in range(k) if not mask >> i & 1]
            maxes = [0 if f[0] == GAMMA else -1 for f in cre]
            top = sum(maxes)
            for st, coeff, msum in self._annihilators(ann, state):
                r = m - msum
                if r > top:
                    continue
                for modes in _compositions(r, maxes):
                    c = coeff
                    mom, occ = st
                    for f, n in zip(cre, modes):
                        dc = _deriv_coeff(f, n)
                        if dc == 0:
                            c = 0
                            break
                        c = c * dc
                        occ = _create(occ, (_CODE[f[0]], f[1], n))
                    if _is_zero(c):
                        continue
                    _acc(out, (mom, occ), c)
        return out

    def _annihilators(self, ann, state):
        items = [(state, 1, 0)]
        for f in ann:
            kind, label, _ = f
            nxt = []
            for st, c, ms in items:
                for n in self._annihilator_modes(kind, label, st):
                    dc = _deriv_coeff(f, n)
                    if dc == 0:
                        continue
                    for st2, c2 in self._annihilate(st, kind, label, n):
                        nxt.append((st2, c * dc * c2, ms + n))
            items = nxt
            if not items:
                break
        return items

    def _annihilator_modes(self, kind, label, state):
        mom, occ = state
        if kind == BETA:
            return sorted({-m for (k, a, m), _ in occ if k == "g" and a == label})
        if kind == GAMMA:
            return sorted({-m for (k, a, m), _ in occ if k == "b" and a == label})
        modes = {-m for (k, j, m), _ in occ if k == "p" and self.A[label][j]}
        modes.add(0)
        return sorted(modes)


def _deriv_coeff(f, n) -> int:
    kind, _, d = f
    h0 = _BASE_WEIGHT[kind]
    c = 1
    for k in range(d):
        c *= (-n - h0 - k)
    return c


def _compositions(r: int, maxes: Sequence[int]):
    if not maxes:
        if r == 0:
            yield ()
        return
    rest_top = sum(maxes[1:])
    lo = r - rest_top
    for n in range(maxes[0], lo - 1, -1):
        for tail in _compositions(r - n, maxes[1:]):
            yield (n,) + tail


def _count(occ, key) -> int:
    for k, c in occ:
        if k == key:
            return c
    return 0


def _create(occ, key):
    d = dict(occ)
    d[key] = d.get(key, 0) + 1
    return tuple(sorted(d.items()))


def _remove(occ, key):
    d = dict(occ)
    if d[key] == 1:
        del d[key]
    else:
        d[key] -= 1
    return tuple(sorted(d.items()))


def _is_zero(c) -> bool:
    return (not c) if isinstance(c, LPoly) else c == 0


def _acc(out: dict, key, c):
    v = out.get(key)
    v = c if v is None else v + c
    if _is_zero(v):
        out.pop(key, None)
    else:
        out[key] = v


def vector_sub(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, c in b.items():
        _acc(out, k, -c)
    return out


def vector_add(a: dict, b: dict, scale=1) -> dict:
    out = dict(a)
    for k, c in b.items():
        _acc(out, k, c * scale if scale != 1 else c)
    return out


def vector_scale(a: dict, s) -> dict:
    out = {}
    for k, c in a.items():
        _acc(out, k, c * s)
    return out


def vacuum(momentum: Sequence, coeff=1) -> dict:
    return {(momentum_key(Fraction(x) for x in momentum), ()): coeff}


# grading -----------------------------------------------------------------------

def energy(state) -> int:
    return sum(-m * c for (_, _, m), c in state[1])


def ghost_weight(alg: LieAlgebraData, state) -> tuple:
    """H^gh[0]-weight in simple-root coordinates: +a per beta_a, -a per gamma^a."""
    w = [0] * alg.rank
    for (k, a, _), c in state[1]:
        if k in ("b", "g"):
            sign = 1 if k == "b" else -1
            for i, x in enumerate(alg.positive_roots[a]):
                w[i] += sign * c * x
    return tuple(w)


def zero_mode_degree(state) -> int:
    return sum(c for (k, _, m), c in state[1] if k == "g" and m == 0)


# truncated spaces ------------------------------------------------------------------

@dataclass
class TruncatedFockSpace:
    """Ghost (x) boson states with energy <= cutoff.

    Ghost zero modes gamma^a[0] carry no energy, so their total degree is cut
    separately by ``zero_mode_cutoff``.  ``sectors`` selects ``"ghost"``,
    ``"boson"`` or both; ``weight`` optionally restricts to one ghost-weight
    sector (simple-root coordinates).
    """

    alg: LieAlgebraData
    momentum: tuple
    cutoff: int
    zero_mode_cutoff: int = 2
    sectors: str = "ghost+boson"
    weight: tuple | None = None
    basis: list = field(init=False)
    index: dict = field(init=False)

    def __post_init__(self):
        self.momentum = momentum_key(Fraction(x) for x in self.momentum)
        slots = []
        L = self.cutoff
        s = self.alg.n_pos
        if "ghost" in self.sectors:
            for m in range(1, L + 1):
                for a in range(s):
                    slots.append((("b", a, -m), m))
                    slots.append((("g", a, -m), m))
        if "boson" in self.sectors:
            for m in range(1, L + 1):
                for i in range(self.alg.rank):
                    slots.append((("p", i, -m), m))
        zero = [("g", a, 0) for a in range(s)] if "ghost" in self.sectors else []
        occs = []
        _enumerate_occ(slots, 0, L, {}, occs)
        zocc = []
        _enumerate_zero(zero, 0, self.zero_mode_cutoff, {}, zocc)
        basis = []
        for o in occs:
            for z in zocc:
                d = dict(o)
                d.update(z)
                st = (self.momentum, tuple(sorted(d.items())))
                if self.weight is None or ghost_weight(self.alg, st) == tuple(self.weight):
                    basis.append(st)
        basis.sort(key=lambda st: (energy(st), zero_mode_degree(st), st[1]))
        self.basis = basis
        self.index = {st: k for k, st in enumerate(basis)}

    def __len__(self):
        return len(self.basis)

    def contains(self, state) -> bool:
        return state in self.index

    def loss_free(self, state, energy_shift: int, degree_shift: int = 0) -> bool:
        """True when a state plus the given shifts stays inside the cutoffs."""
        return (energy(state) + energy_shift <= self.cutoff
                and zero_mode_degree(state) + degree_shift <= self.zero_mode_cutoff)

    def w0_basis(self) -> list:
        """States built from ghost zero modes only (the W^0 submodule)."""
        return [st for st in self.basis if energy(st) == 0]


def _enumerate_occ(slots, k, budget, cur, out):
    if k == len(slots):
        out.append(tuple(sorted(cur.items())))
        return
    key, e = slots[k]
    n = 0
    while n * e <= budget:
        if n:
            cur[key] = n
        _enumerate_occ(slots, k + 1, budget - n * e, cur, out)
        n += 1
    cur.pop(key, None)


def _enumerate_zero(keys, k, budget, cur, out):
    if k == len(keys):
        out.append(dict(cur))
        return
    for n in range(budget + 1):
        if n:
            cur[keys[k]] = n
        _enumerate_zero(keys, k + 1, budget - n, cur, out)
    cur.pop(keys[k], None)


@dataclass
class OperatorMatrix:
    """Sparse matrix of an operator on a truncated basis.

    ``lossy`` records whether some basis vector was mapped (partly) outside
    the basis; those components are dropped from ``entries``.
    """

    space: TruncatedFockSpace
    entries: dict
    energy_shift: int
    weight_shift: tuple
    lossy: bool = False

    def diagonal(self) -> dict:
        return {i: c for (i, j), c in self.entries.items() if i == j}

    def to_dense(self, evaluate: Callable | None = None) -> np.ndarray:
        n = len(self.space)
        M = np.zeros((n, n), dtype=complex)
        for (i, j), c in self.entries.items():
            M[i, j] = evaluate(c) if evaluate else complex(c)
        return M


def operator_matrix(space: TruncatedFockSpace, action: Callable[[dict], dict],
                    energy_shift: int, weight_shift: Sequence[int] = None) -> OperatorMatrix:
    """Matrix of an exact linear action restricted to the basis."""
    weight_shift = tuple(weight_shift) if weight_shift is not None else (0,) * space.alg.rank
    entries, lossy = {}, False
    for j, st in enumerate(space.basis):
        for st2, c in action({st: 1}).items():
            i = space.index.get(st2)
            if i is None:
                lossy = True
                continue
            entries[(i, j)] = c
    return OperatorMatrix(space, entries, energy_shift, weight_shift, lossy)


def identity_matrix(space: TruncatedFockSpace) -> OperatorMatrix:
    return OperatorMatrix(space, {(i, i): 1 for i in range(len(space))}, 0, (0,) * space.alg.rank)


def weighted_trace(A: OperatorMatrix, q: complex, h_weight: Sequence[complex],
                   kappa: complex | None = None) -> complex:
    """Tr(A q^{T[0]} e^{H[0]}) over the truncated basis.

    ``h_weight`` is H in simple-root coordinates (H identified with a weight).
    The boson sector contributes q^{Delta_mu} e^{mu(H)} with
    Delta_mu = (mu|mu+2 rho)/2 kappa, so ``kappa`` must be numeric then.
    """
    if abs(q) >= 1:
        raise FockError("|q| must be < 1")
    if any(A.weight_shift) or A.energy_shift:
        return 0j
    sp = A.space
    alg = sp.alg
    const_e = 0.0
    boson_w = 0j
    if "boson" in sp.sectors:
        if kappa is None:
            raise FockError("numeric kappa needed for the boson zero-mode constant")
        mu = sp.momentum
        two_rho = tuple(2 * r for r in alg.weyl_vector)
        const_e = float(alg.inner(mu, tuple(a + b for a, b in zip(mu, two_rho)))) / (2 * kappa)
        boson_w = _pair(alg, mu, h_weight)
    total = 0j
    for i, c in sorted(A.diagonal().items()):
        st = sp.basis[i]
        val = c.evaluate({"kappa": kappa}) if isinstance(c, LPoly) else c
        wt = _pair(alg, ghost_weight(alg, st), h_weight)
        total += complex(val) * q ** energy(st) * cmath.exp(wt)
    return total * q ** const_e * cmath.exp(boson_w)


def _pair(alg: LieAlgebraData, mu: Sequence, h_weight: Sequence[complex]) -> complex:
    """(mu|H) for mu exact and H given numerically in simple-root coordinates."""
    A = alg.cartan_matrix
    return sum(float(mu[i]) * A[i][j] * complex(h_weight[j])
               for i in range(alg.rank) for j in range(alg.rank) if mu[i])


# graded counting for characters ------------------------------------------------------

def ghost_energy_truncated_trace(alg: LieAlgebraData, q: complex, h_weight: Sequence[complex],
                                 cutoff: int, zero_mode_cutoff: int) -> complex:
    """Trace of the identity over ghost states with energy <= cutoff.

    Equivalent to enumerating every basis state of the energy-truncated
    ghost space; states are grouped by (energy, weight) through exact
    counting so that cutoff 20 stays tractable.  Zero modes contribute an
    exact tensor factor with degree per root <= zero_mode_cutoff.
    """
    xs = [cmath.exp(-_pair(alg, r, h_weight)) for r in alg.positive_roots]
    # polynomial in q (list index = energy) for the nonzero modes
    poly = np.zeros(cutoff + 1, dtype=complex)
    poly[0] = 1
    for x in xs:
        for m in range(1, cutoff + 1):
            for y in (x, 1 / x):  # gamma^a[-m] has weight -a, beta_a[-m] has +a
                # multiply by 1/(1 - y q^m) truncated at the cutoff
                for e in range(m, cutoff + 1):
                    poly[e] += y * poly[e - m]
    nonzero = sum(poly[e] * q ** e for e in range(cutoff + 1))
    zero = 1
    for x in xs:
        zero *= sum(x ** k for k in range(zero_mode_cutoff + 1))
    return complex(nonzero * zero)


def ghost_mode_truncated_trace(alg: LieAlgebraData, q: complex, h_weight: Sequence[complex],
                               mode_cutoff: int, occupation_cutoff: int) -> complex:
    """Trace of the identity over the tensor product of single-mode spaces.

    Modes |m| <= mode_cutoff, each with occupation <= occupation_cutoff.  The
    trace over a tensor product is the product of the per-mode traces, each
    an explicit finite sum over that factor's basis.
    """
    total = 1 + 0j
    for r in alg.positive_roots:
        x = cmath.exp(-_pair(alg, r, h_weight))
        for m in range(0, mode_cutoff + 1):
            factors = [x * q ** m] if m == 0 else [x * q ** m, q ** m / x]
            for y in factors:
                total *= sum(y ** k for k in range(occupation_cutoff + 1))
    return total
