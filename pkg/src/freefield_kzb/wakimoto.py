"""Bosonized currents of the Wakimoto realization and their verification.

Currents are obtained by substituting x^a -> gamma^a(z), d/dx^a -> beta_a(z)
and lam(H_j) -> d phi_j(z) in R_lam(X), normally ordered, plus the
correction c_i d gamma^{a_i}(z) in F_i(z).  Currents of non-simple root
vectors are defined through brackets of the simple ones at mode zero.

All checks act with exact operators on basis states of a truncated space;
the actions themselves never truncate, so every checked block is loss-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import sympy

from ._laurent import KAPPA, LPoly
from .flagdiff import lambda_symbols, polynomial_terms, realize
from .fock import (BETA, GAMMA, PHI, FreeFields, TruncatedFockSpace, OperatorMatrix, _acc,
                   energy, operator_matrix, vector_add, vector_scale, vector_sub)
from .lie import LieAlgebraData, add, neg


class WakimotoError(RuntimeError):
    pass


def _inv(x):
    return LPoly.coerce(x) ** -1 if isinstance(x, LPoly) else Fraction(1) / Fraction(x)


def symbolic_constants(alg: LieAlgebraData) -> list[LPoly]:
    return [LPoly.var(f"c{i + 1}") for i in range(alg.rank)]


def _bosonize(alg: LieAlgebraData, tag: str) -> list[tuple[Fraction, tuple]]:
    """Field monomials of :R(X; gamma, beta, d phi): for a generator tag."""
    lam = lambda_symbols(alg)
    op = realize(alg, tag)
    terms = []
    for k, v in enumerate(op.vector):
        for expo, c in polynomial_terms(alg, v).items():
            factors = tuple((GAMMA, a, 0) for a, e in enumerate(expo) for _ in range(e))
            terms.append((c, factors + ((BETA, k, 0),)))
    scalar = sympy.expand(op.scalar)
    for j, s in enumerate(lam):
        pj = sympy.expand(scalar.coeff(s))
        for expo, c in polynomial_terms(alg, pj).items():
            factors = tuple((GAMMA, a, 0) for a, e in enumerate(expo) for _ in range(e))
            terms.append((c, factors + ((PHI, j, 0),)))
    return terms


class WakimotoModule:
    """Currents and energy-momentum tensors acting on ghost (x) boson states.

    ``kappa`` may be the symbolic ``KAPPA`` or an exact number; ``constants``
    are the c_i (symbolic ``c1..cl`` when omitted).
    """

    def __init__(self, alg: LieAlgebraData, kappa=KAPPA, constants: Sequence | None = None):
        self.alg = alg
        self.kappa = kappa
        self.level = kappa - alg.dual_coxeter
        self.constants = list(constants) if constants is not None else symbolic_constants(alg)
        self.ff = FreeFields(alg, kappa)
        self.fields: dict = {}
        for i in range(alg.rank):
            self.fields[("e", alg.simple_root(i))] = _bosonize(alg, f"E{i + 1}")
            f_terms = _bosonize(alg, f"F{i + 1}")
            f_terms.append((self.constants[i], ((GAMMA, alg.root_index(alg.simple_root(i)), 1),)))
            self.fields[("e", neg(alg.simple_root(i)))] = f_terms
            self.fields[("h", i)] = _bosonize(alg, f"H{i + 1}")
        half_inv = _inv(self.kappa) * Fraction(1, 2)
        self.fields["Tgh"] = [(1, ((GAMMA, a, 1), (BETA, a, 0))) for a in range(alg.n_pos)]
        Ainv = sympy.Matrix(alg.cartan_matrix).inv()
        tphi = []
        for i in range(alg.rank):
            for j in range(alg.rank):
                c = Fraction(int(Ainv[i, j].p), int(Ainv[i, j].q))
                if c:
                    tphi.append((half_inv * c, ((PHI, i, 0), (PHI, j, 0))))
        two_rho = [2 * r for r in alg.weyl_vector]
        for j, c in enumerate(two_rho):
            if c:
                tphi.append((-half_inv * c, ((PHI, j, 1),)))
        self.fields["Tphi"] = tphi
        self._cache: dict = {}

    # labels -------------------------------------------------------------------

    def basis_labels(self) -> list:
        return [("e", r) for r in self.alg.roots] + [("h", i) for i in range(self.alg.rank)]

    def generator_labels(self) -> list:
        a = self.alg
        return ([("e", a.simple_root(i)) for i in range(a.rank)]
                + [("e", neg(a.simple_root(i))) for i in range(a.rank)]
                + [("h", i) for i in range(a.rank)])

    def form(self, x, y) -> Fraction:
        if x[0] == "e" and y[0] == "e":
            return Fraction(1) if add(x[1], y[1]) == (0,) * self.alg.rank else Fraction(0)
        if x[0] == "h" and y[0] == "h":
            return Fraction(self.alg.cartan_matrix[x[1]][y[1]])
        return Fraction(0)

    def bracket(self, x, y) -> dict:
        """[x, y] expanded in basis labels."""
        alg = self.alg
        if x[0] == "h" and y[0] == "h":
            return {}
        if x[0] == "h":
            return {y: Fraction(alg.dynkin_labels(y[1])[x[1]])}
        if y[0] == "h":
            return {x: -Fraction(alg.dynkin_labels(x[1])[y[1]])}
        s = add(x[1], y[1])
        if not any(s):
            # [e_a, e_-a] = H_a, the coroot of a in the basis H_i
            return {("h", i): Fraction(c) for i, c in enumerate(x[1]) if c}
        f = alg.structure_constant(x[1], y[1])
        return {("e", s): Fraction(f)} if f else {}

    def dual_label(self, x) -> list:
        """J^p expressed in labels: e_a -> e_-a, H_i -> sum_j (A^-1)_ij H_j."""
        if x[0] == "e":
            return [(Fraction(1), ("e", neg(x[1])))]
        Ainv = sympy.Matrix(self.alg.cartan_matrix).inv()
        return [(Fraction(int(Ainv[x[1], j].p), int(Ainv[x[1], j].q)), ("h", j))
                for j in range(self.alg.rank) if Ainv[x[1], j] != 0]

    # mode actions --------------------------------------------------------------

    def _field_state(self, name, m, state) -> dict:
        key = (name, m, state)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if name in self.fields:
            out: dict = {}
            for c, factors in self.fields[name]:
                for st2, c2 in self.ff.field_mode_on_state(factors, m, state).items():
                    _acc(out, st2, c2 * c)
        elif name == "T":
            out = vector_add(self._field_state("Tgh", m, state), self._field_state("Tphi", m, state))
        elif name == "Tsug":
            out = self._sugawara_state(m, state)
        elif name[0] == "e":
            out = self._composite_root(name[1], m, state)
        else:
            raise WakimotoError(f"unknown field {name!r}")
        self._cache[key] = out
        return out

    def mode(self, name, m: int, vec: dict) -> dict:
        out: dict = {}
        for st, c in vec.items():
            for st2, c2 in self._field_state(name, m, st).items():
                _acc(out, st2, c * c2)
        return out

    def _composite_root(self, root, m, state) -> dict:
        alg = self.alg
        sign = 1 if sum(root) > 0 else -1
        for i in range(alg.rank):
            simple = tuple(sign * x for x in alg.simple_root(i))
            rest = tuple(r - s for r, s in zip(root, simple))
            if alg.is_root(rest):
                f = alg.structure_constant(simple, rest)
                if f:
                    a, b = ("e", simple), ("e", rest)
                    v = {state: 1}
                    res = vector_sub(self.mode(a, 0, self.mode(b, m, v)), self.mode(b, m, self.mode(a, 0, v)))
                    return vector_scale(res, Fraction(1, f))
        raise WakimotoError(f"no decomposition for root {root}")

    def _sugawara_state(self, m, state) -> dict:
        E = energy(state)
        v = {state: 1}
        out: dict = {}
        for p in self.basis_labels():
            for c, q in self.dual_label(p):
                for n in range(m - E, max(E, m) + 1):
                    if m - n <= -1:
                        term = self.mode(p, m - n, self.mode(q, n, v))
                    else:
                        term = self.mode(q, n, self.mode(p, m - n, v))
                    out = vector_add(out, term, c)
        return vector_scale(out, _inv(self.kappa) * Fraction(1, 2))

    def commutator(self, x, m, y, n, vec) -> dict:
        return vector_sub(self.mode(x, m, self.mode(y, n, vec)), self.mode(y, n, self.mode(x, m, vec)))

    def matrix(self, name, m: int, space: TruncatedFockSpace) -> OperatorMatrix:
        wshift = (0,) * self.alg.rank
        if isinstance(name, tuple) and name[0] == "e":
            wshift = tuple(name[1])
        return operator_matrix(space, lambda v: self.mode(name, m, v), -m, wshift)

    # relations -----------------------------------------------------------------

    def affine_residual(self, x, m, y, n, vec) -> dict:
        lhs = self.commutator(x, m, y, n, vec)
        rhs: dict = {}
        for z, c in self.bracket(x, y).items():
            rhs = vector_add(rhs, self.mode(z, m + n, vec), c)
        k = self.form(x, y)
        if k and m + n == 0 and m:
            rhs = vector_add(rhs, vec, self.level * (k * m))
        return vector_sub(lhs, rhs)

    def virasoro_residual(self, m, n, vec, name="T") -> dict:
        lhs = self.commutator(name, m, name, n, vec)
        rhs = vector_scale(self.mode(name, m + n, vec), m - n) if m != n else {}
        if m + n == 0:
            c = self.central_charge()
            rhs = vector_add(rhs, vec, c * Fraction(m**3 - m, 12))
        return vector_sub(lhs, rhs)

    def mixed_residual(self, m, x, n, vec) -> dict:
        lhs = self.commutator("T", m, x, n, vec)
        rhs = vector_scale(self.mode(x, m + n, vec), -n) if n else {}
        return vector_sub(lhs, rhs)

    def central_charge(self):
        return self.level * self.alg.dim * _inv(self.kappa)


@dataclass
class VerificationReport:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {"name": self.name, "checked": self.checked, "ok": self.ok,
                "failures": [str(f) for f in self.failures[:20]], **self.details}


def _label_str(x) -> str:
    if x in ("T", "Tgh", "Tphi", "Tsug"):
        return x
    if x[0] == "h":
        return f"H{x[1] + 1}"
    return f"e{list(x[1])}"


def current_mode(module: WakimotoModule, tag: str, m: int, space: TruncatedFockSpace) -> OperatorMatrix:
    """Matrix of E_i[m], F_i[m] or H_i[m] on the space (tags like ``"F1"``)."""
    alg = module.alg
    kind, i = tag[0], int(tag[1:]) - 1
    label = {"E": ("e", alg.simple_root(i)), "F": ("e", neg(alg.simple_root(i))), "H": ("h", i)}[kind]
    return module.matrix(label, m, space)


def em_mode(module: WakimotoModule, which: str, m: int, space: TruncatedFockSpace) -> OperatorMatrix:
    names = {"T": "T", "T^gh": "Tgh", "Tgh": "Tgh", "T^phi": "Tphi", "Tphi": "Tphi",
             "T_Sugawara": "Tsug", "Tsug": "Tsug"}
    return module.matrix(names[which], m, space)


def _states(space, max_energy):
    basis = space.basis
    return basis if max_energy is None else [st for st in basis if energy(st) <= max_energy]


def verify_affine(module: WakimotoModule, space: TruncatedFockSpace, max_mode: int = 2,
                  labels: Sequence | None = None, max_energy: int | None = None) -> VerificationReport:
    rep = VerificationReport("affine")
    labels = list(labels) if labels is not None else module.basis_labels()
    for a in range(len(labels)):
        for b in range(a, len(labels)):
            x, y = labels[a], labels[b]
            for m in range(-max_mode, max_mode + 1):
                for n in range(-max_mode, max_mode + 1):
                    for st in _states(space, max_energy):
                        rep.checked += 1
                        if module.affine_residual(x, m, y, n, {st: 1}):
                            rep.failures.append((_label_str(x), m, _label_str(y), n, st))
    return rep


def verify_virasoro_and_sugawara(module: WakimotoModule, space: TruncatedFockSpace, max_mode: int = 2,
                                 max_energy: int | None = None) -> VerificationReport:
    rep = VerificationReport("virasoro_sugawara")
    states = _states(space, max_energy)
    for m in range(-max_mode, max_mode + 1):
        for n in range(-max_mode, max_mode + 1):
            if m > n:
                continue
            for st in states:
                rep.checked += 1
                if module.virasoro_residual(m, n, {st: 1}):
                    rep.failures.append(("Vir", m, n, st))
    for m in range(-max_mode, max_mode + 1):
        for x in module.generator_labels():
            for n in range(-max_mode, max_mode + 1):
                for st in states:
                    rep.checked += 1
                    if module.mixed_residual(m, x, n, {st: 1}):
                        rep.failures.append(("T-X", m, _label_str(x), n, st))
    for m in range(-max_mode, max_mode + 1):
        for st in states:
            rep.checked += 1
            if vector_sub(module.mode("Tsug", m, {st: 1}), module.mode("T", m, {st: 1})):
                rep.failures.append(("Sugawara", m, st))
    rep.details["central_charge"] = str(module.central_charge())
    return rep


def casimir_action(module: WakimotoModule, vec: dict) -> dict:
    out: dict = {}
    for p in module.basis_labels():
        for c, q in module.dual_label(p):
            out = vector_add(out, module.mode(p, 0, module.mode(q, 0, vec)), c)
    return out


def casimir_check(module: WakimotoModule, space: TruncatedFockSpace):
    """The scalar by which C_2 acts on W^0; raises if the action is not scalar."""
    expected = module.alg.casimir_value(space.momentum)
    for st in space.w0_basis():
        res = vector_sub(casimir_action(module, {st: 1}), {st: LPoly.const(expected)})
        if res:
            raise WakimotoError(f"Casimir is not scalar on {st}")
    return expected


def verify_w0(module: WakimotoModule, space: TruncatedFockSpace, max_mode: int = 2) -> VerificationReport:
    """W^0 is stable under zero modes and killed by positive modes of the generators."""
    rep = VerificationReport("w0")
    for st in space.w0_basis():
        for x in module.generator_labels():
            rep.checked += 1
            if any(energy(s) for s in module.mode(x, 0, {st: 1})):
                rep.failures.append(("zero-mode leaves W0", _label_str(x), st))
            for m in range(1, max_mode + 1):
                rep.checked += 1
                if module.mode(x, m, {st: 1}):
                    rep.failures.append(("positive mode", _label_str(x), m, st))
    return rep


def solve_constants(alg: LieAlgebraData, cutoff: int = 3, zero_mode_cutoff: int = 2,
                    max_mode: int = 1, momentum: Sequence | None = None) -> list:
    """The c_i as exact expressions in kappa (sympy), from the affine relations.

    Every residual component is linear in the unknowns; the overdetermined
    system is solved over Q(kappa) and must have a unique solution.
    """
    momentum = momentum if momentum is not None else tuple(Fraction(1, 3 + i) for i in range(alg.rank))
    module = WakimotoModule(alg)
    space = TruncatedFockSpace(alg, momentum, cutoff, zero_mode_cutoff)
    cs = [sympy.Symbol(f"c{i + 1}") for i in range(alg.rank)]
    kap = sympy.Symbol("kappa")
    symbols = {"kappa": kap, **{f"c{i + 1}": c for i, c in enumerate(cs)}}
    eqs = set()
    gens = module.generator_labels()
    for x in gens:
        for y in gens:
            if x[0] != "e" or sum(x[1]) > 0 or gens.index(y) < gens.index(x):
                # residuals only involve c_i through F currents
                if not (y[0] == "e" and sum(y[1]) < 0):
                    continue
            for m in range(-max_mode, max_mode + 1):
                for n in range(-max_mode, max_mode + 1):
                    for st in space.basis:
                        if energy(st) + max(0, -m) + max(0, -n) > cutoff + max_mode:
                            continue
                        for c in module.affine_residual(x, m, y, n, {st: 1}).values():
                            eqs.add(c)
    exprs = [sympy.together(e.to_sympy(symbols)) for e in eqs]
    exprs = [sympy.numer(e) for e in exprs if e != 0]
    if not exprs:
        raise WakimotoError("no equations were produced")
    sol = sympy.solve(exprs, cs, dict=True)
    if len(sol) != 1 or set(sol[0]) != set(cs):
        raise WakimotoError(f"constants not uniquely determined: {sol}")
    return [sympy.factor(sol[0][c]) for c in cs]


def constants_as_lpoly(values: Sequence) -> list[LPoly]:
    """Convert c_i = a*kappa + b (sympy) into LPoly coefficients."""
    kap = sympy.Symbol("kappa")
    out = []
    for v in values:
        p = sympy.Poly(sympy.expand(v), kap)
        acc = LPoly()
        for (e,), c in p.terms():
            c = sympy.Rational(c)
            acc = acc + LPoly.var("kappa", int(e)) * Fraction(int(c.p), int(c.q)) if e else acc + Fraction(int(c.p), int(c.q))
        out.append(acc)
    return out


def first_broken_relation(module: WakimotoModule, space: TruncatedFockSpace, max_mode: int = 1,
                          max_energy: int | None = None):
    """The first generator relation that fails, or None when all hold."""
    gens = module.generator_labels()
    for a, x in enumerate(gens):
        for y in gens[a:]:
            for m in range(-max_mode, max_mode + 1):
                for n in range(-max_mode, max_mode + 1):
                    for st in _states(space, max_energy):
                        if module.affine_residual(x, m, y, n, {st: 1}):
                            return (_label_str(x), m, _label_str(y), n, st)
    return None


def perturbed_constants(constants: Sequence, i: int, shift=1) -> list:
    out = list(constants)
    out[i] = out[i] + shift
    return out
