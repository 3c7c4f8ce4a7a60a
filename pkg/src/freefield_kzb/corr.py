"""One-loop correlators of the free-field realization.

Boson sector: the closed product for vertex operators and the coherent-state
per-mode factors used as an oracle.  Ghost sector: the character, the
permutation-sum blocks for one W^0 insertion with screenings, the partition
sum over several insertions, the screening Ward identity and a brute-force
truncated trace.

Conventions: H is given by its simple-root coordinates, so a(H) = (a|H).
Screening operators are ``flagdiff.screen_left`` (Scr = -L), for which
<gamma(z) Scr_a(t)> / ch = + w_{a(H)}(t, z) in type A1.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
import sympy

from .flagdiff import constant_term, coordinates, jmath, screen_left
from .lie import LieAlgebraData, add, orthonormal_basis
from .special import eta, qpoch, theta11, w_fn

MAX_SCREENINGS = 8
MAX_INSERTIONS = 6


class CorrelatorError(ValueError):
    pass


@dataclass
class CorrelatorValue:
    value: complex
    branch_log: list = field(default_factory=list)
    error_bound: float = 0.0

    def as_dict(self) -> dict:
        return {"value_re": self.value.real, "value_im": self.value.imag,
                "error_bound": self.error_bound,
                "branch_log": [{"factor": f, "base_re": b.real, "base_im": b.imag,
                                "exponent_re": e.real, "exponent_im": e.imag, "log_im": lg.imag}
                               for f, b, e, lg in self.branch_log]}


# pairings ---------------------------------------------------------------------

def pair(alg: LieAlgebraData, weight: Sequence, h: Sequence[complex]) -> complex:
    """weight(H) = (weight|H) for H in simple-root coordinates."""
    A = alg.cartan_matrix
    return sum(complex(Fraction(weight[i])) * A[i][j] * complex(h[j])
               for i in range(alg.rank) for j in range(alg.rank))


def _form(alg, a, b) -> Fraction:
    return alg.inner(a, b)


def _weights(ws) -> list[tuple]:
    return [tuple(Fraction(x) for x in w) for w in ws]


# boson sector ---------------------------------------------------------------------

def vertex_factors(alg: LieAlgebraData, kappa: complex, q: complex, mus: Sequence, zs: Sequence[complex],
                   mu: Sequence) -> list[tuple[str, complex, complex]]:
    """The multivalued factors (label, base, exponent) shared by ell and ell0."""
    mus = _weights(mus)
    mu = tuple(Fraction(x) for x in mu)
    kappa = complex(kappa)
    ieta3 = 1j * eta(q) ** 3
    out = []
    for i, (m, z) in enumerate(zip(mus, zs)):
        s = float(_form(alg, m, m)) / (2 * kappa)
        if s:
            out.append((f"(i eta^3)^[{i}]", ieta3, s))
        two_mu_minus = tuple(2 * a - b for a, b in zip(mu, m))
        e = float(_form(alg, m, two_mu_minus)) / (2 * kappa)
        if e:
            out.append((f"z{i + 1}", complex(z), e))
    for i in range(len(mus)):
        for j in range(i + 1, len(mus)):
            e = float(_form(alg, mus[i], mus[j])) / kappa
            if e:
                out.append((f"theta(z{i + 1}/z{j + 1})", theta11(complex(zs[i]) / complex(zs[j]), q), e))
    return out


def _principal_product(factors) -> tuple[complex, list]:
    total, log = 1 + 0j, []
    for label, base, e in factors:
        if base == 0:
            raise CorrelatorError(f"factor {label} vanishes: coincident points")
        lg = cmath.log(base)
        total *= cmath.exp(e * lg)
        log.append((label, complex(base), complex(e), lg))
    return total, log


def _check_points(zs):
    for a in range(len(zs)):
        if zs[a] == 0:
            raise CorrelatorError("points must be nonzero")
        for b in range(a + 1, len(zs)):
            if abs(complex(zs[a]) - complex(zs[b])) < 1e-14:
                raise CorrelatorError("points must be distinct")


def boson_one_loop(alg: LieAlgebraData, kappa: complex, q: complex, h: Sequence[complex],
                   mus: Sequence, zs: Sequence[complex], mu: Sequence) -> CorrelatorValue:
    """<V(mu_1;z_1)...V(mu_N;z_N)> over the Fock space of momentum mu."""
    mus = _weights(mus)
    if any(sum(m[i] for m in mus) for i in range(alg.rank)):
        raise CorrelatorError("the vertex weights must sum to zero")
    _check_points(zs)
    mu = tuple(Fraction(x) for x in mu)
    kappa = complex(kappa)
    delta = float(alg.casimir_value(mu)) / (2 * kappa)
    pref = qpoch(q, q) ** (-alg.rank) * complex(q) ** delta * cmath.exp(pair(alg, mu, h))
    val, log = _principal_product(vertex_factors(alg, kappa, q, mus, zs, mu))
    return CorrelatorValue(pref * val, log)


def ell0(alg: LieAlgebraData, kappa: complex, q: complex, h: Sequence[complex],
         mus: Sequence, zs: Sequence[complex], mu: Sequence) -> CorrelatorValue:
    """ell0: the boson product with prefactor q^{(mu+rho|mu+rho)/2 kappa} e^{mu(H)}."""
    mus = _weights(mus)
    _check_points(zs)
    mu = tuple(Fraction(x) for x in mu)
    shifted = tuple(a + r for a, r in zip(mu, alg.weyl_vector))
    pref = complex(q) ** (float(alg.inner(shifted, shifted)) / (2 * complex(kappa))) * cmath.exp(pair(alg, mu, h))
    val, log = _principal_product(vertex_factors(alg, kappa, q, mus, zs, mu))
    return CorrelatorValue(pref * val, log)


def ell0_over_ell(alg: LieAlgebraData, kappa: complex, q: complex) -> complex:
    """The point-independent ratio ell0 / ell = (q;q)^l q^{(rho|rho)/2 kappa}."""
    rho = alg.weyl_vector
    return qpoch(q, q) ** alg.rank * complex(q) ** (float(alg.inner(rho, rho)) / (2 * complex(kappa)))


def _orthonormal_components(alg, mus):
    """mu_i^r with mu_i = sum_r mu_i^r H_r for an orthonormal basis H_r."""
    basis = np.array(orthonormal_basis(alg))  # rows: coefficient vectors of H_r
    G = np.array(alg.cartan_matrix, dtype=float)
    M = np.array([[float(x) for x in m] for m in mus])
    return M @ G @ basis.T  # (mu_i | H_r)


def _mode_tail_bound(alg, kappa, q, comps, zs, L) -> float:
    aq = abs(q)
    N = len(zs)
    rho = aq
    S = 0.0
    for r in range(comps.shape[1]):
        for i in range(N):
            for j in range(i, N):
                S += abs(comps[i, r] * comps[j, r])
    for i in range(N):
        for j in range(N):
            if i < j:
                rho = max(rho, abs(zs[j] / zs[i]))
            rho = max(rho, aq * abs(zs[i] / zs[j]))
    if rho >= 1:
        return math.inf
    tail = alg.rank * aq ** (L + 1) / (1 - aq) ** 2
    tail += S * rho ** (L + 1) / (abs(kappa) * (L + 1) * (1 - aq) * (1 - rho))
    return math.expm1(tail)


def boson_zero_mode(alg, kappa, q, h, mus, zs, mu) -> complex:
    mus = _weights(mus)
    mu = tuple(Fraction(x) for x in mu)
    kappa = complex(kappa)
    val = 1 + 0j
    for i in range(len(mus)):
        for j in range(i + 1, len(mus)):
            val *= complex(zs[i]) ** (float(_form(alg, mus[i], mus[j])) / kappa)
        val *= complex(zs[i]) ** (float(_form(alg, mus[i], mu)) / kappa)
    two_rho_plus = tuple(a + 2 * r for a, r in zip(mu, alg.weyl_vector))
    val *= complex(q) ** (float(alg.inner(two_rho_plus, mu)) / (2 * kappa))
    return val * cmath.exp(pair(alg, mu, h))


def boson_mode_factor(kappa, q, comps_r, zs, n) -> complex:
    """Trace over the (r, n) oscillator: the coherent-state closed form."""
    kappa = complex(kappa)
    qn = complex(q) ** n
    N = len(zs)
    s1 = sum(comps_r[i] * comps_r[j] * (complex(zs[j]) / complex(zs[i])) ** n
             for i in range(N) for j in range(i + 1, N))
    s2 = sum(comps_r[i] * comps_r[j] * (complex(zs[i]) / complex(zs[j])) ** n
             for i in range(N) for j in range(i, N))
    return cmath.exp(-s1 / (kappa * n * (1 - qn)) - qn * s2 / (kappa * n * (1 - qn))) / (1 - qn)


def _oscillator_trace(kappa, q, comps_r, zs, n, occupation) -> complex:
    """Tr over a truncated single oscillator of prod_i e^{c_i a^+} e^{d_i a} q^{n N}."""
    K = occupation
    a = np.diag(np.sqrt(np.arange(1, K + 1, dtype=float)), 1).astype(complex)
    ad = a.T.copy()
    scale = 1 / cmath.sqrt(complex(kappa) * n)
    M = np.eye(K + 1, dtype=complex)
    for m, z in zip(comps_r, zs):
        c = m * complex(z) ** n * scale
        d = -m * complex(z) ** (-n) * scale
        M = M @ _expm_nilpotent(c * ad, K) @ _expm_nilpotent(d * a, K)
    weights = complex(q) ** (n * np.arange(K + 1))
    return complex(np.sum(np.diag(M) * weights))


def _expm_nilpotent(X, K):
    out = np.eye(K + 1, dtype=complex)
    term = np.eye(K + 1, dtype=complex)
    for k in range(1, K + 1):
        term = term @ X / k
        out = out + term
    return out


def oracle_boson_trace(alg: LieAlgebraData, kappa: complex, q: complex, h: Sequence[complex],
                       mus: Sequence, zs: Sequence[complex], mu: Sequence, cutoff: int = 25,
                       strict: bool = False, occupation: int = 40) -> CorrelatorValue:
    """Zero-mode closed form times per-(r, n) traces for n <= cutoff.

    Default: the coherent-state closed form of each oscillator trace.
    ``strict``: explicit truncated oscillator matrices (occupation cutoff
    ``occupation``) with the exponentials expanded as finite sums.
    ``error_bound`` is the certified relative effect of the modes n > cutoff.
    """
    mus = _weights(mus)
    if any(sum(m[i] for m in mus) for i in range(alg.rank)):
        raise CorrelatorError("the vertex weights must sum to zero")
    comps = _orthonormal_components(alg, mus)
    val = boson_zero_mode(alg, kappa, q, h, mus, zs, mu)
    for r in range(alg.rank):
        for n in range(1, cutoff + 1):
            if strict:
                val *= _oscillator_trace(kappa, q, comps[:, r], zs, n, occupation)
            else:
                val *= boson_mode_factor(kappa, q, comps[:, r], zs, n)
    bound = _mode_tail_bound(alg, kappa, q, comps, [complex(z) for z in zs], cutoff)
    return CorrelatorValue(val, [], bound)


# ghost sector -------------------------------------------------------------------------

def ghost_character(alg: LieAlgebraData, q: complex, h: Sequence[complex]) -> complex:
    out = 1 + 0j
    for r in alg.positive_roots:
        a = pair(alg, r, h)
        den = qpoch(cmath.exp(-a), q) * qpoch(complex(q) * cmath.exp(a), q)
        if abs(den) < 1e-300:
            raise CorrelatorError("ghost character is singular at this H")
        out /= den
    return out


def as_polynomial(alg: LieAlgebraData, P):
    """Accept a sympy expression, a string, or (rank 1) a list of coefficients."""
    xs = coordinates(alg)
    if isinstance(P, (list, tuple)):
        if alg.n_pos != 1:
            raise CorrelatorError("coefficient lists are only accepted for A1")
        return sympy.expand(sum(sympy.Rational(str(Fraction(c))) * xs[0] ** k for k, c in enumerate(P)))
    if isinstance(P, str):
        return sympy.expand(sympy.sympify(P, locals={str(x): x for x in xs}))
    return sympy.expand(sympy.sympify(P))


@lru_cache(maxsize=None)
def _jmath_cached(label, P_str, word):
    from .lie import build_algebra
    alg = build_algebra(label)
    return float(jmath(alg, sympy.sympify(P_str, locals={str(x): x for x in coordinates(alg)}), word))


@lru_cache(maxsize=None)
def _scr_constant(label, P_str, roots):
    """Constant term of Scr_{r_1} ... Scr_{r_m} P (r_m applied first)."""
    from .lie import build_algebra
    alg = build_algebra(label)
    P = sympy.sympify(P_str, locals={str(x): x for x in coordinates(alg)})
    for r in reversed(roots):
        P = screen_left(alg, r).apply(P)
        if P == 0:
            return 0.0
    return float(constant_term(alg, P))


def _telescoped(alg, roots, ts, z, h, q):
    """prod_r w_{cumulative root}(t_r, t_{r+1}) with the last factor w(t_m, z)."""
    val = 1 + 0j
    cum = (0,) * alg.rank
    for r, root in enumerate(roots):
        cum = add(cum, root)
        nxt = ts[r + 1] if r + 1 < len(ts) else z
        val *= w_fn(pair(alg, cum, h), complex(ts[r]), complex(nxt), q)
    return val


def ghost_block(alg: LieAlgebraData, P, z: complex, word: Sequence[int], ts: Sequence[complex],
                q: complex, h: Sequence[complex]) -> complex:
    """<P(gamma(z)) Scr_{a_i(1)}(t_1) ... Scr_{a_i(m)}(t_m)> / ch for simple roots.

    ``word`` holds 1-based simple-root indices.  Sum over permutations of the
    telescoped w-kernels times jmath(E_{i(s(m))} ... E_{i(s(1))} P).
    """
    word = list(word)
    if len(word) != len(ts):
        raise CorrelatorError("one screening point per root is required")
    if len(word) > MAX_SCREENINGS:
        raise CorrelatorError(f"at most {MAX_SCREENINGS} screenings per block")
    P = as_polynomial(alg, P)
    if not word:
        return complex(float(constant_term(alg, P)))
    P_str = str(P)
    total = 0j
    for perm in itertools.permutations(range(len(word))):
        jm = _jmath_cached(alg.label, P_str, tuple(word[k] for k in perm))
        if jm == 0:
            continue
        roots = [alg.simple_root(word[k] - 1) for k in perm]
        total += jm * _telescoped(alg, roots, [ts[k] for k in perm], z, h, q)
    return total


def ghost_block_roots(alg: LieAlgebraData, P, z: complex, roots: Sequence[Sequence[int]],
                      ts: Sequence[complex], q: complex, h: Sequence[complex]) -> complex:
    """The same block for arbitrary positive roots, through constant terms of screenings.

    sum_s prod(-w_cum) * const(Scr_{s(1)} ... Scr_{s(m)} P).
    """
    roots = [tuple(r) for r in roots]
    if len(roots) != len(ts):
        raise CorrelatorError("one screening point per root is required")
    if len(roots) > MAX_SCREENINGS:
        raise CorrelatorError(f"at most {MAX_SCREENINGS} screenings per block")
    P = as_polynomial(alg, P)
    P_str = str(P)
    if not roots:
        return complex(float(constant_term(alg, P)))
    total = 0j
    m = len(roots)
    for perm in itertools.permutations(range(m)):
        c = _scr_constant(alg.label, P_str, tuple(roots[k] for k in perm))
        if c == 0:
            continue
        total += (-1) ** m * c * _telescoped(alg, [roots[k] for k in perm], [ts[k] for k in perm], z, h, q)
    return total


def _assignments(M, N):
    if N > MAX_INSERTIONS or M > MAX_SCREENINGS:
        raise CorrelatorError(f"partition sum capped at N <= {MAX_INSERTIONS}, M <= {MAX_SCREENINGS}")
    return itertools.product(range(N), repeat=M)


def factorized_ghost(alg: LieAlgebraData, Ps: Sequence, zs: Sequence[complex], roots: Sequence,
                     ts: Sequence[complex], q: complex, h: Sequence[complex]) -> complex:
    """Partition sum of per-insertion blocks: <prod P_a(gamma(z_a)) prod Scr(t_j)> / ch."""
    total = 0j
    for assign in _assignments(len(roots), len(Ps)):
        val = 1 + 0j
        for a in range(len(Ps)):
            idx = [j for j, b in enumerate(assign) if b == a]
            val *= ghost_block_roots(alg, Ps[a], zs[a], [roots[j] for j in idx], [ts[j] for j in idx], q, h)
            if val == 0:
                break
        total += val
    return total


def recursive_ghost(alg: LieAlgebraData, Ps: Sequence, zs: Sequence[complex], roots: Sequence,
                    ts: Sequence[complex], q: complex, h: Sequence[complex]) -> complex:
    """The same normalized correlator evaluated by applying the Ward identity to the first screening."""
    Ps = [as_polynomial(alg, P) for P in Ps]
    if not roots:
        return complex(math.prod(float(constant_term(alg, P)) for P in Ps))
    a, rest, t, rest_t = tuple(roots[0]), [tuple(r) for r in roots[1:]], ts[0], list(ts[1:])
    c = pair(alg, a, h)
    total = 0j
    scr = screen_left(alg, a)
    for k, P in enumerate(Ps):
        SP = scr.apply(P)
        if SP == 0:
            continue
        newPs = Ps[:k] + [SP] + Ps[k + 1:]
        total += -w_fn(c, t, zs[k], q) * recursive_ghost(alg, newPs, zs, rest, rest_t, q, h)
    for j, b in enumerate(rest):
        f = alg.structure_constant(a, b)
        if not f:
            continue
        new_roots = rest[:j] + [add(a, b)] + rest[j + 1:]
        total += -w_fn(c, t, rest_t[j], q) * f * recursive_ghost(alg, Ps, zs, new_roots, rest_t, q, h)
    return total


def ward_residual(alg: LieAlgebraData, Ps: Sequence, zs: Sequence[complex], root: Sequence[int], t: complex,
                  roots: Sequence, ts: Sequence[complex], q: complex, h: Sequence[complex],
                  relative: bool = True) -> complex:
    """LHS minus RHS of the screening Ward identity, all correlators divided by ch.

    Each correlator is evaluated with the partition sum of closed-form blocks.
    With ``relative`` the residual is divided by the largest term involved.
    """
    root = tuple(root)
    Ps = [as_polynomial(alg, P) for P in Ps]
    roots = [tuple(r) for r in roots]
    lhs = factorized_ghost(alg, Ps, zs, [root] + roots, [t] + list(ts), q, h)
    c = pair(alg, root, h)
    terms = []
    scr = screen_left(alg, root)
    for k, P in enumerate(Ps):
        SP = scr.apply(P)
        if SP == 0:
            continue
        newPs = Ps[:k] + [SP] + Ps[k + 1:]
        terms.append(-w_fn(c, t, zs[k], q) * factorized_ghost(alg, newPs, zs, roots, ts, q, h))
    for j, b in enumerate(roots):
        f = alg.structure_constant(root, b)
        if not f:
            continue
        new_roots = roots[:j] + [add(root, b)] + roots[j + 1:]
        terms.append(-w_fn(c, t, ts[j], q) * f * factorized_ghost(alg, Ps, zs, new_roots, ts, q, h))
    res = lhs - sum(terms)
    if not relative:
        return res
    scale = max([abs(lhs)] + [abs(x) for x in terms] + [1e-300])
    return res / scale


def psi_gh(alg: LieAlgebraData, Ps: Sequence, zs: Sequence[complex], word: Sequence[int],
           ts: Sequence[complex], q: complex, h: Sequence[complex]) -> complex:
    """e^{rho(H)} times the partition sum of simple-root blocks."""
    if len(word) != len(ts):
        raise CorrelatorError("one screening point per root is required")
    total = 0j
    for assign in _assignments(len(word), len(Ps)):
        val = 1 + 0j
        for a in range(len(Ps)):
            idx = [j for j, b in enumerate(assign) if b == a]
            val *= ghost_block(alg, Ps[a], zs[a], [word[j] for j in idx], [ts[j] for j in idx], q, h)
            if val == 0:
                break
        total += val
    return cmath.exp(pair(alg, alg.weyl_vector, h)) * total


def check_charge(alg: LieAlgebraData, lambdas: Sequence, word: Sequence[int]):
    lam_sum = [sum(Fraction(l[i]) for l in lambdas) for i in range(alg.rank)]
    scr_sum = [sum(1 for k in word if k - 1 == i) for i in range(alg.rank)]
    if lam_sum != [Fraction(s) for s in scr_sum]:
        raise CorrelatorError(f"charge conservation violated: sum of lambda = {lam_sum}, screenings = {scr_sum}")


def integrand_weights(alg: LieAlgebraData, lambdas: Sequence, word: Sequence[int]) -> list:
    return [tuple(-Fraction(x) for x in alg.simple_root(k - 1)) for k in word] + _weights(lambdas)


def integrand(alg: LieAlgebraData, kappa: complex, q: complex, h: Sequence[complex], lambdas: Sequence,
              zs: Sequence[complex], word: Sequence[int], ts: Sequence[complex], Ps: Sequence,
              mu: Sequence) -> CorrelatorValue:
    """ell0 on the points (t; z) with weights (-a_i(1), ..., lambda_1, ...) times psi_gh."""
    check_charge(alg, lambdas, word)
    points = list(ts) + list(zs)
    e0 = ell0(alg, kappa, q, h, integrand_weights(alg, lambdas, word), points, mu)
    g = psi_gh(alg, Ps, zs, word, ts, q, h)
    return CorrelatorValue(e0.value * g, e0.branch_log)


def unwrap_logs(values: Sequence[complex]) -> complex:
    """Continuous logarithm of the last value along a path of nonzero values."""
    lg = cmath.log(values[0])
    prev = values[0]
    for v in values[1:]:
        if v == 0:
            raise CorrelatorError("path crosses a zero of a multivalued factor")
        lg += cmath.log(v / prev)
        prev = v
    return lg


def transport_ratio(alg: LieAlgebraData, kappa: complex, q: complex, h: Sequence[complex], lambdas: Sequence,
                    zs: Sequence[complex], word: Sequence[int], ts: Sequence[complex], Ps: Sequence,
                    mu: Sequence, path: Sequence[Sequence[complex]]) -> complex:
    """Value of the integrand continued along ``path`` (a list of t-tuples) divided by its start value."""
    weights = integrand_weights(alg, lambdas, word)
    samples = []
    for tt in path:
        facs = vertex_factors(alg, kappa, q, weights, list(tt) + list(zs), mu)
        samples.append(facs)
    n_f = len(samples[0])
    total_log = 0j
    for k in range(n_f):
        bases = [s[k][1] for s in samples]
        e = samples[0][k][2]
        total_log += e * (unwrap_logs(bases) - cmath.log(bases[0]))
    g0 = psi_gh(alg, Ps, zs, word, path[0], q, h)
    g1 = psi_gh(alg, Ps, zs, word, path[-1], q, h)
    return cmath.exp(total_log) * g1 / g0


# brute-force ghost trace ------------------------------------------------------------------

def _field_monomials(alg, P, z):
    """P(gamma(z)) as a list of (coeff, [(kind, label, point)])."""
    xs = coordinates(alg)
    P = sympy.Poly(as_polynomial(alg, P), *xs)
    out = []
    for expo, c in P.terms():
        fields = [("g", a, z) for a, e in enumerate(expo) for _ in range(e)]
        out.append((complex(c), fields))
    return out


def _screening_monomials(alg, root, t):
    op = screen_left(alg, tuple(root))
    xs = coordinates(alg)
    out = []
    for k, v in enumerate(op.vector):
        if v == 0:
            continue
        for expo, c in sympy.Poly(v, *xs).terms():
            if expo[k]:
                raise CorrelatorError("screening needs a normal-ordering correction; not supported")
            fields = [("g", a, t) for a, e in enumerate(expo) for _ in range(e)] + [("b", k, t)]
            out.append((complex(c), fields))
    return out


def _pair_trace(word, x, occupation):
    """Tr(W x^N) / Tr(x^N) over occupations N <= K; W a string over 'a' and 'd' (a^+).

    The matrices are padded by len(W) levels so each diagonal entry with
    N <= K is exact; only the occupation sum is cut.
    """
    K = occupation
    size = K + 1 + len(word)
    a = np.diag(np.sqrt(np.arange(1, size, dtype=float)), 1).astype(complex)
    ad = a.T.copy()
    M = np.eye(size, dtype=complex)
    for ch in word:
        M = M @ (a if ch == "a" else ad)
    w = x ** np.arange(K + 1)
    return complex(np.sum(np.diag(M)[:K + 1] * w) / np.sum(w))


def oracle_ghost_trace(alg: LieAlgebraData, Ps: Sequence, zs: Sequence[complex], roots: Sequence,
                       ts: Sequence[complex], q: complex, h: Sequence[complex], cutoff: int = 18,
                       occupation: int = 60, normalized: bool = True) -> complex:
    """Brute-force trace of prod P_a(gamma(z_a)) prod Scr(t_j) with modes |n| <= cutoff.

    Operators are taken in the written order (radially ordered points give
    convergence).  Each mode pair (beta_a[m], gamma^a[-m]) is a truncated
    oscillator; pairs not touched by the operator word contribute their
    character.  With ``normalized`` the result is divided by the truncated
    character.
    """
    pieces = [_field_monomials(alg, P, z) for P, z in zip(Ps, zs)]
    pieces += [_screening_monomials(alg, r, t) for r, t in zip(roots, ts)]
    total = 0j
    for combo in itertools.product(*pieces):
        coeff = math.prod(c for c, _ in combo)
        fields = [f for _, fs in combo for f in fs]
        total += coeff * _mode_sum(alg, fields, q, h, cutoff, occupation)
    if normalized:
        return total
    ch = 1 + 0j
    for r in alg.positive_roots:
        a = pair(alg, r, h)
        for m in range(-cutoff, cutoff + 1):
            x = complex(q) ** m * cmath.exp(-a) if m >= 0 else complex(q) ** (-m) * cmath.exp(a)
            ch *= sum(x ** k for k in range(occupation + 1))
    return total * ch


def _mode_sum(alg, fields, q, h, L, occupation):
    """Sum over mode assignments of prod(point powers) * normalized pair traces."""
    K = len(fields)
    if K == 0:
        return 1 + 0j
    total = 0j
    cache: dict = {}

    def rec(k, modes, s):
        if k == K - 1:
            n = -s
            if -L <= n <= L:
                evaluate(modes + [n])
            return
        for n in range(-L, L + 1):
            rest = K - k - 1
            if not (-L * rest <= -(s + n) <= L * rest):
                continue
            rec(k + 1, modes + [n], s + n)

    def evaluate(modes):
        nonlocal total
        val = 1 + 0j
        groups: dict = {}
        for (kind, a, pt), n in zip(fields, modes):
            if kind == "g":
                val *= complex(pt) ** (-n)
                m = -n
                # gamma^a[n] = gamma^a[-m]: creation in pair m >= 0, -(annihilator) for m < 0
                sym, sgn = ("d", 1) if m >= 0 else ("a", -1)
            else:
                val *= complex(pt) ** (-n - 1)
                m = n
                sym, sgn = ("a", 1) if m >= 0 else ("d", 1)
            val *= sgn
            groups.setdefault((a, m), []).append(sym)
        for (a, m), syms in groups.items():
            if syms.count("a") != syms.count("d"):
                return
            word = "".join(syms)
            key = (a, m, word)
            if key not in cache:
                alpha = pair(alg, alg.positive_roots[a], h)
                x = complex(q) ** m * cmath.exp(-alpha) if m >= 0 else complex(q) ** (-m) * cmath.exp(alpha)
                cache[key] = _pair_trace(word, x, occupation)
            val *= cache[key]
            if val == 0:
                return
        total += val

    rec(0, [], 0)
    return total


def ghost_oracle_budget(radii: Sequence[float], q: complex, cutoff: int, occupation: int | None = None,
                        pair_ratio: float | None = None, fields: int | None = None) -> float:
    """Truncation budget of ``oracle_ghost_trace`` for points in operator order.

    The mode sums converge geometrically with ratio rho, the largest of the
    consecutive radial ratios and |q| |x_first| / |x_last|.  With
    ``occupation`` and ``pair_ratio`` (the largest |q^|m| e^{-+alpha(H)}| of a
    mode pair) the occupation cut is added: a word of ``fields`` oscillators
    has diagonal entries <= (N + fields)^fields, so its tail is bounded by
    (K + 1 + fields)^fields x^{K+1} / (1 - x)^2.
    """
    r = [abs(complex(x)) for x in radii]
    rho = max([r[k + 1] / r[k] for k in range(len(r) - 1)] + [abs(q) * r[0] / r[-1]])
    if rho >= 1:
        return math.inf
    bound = len(r) * (cutoff + 2) * rho ** (cutoff + 1) / (1 - rho) ** 2
    if occupation is not None and pair_ratio is not None:
        if pair_ratio >= 1:
            return math.inf
        d = len(r) if fields is None else fields
        bound += (occupation + 1 + d) ** d * pair_ratio ** (occupation + 1) / (1 - pair_ratio) ** 2
    return bound
