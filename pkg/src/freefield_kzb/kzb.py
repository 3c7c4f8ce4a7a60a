"""KZB kernels, the Pi factor, Pochhammer-loop integration and residual checks.

The residual checker treats the sl(2) solution with two insertions of
weight alpha/2 and one screening.  Its two nonzero components, on
x (x) 1 and 1 (x) x, are integrals over t of

    ell0_{-alpha, lambda_1, lambda_2, mu}(t; z_1, z_2) e^{rho(H)} w_{alpha(H)}(t, z_a)

along the double loop l_1 l_2 l_1^{-1} l_2^{-1} around z_1 and z_2.  The
multivalued factors are continued along the path from their principal
values at the base point.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import sympy

from .corr import CorrelatorError, check_charge, integrand_weights, pair, vertex_factors
from .flagdiff import polynomial_terms, realize, realize_matrix
from .lie import LieAlgebraData, build_algebra, neg, orthonormal_basis
from .special import (eta, qpoch, sigma_fn, theta_taylor, zeta_fn, zeta_log_deriv,
                      zeta_u_coefficient)


class KZBError(RuntimeError):
    pass


# Pi factor and kernels ---------------------------------------------------------------

def pi_factor(alg: LieAlgebraData, q: complex, h: Sequence[complex]) -> complex:
    """q^{dim/24} (q;q)^l prod_{a>0} 2 sinh(a(H)/2) prod_{a in roots} (q e^{a(H)}; q)."""
    q = complex(q)
    val = q ** (alg.dim / 24) * qpoch(q, q) ** alg.rank
    for r in alg.positive_roots:
        val *= 2 * cmath.sinh(pair(alg, r, h) / 2)
    for r in alg.roots:
        val *= qpoch(q * cmath.exp(pair(alg, r, h)), q)
    return val


@dataclass
class KernelValue:
    """sum_k coeff_k X_k (x) Y_k with X, Y labels ("e", root) or ("h", k) (simple coroots)."""

    terms: list = field(default_factory=list)

    def weight_shift(self, alg: LieAlgebraData) -> list:
        out = []
        for _, x, y in self.terms:
            w = [0] * alg.rank
            for lab in (x, y):
                if lab[0] == "e":
                    w = [a + b for a, b in zip(w, lab[1])]
            out.append(tuple(w))
        return out


def _cartan_casimir(alg):
    """sum_r H_r (x) H_r = sum_{kl} (A^{-1})_{kl} H_k (x) H_l."""
    Ainv = sympy.Matrix(alg.cartan_matrix).inv()
    return [(float(Ainv[k, l]), ("h", k), ("h", l))
            for k in range(alg.rank) for l in range(alg.rank) if Ainv[k, l] != 0]


def omega_kernel(alg: LieAlgebraData, z: complex, w: complex, q: complex, h: Sequence[complex]) -> KernelValue:
    """-sum_a sigma_{-a(H)}(z/w) e_a (x) e_-a - sum_r zeta(z/w) H_r (x) H_r."""
    u = complex(z) / complex(w)
    terms = []
    for r in alg.roots:
        terms.append((-sigma_fn(-pair(alg, r, h), u, q), ("e", r), ("e", neg(r))))
    zu = zeta_fn(u, q)
    for c, x, y in _cartan_casimir(alg):
        terms.append((-zu * c, x, y))
    return KernelValue(terms)


def h_kernel(alg: LieAlgebraData, z: complex, w: complex, q: complex, h: Sequence[complex],
             coincident: bool = False) -> KernelValue:
    """The heat-equation kernel H(z, w).

    ``coincident`` returns its finite limit at z = w:
    e_a (x) e_-a terms tend to -e^{a(H)} zeta'(e^{a(H)}) and the Cartan part
    to -(3/2) b, where zeta(e^u) = 1/u + b u + O(u^3).
    """
    terms = []
    if coincident:
        for r in alg.roots:
            terms.append((-zeta_log_deriv(cmath.exp(pair(alg, r, h)), q), ("e", r), ("e", neg(r))))
        b = zeta_u_coefficient(q)
        for c, x, y in _cartan_casimir(alg):
            terms.append((-1.5 * b * c, x, y))
        return KernelValue(terms)
    u = complex(z) / complex(w)
    for r in alg.roots:
        ea = cmath.exp(pair(alg, r, h))
        coeff = (zeta_fn(ea * u, q) - zeta_fn(ea, q)) * sigma_fn(-pair(alg, r, h), u, q)
        terms.append((-coeff, ("e", r), ("e", neg(r))))
    zu = zeta_fn(u, q)
    cart = 0.5 * (zu ** 2 + zeta_log_deriv(u, q))
    for c, x, y in _cartan_casimir(alg):
        terms.append((-cart * c, x, y))
    return KernelValue(terms)


# actions on W^0 tensor products -------------------------------------------------------------

@lru_cache(maxsize=None)
def _slot_op(label: str, lam: tuple, gen: tuple):
    alg = build_algebra(label)
    if gen[0] == "e":
        return realize_matrix(alg, alg.root_matrix(gen[1]), list(lam))
    return realize(alg, f"H{gen[1] + 1}", list(lam))


@lru_cache(maxsize=None)
def _act_monomial(label: str, lam: tuple, gen: tuple, expo: tuple) -> tuple:
    alg = build_algebra(label)
    op = _slot_op(label, lam, gen)
    from .flagdiff import coordinates
    xs = coordinates(alg)
    mono = sympy.Mul(*[x ** e for x, e in zip(xs, expo)])
    return tuple(polynomial_terms(alg, op.apply(mono)).items())


def act(alg: LieAlgebraData, lams: Sequence, slot: int, gen, vec: dict) -> dict:
    """rho_slot(gen) on a vector {(expo_1, ..., expo_N): coeff} of the W^0 tensor product."""
    lam = tuple(Fraction(x) for x in alg.dynkin_labels(lams[slot]))
    out: dict = {}
    for key, c in vec.items():
        for e2, c2 in _act_monomial(alg.label, lam, gen, key[slot]):
            k2 = key[:slot] + (e2,) + key[slot + 1:]
            out[k2] = out.get(k2, 0) + c * float(c2)
    return {k: v for k, v in out.items() if v != 0}


def evaluate_functional(F: dict, vec: dict) -> complex:
    return sum((F.get(k, 0) * c for k, c in vec.items()), 0j)


def dual_two(alg, lams, F: dict, kernel: KernelValue, i: int, j: int, v: dict) -> complex:
    """((rho_i^* (x) rho_j^*) kernel) F evaluated on v: F(rho_j(Y) rho_i(X) v)."""
    total = 0j
    for c, x, y in kernel.terms:
        w = act(alg, lams, j, y, act(alg, lams, i, x, v))
        total += c * evaluate_functional(F, w)
    return total


# Pochhammer double loop --------------------------------------------------------------------------

@dataclass
class TwistedCycle:
    """l_1 l_2 l_1^{-1} l_2^{-1}: circles centered at z_1, z_2 through the base point."""

    centers: tuple
    base: complex
    panels: int = 16
    nodes: int = 16

    def path(self):
        """Nodes, weights (dt) and the loop index of every node, in path order."""
        x, wgl = np.polynomial.legendre.leggauss(self.nodes)
        pts, wts = [], []
        for center, sign in ((self.centers[0], 1), (self.centers[1], 1), (self.centers[0], -1), (self.centers[1], -1)):
            r = self.base - center
            edges = np.linspace(0, sign * 2 * np.pi, self.panels + 1)
            for a, b in zip(edges[:-1], edges[1:]):
                th = (a + b) / 2 + (b - a) / 2 * x
                t = center + r * np.exp(1j * th)
                pts.append(t)
                wts.append((b - a) / 2 * wgl * 1j * r * np.exp(1j * th))
        return np.concatenate(pts), np.concatenate(wts)


def default_cycle(z1: complex, z2: complex, panels: int = 16, nodes: int = 16) -> TwistedCycle:
    return TwistedCycle((complex(z1), complex(z2)), (complex(z1) + complex(z2)) / 2, panels, nodes)


def continued_log(values: np.ndarray, start: complex) -> np.ndarray:
    """Logs along a path, continuous, starting from the principal log at ``start``."""
    seq = np.concatenate([[start], values])
    steps = np.log(seq[1:] / seq[:-1])
    if np.any(np.abs(steps.imag) > 2.0):
        raise KZBError("path too coarse for branch tracking")
    return np.log(start) + np.cumsum(steps)


def pochhammer_integral(factors: Callable, ghost: Callable, cycle: TwistedCycle, closure_tol: float = 1e-10):
    """Integral of ghost(t) prod_k base_k(t)^{e_k} over the double loop.

    ``factors(t_array)`` returns [(base_values, exponent)]; ``ghost`` is single
    valued.  Branches start principal at the base point.  Raises when the
    continued monodromy around the whole path is not 1.
    """
    t, dt = cycle.path()
    ext = np.concatenate([t, [cycle.base]])
    start = factors(np.array([cycle.base]))
    logsum = np.zeros(len(ext), dtype=complex)
    closure = 0j
    for (vals, e), (v0, _) in zip(factors(ext), start):
        lg = continued_log(vals, v0[0])
        logsum += e * lg
        closure += e * (lg[-1] - np.log(v0[0]))
    if abs(cmath.exp(closure) - 1) > closure_tol:
        raise KZBError(f"double loop is not closed in the local system (monodromy {cmath.exp(closure)})")
    g = ghost(t)
    out = g * np.exp(logsum[:-1]) * dt
    return out.sum(axis=-1)


# theta on arrays ------------------------------------------------------------------------------

def _vartheta_vec(z: np.ndarray, q: complex):
    """vartheta and z d(vartheta)/dz for arrays."""
    zmax = max(np.max(np.abs(z)), np.max(1 / np.abs(z)), 1.0)
    aq = abs(q)
    N = 1
    while aq ** (N * (N - 1) / 2) * zmax ** N > 1e-18 * min(1.0, aq):
        N += 1
    n = np.arange(-N, N + 1)
    coef = (-1.0) ** n * complex(q) ** (n * (n + 1) / 2)
    powers = z[..., None] ** n
    v = (powers * coef).sum(axis=-1)
    dv = (powers * coef * n).sum(axis=-1)
    return v, dv


def _theta11_vec(z, q):
    v, _ = _vartheta_vec(z, q)
    return 1j * complex(q) ** 0.125 * z ** 0.5 * v


def _sigma_vec(c, z, q):
    x = cmath.exp(-c)
    num, _ = _vartheta_vec(x * z, q)
    den, _ = _vartheta_vec(z, q)
    vc, _ = _vartheta_vec(np.array([x]), q)
    return qpoch(q, q) ** 3 * num / (vc[0] * den)


# the sl(2) two-point solution ------------------------------------------------------------------------

@dataclass
class KZBConfig:
    kappa: complex = 5.0
    q: float = 0.2
    alpha_h: float = 0.6
    z1: complex = 1.0
    z2: complex = 0.55
    mu: tuple = (Fraction(0),)
    panels: int = 16
    nodes: int = 16
    coincident: str = "limit"       # "limit" or "omit" for the i = j terms of the heat equation
    normalization: str = "theorem"  # "theorem": the integral itself; "pi": multiplied by Pi(q;H)
    h_convention: str = "reflected"  # "reflected": equations at -H; "literal": at H
    heat_sign: str = "reversed"     # sign of the kernel term in the heat equation: "reversed" or "literal"

    def __post_init__(self):
        choices = {"coincident": ("limit", "omit"), "normalization": ("theorem", "pi"),
                   "h_convention": ("reflected", "literal"), "heat_sign": ("reversed", "literal")}
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise KZBError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")


def _integrand_parts(alg, cfg: KZBConfig, kappa, q, h, z1, z2):
    """(constant, factors(t), ghost(t)) of the two component integrands."""
    lambdas = [(Fraction(1, 2),), (Fraction(1, 2),)]
    word = [1]
    check_charge(alg, lambdas, word)
    weights = integrand_weights(alg, lambdas, word)
    zs = [complex(z1), complex(z2)]
    mu = cfg.mu
    # t-independent factors on principal branches; the screening point is slot 0
    const = 1 + 0j
    for lab, base, e in vertex_factors(alg, kappa, q, weights, [2 * abs(zs[0]) + 1] + zs, mu):
        if lab != "z1" and not lab.startswith("theta(z1/"):
            const *= cmath.exp(e * cmath.log(base))
    shifted = tuple(a + r for a, r in zip(mu, alg.weyl_vector))
    const *= complex(q) ** (float(alg.inner(shifted, shifted)) / (2 * complex(kappa))) * cmath.exp(pair(alg, mu, h))
    const *= cmath.exp(pair(alg, alg.weyl_vector, h))
    kap = complex(kappa)
    e_t = float(alg.inner(weights[0], tuple(2 * Fraction(m) - a for m, a in zip(mu, weights[0])))) / (2 * kap)
    e_1 = float(alg.inner(weights[0], weights[1])) / kap
    e_2 = float(alg.inner(weights[0], weights[2])) / kap

    def factors(t):
        out = []
        if e_t:
            out.append((t.astype(complex), e_t))
        out.append((_theta11_vec(t / zs[0], q), e_1))
        out.append((_theta11_vec(t / zs[1], q), e_2))
        return out

    c = pair(alg, alg.simple_root(0), h)

    def ghost(t):
        return np.stack([_sigma_vec(c, zs[0] / t, q) / t, _sigma_vec(c, zs[1] / t, q) / t])

    return const, factors, ghost


def _solution_components(alg, cfg: KZBConfig, kappa, q, h, z1, z2):
    """{(x,1): value, (1,x): value} of the integral representation."""
    const, factors, ghost = _integrand_parts(alg, cfg, kappa, q, h, z1, z2)
    cycle = default_cycle(z1, z2, cfg.panels, cfg.nodes)
    vals = pochhammer_integral(factors, ghost, cycle) * const
    if cfg.normalization == "pi":
        vals = vals * pi_factor(alg, q, h)
    return {((1,), (0,)): vals[0], ((0,), (1,)): vals[1]}


def integrand_principal(alg, cfg: KZBConfig, t: complex) -> tuple:
    """Both component integrands at one t, every factor on its principal branch."""
    const, factors, ghost = _integrand_parts(alg, cfg, cfg.kappa, cfg.q, (cfg.alpha_h / 2,), cfg.z1, cfg.z2)
    ts = np.array([complex(t)])
    val = const * np.prod([np.exp(e * np.log(b)) for b, e in factors(ts)], axis=0)
    g = ghost(ts)
    return complex(val[0] * g[0, 0]), complex(val[0] * g[1, 0])


def integrand_at(alg, cfg: KZBConfig, t: complex) -> tuple:
    """Both component integrands at one t from the scalar correlator code."""
    from .corr import integrand
    h = (cfg.alpha_h / 2,)
    zs = [cfg.z1, cfg.z2]
    lambdas = [(Fraction(1, 2),), (Fraction(1, 2),)]
    a = integrand(alg, cfg.kappa, cfg.q, h, lambdas, zs, [1], [t], ["x1", "1"], cfg.mu).value
    b = integrand(alg, cfg.kappa, cfg.q, h, lambdas, zs, [1], [t], ["1", "x1"], cfg.mu).value
    return a, b


@dataclass
class ResidualReport:
    residual_I: float
    residual_II: float
    residual_III: float
    quadrature_error: float
    fd_error: dict
    observed_order: dict
    coincident: str
    normalization: str
    h_convention: str
    heat_sign: str
    components: dict

    def as_dict(self) -> dict:
        return {"residual_I": self.residual_I, "residual_II": self.residual_II,
                "residual_III": self.residual_III, "quadrature_error": self.quadrature_error,
                "fd_error": self.fd_error, "observed_order": self.observed_order,
                "coincident": self.coincident, "normalization": self.normalization,
                "h_convention": self.h_convention, "heat_sign": self.heat_sign,
                "components": {f"{k}": [v.real, v.imag] for k, v in self.components.items()}}


class SL2TwoPoint:
    """Evaluator of the N=2, M=1 sl(2) solution and the KZB residuals."""

    def __init__(self, cfg: KZBConfig | None = None):
        self.cfg = cfg or KZBConfig()
        self.alg = build_algebra("A1")
        self.lams = [(Fraction(1, 2),), (Fraction(1, 2),)]
        # orthonormal coordinate: H = xi H_1 with H_1 = H/sqrt(2), so alpha(H) = sqrt(2) xi
        self.u = orthonormal_basis(self.alg)[0][0]

    def _h(self, xi):
        return (xi * self.u,)

    @property
    def xi0(self) -> float:
        return self.cfg.alpha_h / (2 * self.u)

    def psi(self, z1=None, z2=None, q=None, xi=None) -> dict:
        c = self.cfg
        z1 = c.z1 if z1 is None else z1
        z2 = c.z2 if z2 is None else z2
        q = c.q if q is None else q
        xi = self.xi0 if xi is None else xi
        return _solution_components(self.alg, c, c.kappa, q, self._h(xi), z1, z2)

    # finite differences ------------------------------------------------------------

    def _d1(self, f, x0, step):
        fp, fm = f(x0 + step), f(x0 - step)
        return {k: (fp[k] - fm[k]) / (2 * step) for k in fp}

    def _d2(self, f, x0, step, f0):
        fp, fm = f(x0 + step), f(x0 - step)
        return {k: (fp[k] - 2 * f0[k] + fm[k]) / step ** 2 for k in fp}

    @staticmethod
    def _richardson(a, b):
        return {k: (4 * b[k] - a[k]) / 3 for k in a}

    def derivatives(self, step: float, richardson: bool = True) -> dict:
        c = self.cfg
        xi0 = self.xi0
        F0 = self.psi()
        fz1 = lambda x: self.psi(z1=x)
        fz2 = lambda x: self.psi(z2=x)
        fq = lambda x: self.psi(q=x)
        fxi = lambda x: self.psi(xi=x)
        hq = step * c.q
        out = {"F": F0}
        specs = {"dz1": (fz1, c.z1, step), "dz2": (fz2, c.z2, step), "dq": (fq, c.q, hq), "dxi": (fxi, xi0, step)}
        for name, (f, x0, s) in specs.items():
            d = self._d1(f, x0, s)
            if richardson:
                d = self._richardson(d, self._d1(f, x0, s / 2))
            out[name] = d
        d2 = self._d2(fxi, xi0, step, F0)
        if richardson:
            d2 = self._richardson(d2, self._d2(fxi, xi0, step / 2, F0))
        out["dxi2"] = d2
        return out

    # residuals ------------------------------------------------------------------------

    def residuals(self, D: dict) -> tuple[float, float, float, float]:
        alg, lams, c = self.alg, self.lams, self.cfg
        kap = complex(c.kappa)
        # the integral at H solves the equations written at -H; see KZBConfig.h_convention
        hsign = -1 if c.h_convention == "reflected" else 1
        h = tuple(hsign * x for x in self._h(self.xi0))
        ksign = -1 if c.heat_sign == "reversed" else 1
        F = D["F"]
        zs = [c.z1, c.z2]
        comps = list(F)
        c2 = [float(alg.casimir_value(l)) for l in lams]
        # (I'): sum_i rho_i^*(H) F on every component, for H = H_1
        res1 = 0.0
        for v in comps:
            tot = 0j
            for i in range(2):
                tot += -evaluate_functional(F, act(alg, lams, i, ("h", 0), {v: 1.0}))
            res1 = max(res1, abs(tot))
        # (II')
        num2, den2 = 0.0, 0.0
        for j in range(2):
            dz = D["dz1"] if j == 0 else D["dz2"]
            i = 1 - j
            om = omega_kernel(alg, zs[i], zs[j], c.q, h)
            for v in comps:
                lhs = kap * (zs[j] * dz[v] + c2[j] / (2 * kap) * F[v])
                dH = -hsign * self.u * evaluate_functional(D["dxi"], act(alg, lams, j, ("h", 0), {v: 1.0}))
                rhs = dH + dual_two(alg, lams, F, om, i, j, {v: 1.0})
                num2 = max(num2, abs(lhs - rhs))
                den2 = max(den2, abs(lhs), abs(rhs))
        # (III')
        num3, den3 = 0.0, 0.0
        for v in comps:
            lhs = 2 * kap * c.q * D["dq"][v]
            rhs = D["dxi2"][v]
            for i in range(2):
                for j in range(2):
                    if i == j:
                        if c.coincident == "omit":
                            continue
                        ker = h_kernel(alg, zs[i], zs[j], c.q, h, coincident=True)
                    else:
                        ker = h_kernel(alg, zs[i], zs[j], c.q, h)
                    rhs += ksign * dual_two(alg, lams, F, ker, i, j, {v: 1.0})
            num3 = max(num3, abs(lhs - rhs))
            den3 = max(den3, abs(lhs), abs(rhs))
        scale1 = max(abs(x) for x in F.values())
        return res1 / scale1, num2 / den2, num3 / den3, 0.0


def kzb_residual(cfg: KZBConfig | None = None, step: float = 1e-3, order_steps: tuple = (0.04, 0.02)) -> ResidualReport:
    """Residuals of (I'), (II'), (III') for the sl(2) two-point solution.

    ``step`` is used with Richardson extrapolation for the reported
    residuals.  ``order_steps`` give the observed order of that same scheme
    (keys "II", "III") and of plain central differences ("II_central",
    "III_central").
    """
    ev = SL2TwoPoint(cfg)
    D = ev.derivatives(step, richardson=True)
    r1, r2, r3, _ = ev.residuals(D)
    # quadrature error: doubling the node count
    fine_cfg = KZBConfig(**{**ev.cfg.__dict__, "panels": 2 * ev.cfg.panels})
    fine = SL2TwoPoint(fine_cfg).psi()
    qerr = max(abs(fine[k] - D["F"][k]) / abs(fine[k]) for k in fine)
    orders = {}
    fd = {}
    for rich, suffix in ((True, ""), (False, "_central")):
        rs = [ev.residuals(ev.derivatives(s, richardson=rich))[1:3] for s in order_steps]
        for idx, name in ((0, "II"), (1, "III")):
            a, b = rs[0][idx], rs[1][idx]
            orders[name + suffix] = math.log(a / b) / math.log(order_steps[0] / order_steps[1]) if b > 0 else math.inf
            fd[name + suffix + "_coarse"] = float(a)
            fd[name + suffix + "_fine"] = float(b)
    c = ev.cfg
    return ResidualReport(r1, r2, r3, qerr, fd, orders, c.coincident, c.normalization,
                          c.h_convention, c.heat_sign, D["F"])


# toy check of the double loop ------------------------------------------------------------------

def toy_pochhammer(a: float, b: float, z1: complex, z2: complex, panels: int = 16, nodes: int = 16) -> complex:
    """Double-loop integral of (t - z_1)^a (t - z_2)^b, principal branches at the midpoint."""
    cyc = default_cycle(z1, z2, panels, nodes)

    def factors(t):
        return [(t - z1, a), (t - z2, b)]

    return complex(pochhammer_integral(factors, lambda t: np.ones_like(t), cyc))


def toy_closed_form(a: float, b: float, z1: float, z2: float, n: int = 200) -> complex:
    """(1 - e^{2 pi i a})(1 - e^{2 pi i b}) times the segment integral from z_2 to z_1 (z_2 < z_1 real)."""
    from scipy.integrate import quad
    f = lambda t: abs(t - z1) ** a * abs(t - z2) ** b
    seg, _ = quad(f, z2, z1, limit=n)
    return (1 - cmath.exp(2j * math.pi * a)) * (1 - cmath.exp(2j * math.pi * b)) * cmath.exp(1j * math.pi * a) * seg


def kernel_matrix(alg: LieAlgebraData, kernel: KernelValue, lams: Sequence, i: int, j: int,
                  basis: Sequence[tuple]) -> np.ndarray:
    """Matrix of sum_k c_k rho_i(X_k) rho_j(Y_k) on the given monomial basis of the W^0 tensor product.

    Column b is the image of basis[b]; components outside the basis are dropped.
    """
    pos = {key: n for n, key in enumerate(basis)}
    M = np.zeros((len(basis), len(basis)), dtype=complex)
    for b, key in enumerate(basis):
        for c, x, y in kernel.terms:
            for k2, val in act(alg, lams, j, y, act(alg, lams, i, x, {key: 1.0})).items():
                if k2 in pos:
                    M[pos[k2], b] += c * val
    return M
