"""Odd Jacobi theta function and the elliptic kernels built from it.

theta11(z; q) = i q^{1/8} z^{1/2} vartheta(z),
vartheta(z)   = sum_n (-1)^n q^{n(n+1)/2} z^n
              = (q;q) (1 - 1/z) prod_{n>=1} (1 - q^n/z)(1 - q^n z).

All fractional powers use the principal branch.  The kernels sigma_c, w_c
and zeta only involve ratios in which the z^{1/2} and q^{1/8} factors cancel,
so they are computed from vartheta and are single valued.
"""

from __future__ import annotations

import cmath
import math

BRANCH_POLICY = {
    "z^(1/2)": "principal",
    "q^(1/8)": "principal",
    "q^(1/24)": "principal",
}

DEFAULT_TOL = 1e-16
_MAX_TERMS = 100000


class SpecialError(ValueError):
    pass


def _check(z, q):
    if not abs(q) < 1:
        raise SpecialError(f"|q| must be < 1, got {abs(q)}")
    if q == 0:
        raise SpecialError("q must be nonzero")
    if z == 0:
        raise SpecialError("z must be nonzero")


def qpoch(x: complex, q: complex, tol: float = DEFAULT_TOL) -> complex:
    """(x; q)_inf, stopped once |x| |q|^N / (1 - |q|) < tol."""
    if not abs(q) < 1:
        raise SpecialError(f"|q| must be < 1, got {abs(q)}")
    prod = 1.0 + 0j
    t = complex(x)
    aq = abs(q)
    for _ in range(_MAX_TERMS):
        if abs(t) / (1 - aq) < tol:
            return prod
        prod *= 1 - t
        t *= q
    raise SpecialError("q-Pochhammer product did not converge")


def qpoch_tail_bound(x: complex, q: complex, n_factors: int) -> float:
    return abs(x) * abs(q) ** n_factors / (1 - abs(q))


def _series(z: complex, q: complex, tol: float, power: int = 0) -> complex:
    """sum_n (-1)^n q^{n(n+1)/2} n^power z^n with a geometric tail bound."""
    total = 0j
    scale = 0.0
    # n >= 0
    t = 1.0 + 0j
    n = 0
    while True:
        term = t * (n ** power if power else 1) * (-1) ** n
        total += term
        scale = max(scale, abs(t))
        ratio = abs(q ** (n + 1) * z)
        if ratio < 0.5 and abs(t) * (n + 2) ** power * 2 * ratio < tol * max(scale, 1e-300):
            break
        t *= q ** (n + 1) * z
        n += 1
        if n > _MAX_TERMS:
            raise SpecialError("theta series did not converge")
    # n = -m, m >= 1: q^{m(m-1)/2} z^{-m}
    t = 1.0 / z
    m = 1
    while True:
        term = t * ((-m) ** power if power else 1) * (-1) ** m
        total += term
        scale = max(scale, abs(t))
        ratio = abs(q ** m / z)
        if ratio < 0.5 and abs(t) * (m + 2) ** power * 2 * ratio < tol * max(scale, 1e-300):
            break
        t *= q ** m / z
        m += 1
        if m > _MAX_TERMS:
            raise SpecialError("theta series did not converge")
    return total


def vartheta(z: complex, q: complex, tol: float = DEFAULT_TOL) -> complex:
    _check(z, q)
    return _series(complex(z), complex(q), tol)


def vartheta_deriv(z: complex, q: complex, tol: float = DEFAULT_TOL) -> complex:
    """d vartheta / dz."""
    _check(z, q)
    z = complex(z)
    return _series(z, complex(q), tol, power=1) / z


def _prefactor(z, q):
    return 1j * q ** 0.125 * z ** 0.5


def theta11(z: complex, q: complex, method: str = "sum", tol: float = DEFAULT_TOL) -> complex:
    _check(z, q)
    z, q = complex(z), complex(q)
    if method == "sum":
        return _prefactor(z, q) * _series(z, q, tol)
    if method == "product":
        return 1j * qpoch(q, q, tol) * q ** 0.125 * z ** 0.5 * qpoch(1 / z, q, tol) * qpoch(q * z, q, tol)
    raise SpecialError(f"unknown method {method!r}")


def theta11_deriv(z: complex, q: complex, method: str = "sum", tol: float = DEFAULT_TOL) -> complex:
    """d theta11 / dz."""
    _check(z, q)
    z, q = complex(z), complex(q)
    if method == "sum":
        v = _series(z, q, tol)
        dv = _series(z, q, tol, power=1) / z
        return _prefactor(z, q) * (v / (2 * z) + dv)
    if method == "product":
        # theta = C g(z) P(z) with g = z^{1/2} - z^{-1/2}
        C = 1j * qpoch(q, q, tol) * q ** 0.125
        g = z ** 0.5 - z ** -0.5
        dg = 0.5 * z ** -0.5 + 0.5 * z ** -1.5
        P = qpoch(q / z, q, tol) * qpoch(q * z, q, tol)
        logd = 0j
        t = q
        while abs(t) / (1 - abs(q)) >= tol * 1e-2:
            logd += (t / z ** 2) / (1 - t / z) - t / (1 - t * z)
            t *= q
        return C * P * (dg + g * logd)
    raise SpecialError(f"unknown method {method!r}")


def theta11_deriv_at_one(q: complex, tol: float = DEFAULT_TOL) -> complex:
    """theta11'(1; q) = i q^{1/8} (q;q)^3."""
    if not 0 < abs(q) < 1:
        raise SpecialError(f"need 0 < |q| < 1, got {abs(q)}")
    q = complex(q)
    return 1j * q ** 0.125 * qpoch(q, q, tol) ** 3


def eta(q: complex, tol: float = DEFAULT_TOL) -> complex:
    if not 0 < abs(q) < 1:
        raise SpecialError(f"need 0 < |q| < 1, got {abs(q)}")
    q = complex(q)
    return q ** (1 / 24) * qpoch(q, q, tol)


def _vartheta_prime_one(q):
    # vartheta(z) = (1 - 1/z) (q;q)^3-type product near z = 1
    return qpoch(q, q) ** 3


def sigma_fn(c: complex, z: complex, q: complex, tol: float = DEFAULT_TOL) -> complex:
    """theta'(1) theta(e^{-c} z) / (theta(e^{-c}) theta(z)), branch free."""
    _check(z, q)
    q, z = complex(q), complex(z)
    x = cmath.exp(-c)
    den_c = _series(x, q, tol)
    if abs(den_c) < 1e-300 or _on_lattice(x, q):
        raise SpecialError("e^{-c} lies in q^Z: normalizing theta vanishes")
    den_z = _series(z, q, tol)
    if _on_lattice(z, q):
        raise SpecialError("z lies on the pole divisor q^Z")
    return _vartheta_prime_one(q) * _series(x * z, q, tol) / (den_c * den_z)


def w_fn(c: complex, w: complex, z: complex, q: complex, tol: float = DEFAULT_TOL) -> complex:
    """w_c(w, z) = sigma_c(z / w) / w."""
    if w == 0:
        raise SpecialError("w must be nonzero")
    return sigma_fn(c, complex(z) / complex(w), q, tol) / complex(w)


def zeta_fn(z: complex, q: complex, tol: float = DEFAULT_TOL) -> complex:
    """z theta11'(z) / theta11(z) = 1/2 + z vartheta'(z) / vartheta(z)."""
    _check(z, q)
    z, q = complex(z), complex(q)
    if _on_lattice(z, q):
        raise SpecialError("zeta has a pole on q^Z")
    return 0.5 + _series(z, q, tol, power=1) / _series(z, q, tol)


def zeta_log_deriv(z: complex, q: complex, tol: float = DEFAULT_TOL) -> complex:
    """d zeta(e^u) / du at e^u = z."""
    _check(z, q)
    z, q = complex(z), complex(q)
    if _on_lattice(z, q):
        raise SpecialError("zeta has a pole on q^Z")
    s0 = _series(z, q, tol)
    s1 = _series(z, q, tol, power=1)
    s2 = _series(z, q, tol, power=2)
    return s2 / s0 - (s1 / s0) ** 2


def theta_taylor(q: complex, order: int, tol: float = DEFAULT_TOL) -> list[complex]:
    """Taylor coefficients of vartheta(e^u) in u up to u^order."""
    q = complex(q)
    return [_series(1.0 + 0j, q, tol, power=k) / math.factorial(k) if k else _series(1.0 + 0j, q, tol)
            for k in range(order + 1)]


def zeta_u_coefficient(q: complex, tol: float = DEFAULT_TOL) -> complex:
    """b with zeta(e^u) = 1/u + b u + O(u^3)."""
    T = theta_taylor(q, 3, tol)
    return 2 * T[3] / T[1] - 0.25


def _on_lattice(z: complex, q: complex, eps: float = 1e-13) -> bool:
    """True when z is (numerically) an integer power of q."""
    lz, lq = cmath.log(z), cmath.log(q)
    k = round((math.log(abs(z))) / math.log(abs(q)))
    return abs(cmath.exp(lz - k * lq) - 1) < eps


def residue_at_pole(fn, w: complex, radius: float = 1e-3, nodes: int = 64) -> complex:
    """(1 / 2 pi i) times the contour integral of fn over a circle around w (trapezoid rule)."""
    total = 0j
    for k in range(nodes):
        phase = cmath.exp(2j * math.pi * k / nodes)
        z = w + radius * phase
        total += fn(z) * radius * phase
    return total / nodes
