import cmath
from fractions import Fraction

import numpy as np
import pytest
import sympy

from freefield_kzb import corr
from freefield_kzb.corr import CorrelatorError
from freefield_kzb.flagdiff import coordinates
from freefield_kzb.lie import build_algebra
from freefield_kzb.special import qpoch, w_fn

A1 = build_algebra("A1")
A2 = build_algebra("A2")
(x,) = coordinates(A1)
HALF = (Fraction(1, 2),)
Q, H = 0.2, (0.3,)  # alpha(H) = 0.6
ALPHA_H = 0.6


def test_boson_all_zero_weights_is_character():
    mu = HALF
    val = corr.boson_one_loop(A1, 5, Q, H, [(0,), (0,), (0,)], [1.0, 0.7, 0.4], mu).value
    expected = qpoch(Q, Q) ** -1 * Q ** (1.5 / 10) * cmath.exp(0.3)
    assert val == pytest.approx(expected, rel=1e-14)


def test_boson_requires_neutral_weights():
    with pytest.raises(CorrelatorError):
        corr.boson_one_loop(A1, 5, Q, H, [(1,), (0,)], [1.0, 0.6], HALF)


def test_boson_against_per_mode_oracle_a2():
    mus = [(Fraction(1), Fraction(0)), (Fraction(-1), Fraction(1, 2)), (Fraction(0), Fraction(-1, 2))]
    zs = [1.0, 0.6, 0.35]
    h = (0.2, 0.3)
    mu = (Fraction(1, 3), Fraction(1, 2))
    a = corr.boson_one_loop(A2, 4, 0.15, h, mus, zs, mu).value
    b = corr.oracle_boson_trace(A2, 4, 0.15, h, mus, zs, mu, cutoff=70)
    assert abs(a - b.value) / abs(a) < max(1e-10, b.error_bound)


def test_per_mode_factor_without_insertions():
    for n in (1, 2, 5):
        assert corr.boson_mode_factor(5, Q, [0, 0], [1.0, 0.5], n) == pytest.approx(1 / (1 - Q ** n))


def test_ell0_empty():
    mu = HALF
    val = corr.ell0(A1, 5, Q, H, [(0,)], [1.0], mu).value
    shifted = 1  # (mu + rho | mu + rho) with mu = rho = alpha/2
    assert val == pytest.approx(Q ** (2 * shifted / 10) * cmath.exp(0.3), rel=1e-14)


def test_ghost_character_limits():
    assert corr.ghost_character(A1, 1e-300, H) == pytest.approx(1 / (1 - cmath.exp(-ALPHA_H)))
    h2 = (0.4, 0.4)
    prod = 1
    for r in A2.positive_roots:
        prod *= corr.ghost_character(A1, 0.3, (corr.pair(A2, r, h2) / 2,))
    assert corr.ghost_character(A2, 0.3, h2) == pytest.approx(prod, rel=1e-13)


def test_ghost_block_examples():
    t1, t2, z = 0.8 + 0.1j, 0.55 - 0.2j, 1.0
    assert corr.ghost_block(A1, 1, z, [1], [t1], Q, H) == 0
    assert corr.ghost_block(A1, x, z, [1], [t1], Q, H) == pytest.approx(w_fn(ALPHA_H, t1, z, Q))
    two = 2 * (w_fn(ALPHA_H, t1, t2, Q) * w_fn(2 * ALPHA_H, t2, z, Q)
               + w_fn(ALPHA_H, t2, t1, Q) * w_fn(2 * ALPHA_H, t1, z, Q))
    assert corr.ghost_block(A1, x ** 2, z, [1, 1], [t1, t2], Q, H) == pytest.approx(two, rel=1e-12)
    assert corr.ghost_block(A1, 3 + x, z, [], [], Q, H) == 3


def test_ghost_block_list_polynomial_and_errors():
    t = [0.8]
    assert corr.ghost_block(A1, [0, 1], 1.0, [1], t, Q, H) == corr.ghost_block(A1, x, 1.0, [1], t, Q, H)
    with pytest.raises(CorrelatorError):
        corr.ghost_block(A1, x, 1.0, [1, 1], t, Q, H)


def test_ghost_block_quasi_periodic_in_screening_point():
    t, z = 0.7 + 0.2j, 1.0
    f = corr.ghost_block(A1, x, z, [1], [t], Q, H)
    fq = corr.ghost_block(A1, x, z, [1], [Q * t], Q, H)
    assert fq == pytest.approx(cmath.exp(-ALPHA_H) / Q * f, rel=1e-12)


def test_ghost_block_against_brute_force_trace():
    ts = [0.95 * Q ** 0.5]
    closed = corr.ghost_block(A1, x, 0.95, [1], ts, Q, H)
    brute = corr.oracle_ghost_trace(A1, [x], [0.95], [(1,)], ts, Q, H, cutoff=18)
    assert abs(closed - brute) < corr.ghost_oracle_budget([0.95] + ts, Q, 18)


def test_screening_without_insertion_vanishes_in_trace():
    assert corr.oracle_ghost_trace(A1, [1], [0.95], [(1,)], [0.5], Q, H, cutoff=6) == 0


def test_oracle_budget_diverges_for_bad_ordering():
    assert corr.ghost_oracle_budget([0.5, 0.9], Q, 10) == float("inf")


def test_ward_examples():
    assert abs(corr.ward_residual(A1, [x ** 2], [1.0], (1,), 0.7, [], [], Q, H)) < 1e-9
    x1, x2, x3 = coordinates(A2)
    res = corr.ward_residual(A2, [x3], [0.9], (0, 1), 0.8 + 0.1j, [(1, 0)], [0.7], 0.2, (0.3, 0.25))
    assert abs(res) < 1e-9
    assert corr.factorized_ghost(A1, [1], [1.0], [(1,)], [0.7], Q, H) == 0
    assert corr.ward_residual(A1, [1], [1.0], (1,), 0.7, [], [], Q, H, relative=False) == 0


def test_psi_gh_examples():
    rho_h = cmath.exp(0.3)
    assert corr.psi_gh(A1, [2 + x, 5], [1.0, 0.6], [], [], Q, H) == pytest.approx(rho_h * 10)
    t = 0.8
    assert corr.psi_gh(A1, [x], [1.0], [1], [t], Q, H) == pytest.approx(rho_h * w_fn(ALPHA_H, t, 1.0, Q))
    assert corr.psi_gh(A1, [x, 1], [1.0, 0.6], [1], [t], Q, H) == pytest.approx(rho_h * w_fn(ALPHA_H, t, 1.0, Q))


def test_integrand_regression_and_decomposition():
    lams = [HALF, HALF]
    zs, ts = [1.0, 0.6], [0.8]
    val = corr.integrand(A1, 5, Q, H, lams, zs, [1], ts, [x, 1], (0,)).value
    assert val == pytest.approx(6.782334199593207 + 4.927654235149664j, rel=1e-12)
    weights = corr.integrand_weights(A1, lams, [1])
    boson = corr.boson_one_loop(A1, 5, Q, H, weights, ts + zs, (0,)).value
    ghost = corr.psi_gh(A1, [x, 1], zs, [1], ts, Q, H)
    assert val == pytest.approx(boson * corr.ell0_over_ell(A1, 5, Q) * ghost, rel=1e-12)


def test_integrand_charge_violation():
    with pytest.raises(CorrelatorError):
        corr.integrand(A1, 5, Q, H, [HALF, (0,)], [1.0, 0.6], [1], [0.8], [x, 1], (0,))


def test_transport_around_one_point():
    lams = [HALF, HALF]
    loop = [(1 + 0.1 * cmath.exp(2j * np.pi * k / 400),) for k in range(401)]
    ratio = corr.transport_ratio(A1, 5, Q, H, lams, [1.0, 0.6], [1], [0.8], [x, 1], (0,), [(1.1,)] + loop)
    # (-alpha | alpha/2) / kappa = -1/5
    assert ratio == pytest.approx(cmath.exp(-0.4j * np.pi), abs=1e-12)


def test_as_polynomial_forms():
    assert corr.as_polynomial(A1, [1, 0, 3]) == 1 + 3 * x ** 2
    assert corr.as_polynomial(A1, "x1**2 + 2") == x ** 2 + 2
    with pytest.raises(CorrelatorError):
        corr.as_polynomial(A2, [1, 2])


def test_lambda_never_enters_ghost_sector():
    import inspect
    for fn in (corr.ghost_block, corr.psi_gh, corr.factorized_ghost):
        assert not any("lam" in p for p in inspect.signature(fn).parameters)
    expr = sympy.sympify("x1 + 1")
    assert corr.ghost_block(A1, expr, 1.0, [1], [0.8], Q, H) == corr.ghost_block(A1, x, 1.0, [1], [0.8], Q, H)
