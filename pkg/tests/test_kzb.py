import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from freefield_kzb import kzb
from freefield_kzb.kzb import KZBConfig, KZBError
from freefield_kzb.lie import build_algebra
from freefield_kzb.special import sigma_fn, zeta_fn

A1 = build_algebra("A1")
A2 = build_algebra("A2")
LAMS = [(Fraction(1, 2),), (Fraction(1, 2),)]
BASIS = [((1,), (0,)), ((0,), (1,))]


def test_pi_factor_vanishes_at_zero_h():
    assert kzb.pi_factor(A1, 0.2, (0,)) == 0


def test_pi_factor_small_q():
    q = 1e-6
    lead = q ** 0.125 * 2 * math.sinh(0.3)
    assert kzb.pi_factor(A1, q, (0.3,)) == pytest.approx(lead, rel=1e-5)


@pytest.mark.parametrize("alg,h", [(A1, (0.3,)), (A2, (0.2, 0.35))])
def test_kernels_preserve_weight(alg, h):
    for kernel in (kzb.omega_kernel(alg, 1.0, 0.55, 0.2, h), kzb.h_kernel(alg, 1.0, 0.55, 0.2, h),
                   kzb.h_kernel(alg, 1.0, 1.0, 0.2, h, coincident=True)):
        assert all(not any(w) for w in kernel.weight_shift(alg))


def test_omega_matrix_from_realization():
    z, w, q, h = 1.0, 0.55, 0.2, (0.3,)
    u = z / w
    M = kzb.kernel_matrix(A1, kzb.omega_kernel(A1, z, w, q, h), LAMS, 0, 1, BASIS)
    # R(E) = d/dx, R(F) = -x^2 d/dx + x, R(H) = -2x d/dx + 1 at lambda(H) = 1
    zeta = zeta_fn(u, q)
    expected = np.array([[zeta / 2, -sigma_fn(0.6, u, q)],
                         [-sigma_fn(-0.6, u, q), zeta / 2]])
    assert np.allclose(M, expected, rtol=1e-13, atol=0)
    assert np.allclose(M, [[0.6027837863742344, -0.0077852306746098],
                           [-2.0725569459839503, 0.6027837863742344]], rtol=1e-12, atol=0)


def test_act_raises_with_lambda_term():
    vec = {((0,), (0,)): 1.0}
    out = kzb.act(A1, LAMS, 0, ("e", (-1,)), vec)
    assert out == {((1,), (0,)): 1.0}


def test_toy_pochhammer_matches_segment_integral():
    for a, b in ((0.3, -0.4), (-0.2, 0.55), (0.7, 0.1)):
        val = kzb.toy_pochhammer(a, b, 1.0, 0.55)
        ref = kzb.toy_closed_form(a, b, 1.0, 0.55)
        assert abs(val - ref) / abs(ref) < 1e-10


def test_single_valued_integrand_gives_zero():
    cyc = kzb.default_cycle(1.0, 0.55)

    def factors(t):
        return [(t - 1.0, 1.0), (t - 0.55, 2.0)]

    val = kzb.pochhammer_integral(factors, lambda t: 1 / (t - 3.0), cyc)
    assert abs(val) < 1e-12


def test_extra_branch_point_still_closes():
    # scalar monodromies commute, so the double loop closes for any product of powers
    cyc = kzb.default_cycle(1.0, 0.55)

    def factors(t):
        return [(t - 1.0, 0.3), (t - 0.55, 0.1), (t - 1.2, 0.25)]

    kzb.pochhammer_integral(factors, lambda t: np.ones_like(t), cyc)


def test_discontinuous_factor_is_rejected():
    # a principal square root has a cut crossing the loops; tracking must refuse it
    cyc = kzb.default_cycle(1.0, 0.55)

    def factors(t):
        return [(np.sqrt(t - 1.0), 0.6), (t - 0.55, 0.1)]

    with pytest.raises(KZBError):
        kzb.pochhammer_integral(factors, lambda t: np.ones_like(t), cyc)


def test_continued_log_tracks_winding():
    ts = np.exp(2j * np.pi * np.linspace(0, 1, 200)[1:])
    logs = kzb.continued_log(ts, 1 + 0j)
    assert logs[-1].imag == pytest.approx(2 * np.pi)
    with pytest.raises(KZBError):
        kzb.continued_log(np.array([-1 + 0.1j]), 1 + 0j)


def test_vectorized_integrand_matches_correlator_route():
    cfg = KZBConfig()
    for t in (0.8 + 0.05j, 0.7 - 0.1j, 0.95 + 0.2j):
        a = kzb.integrand_principal(A1, cfg, t)
        b = kzb.integrand_at(A1, cfg, t)
        assert a == pytest.approx(b, rel=1e-12)


def test_config_validation():
    with pytest.raises(KZBError):
        KZBConfig(coincident="guess")
    with pytest.raises(KZBError):
        KZBConfig(heat_sign="sideways")


def test_residual_report_default():
    rep = kzb.kzb_residual()
    assert rep.residual_I == 0
    assert rep.residual_II < 1e-3
    assert rep.residual_III < 1e-2
    assert rep.quadrature_error < 1e-8
    assert rep.observed_order["II"] >= 2 and rep.observed_order["III"] >= 2
    assert rep.observed_order["II_central"] == pytest.approx(2, abs=0.05)
    d = rep.as_dict()
    assert d["h_convention"] == "reflected" and d["heat_sign"] == "reversed"


def test_pi_normalization_breaks_second_equation():
    rep = kzb.kzb_residual(KZBConfig(normalization="pi"))
    assert rep.residual_II > 1e-2


def test_omitting_coincident_terms_breaks_third_equation():
    rep = kzb.kzb_residual(KZBConfig(coincident="omit"))
    assert rep.residual_II < 1e-3
    assert rep.residual_III > 1e-2
