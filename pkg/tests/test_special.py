import cmath
import math

import pytest

from freefield_kzb import special
from freefield_kzb.special import SpecialError


def test_theta_vanishes_at_one():
    assert abs(special.theta11(1, 0.3)) < 1e-15
    assert abs(special.vartheta(0.3, 0.3)) < 1e-15


def test_theta_derivative_at_one():
    q = 0.3 + 0.1j
    assert special.theta11_deriv(1, q) == pytest.approx(special.theta11_deriv_at_one(q), rel=1e-13)
    assert special.theta11_deriv(1, q, method="product") == pytest.approx(special.theta11_deriv_at_one(q), rel=1e-12)


@pytest.mark.parametrize("z", [0.6 + 0.3j, 1.7, -0.4 + 1.1j])
def test_theta_derivative_against_difference_quotient(z):
    q, h = 0.25, 1e-5
    fd = (special.theta11(z + h, q) - special.theta11(z - h, q)) / (2 * h)
    assert special.theta11_deriv(z, q) == pytest.approx(fd, rel=1e-8)


def test_theta_annulus_grid():
    worst = 0.0
    for aq in (0.1, 0.3, 0.5):
        q = aq * cmath.exp(0.7j)
        for r in (aq ** 0.5, 0.8, 1.0, 1.3, aq ** -0.5):
            for phase in (0.4, 2.0, -2.9):
                z = r * cmath.exp(1j * phase)
                a, b = special.theta11(z, q), special.theta11(z, q, method="product")
                worst = max(worst, abs(a - b) / abs(a))
    assert worst < 1e-12


def test_qpoch_and_eta():
    assert special.qpoch(0, 0.4) == 1
    q = 0.2
    direct = math.prod(1 - q ** n for n in range(1, 200))
    assert special.qpoch(q, q) == pytest.approx(direct, rel=1e-15)
    assert special.eta(q) == pytest.approx(q ** (1 / 24) * direct, rel=1e-15)
    assert special.qpoch_tail_bound(0.5, 0.2, 10) == pytest.approx(0.5 * 0.2 ** 10 / 0.8)


def test_w_period_laws():
    c, w, z, q = 0.6 + 0.2j, 0.9 - 0.1j, 0.5 + 0.2j, 0.25
    base = special.w_fn(c, w, z, q)
    assert special.w_fn(c, w, z * q, q) == pytest.approx(cmath.exp(c) * base, rel=1e-12)
    assert special.w_fn(c, w * q, z, q) == pytest.approx(cmath.exp(-c) / q * base, rel=1e-12)


def test_w_residue():
    for c in (0.6, -0.3 + 0.5j):
        res = special.residue_at_pole(lambda x: special.w_fn(c, 1.1, x, 0.2), 1.1)
        assert abs(res - 1) < 1e-8


def test_sigma_normalization():
    # sigma_c(z) = 1/(1 - 1/z) + O(1) near z = 1
    c, q, eps = 0.4, 0.2, 1e-6
    val = special.sigma_fn(c, 1 + eps, q)
    assert val * eps == pytest.approx(1, rel=1e-4)


def test_zeta_pole_raises():
    with pytest.raises(SpecialError):
        special.zeta_fn(0.2, 0.2)
    with pytest.raises(SpecialError):
        special.zeta_fn(1.0, 0.3)


def test_zeta_odd_structure():
    q = 0.3
    vals = [special.zeta_fn(z, q) + special.zeta_fn(1 / z, q) for z in (0.7 + 0.2j, 1.4, -0.5 + 0.9j)]
    for v in vals:
        assert v == pytest.approx(vals[0], abs=1e-12)


def test_zeta_log_derivative_and_u_coefficient():
    q = 0.2
    u, h = 0.3, 1e-5
    fd = (special.zeta_fn(cmath.exp(u + h), q) - special.zeta_fn(cmath.exp(u - h), q)) / (2 * h)
    assert special.zeta_log_deriv(cmath.exp(u), q) == pytest.approx(fd, rel=1e-8)
    b = special.zeta_u_coefficient(q)
    small = 1e-3
    assert (special.zeta_fn(cmath.exp(small), q) - 1 / small) / small == pytest.approx(b, rel=1e-5)


@pytest.mark.parametrize("bad", [dict(z=0.5, q=1.0), dict(z=0.0, q=0.3), dict(z=0.5, q=0.0)])
def test_domain_errors(bad):
    with pytest.raises(SpecialError):
        special.theta11(bad["z"], bad["q"])


def test_unknown_method():
    with pytest.raises(SpecialError):
        special.theta11(0.5, 0.3, method="fourier")


def test_sigma_rejects_lattice_point():
    with pytest.raises(SpecialError):
        special.sigma_fn(0.0, 0.7, 0.3)
