from fractions import Fraction

import pytest
import sympy

from freefield_kzb._laurent import LPoly
from freefield_kzb.fock import TruncatedFockSpace, energy, vacuum
from freefield_kzb.lie import build_algebra
from freefield_kzb.wakimoto import (WakimotoModule, casimir_check, constants_as_lpoly, current_mode, em_mode,
                                    first_broken_relation, perturbed_constants, solve_constants, verify_affine,
                                    verify_virasoro_and_sugawara, verify_w0)

A1 = build_algebra("A1")
A2 = build_algebra("A2")
HALF = (Fraction(1, 2),)
KAP = sympy.Symbol("kappa")


@pytest.fixture(scope="module")
def a1_module():
    return WakimotoModule(A1, constants=constants_as_lpoly([KAP - 2]))


def test_a1_constant_is_linear_in_kappa():
    (c,) = solve_constants(A1, cutoff=2)
    assert sympy.expand(c - (KAP - 2)) == 0
    assert sympy.Poly(c, KAP).degree() == 1


def test_a2_constants():
    # the chart is not symmetric under the diagram automorphism, so c1 != c2
    assert [sympy.expand(c) for c in solve_constants(A2, cutoff=1)] == [KAP - 2, KAP - 3]


def test_level_and_central_charge(a1_module):
    assert a1_module.level == LPoly.var("kappa") - 2
    c = a1_module.central_charge().to_sympy({"kappa": KAP})
    assert sympy.simplify(c - 3 * (KAP - 2) / KAP) == 0


def test_t0_on_vacuum_is_conformal_weight(a1_module):
    vac = vacuum(HALF)
    out = a1_module.mode("T", 0, vac)
    ((state, coeff),) = out.items()
    assert state == next(iter(vac))
    # (mu|mu+2 rho)/2 kappa with mu = alpha/2
    assert coeff == LPoly.var("kappa", -1) * Fraction(3, 4)


def test_tgh_zero_mode_kills_zero_mode_states(a1_module):
    space = TruncatedFockSpace(A1, HALF, 0, zero_mode_cutoff=3)
    for st in space.w0_basis():
        assert a1_module.mode("Tgh", 0, {st: 1}) == {}


def test_mode_grade_shift(a1_module):
    space = TruncatedFockSpace(A1, HALF, 3)
    T = em_mode(a1_module, "T", -1, space)
    for (i, j) in T.entries:
        assert energy(space.basis[i]) == energy(space.basis[j]) + 1
    F = current_mode(a1_module, "F1", 1, space)
    for (i, j) in F.entries:
        assert energy(space.basis[i]) == energy(space.basis[j]) - 1


@pytest.mark.parametrize("lam,expected", [(HALF, Fraction(3, 2)), ((0,), Fraction(0))])
def test_casimir_a1(lam, expected):
    module = WakimotoModule(A1, constants=constants_as_lpoly([KAP - 2]))
    space = TruncatedFockSpace(A1, lam, 0, zero_mode_cutoff=3)
    assert casimir_check(module, space) == expected


def test_casimir_a2_at_rho():
    module = WakimotoModule(A2, constants=constants_as_lpoly([KAP - 2, KAP - 3]))
    rho = A2.weyl_vector
    space = TruncatedFockSpace(A2, rho, 0, zero_mode_cutoff=2)
    three_rho = tuple(3 * r for r in rho)
    assert casimir_check(module, space) == A2.inner(rho, three_rho) == 6


def test_a1_relations_small_cutoff(a1_module):
    space = TruncatedFockSpace(A1, HALF, 2)
    assert verify_affine(a1_module, space, max_mode=1).ok
    rep = verify_virasoro_and_sugawara(a1_module, space, max_mode=1)
    assert rep.ok
    assert rep.details["central_charge"]
    assert verify_w0(a1_module, space).ok


def test_a2_relations_low_block():
    module = WakimotoModule(A2, constants=constants_as_lpoly([KAP - 2, KAP - 3]))
    space = TruncatedFockSpace(A2, (Fraction(1), Fraction(1, 2)), 1, zero_mode_cutoff=1)
    assert verify_affine(module, space, max_mode=1, max_energy=0).ok
    assert verify_w0(module, space, max_mode=1).ok


def test_perturbing_constant_breaks_a_relation():
    space = TruncatedFockSpace(A1, HALF, 2)
    bad = WakimotoModule(A1, constants=constants_as_lpoly(perturbed_constants([KAP - 2], 0, 1)))
    broken = first_broken_relation(bad, space, max_mode=1)
    assert broken is not None
    good = WakimotoModule(A1, constants=constants_as_lpoly([KAP - 2]))
    assert first_broken_relation(good, space, max_mode=1) is None


def test_symbolic_constants_fail_without_solving():
    module = WakimotoModule(A1)
    space = TruncatedFockSpace(A1, HALF, 1)
    assert not verify_affine(module, space, max_mode=1).ok
