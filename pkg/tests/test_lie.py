import itertools
from fractions import Fraction

import pytest
import sympy

from freefield_kzb.lie import LieError, add, build_algebra, neg, orthonormal_basis


@pytest.fixture(params=["A1", "A2", "A3"])
def alg(request):
    return build_algebra(request.param)


def test_a1_data():
    a = build_algebra("A1")
    assert a.positive_roots == ((1,),)
    assert (a.dim, a.dual_coxeter) == (3, 2)
    assert a.weyl_vector == (Fraction(1, 2),)


def test_a2_data_and_root_order():
    a = build_algebra("A2")
    assert a.positive_roots == ((1, 0), (0, 1), (1, 1))
    assert (a.dim, a.dual_coxeter) == (8, 3)
    assert a.structure_constant((1, 0), (0, 1)) == 1
    assert a.form(a.root_matrix((1, 1)), a.root_matrix((-1, -1))) == 1


def test_inner_products():
    a1, a2 = build_algebra("A1"), build_algebra("A2")
    assert a1.inner((1,), (1,)) == 2
    assert a2.inner((1, 0), (0, 1)) == -1
    half = (Fraction(1, 2),)
    assert a1.inner(half, (Fraction(3, 2),)) == Fraction(3, 2)
    assert a1.casimir_value(half) == Fraction(3, 2)
    assert a1.casimir_value((0,)) == 0


def test_unsupported_label():
    with pytest.raises(LieError):
        build_algebra("B2")
    with pytest.raises(LieError):
        build_algebra("A0")


def test_unknown_generator_and_non_root():
    a = build_algebra("A2")
    with pytest.raises(LieError):
        a.generator("E3")
    with pytest.raises(LieError):
        a.root_matrix((2, 0))
    with pytest.raises(LieError):
        a.root_index((1, -1))


def test_dimension_and_root_closure(alg):
    assert alg.dim == 2 * alg.n_pos + alg.rank
    pos = set(alg.positive_roots)
    for a, b in itertools.product(alg.positive_roots, repeat=2):
        s = add(a, b)
        assert (alg.structure_constant(a, b) != 0) == (s in pos)


def test_root_vectors_are_dual(alg):
    for a in alg.roots:
        for b in alg.roots:
            expected = 1 if a == b else 0
            assert alg.form(alg.root_matrix(a), alg.root_matrix(neg(b))) == expected


def test_sum_of_positive_roots_is_two_rho(alg):
    total = tuple(sum(r[k] for r in alg.positive_roots) for k in range(alg.rank))
    assert total == tuple(2 * x for x in alg.weyl_vector)
    assert alg.dynkin_labels(alg.weyl_vector) == (1,) * alg.rank


def test_bracket_jacobi_and_invariance(alg):
    gens = [alg.root_matrix(r) for r in alg.roots] + [alg.coroot_matrix(i) for i in range(alg.rank)]

    def br(x, y):
        return x * y - y * x

    for x, y, z in itertools.combinations(gens, 3):
        assert br(x, br(y, z)) + br(y, br(z, x)) + br(z, br(x, y)) == sympy.zeros(*x.shape)
    for a in alg.positive_roots:
        for b in alg.positive_roots:
            ea, eb, emb = alg.root_matrix(a), alg.root_matrix(b), alg.root_matrix(neg(b))
            assert alg.form(ea, br(eb, emb)) == alg.form(br(ea, eb), emb)


def test_decompose_roundtrip(alg):
    for tag in alg.generator_tags():
        X = alg.generator(tag)
        parts = alg.decompose(X)
        rebuilt = sympy.zeros(*X.shape)
        for key, c in parts.items():
            rebuilt += c * (alg.coroot_matrix(key[1]) if key[0] == "H" else alg.root_matrix(key))
        assert rebuilt == X


def test_orthonormal_basis(alg):
    basis = orthonormal_basis(alg)
    for r, u in enumerate(basis):
        for s, v in enumerate(basis):
            val = sum(u[i] * alg.cartan_matrix[i][j] * v[j] for i in range(alg.rank) for j in range(alg.rank))
            assert val == pytest.approx(1.0 if r == s else 0.0, abs=1e-12)


def test_describe_lists_structure_constants():
    d = build_algebra("A2").describe()
    assert d["dim"] == 8
    assert {"alpha": [1, 0], "beta": [0, 1], "f": 1} in d["structure_constants"]
