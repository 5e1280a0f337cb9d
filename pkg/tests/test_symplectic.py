import numpy as np
import pytest
from hypothesis import given, strategies as st

from cncsim.dense import pauli_matrix
from cncsim.symplectic import (
    DimensionError,
    JwSet,
    NotSymplecticError,
    PauliPoint,
    PhasedRow,
    beta,
    build_jw_decomposition,
    complete_to_jw,
    conjugate_basis,
    gaussian_elimination,
    in_span,
    inverse_jw_transform,
    jw_expand,
    jw_transform,
    phi,
    row_product,
    sgso,
    solve_gf2,
    span_coordinates,
    split_commuting,
    symplectic_complement,
    symplectic_form,
)

from conftest import points, random_point


def test_label_round_trip():
    p = PauliPoint.from_label("XYZI")
    assert str(p) == "XYZI"
    assert p.bitstring() == "11000110"
    assert PauliPoint.from_bitstring(p.bitstring()) == p
    assert PauliPoint.from_packed(p.packed, 4) == p
    q, sign = PauliPoint.parse("-ZZ")
    assert sign == 1 and str(q) == "ZZ"


def test_bad_inputs():
    with pytest.raises(ValueError):
        PauliPoint.from_label("XQ")
    with pytest.raises(DimensionError):
        PauliPoint(1, 2, 0)
    with pytest.raises(DimensionError):
        PauliPoint.from_label("X") + PauliPoint.from_label("XX")


def test_symplectic_form_examples():
    x, z, y = (PauliPoint.from_label(s) for s in "XZY")
    assert symplectic_form(x, z) == 1
    assert symplectic_form(x, y) == 1
    assert symplectic_form(x, x) == 0
    assert symplectic_form(PauliPoint.from_label("XX"), PauliPoint.from_label("ZZ")) == 0


def test_phi_counts_y_letters():
    assert phi(PauliPoint.from_label("YIY")) == 2
    assert phi(PauliPoint.from_label("XZ")) == 0


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(points(n), points(n))))
def test_symplectic_form_matches_dense_commutator(ab):
    a, b = ab
    A, B = pauli_matrix(a), pauli_matrix(b)
    sign = -1 if symplectic_form(a, b) else 1
    assert np.allclose(A @ B, sign * B @ A)


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(points(n), points(n))))
def test_beta_matches_dense_product(ab):
    a, b = ab
    if symplectic_form(a, b):
        with pytest.raises(NotSymplecticError):
            beta(a, b)
        return
    lhs = pauli_matrix(a) @ pauli_matrix(b)
    rhs = (-1) ** beta(a, b) * pauli_matrix(a + b)
    assert np.allclose(lhs, rhs)


@given(st.integers(1, 3).flatmap(points))
def test_pauli_operators_hermitian_involutions(a):
    A = pauli_matrix(a)
    assert np.allclose(A, A.conj().T)
    assert np.allclose(A @ A, np.eye(A.shape[0]))


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(points(n), points(n), points(n))))
def test_row_product_is_associative_on_commuting_triples(abc):
    a, b, c = abc
    if symplectic_form(a, b) or symplectic_form(a, c) or symplectic_form(b, c):
        return
    ra, rb, rc = PhasedRow(a, 1), PhasedRow(b, 0), PhasedRow(c, 1)
    assert row_product(row_product(ra, rb), rc) == row_product(ra, row_product(rb, rc))


def test_gaussian_elimination_rank_and_span(rng):
    for _ in range(50):
        n = int(rng.integers(1, 5))
        vs = [random_point(rng, n) for _ in range(int(rng.integers(1, 2 * n + 2)))]
        res = gaussian_elimination(vs)
        mat = np.array([v.bits() for v in vs], dtype=np.int64)
        # independent GF(2) rank by brute force over all combinations
        combos = {
            tuple(np.bitwise_xor.reduce(mat[[i for i in range(len(vs)) if s >> i & 1]], axis=0) % 2)
            if s else tuple([0] * 2 * n)
            for s in range(1 << len(vs))
        }
        assert 1 << res.rank == len(combos)
        target = random_point(rng, n)
        assert in_span(target, vs) == (target.bits() in combos)
        if res.rank < len(vs):
            with pytest.raises(ValueError):
                span_coordinates(target, vs)
            continue
        coords = span_coordinates(target, vs)
        assert (coords is not None) == in_span(target, vs)
        if coords is not None:
            total = PauliPoint.zero(n)
            for c, v in zip(coords, vs):
                if c:
                    total = total + v
            assert total == target


def test_solve_gf2():
    # x0 + x1 = 1, x1 = 1  ->  x = (0, 1)
    assert solve_gf2([0b11, 0b10], [1, 1], 2) == [0, 1]
    assert solve_gf2([0b1, 0b1], [0, 1], 1) is None


def test_symplectic_complement(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        vs = [random_point(rng, n) for _ in range(int(rng.integers(1, n + 1)))]
        comp = symplectic_complement(vs, n)
        assert len(comp) == 2 * n - gaussian_elimination(vs).rank
        assert all(symplectic_form(c, v) == 0 for c in comp for v in vs)


def test_sgso_pairs(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        vs = [random_point(rng, n) for _ in range(2 * n)]
        pairs, residual = sgso(vs)
        for i, (e, f) in enumerate(pairs):
            assert symplectic_form(e, f) == 1
            for e2, f2 in pairs[i + 1:]:
                assert not any(symplectic_form(u, w) for u in (e, f) for w in (e2, f2))
        for r in residual:
            assert not any(symplectic_form(r, u) for e, f in pairs for u in (e, f))
        assert 2 * len(pairs) + len(residual) == gaussian_elimination(vs).rank


def test_jw_transform_canonical():
    n = 2
    pairs = [(PauliPoint.unit_x(i, n), PauliPoint.unit_z(i, n)) for i in range(n)]
    jw = jw_transform(pairs)
    assert [str(a) for a in jw] == ["XI", "ZI", "YX", "YZ", "YY"]
    assert jw.is_valid()
    assert inverse_jw_transform(jw.elements) == pairs


def test_jw_expand_and_split():
    n = 2
    jw = jw_transform([(PauliPoint.unit_x(i, n), PauliPoint.unit_z(i, n)) for i in range(n)])
    b = PauliPoint.from_label("XX")
    nu = jw_expand(b, jw)
    total = PauliPoint.zero(n)
    for c, a in zip(nu, jw.elements[:-1]):
        if c:
            total = total + a
    assert total == b
    anti, comm = split_commuting(b, jw)
    assert sorted(anti + comm) == list(range(5))
    assert all(symplectic_form(jw[k], b) for k in anti)


def test_jw_set_violations():
    bad = JwSet(1, (PauliPoint.from_label("X"), PauliPoint.from_label("X"), PauliPoint.zero(1)))
    assert bad.violations()


def test_complete_to_jw(rng):
    for n in (1, 2, 3):
        jw = complete_to_jw([PauliPoint.unit_x(0, n)], n)
        assert jw.is_valid() and len(jw) == 2 * n + 1
        assert jw[0] == PauliPoint.unit_x(0, n)
    with pytest.raises(NotSymplecticError):
        complete_to_jw([PauliPoint.from_label(s) for s in "XZY"], 1)


def test_jw_decomposition_random(rng):
    from cncsim.cnc_space import iter_isotropic_subspaces

    for n in (1, 2, 3):
        for d in range(n + 1):
            subs = list(iter_isotropic_subspaces(n, d))
            for idx in rng.choice(len(subs), min(5, len(subs)), replace=False):
                dec = build_jw_decomposition(list(subs[idx]), n)
                assert dec.violations() == []
                assert dec.m == n - d


def test_conjugate_basis_fails_outside_space():
    n = 1
    with pytest.raises(NotSymplecticError):
        conjugate_basis([PauliPoint.unit_z(0, n)], [PauliPoint.unit_z(0, n)], n)
