import itertools

import numpy as np
import pytest

from dualpolar.fields import field_make
from dualpolar.polar import (EnumerationLimit, PolarError, Subspace, enumerate_generators, form_make,
                             generator_count, is_totally_isotropic)


def all_planes_pg3(F):
    """Every 2-dimensional subspace of GF(q)^4 as an RREF tuple."""
    vecs = [v for v in itertools.product(range(F.q), repeat=4) if any(v)]
    out = set()
    for a, b in itertools.combinations(vecs, 2):
        R = F.rref([a, b])
        if len(R) == 2:
            out.add(tuple(map(tuple, R)))
    return out


def test_form_constructors():
    W = form_make("W", 2, 3)
    assert W.dim == 4 and W.field.q == 3
    Q = form_make("Q", 3, 3)
    assert Q.dim == 7 and Q.field.q == 3
    H = form_make("H", 3, 2)
    assert H.dim == 6 and H.field.q == 4
    assert [H.conj[x] for x in range(4)] == [H.field.pow(x, 2) for x in range(4)]


def test_form_invariants():
    for q in (2, 3, 4, 5):
        W = form_make("W", 3, q)
        F = W.field
        assert np.array_equal(W.gram, F.vneg(W.gram.T))
        assert np.all(np.diag(W.gram) == 0)
        assert F.rank(W.gram.tolist()) == W.dim
        H = form_make("H", 3, q)
        assert np.array_equal(H.gram, H.conj[H.gram.T])
        assert H.field.rank(H.gram.tolist()) == H.dim
        Q = form_make("Q", 3, q)
        e0 = np.zeros(Q.dim, dtype=np.int64)
        e0[0] = 1
        assert Q.quadratic(e0[None, :])[0] != 0


def test_bad_parameters():
    with pytest.raises(PolarError):
        form_make("Q", 1, 3)
    with pytest.raises(PolarError):
        form_make("W", 2, 6)
    with pytest.raises(PolarError):
        form_make("X", 2, 3)


def test_single_vector_isotropic_in_w32():
    S = form_make("W", 2, 2)
    for v in itertools.product(range(2), repeat=4):
        if any(v):
            assert is_totally_isotropic(S, np.array([v]))


def test_x0_axis_not_isotropic_in_q63():
    S = form_make("Q", 3, 3)
    U = np.eye(7, dtype=np.int64)[:3]
    assert not is_totally_isotropic(S, U)


def test_hyperbolic_pair_not_isotropic_in_w53():
    S = form_make("W", 3, 3)
    U = np.zeros((2, 6), dtype=np.int64)
    U[0, 0] = 1
    U[1, 3] = 1
    assert S.bilinear(U[0], U[1]) == 1  # Gram evaluation oracle
    assert not is_totally_isotropic(S, U)


def test_dimension_mismatch():
    S = form_make("W", 2, 3)
    with pytest.raises(PolarError):
        is_totally_isotropic(S, np.zeros((1, 5), dtype=np.int64))


def test_char2_quadric_uses_quadratic_form():
    S = form_make("Q", 2, 2)
    # the polarisation vanishes on e0 in characteristic 2 but Q(e0) = 1
    e0 = np.zeros((1, 5), dtype=np.int64)
    e0[0, 0] = 1
    assert S.bilinear(e0[0], e0[0]) == 0
    assert not is_totally_isotropic(S, e0)
    U = np.zeros((2, 5), dtype=np.int64)
    U[0, 1] = U[1, 3] = 1
    assert is_totally_isotropic(S, U)
    U[1, 0] = 1  # e3 + e0: Q = 1
    assert not is_totally_isotropic(S, U)


def test_w32_matches_brute_force():
    S = form_make("W", 2, 2)
    maximals, nexts = enumerate_generators(S)
    brute = sorted(P for P in all_planes_pg3(S.field) if is_totally_isotropic(S, np.array(P)))
    assert len(brute) == 15
    assert sorted(tuple(map(tuple, m.tolist())) for m in maximals) == brute
    assert len(nexts) == 15  # every point of PG(3,2) is isotropic


@pytest.mark.parametrize("family,d,q", [
    ("Q", 2, 2), ("Q", 2, 3), ("Q", 3, 2), ("Q", 3, 3), ("W", 2, 3), ("W", 3, 2),
    ("W", 3, 3), ("H", 2, 2), ("H", 3, 2), ("W", 2, 4), ("Q", 2, 4), ("H", 2, 3),
])
def test_counts_and_properties(family, d, q):
    S = form_make(family, d, q)
    maximals, nexts = enumerate_generators(S)
    assert len(maximals) == generator_count(family, d, q)
    F = S.field
    for m in maximals:
        assert is_totally_isotropic(S, m)
        assert np.array_equal(np.array(F.rref(m.tolist())), m)
    for m in nexts:
        assert is_totally_isotropic(S, m)
    flat = maximals.reshape(len(maximals), -1)
    assert all(tuple(a) < tuple(b) for a, b in zip(flat.tolist(), flat[1:].tolist()))


def test_maximals_admit_no_isotropic_extension():
    S = form_make("W", 3, 2)
    maximals, _ = enumerate_generators(S)
    F = S.field
    vecs = np.array(list(itertools.product(range(2), repeat=6))[1:])
    for m in maximals[:20]:
        for v in vecs:
            ext = np.vstack([m, v])
            if F.rank(ext.tolist()) == 4:
                assert not is_totally_isotropic(S, ext)


def test_next_to_maximals_lie_in_two_maximals():
    S = form_make("Q", 3, 3)
    maximals, nexts = enumerate_generators(S)
    F = S.field
    # containment oracle: N lies in M iff stacking them does not raise the rank
    rng = np.random.default_rng(0)
    for j in rng.choice(len(nexts), 30, replace=False):
        N = nexts[j]
        inside = sum(F.rank(np.vstack([N, M]).tolist()) == 3 for M in maximals)
        assert inside == 4  # s + 1 for DQ(6,3), in particular at least two


def test_known_counts():
    assert generator_count("Q", 3, 3) == 1120
    assert generator_count("W", 3, 3) == 1120
    assert generator_count("H", 3, 2) == 891
    assert generator_count("W", 2, 2) == 15


def test_q63_and_h54_enumeration_counts():
    assert len(enumerate_generators(form_make("Q", 3, 3))[0]) == 1120
    assert len(enumerate_generators(form_make("H", 3, 2))[0]) == 891


def test_enumeration_cap():
    with pytest.raises(EnumerationLimit):
        enumerate_generators(form_make("Q", 3, 5), max_count=1000)


def test_subspace_canonical():
    F = field_make(3)
    a = Subspace.from_rows(F, [[1, 1, 0], [0, 1, 1]])
    b = Subspace.from_rows(F, [[1, 2, 1], [2, 0, 1]])
    assert a == b and a.key(3) == b.key(3)
    assert a.rank == 2 and a.proj_dim == 1
