from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_members, sparse_vecs, subsets
from nonatomic.families import make_xF
from nonatomic.l1 import (
    EventuallyPeriodic,
    ExplicitFinite,
    SparseVec,
    add,
    basis,
    empty,
    evens,
    finite,
    full,
    modulus,
    norm1,
    norm_inf,
    odds,
    periodic,
    project,
    scale,
    segment,
    set_complement,
    set_meet,
    set_union,
)


class TestNorms:
    def test_xF_norm_one(self):
        assert norm1(make_xF({2, 5, 7})) == 1

    def test_zero(self):
        assert norm1(SparseVec()) == 0
        assert norm_inf(SparseVec()) == 0

    def test_mixed_signs(self):
        assert norm1(SparseVec({1: F(1, 2), 3: F(-1, 4)})) == F(3, 4)
        assert norm_inf(SparseVec({1: F(1, 2), 3: F(-3, 4)})) == F(3, 4)

    def test_xF_sup(self):
        assert norm_inf(make_xF(range(1, 5))) == F(1, 4)


class TestProjection:
    def test_full_is_identity(self):
        x = SparseVec({1: 2, 4: F(-1, 3)})
        assert project(full(), x) == x

    def test_disjoint_gives_zero(self):
        assert project(finite({10, 11}), SparseVec({1: 1, 2: 1})) == SparseVec()

    def test_evens_on_segment(self):
        p = project(evens(), make_xF(range(1, 5)))
        assert p == SparseVec({2: F(1, 4), 4: F(1, 4)})
        assert norm1(p) == F(1, 2)


class TestAlgebra:
    def test_add_zero(self):
        x = SparseVec({3: F(2, 7)})
        assert add(x, SparseVec()) == x

    def test_negate_then_modulus(self):
        x = SparseVec({1: -2, 5: F(3, 4)})
        assert modulus(scale(-1, x)) == modulus(x)

    def test_cancellation_leaves_empty_storage(self):
        z = add(SparseVec({1: F(1, 2)}), SparseVec({1: F(-1, 2)}))
        assert z == SparseVec()
        assert len(z.entries) == 0

    def test_zero_entries_not_stored(self):
        assert len(SparseVec({1: 0, 2: F(0, 5), 3: 1})) == 1

    def test_uniform_equals_dict_form(self):
        assert make_xF({1, 2}) == SparseVec({1: F(1, 2), 2: F(1, 2)})
        assert hash(make_xF({1, 2})) == hash(SparseVec({1: F(1, 2), 2: F(1, 2)}))

    def test_rejects_floats_and_bad_indices(self):
        with pytest.raises(TypeError):
            SparseVec({1: 0.5})
        with pytest.raises(ValueError):
            SparseVec({0: 1})


class TestSets:
    def test_meet_with_full(self):
        assert set_meet(evens(), full()) == evens()

    def test_evens_odds_disjoint(self):
        assert set_meet(evens(), odds()) == empty()

    def test_crt(self):
        # residues {0} mod 2 and {0} mod 3: enumerate one lcm period
        expected = {r for r in range(6) if r % 2 == 0 and r % 3 == 0}
        M = set_meet(periodic(2, [0]), periodic(3, [0]))
        assert M == periodic(6, expected)
        assert isinstance(M, EventuallyPeriodic) and M.period == 6

    def test_canonical_period(self):
        assert periodic(4, [0, 2]) == evens()
        assert periodic(6, range(6)) == full()

    def test_empty_residues_is_finite(self):
        A = periodic(3, [], threshold=5, head=[1, 4])
        assert isinstance(A, ExplicitFinite) and A == finite({1, 4})

    def test_segment_complement(self):
        C = set_complement(segment(3))
        assert brute_members(C, 10) == set(range(4, 11))

    @given(subsets(), subsets())
    def test_set_algebra_matches_brute_force(self, A, B):
        J = 40
        a, b = brute_members(A, J), brute_members(B, J)
        assert brute_members(set_meet(A, B), J) == a & b
        assert brute_members(set_union(A, B), J) == a | b
        assert brute_members(set_complement(A), J) == set(range(1, J + 1)) - a

    @given(subsets(), st.integers(1, 30), st.integers(0, 30))
    def test_count_in_range(self, A, lo, span):
        r = range(lo, lo + span)
        assert A.count_in(r) == sum(1 for n in r if n in A)
        assert A.count_in(frozenset(r)) == sum(1 for n in r if n in A)

    @given(subsets())
    def test_members(self, A):
        assert A.members(25) == sorted(brute_members(A, 25))

    def test_periodic_periodic_is_periodic(self):
        U = set_union(periodic(2, [1]), periodic(3, [0]))
        assert isinstance(U, EventuallyPeriodic) and U.period == 6


class TestProperties:
    @given(sparse_vecs, sparse_vecs)
    def test_triangle(self, x, y):
        assert norm1(add(x, y)) <= norm1(x) + norm1(y)

    @given(sparse_vecs, subsets())
    def test_complement_additivity(self, x, A):
        assert norm1(project(A, x)) + norm1(project(set_complement(A), x)) == norm1(x)

    @given(sparse_vecs)
    def test_sup_below_l1(self, x):
        assert norm_inf(x) <= norm1(x)

    @given(sparse_vecs, subsets(), subsets())
    def test_projection_composition(self, x, A, B):
        assert project(A, project(B, x)) == project(set_meet(A, B), x)

    @given(sparse_vecs, subsets())
    @settings(max_examples=50)
    def test_mass_and_peak_shortcuts(self, x, A):
        assert x.mass(A) == norm1(project(A, x))
        assert x.peak(A) == norm_inf(project(A, x))

    @given(st.sets(st.integers(1, 30), min_size=1), subsets())
    def test_uniform_projection_shortcuts(self, S, A):
        v = make_xF(S)
        dense = SparseVec({j: F(1, len(S)) for j in S})
        assert v.mass(A) == dense.mass(A)
        assert v.project(A) == dense.project(A)

    def test_basis(self):
        assert basis(4) == SparseVec({4: 1})
