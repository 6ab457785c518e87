from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonatomic.families import (
    TLambdaSpec,
    check_t_lambda,
    embed_linf,
    family_from_sets,
    generate_t_lambda,
    make_xF,
    modulate,
    upper_density_family,
)
from nonatomic.l1 import SparseVec, basis, evens


def test_make_xF():
    assert make_xF({2, 5, 7}) == SparseVec({2: F(1, 3), 5: F(1, 3), 7: F(1, 3)})
    assert make_xF({9}) == basis(9)
    assert make_xF(range(1, 5)).project(evens()).norm1() == F(1, 2)
    with pytest.raises(ValueError):
        make_xF(set())


def test_upper_density_small():
    x = upper_density_family(3)
    assert list(x) == [basis(1), SparseVec({1: F(1, 2), 2: F(1, 2)}), SparseVec({1: F(1, 3), 2: F(1, 3), 3: F(1, 3)})]
    assert x.sup_norm == 1 and x.ground == 3


def test_upper_density_members():
    x = upper_density_family(100)
    assert all(v.norm1() == 1 for v in x)
    assert x[100].norm_inf() == F(1, 100)


def test_family_from_sets():
    assert list(family_from_sets([{1}, {1, 2}, {1, 2, 3}])) == list(upper_density_family(3))
    x = family_from_sets([range(1, n + 1) for n in range(1, 8)])
    assert all(x[n].norm_inf() == F(1, n) for n in range(1, 8))
    with pytest.raises(ValueError):
        family_from_sets([{1}, set()])


def _count_compare(sizes, lam):
    """Independent oracle: count sizes, compare q_m against 2^(lam m) via floats of small ints."""
    counts = {}
    for s in sizes:
        counts[s] = counts.get(s, 0) + 1
    return all(q <= 2 ** (lam * m) for m, q in counts.items())


@pytest.mark.parametrize(
    "sizes, expected",
    [((1, 1, 2, 2, 2, 3), True), ((1, 1, 1), False), ((), True)],
)
def test_check_t_lambda(sizes, expected):
    sets = [frozenset(range(1, s + 1)) for s in sizes]
    rep = check_t_lambda(TLambdaSpec(F(1), tuple(sets)))
    assert rep.ok is expected is _count_compare(sizes, 1)


def test_check_t_lambda_report_rows():
    sets = [frozenset(range(1, s + 1)) for s in (1, 1, 2, 2, 2, 3)]
    rows = check_t_lambda(TLambdaSpec(F(1), tuple(sets))).rows
    assert [(m, q, w) for m, q, _, w in rows] == [(1, 2, True), (2, 3, True), (3, 1, True)]


def test_rational_lambda_exact():
    # 2^(m/2) with m = 2 is exactly 2: two sets allowed, three not
    two = tuple(frozenset({i, i + 1}) for i in (1, 3))
    three = two + (frozenset({7, 8}),)
    assert check_t_lambda(TLambdaSpec(F(1, 2), two)).ok
    assert not check_t_lambda(TLambdaSpec(F(1, 2), three)).ok


@given(st.lists(st.integers(1, 5), max_size=30), st.fractions(min_value=F(1, 4), max_value=2, max_denominator=6), st.fractions(min_value=0, max_value=2, max_denominator=6))
def test_check_t_lambda_monotone_in_lambda(sizes, lam, bump):
    spec = TLambdaSpec(lam, tuple(frozenset(range(1, s + 1)) for s in sizes))
    looser = TLambdaSpec(lam + bump, spec.sets)
    if check_t_lambda(spec).ok:
        assert check_t_lambda(looser).ok


def test_generate_t_lambda():
    spec = generate_t_lambda(1, (4, 12), 1, 64, seed=5)
    assert len(spec.sets) == 9
    assert [len(F_) for F_ in spec.sets] == list(range(4, 13))
    assert all(F_ <= frozenset(range(1, 65)) for F_ in spec.sets)
    assert check_t_lambda(spec).ok
    assert generate_t_lambda(1, (4, 12), 1, 64, seed=5) == spec
    assert generate_t_lambda(1, (4, 12), 1, 64, seed=6) != spec


def test_generate_t_lambda_infeasible():
    with pytest.raises(ValueError):
        generate_t_lambda(1, (1, 2), 3, 10, seed=0)  # 3 > 2^1


def test_modulate():
    x = upper_density_family(2)
    assert list(modulate([1, 1], x)) == list(x)
    z = modulate([0, 0], x)
    assert all(not v for v in z) and z.sup_norm == 0
    y = modulate([1, 2], x)
    assert y[2].norm1() == 2 and y.sup_norm == 2


@given(st.lists(st.fractions(max_denominator=7), min_size=4, max_size=4), st.lists(st.fractions(max_denominator=7), min_size=4, max_size=4))
def test_modulate_composes(a, b):
    x = family_from_sets([{1, 2}, {3}, {1, 4, 5}, {2, 6}])
    ab = [p * q for p, q in zip(a, b)]
    assert list(modulate(a, modulate(b, x))) == list(modulate(ab, x))


def test_embed_linf():
    H = [{1, 2}, {3, 4, 5}, {6}]
    x = embed_linf([1, -2, 3], H)
    assert x.window_sup() == 3
    assert embed_linf([0, 0, 0], H).window_sup() == 0
    assert list(embed_linf([1] * 5, [range(1, n + 1) for n in range(1, 6)])) == list(upper_density_family(5))


def test_sup_bound_enforced():
    from nonatomic.families import SeqFamily

    with pytest.raises(ValueError):
        SeqFamily.from_vectors([SparseVec({1: 2})], sup_norm=1)
