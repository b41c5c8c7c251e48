from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from sheafflow.linalg import (
    F2,
    QQ,
    PrimeField,
    Reducer,
    SparseMatrix,
    field_from_name,
    kernel_basis,
    rank,
    set_dense_threshold,
    solve,
)

F5 = PrimeField(5)


def brute_rank_f2(rows):
    """Rank over F2 by counting the row space: 2**rank distinct combinations."""
    if not rows:
        return 0
    span = set()
    for coeffs in itertools.product((0, 1), repeat=len(rows)):
        v = tuple(sum(c * r[j] for c, r in zip(coeffs, rows)) % 2 for j in range(len(rows[0])))
        span.add(v)
    return len(span).bit_length() - 1


def test_rank_small_cases():
    assert rank(SparseMatrix(4, 4, F2)) == 0
    assert rank(SparseMatrix.identity(3, F2)) == 3
    assert rank(SparseMatrix.from_dense([[1, 1], [1, 1]], F2)) == 1


def test_kernel_small_cases():
    assert kernel_basis(SparseMatrix.identity(2, F2)) == []
    assert len(kernel_basis(SparseMatrix(1, 3, F2))) == 3
    assert kernel_basis(SparseMatrix.from_dense([[1, 1, 0], [0, 1, 1]], F2)) == [[1, 1, 1]]


def test_solve_small_cases():
    b = [1, 0, 1]
    assert solve(SparseMatrix.identity(3, F2), b) == b
    assert solve(SparseMatrix(2, 2, F2), [1, 0]) is None
    # four candidates over F2; (1,0) is the pivoted choice
    M = SparseMatrix.from_dense([[1, 1]], F2)
    cands = [x for x in itertools.product((0, 1), repeat=2) if M.matvec(list(x)) == [1]]
    assert sorted(cands) == [(0, 1), (1, 0)]
    assert solve(M, [1]) == [1, 0]


def test_solve_dimension_mismatch():
    with pytest.raises(ValueError):
        solve(SparseMatrix.identity(2, F2), [1, 0, 0])


def test_no_zero_entries_and_range():
    M = SparseMatrix(2, 2, F5, {(0, 0): 5, (1, 1): 3})
    assert M.entries() == {(1, 1): 3}
    with pytest.raises(IndexError):
        SparseMatrix(2, 2, F2, {(2, 0): 1})


def test_field_names():
    assert field_from_name("f2") is F2
    assert field_from_name("fp(7)").p == 7
    assert field_from_name("fp3").p == 3
    assert field_from_name("rational") == QQ
    with pytest.raises(ValueError):
        field_from_name("fp(6)")


def test_rational_arithmetic_exact():
    M = SparseMatrix.from_dense([[2, 1], [1, Fraction(1, 2)]], QQ)
    assert rank(M) == 1
    x = solve(SparseMatrix.from_dense([[3, 0], [0, 7]], QQ), [1, 1])
    assert x == [Fraction(1, 3), Fraction(1, 7)]


def test_dense_path_agrees_with_sparse():
    M = SparseMatrix.from_dense([[1, 2, 3], [2, 4, 1], [3, 1, 4]], F5)
    set_dense_threshold(0)
    try:
        sparse_r = rank(M)
    finally:
        set_dense_threshold(4096)
    assert rank(M) == sparse_r


def matrices(field, max_dim=6):
    vals = st.integers(0, field.p - 1) if hasattr(field, "p") else st.integers(-3, 3)

    @st.composite
    def build(draw):
        r = draw(st.integers(0, max_dim))
        c = draw(st.integers(0, max_dim))
        data = [[draw(vals) for _ in range(c)] for _ in range(r)]
        ent = {(i, j): v for i, row in enumerate(data) for j, v in enumerate(row) if v}
        return SparseMatrix(r, c, field, ent)

    return build()


@pytest.mark.parametrize("field", [F2, F5, QQ], ids=lambda f: f.name)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_rank_nullity_and_transpose(field, data):
    M = data.draw(matrices(field))
    ker = kernel_basis(M)
    assert rank(M) + len(ker) == M.cols
    assert rank(M) == rank(M.transpose())
    for v in ker:
        assert all(x == 0 for x in M.matvec(v))


@settings(max_examples=60, deadline=None)
@given(M=matrices(F2, 5))
def test_rank_matches_brute_force(M):
    assert rank(M) == brute_rank_f2(M.to_dense())


@pytest.mark.parametrize("field", [F2, F5, QQ], ids=lambda f: f.name)
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_solve_verifies(field, data):
    M = data.draw(matrices(field))
    x0 = [field(data.draw(st.integers(0, 4))) for _ in range(M.cols)]
    b = M.matvec(x0)
    x = solve(M, b)
    assert x is not None and M.matvec(x) == b
    # the reducer agrees
    red = Reducer(field, track=True)
    for c, col in enumerate(M.columns()):
        red.add(red._pack(col), c)
    comb = red.solve(red._pack({i: v for i, v in enumerate(b) if v != 0}))
    assert comb is not None
    xs = [field.zero] * M.cols
    for k, v in (red.unpack(comb) if field is F2 else comb).items():
        xs[k] = v
    assert M.matvec(xs) == b


@pytest.mark.parametrize("field", [F2, F5, QQ], ids=lambda f: f.name)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_dump_round_trip_and_determinism(field, data):
    M = data.draw(matrices(field))
    text = M.dumps()
    assert SparseMatrix.loads(text) == M
    assert SparseMatrix.loads(text).dumps() == text
    assert kernel_basis(M) == kernel_basis(SparseMatrix.loads(text))


@settings(max_examples=40, deadline=None)
@given(M=matrices(F2, 6))
def test_reducer_kernel_relations(M):
    red = Reducer(F2, track=True)
    n_rel = 0
    for c, col in enumerate(M.columns()):
        new, combo = red.add(red._pack(col), c)
        if not new:
            n_rel += 1
            rel = [0] * M.cols
            for k in red.unpack(combo):
                rel[k] = 1
            assert all(x == 0 for x in M.matvec(rel))
    assert red.rank == rank(M) and n_rel == M.cols - red.rank
