from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import interval_oracle

from sheafflow.cells import CellSet, cells_from_values, circle, interval_grid, product, sphere2
from sheafflow.flowmodels import flat_model
from sheafflow.homological import cohomology_ranks
from sheafflow.linalg import F2, QQ, PrimeField
from sheafflow.sheaves import (
    DIRECTIONS,
    CellularSheaf,
    HomComplex,
    SheafMorphism,
    bar_resolution,
    cellular_resolution,
    constant_on,
    constant_summand,
    ext_ranks,
    gamma_stalk,
    global_sections_complex,
    hom_sheaf,
    lift_ext_class,
    micro_test,
    restrict_slice,
    sheaf_cocone,
    sheaf_cone,
    sheaf_shift,
    stalk,
    stalk_table,
    write_stalk_csv,
    zero_sheaf,
)


def whole(X):
    return CellSet(X, range(len(X)), "closed")


def flat(m=2, window=1):
    M = flat_model(m, window)
    return M, M.complex


def region(M, fn, kind):
    return cells_from_values(M.complex, {v: fn(M.radius[v], M.row[v]) for v in M.complex.vertices}, kind, tol=0)


def origin(M):
    return next(v for v in M.complex.vertices if M.radius[v] == 0 and M.row[v] == 0)


# constant sheaves


@pytest.mark.parametrize("field", [F2, PrimeField(3), QQ])
def test_constant_on_stalks(field):
    M, X = flat()
    for kind, fn in (("open", lambda x, t: abs(x) + abs(t) - 2), ("closed", lambda x, t: t)):
        Z = region(M, fn, kind)
        F = constant_on(Z, field, model=M)
        for c in range(len(X)):
            assert F.stalk_ranks(c) == ({0: 1} if c in Z else {})


def test_constant_on_requires_cellset():
    with pytest.raises(TypeError):
        constant_on({0, 1})


def test_constant_on_empty_is_zero():
    X = circle(4)
    F = constant_on(CellSet(X, set()))
    assert len(F) == 0
    assert global_sections_complex(F).total_dim == 0


def test_cellular_and_bar_agree():
    M, X = flat()
    Z = region(M, lambda x, t: abs(x) - t, "open")
    A = cellular_resolution(Z)
    B = bar_resolution(Z)
    assert A is not None
    for c in range(len(X)):
        assert A.stalk_ranks(c) == B.stalk_ranks(c)
    assert len(A) < len(B)


def test_disconnected_locally_closed_set():
    # a vertex plus a disjoint open edge
    X = circle(5)
    e = X.cells_of_dim(1)[2]
    v = X.vertices[0]
    Z = CellSet(X, {e, v})
    F = constant_on(Z, method="auto")
    assert [F.stalk_ranks(c) for c in range(len(X))] == [({0: 1} if c in Z else {}) for c in range(len(X))]
    B = constant_on(Z, method="bar")
    assert [B.stalk_ranks(c) for c in range(len(X))] == [F.stalk_ranks(c) for c in range(len(X))]


def test_stalk_examples():
    M, X = flat()
    C = region(M, lambda x, t: t, "closed")
    U = region(M, lambda x, t: t, "open")
    inner = next(c for c in C.members if all(M.row[v] < 0 for v in X.vertices_of(c)))
    wall = origin(M)
    assert stalk(constant_on(C, model=M), inner) == {0: 1}
    assert stalk(constant_on(U, model=M), wall) == {}
    assert stalk(constant_on(C, model=M), wall) == {0: 1}


def test_stalk_table_and_csv(tmp_path):
    X = circle(3)
    F = constant_on(whole(X))
    rows = stalk_table(F)
    assert rows == [(c, 0, 1) for c in range(len(X))]
    p = tmp_path / "s.csv"
    write_stalk_csv(F, p)
    assert p.read_text().splitlines()[0] == "cell,degree,rank"


def test_json_dump_lists_summands():
    import json

    X = circle(3)
    d = json.loads(constant_on(whole(X)).to_json())
    assert isinstance(d, dict) and d


# global sections


def test_global_sections_sphere():
    X = sphere2(1)
    assert global_sections_complex(constant_on(whole(X))).cohomology_ranks() == {0: 1, 2: 1}
    assert global_sections_complex(zero_sheaf(X)).cohomology_ranks() == {}


def _staircase(m):
    C = circle(m)
    P = product(C, C)
    ids = {ab: i for i, ab in enumerate(P.pairs)}
    edge = {}
    for e in C.cells_of_dim(1):
        a, b = sorted(C.vertices_of(e))
        edge[(a, b)] = edge[(b, a)] = e
    vs = C.vertices
    cells = set()
    for k in range(m):
        a, b = vs[k], vs[(k + 1) % m]
        cells |= {ids[(a, a)], ids[(edge[(a, b)], a)], ids[(b, a)], ids[(b, edge[(a, b)])]}
    return P, cells


def test_global_sections_staircase_diagonal():
    P, cells = _staircase(5)
    Z = CellSet(P, cells, "closed")
    assert global_sections_complex(constant_on(Z)).cohomology_ranks() == {0: 1, 1: 1}


# Ext


def test_ext_of_constant_is_cohomology():
    X = circle(6)
    K = constant_on(whole(X))
    assert ext_ranks(K, K) == {0: 1, 1: 1}
    assert ext_ranks(zero_sheaf(X), K) == {}
    assert cohomology_ranks(hom_sheaf(K, K)) == {0: 1, 1: 1}


def test_ext_open_disk_into_closure():
    M, X = flat()
    U = region(M, lambda x, t: abs(x) + abs(t) - 2, "open")
    assert ext_ranks(constant_on(U), constant_on(U.closure())) == {0: 1}


def test_hom_sheaf_rejects_mismatch():
    A, B = circle(3), circle(3)
    with pytest.raises(ValueError):
        ext_ranks(constant_on(whole(A)), constant_on(whole(B)))
    with pytest.raises(ValueError):
        hom_sheaf(constant_summand(whole(A)), constant_on(whole(A)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_ext_matches_interval_oracle(seed):
    rng = random.Random(seed)
    X = product(circle(4), interval_grid(0, 2, 1))
    U = CellSet(X, X.star(rng.sample(range(len(X)), rng.randint(1, 4))), "open")
    C = CellSet(X, X.closure(rng.sample(range(len(X)), rng.randint(1, 8))), "closed")
    assert ext_ranks(constant_on(U), constant_summand(C)) == interval_oracle(X, U.members & C.members)


# triangles


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_open_closed_triangle(seed):
    # K_U -> K_X -> K_{X - U}: Euler characteristics add, ranks obey the LES bound
    rng = random.Random(seed)
    X = product(circle(4), interval_grid(0, 1, 1))
    U = CellSet(X, X.star(rng.sample(range(len(X)), rng.randint(1, 3))), "open")
    parts = [constant_on(U), constant_on(whole(X)), constant_on(U.complement())]
    r = [global_sections_complex(F).cohomology_ranks() if len(F) else {} for F in parts]
    chi = [sum((-1) ** k * v for k, v in x.items()) for x in r]
    assert chi[1] == chi[0] + chi[2]
    for k in range(-1, 4):
        assert r[1].get(k, 0) <= r[0].get(k, 0) + r[2].get(k, 0)


# slices


def test_restrict_slice_examples():
    M, X = flat(2, 2)
    P = M.half_turn
    below = constant_on(region(M, lambda x, t: abs(x) + t, "closed"), model=M)
    G, new = restrict_slice(below, 0.0)
    diag = {new[c] for c in M.slice_cells(0) if all(M.radius[v] == 0 for v in X.vertices_of(c))}
    assert diag
    for c in range(len(G.complex)):
        assert G.stalk_ranks(c) == ({0: 1} if c in diag else {})
    Z2 = region(M, lambda x, t: abs(x) - (t - P), "open")
    G2, _ = restrict_slice(constant_on(Z2, model=M), row=0)
    assert all(not G2.stalk_ranks(c) for c in range(len(G2.complex)))
    Z0, _ = restrict_slice(CellularSheaf(X, [], [], model=M), row=1)
    assert len(Z0) == 0
    with pytest.raises(ValueError):
        restrict_slice(below, 0.1)


@settings(max_examples=15, deadline=None)
@given(st.integers(-3, 3), st.integers(-2, 2), st.sampled_from(["open", "closed"]))
def test_stalk_locality(row, shift, kind):
    M, X = flat(2, 1)
    F = constant_on(region(M, lambda x, t: abs(x) - t + 2 * shift, kind), model=M)
    G, new = restrict_slice(F, row=row)
    for c in M.slice_cells(row):
        assert G.stalk_ranks(new[c]) == F.stalk_ranks(c)


# cones


def test_cone_of_identity_is_acyclic():
    M, X = flat()
    F = constant_on(region(M, lambda x, t: t, "closed"), model=M)
    ident = lift_ext_class(F, F, 0)
    assert not ident.is_null_homotopic()
    C = sheaf_cone(ident)
    assert all(not C.stalk_ranks(c) for c in range(len(X)))


def test_cone_of_zero_is_sum():
    M, X = flat()
    F = constant_on(region(M, lambda x, t: t, "closed"), model=M)
    G = constant_on(region(M, lambda x, t: -t, "closed"), model=M)
    zero = SheafMorphism(F, G, 0, {})
    C = sheaf_cone(zero)
    for c in range(len(X)):
        want = {}
        for d, r in F.stalk_ranks(c).items():
            want[d - 1] = want.get(d - 1, 0) + r
        for d, r in G.stalk_ranks(c).items():
            want[d] = want.get(d, 0) + r
        assert C.stalk_ranks(c) == want


def test_shift_moves_degrees():
    X = circle(4)
    F = constant_on(whole(X))
    G = sheaf_shift(F, 2)
    assert G.stalk_ranks(0) == {-2: 1}
    assert sheaf_shift(F, 0) is F


def test_cocone_blocks():
    M, X = flat()
    F = constant_on(region(M, lambda x, t: t, "closed"), model=M)
    C = sheaf_cocone(lift_ext_class(F, F, 0))
    assert list(C.blocks["source"]) == list(range(len(F)))
    assert len(C.blocks["target"]) == len(F)


def test_morphism_check_rejects_non_cocycle():
    X = circle(4)
    F = constant_on(whole(X))
    H = HomComplex(F, F)
    basis, _ = H.basis(0)
    bad = [e for e in basis if H.d(0).apply(H.components_to_vector(0, {e: 1}))]
    assert bad
    with pytest.raises(ValueError):
        SheafMorphism(F, F, 0, {bad[0]: 1})


def test_lift_ext_class_rank_zero():
    X = circle(4)
    F = constant_on(whole(X))
    with pytest.raises(ValueError):
        lift_ext_class(F, F, 2)


# microlocal tests


def test_gamma_stalk_half_plane():
    M, X = flat()
    F = constant_on(region(M, lambda x, t: -t, "closed"), model=M)  # t >= 0
    o = origin(M)
    assert gamma_stalk(F, o, (0, 1)) == {0: 1}
    assert gamma_stalk(F, o, (0, -1)) == {}
    assert not micro_test(F, o, (1, 0))


def test_open_set_outward_conormal():
    M, X = flat()
    U = constant_on(region(M, lambda x, t: t, "open"), model=M)  # t < 0
    o = origin(M)
    assert micro_test(U, o, (0, 1))
    assert not micro_test(U, o, (0, -1))


def test_constant_sheaf_has_zero_section_only():
    M, X = flat()
    F = constant_on(whole(X), model=M)
    for v in X.vertices:
        if abs(M.row[v]) < M.rows and abs(M.radius[v]) < M.rows:
            assert not any(micro_test(F, v, d) for d in DIRECTIONS)


def test_unsupported_direction():
    M, X = flat()
    F = constant_on(whole(X), model=M)
    with pytest.raises(ValueError):
        micro_test(F, origin(M), (2, 1))
    with pytest.raises(ValueError):
        micro_test(F, X.cells_of_dim(1)[0], (0, 1))


def _cone_pairs(seed):
    rng = random.Random(seed)
    M, X = flat(2, 1)
    a, b = 2 * rng.randint(-1, 1), 2 * rng.randint(-1, 1)
    sa, sb = rng.choice([-1, 1]), rng.choice([-1, 1])
    U = region(M, lambda x, t: sa * abs(x) - t + a, "open")
    C = region(M, lambda x, t: sb * abs(x) + t + b, "closed")
    return M, X, constant_on(U, model=M), constant_on(C, model=M), rng


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_cone_microsupport_containment(seed):
    M, X, F, G, rng = _cone_pairs(seed)
    if not len(F) or not len(G):
        return
    ranks = ext_ranks(F, G)
    if not ranks:
        return
    d = rng.choice(sorted(ranks))
    C = sheaf_cone(lift_ext_class(F, G, d))
    verts = [v for v in X.vertices if abs(M.row[v]) < M.rows - 1 and abs(M.radius[v]) < M.rows - 1]
    for v in rng.sample(verts, min(6, len(verts))):
        for delta in DIRECTIONS:
            if micro_test(C, v, delta):
                assert micro_test(F, v, delta) or micro_test(G, v, delta)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3, 4]))
def test_generator_scaling(seed, u):
    M, X, F, G, rng = _cone_pairs(seed)
    field = PrimeField(5)
    F = constant_on(F.support, field, model=M)
    G = constant_on(G.support, field, model=M)
    if not len(F) or not len(G):
        return
    ranks = ext_ranks(F, G)
    if not ranks:
        return
    psi = lift_ext_class(F, G, min(ranks))
    A, B = sheaf_cocone(psi), sheaf_cocone(psi.scaled(u))
    assert [A.stalk_ranks(c) for c in range(len(X))] == [B.stalk_ranks(c) for c in range(len(X))]
    for v in rng.sample(list(X.vertices), 5):
        assert [micro_test(A, v, d) for d in DIRECTIONS] == [micro_test(B, v, d) for d in DIRECTIONS]
