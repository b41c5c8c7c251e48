from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sheafflow.cells import AlignmentError, cells_from_values, cochains_on
from sheafflow.flowmodels import flat_model, full_product, rows_for_window, sphere_model, strip_complex
from sheafflow.geometry import dist_sphere


def test_rows_for_window():
    assert rows_for_window(4, 2) == 17
    assert rows_for_window(12, 2.5) == 61
    assert rows_for_window(4, 0.5) == 5
    with pytest.raises(ValueError):
        rows_for_window(4, 0.3)


def test_strip_parity_and_errors():
    S = strip_complex(0, 4, -3, 3)
    for v in S.vertices:
        i, j = S.labels[v][0]
        assert (i + j) % 2 == 0 or i in (0, 4)
    assert S.boundary_signs_ok()
    assert S.cochain_complex().cohomology_ranks() == {0: 1}
    with pytest.raises(ValueError):
        strip_complex(2, 2, 0, 1)


@pytest.mark.parametrize("n,expected", [(1, {0: 1, 1: 1}), (2, {0: 1, 2: 1})])
def test_sphere_model_topology(n, expected):
    M = sphere_model(n, 4, 1)
    X = M.complex
    assert X.boundary_signs_ok()
    assert X.cochain_complex().cohomology_ranks() == expected
    assert max(M.row.values()) == M.rows
    assert max(M.radius.values()) == M.half_turn


def test_sphere_model_bad_args():
    with pytest.raises(ValueError):
        sphere_model(3, 4)
    with pytest.raises(ValueError):
        sphere_model(1, 1)


@pytest.mark.parametrize("n", [1, 2])
def test_radius_is_distance_from_base(n):
    M = sphere_model(n, 4, 1)
    X = M.complex
    base = [1.0, 0.0] if n == 1 else [0.0, 0.0, 1.0]
    for v in X.vertices:
        assert dist_sphere(base, X.points[v]) == pytest.approx(M.radius[v] * M.h, abs=1e-12)
        assert X.times[v] == pytest.approx(M.time(v))


@settings(max_examples=30, deadline=None)
@given(st.integers(-3, 3), st.sampled_from([1, -1]), st.sampled_from(["open", "closed"]), st.sampled_from([1, 2]))
def test_fronts_are_subcomplexes(k, sign, kind, n):
    # every level set r = +-t + k pi is a union of cells
    M = sphere_model(n, 3, 2)
    P = M.half_turn
    vals = {v: M.radius[v] - sign * M.row[v] - k * P for v in M.complex.vertices}
    Z = cells_from_values(M.complex, vals, kind, tol=0)
    assert Z.is_open if kind == "open" else Z.is_closed


def test_odd_offset_misaligns():
    M = sphere_model(1, 3, 1)
    vals = {v: M.radius[v] - M.row[v] + 1 for v in M.complex.vertices}
    with pytest.raises(AlignmentError):
        cells_from_values(M.complex, vals, "open", tol=0)


def test_circle_chart_wraps():
    M = sphere_model(1, 4, 1)
    P = M.half_turn
    vs = M.vertices_at(radius=P, row=0)
    assert len(vs) == 1
    a = vs[0]
    b = next(v for v in M.vertices_at(row=1) if M.radius[v] == P - 1 and M.sheet[v] == -1)
    du, dt = M.displacement(a, b)
    assert (abs(du), dt) == (1, 1)


def test_flat_model_column():
    M = flat_model(2, 1)
    axis = [v for v in M.complex.vertices if M.radius[v] == 0]
    assert sorted(M.row[v] for v in axis) == list(range(-M.rows, M.rows + 1))
    assert M.complex.cochain_complex().cohomology_ranks() == {0: 1}
    assert M.displacement(axis[0], axis[1]) == (0, M.row[axis[1]] - M.row[axis[0]])


def test_slice_cells_are_one_dimensional():
    M = sphere_model(1, 4, 1)
    X = M.complex
    cells = M.slice_cells(0)
    assert max(X.dims[c] for c in cells) == 1
    # diamond lattice: a slice carries every other radius
    assert sum(1 for c in cells if X.dims[c] == 0) == M.half_turn
    assert cochains_on(X, cells).cohomology_ranks() == {0: 1, 1: 1}


def test_full_product_is_torus_times_interval():
    F = full_product(sphere_model(1, 2, 0.5), 3)
    X = F.complex
    assert X.cochain_complex().cohomology_ranks() == {0: 1, 1: 2, 2: 1}
    assert set(F.base.values()) == {0, 1, 2}
    for v in X.vertices:
        p = X.points[v]
        a = math.atan2(p[1], p[0])
        b = math.atan2(p[3], p[2])
        d = abs((b - a + math.pi) % (2 * math.pi) - math.pi)
        assert d == pytest.approx(F.radius[v] * F.h, abs=1e-9)
    with pytest.raises(ValueError):
        full_product(sphere_model(2, 2, 0.5))
