"""Cell models of Y x (time window) with the base point x held fixed.

The building block is a strip of the (r, t) half-plane triangulated on a
diamond lattice with step h = pi / (2m): vertex (i, j) sits at r = i h,
t = j h and exists when i + j is even.  Every slope +-1 line through a
lattice vertex is a union of edges, so all the fronts r = +-t + k pi are
subcomplexes.  The two boundary columns carry a vertex on every row.

* ``sphere_model(1, m, w)``: the strip doubled along r = 0 and r = pi,
  i.e. the circle (signed angle u = +-r) times the window.
* ``sphere_model(2, m, w)``: the strip revolved about the polar axis
  using a 3-gon for the azimuth; a model of S^2 times the window.
* ``flat_model(m, w)``: a box in the (x, t) plane.

Distances from the base point and times are exact integers in units of
h, which is what region membership is decided on.
"""

from __future__ import annotations

import math

from sheafflow.cells import CellComplex, circle, product, simplicial_complex

__all__ = ["FlowModel", "strip_complex", "revolve", "sphere_model", "flat_model", "full_product", "rows_for_window"]


def rows_for_window(m: int, window) -> int:
    """Half-height J (in lattice rows) for a window of `window` half-turns plus one row of margin."""
    x = 2 * m * window
    k = int(round(x))
    if abs(x - k) > 1e-9:
        raise ValueError(f"window {window} is not a multiple of pi/{2 * m}")
    return k + 1


def strip_complex(i_lo: int, i_hi: int, j_lo: int, j_hi: int) -> CellComplex:
    """Diamond triangulation of [i_lo, i_hi] x [j_lo, j_hi]; vertices labelled (i, j)."""
    if i_hi <= i_lo or j_hi <= j_lo:
        raise ValueError("empty strip")

    def row(j):
        return sorted({i for i in range(i_lo, i_hi + 1) if (i + j) % 2 == 0} | {i_lo, i_hi})

    tris = []
    for j in range(j_lo, j_hi):
        bot, top = row(j), row(j + 1)
        a = c = 0
        while a < len(bot) - 1 or c < len(top) - 1:
            nb = bot[a + 1] if a < len(bot) - 1 else math.inf
            nt = top[c + 1] if c < len(top) - 1 else math.inf
            if nb < nt or (nb == nt and bot[a] <= top[c]):
                tris.append(((bot[a], j), (bot[a + 1], j), (top[c], j + 1)))
                a += 1
            else:
                tris.append(((bot[a], j), (top[c], j + 1), (top[c + 1], j + 1)))
                c += 1
    return simplicial_complex(tris, name="strip")


def revolve(S: CellComplex, fiber: CellComplex, axis_cells: set):
    """Sweep the off-axis cells of S along a fiber, collapsing the fiber on the axis.

    Returns (complex, keys) where keys[id] is ('a', c) for axis cells and
    ('o', c, s) for a strip cell c swept by fiber cell s.
    """
    keys = [("a", c) for c in range(len(S)) if c in axis_cells]
    keys += [("o", c, s) for c in range(len(S)) if c not in axis_cells for s in range(len(fiber))]

    def dim(k):
        return S.dims[k[1]] + (fiber.dims[k[2]] if k[0] == "o" else 0)

    keys.sort(key=lambda k: (dim(k), k[1], k[0], k[2] if k[0] == "o" else -1))
    ids = {k: i for i, k in enumerate(keys)}
    dims, faces = [], []
    for k in keys:
        dims.append(dim(k))
        c = k[1]
        fs = {}
        if k[0] == "a":
            for f, sg in S.faces[c].items():
                fs[ids[("a", f)]] = sg
        else:
            s = k[2]
            for f, sg in S.faces[c].items():
                if f in axis_cells:
                    if fiber.dims[s] == 0:
                        fs[ids[("a", f)]] = sg
                else:
                    fs[ids[("o", f, s)]] = sg
            eps = -1 if S.dims[c] % 2 else 1
            for g, sg in fiber.faces[s].items():
                fs[ids[("o", c, g)]] = eps * sg
        faces.append(fs)
    return CellComplex(dims, faces), keys


class FlowModel:
    """A cell complex plus exact lattice data on its vertices.

    ``radius[v]`` is the distance from the base point in units of h (for
    the flat model, the signed x coordinate), ``row[v]`` the time in units
    of h and ``sheet[v]`` the fiber coordinate (0 on the axis).
    """

    def __init__(self, complex, kind, n, m, rows, radius, row, sheet, base=None):
        self.complex = complex
        self.kind = kind
        self.n = n
        self.m = m
        self.rows = rows
        self.radius = radius
        self.row = row
        self.sheet = sheet
        self.base = base if base is not None else {}
        self._slices: dict = {}

    @property
    def half_turn(self) -> int:
        """pi in lattice units."""
        return 2 * self.m

    @property
    def h(self) -> float:
        return math.pi / (2 * self.m)

    def time(self, v) -> float:
        return self.row[v] * self.h

    def chart(self, v) -> tuple[int, int]:
        """Integer coordinates used for directions: (u, t) on the circle, (r, t) otherwise."""
        if self.kind == "sphere" and self.n == 1:
            return self.signed_angle(v), self.row[v]
        return self.radius[v], self.row[v]

    def signed_angle(self, v) -> int:
        s = self.sheet[v]
        return self.radius[v] * (s if s else 1)

    def displacement(self, v, w) -> tuple[int, int]:
        a, b = self.chart(v), self.chart(w)
        du = b[0] - a[0]
        if self.kind == "sphere" and self.n == 1:
            period = 4 * self.m
            du = (du + 2 * self.m) % period - 2 * self.m
        return du, b[1] - a[1]

    def on_axis(self, v) -> bool:
        return self.sheet[v] == 0 and self.kind == "sphere"

    def slice_cells(self, j: int) -> set:
        """Closed subcomplex of cells lying in the time slice t = j h."""
        if j not in self._slices:
            X = self.complex
            self._slices[j] = {c for c in range(len(X)) if all(self.row[v] == j for v in X.vertices_of(c))}
        return self._slices[j]

    def vertices_at(self, radius=None, row=None, sheet=None) -> list[int]:
        out = []
        for v in self.complex.vertices:
            if radius is not None and self.radius[v] != radius:
                continue
            if row is not None and self.row[v] != row:
                continue
            if sheet is not None and self.sheet[v] != sheet:
                continue
            out.append(v)
        return out

    def __repr__(self):
        return f"FlowModel({self.kind}, n={self.n}, m={self.m}, rows={self.rows}, cells={len(self.complex)})"


def _from_strip(S, X, keys, kind, n, m, rows, point_of):
    radius, row, sheet = {}, {}, {}
    pts, tms = {}, {}
    h = math.pi / (2 * m)
    for v in X.vertices:
        k = keys[v]
        i, j = S.labels[k[1]][0]
        s = 0 if k[0] == "a" else k[2] + 1
        radius[v], row[v], sheet[v] = i, j, s
        pts[v] = point_of(i, s)
        tms[v] = j * h
    X.points, X.times = pts, tms
    return FlowModel(X, kind, n, m, rows, radius, row, sheet)


def sphere_model(n: int, m: int, window=2) -> FlowModel:
    """S^n x [-T, T] around the base point x; n in {1, 2}."""
    if n not in (1, 2):
        raise ValueError("only n = 1 and n = 2 are modelled")
    if m < 2:
        raise ValueError("mesh must be at least 2")
    J = rows_for_window(m, window)
    S = strip_complex(0, 2 * m, -J, J)
    axis_v = {c for c in S.vertices if S.labels[c][0][0] in (0, 2 * m)}
    axis = {c for c in range(len(S)) if S.vertices_of(c) <= axis_v}
    h = math.pi / (2 * m)
    if n == 1:
        fiber = CellComplex([0, 0], [{}, {}], name="S0")

        def point_of(i, s):
            u = i * h * (1 if s in (0, 1) else -1)
            return (math.cos(u), math.sin(u))

    else:
        fiber = circle(3)

        def point_of(i, s):
            r = i * h
            if s == 0:
                return (0.0, 0.0, math.cos(r))
            phi = 2 * math.pi * (s - 1) / 3
            return (math.sin(r) * math.cos(phi), math.sin(r) * math.sin(phi), math.cos(r))

    X, keys = revolve(S, fiber, axis)
    model = _from_strip(S, X, keys, "sphere", n, m, J, point_of)
    if n == 1:
        # sheets +1 / -1 for the two copies
        model.sheet = {v: (0 if s == 0 else (1 if s == 1 else -1)) for v, s in model.sheet.items()}
    X.name = f"S{n}-fiber(m={m}, window={window})"
    return model


def flat_model(m: int, window=2, extent=None) -> FlowModel:
    """Box in the (x, t) plane with the same lattice step.

    Built as a half-strip doubled along x = 0 so that the column x = 0
    carries a vertex on every row; the kink of |x| then lies on edges.
    ``radius`` is the signed coordinate x.
    """
    J = rows_for_window(m, window)
    extent = J if extent is None else extent
    S = strip_complex(0, extent, -J, J)
    axis_v = {c for c in S.vertices if S.labels[c][0][0] == 0}
    axis = {c for c in range(len(S)) if S.vertices_of(c) <= axis_v}
    X, keys = revolve(S, CellComplex([0, 0], [{}, {}], name="S0"), axis)
    h = math.pi / (2 * m)
    radius, row, sheet, pts, tms = {}, {}, {}, {}, {}
    for v in X.vertices:
        k = keys[v]
        i, j = S.labels[k[1]][0]
        sg = 1 if k[0] == "a" or k[2] == 0 else -1
        radius[v], row[v], sheet[v] = sg * i, j, (0 if k[0] == "a" else sg)
        pts[v] = (sg * i * h,)
        tms[v] = j * h
    X.points, X.times = pts, tms
    X.name = f"flat(m={m}, window={window})"
    return FlowModel(X, "flat", 1, m, J, radius, row, sheet)


def full_product(model: FlowModel, k: int = 3) -> FlowModel:
    """The fiber model times a k-gon for the base point; small meshes only.

    Region data only depend on the fiber coordinate, so the product is
    the trivialised total space over the circle of base points.
    """
    if not (model.kind == "sphere" and model.n == 1):
        raise ValueError("full products are only built for the circle")
    C = circle(k)
    X = product(model.complex, C, name=f"{model.complex.name}xS1")
    radius, row, sheet, base = {}, {}, {}, {}
    for v in X.vertices:
        a, b = X.pairs[v]
        radius[v], row[v], sheet[v] = model.radius[a], model.row[a], model.sheet[a]
        base[v] = b
        alpha = 2 * math.pi * b / k
        u = model.signed_angle(a) * model.h
        X.points[v] = (math.cos(alpha), math.sin(alpha), math.cos(alpha + u), math.sin(alpha + u))
        X.times[v] = model.time(a)
    return FlowModel(X, "sphere", 1, model.m, model.rows, radius, row, sheet, base=base)
