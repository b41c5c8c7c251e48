"""Finite regular cell complexes, cell sets and cellular cochains.

A complex stores, for every cell, its dimension and its codimension-one
faces with signed incidence numbers.  Cells are numbered so that every
face has a smaller id than the cell itself, and ids are sorted by
dimension.  Vertices may carry a point (tuple of floats) and a time.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable

from sheafflow.homological import ChainComplex
from sheafflow.linalg import F2, Field, SparseMatrix

__all__ = [
    "AlignmentError",
    "CellComplex",
    "CellSet",
    "product",
    "circle",
    "interval_grid",
    "sphere2",
    "cp2_nine_vertex",
    "simplicial_complex",
    "point_complex",
    "relative_cochain",
    "cochains_on",
    "cells_where",
    "cells_from_values",
    "subcomplex",
]


class AlignmentError(ValueError):
    """A region boundary cuts through the interior of a cell."""


class CellComplex:
    def __init__(self, dims, faces, points=None, times=None, name: str = ""):
        self.dims = [int(d) for d in dims]
        self.faces = [dict(f) for f in faces]
        if len(self.dims) != len(self.faces):
            raise ValueError("dims and faces differ in length")
        for c, fs in enumerate(self.faces):
            for f, s in fs.items():
                if not (0 <= f < c):
                    raise ValueError(f"face {f} of cell {c} must have a smaller id")
                if self.dims[f] != self.dims[c] - 1:
                    raise ValueError(f"face {f} of cell {c} is not of codimension one")
                if s not in (1, -1):
                    raise ValueError("incidence numbers must be +-1")
        if any(self.dims[i] > self.dims[i + 1] for i in range(len(self.dims) - 1)):
            raise ValueError("cells must be sorted by dimension")
        self.points = dict(points or {})
        self.times = dict(times or {})
        self.name = name
        self._cofaces = None
        self._verts = None
        self._by_dim = None
        self._pos = None
        self._closures: dict = {}

    # basic structure -----------------------------------------------------

    def __len__(self):
        return len(self.dims)

    @property
    def dim(self) -> int:
        return max(self.dims) if self.dims else -1

    def cells_of_dim(self, k: int) -> list[int]:
        if self._by_dim is None:
            by: dict = {}
            for c, d in enumerate(self.dims):
                by.setdefault(d, []).append(c)
            self._by_dim = by
            self._pos = {}
            for d, cs in by.items():
                for i, c in enumerate(cs):
                    self._pos[c] = i
        return self._by_dim.get(k, [])

    def position(self, c: int) -> int:
        """Index of the cell among the cells of its dimension."""
        self.cells_of_dim(0)
        return self._pos[c]

    @property
    def vertices(self) -> list[int]:
        return self.cells_of_dim(0)

    @property
    def cofaces(self) -> list[dict]:
        if self._cofaces is None:
            co = [dict() for _ in self.dims]
            for c, fs in enumerate(self.faces):
                for f, s in fs.items():
                    co[f][c] = s
            self._cofaces = co
        return self._cofaces

    def vertices_of(self, c: int) -> frozenset:
        if self._verts is None:
            vs = []
            for i, fs in enumerate(self.faces):
                if self.dims[i] == 0:
                    vs.append(frozenset((i,)))
                else:
                    acc = set()
                    for f in fs:
                        acc |= vs[f]
                    vs.append(frozenset(acc))
            self._verts = vs
        return self._verts[c]

    def closure(self, cells: Iterable[int]) -> set:
        out = set()
        stack = list(cells)
        while stack:
            c = stack.pop()
            if c in out:
                continue
            out.add(c)
            stack.extend(self.faces[c])
        return out

    def closure_of(self, c: int) -> frozenset:
        """Closure of a single cell (cached)."""
        got = self._closures.get(c)
        if got is None:
            got = frozenset(self.closure([c]))
            self._closures[c] = got
        return got

    def star(self, cells: Iterable[int]) -> set:
        """Union of open stars: all cells having a member as a face."""
        co = self.cofaces
        out = set()
        stack = list(cells)
        while stack:
            c = stack.pop()
            if c in out:
                continue
            out.add(c)
            stack.extend(co[c])
        return out

    def is_face(self, a: int, b: int) -> bool:
        """True when cell a lies in the closure of cell b."""
        if a == b:
            return True
        if self.dims[a] >= self.dims[b]:
            return False
        if not self.vertices_of(a) <= self.vertices_of(b):
            return False
        return a in self.closure_of(b)

    def euler_characteristic(self) -> int:
        return sum((-1) ** d for d in self.dims)

    def boundary_signs_ok(self) -> bool:
        """Check the boundary of a boundary vanishes (integer coefficients)."""
        for c, fs in enumerate(self.faces):
            acc: dict = {}
            for f, s in fs.items():
                for g, t in self.faces[f].items():
                    acc[g] = acc.get(g, 0) + s * t
            if any(v for v in acc.values()):
                return False
        return True

    # geometry ------------------------------------------------------------

    def point(self, c: int):
        """Vertex point or the average of the vertex points."""
        if c in self.points:
            return self.points[c]
        vs = [self.points[v] for v in self.vertices_of(c) if v in self.points]
        if not vs:
            return None
        return tuple(sum(p[i] for p in vs) / len(vs) for i in range(len(vs[0])))

    def time(self, c: int):
        if c in self.times:
            return self.times[c]
        ts = [self.times[v] for v in self.vertices_of(c) if v in self.times]
        if not ts:
            return None
        return sum(ts) / len(ts)

    # cochains ------------------------------------------------------------

    def cochain_complex(self, field: Field = F2, cells: Iterable[int] | None = None) -> ChainComplex:
        return cochains_on(self, set(range(len(self))) if cells is None else set(cells), field)

    # serialization -------------------------------------------------------

    def to_json(self) -> str:
        def enc(v):
            if isinstance(v, Fraction):
                return str(v)
            return v

        data = {
            "cells": [{"id": c, "dim": d} for c, d in enumerate(self.dims)],
            "incidence": [[c, f, s] for c, fs in enumerate(self.faces) for f, s in sorted(fs.items())],
            "points": {str(c): list(p) for c, p in sorted(self.points.items())},
            "time": {str(c): enc(t) for c, t in sorted(self.times.items())},
        }
        return json.dumps(data, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CellComplex":
        data = json.loads(text)
        n = len(data["cells"])
        dims = [0] * n
        for cell in data["cells"]:
            dims[cell["id"]] = cell["dim"]
        faces: list[dict] = [dict() for _ in range(n)]
        for c, f, s in data["incidence"]:
            faces[c][f] = s
        points = {int(k): tuple(v) for k, v in data["points"].items()}
        times = {int(k): (Fraction(v) if isinstance(v, str) else v) for k, v in data["time"].items()}
        return cls(dims, faces, points, times)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    def __repr__(self):
        counts = [len(self.cells_of_dim(k)) for k in range(self.dim + 1)]
        return f"CellComplex({self.name or 'anonymous'}, cells per dim {counts})"


def cochains_on(X: CellComplex, cells: set, field: Field = F2) -> ChainComplex:
    """Cochains supported on a cell set, with the restricted coboundary.

    For a locally closed set this computes the cohomology of the pair
    (closure, closure minus the set).
    """
    by: dict = {}
    for c in sorted(cells):
        by.setdefault(X.dims[c], []).append(c)
    if not by:
        return ChainComplex.zero(field)
    lo, hi = min(by), max(by)
    pos = {}
    for d, cs in by.items():
        for i, c in enumerate(cs):
            pos[c] = i
    dims = [len(by.get(k, [])) for k in range(lo, hi + 1)]
    co = X.cofaces
    diffs = []
    for k in range(lo, hi):
        cols = []
        for c in by.get(k, []):
            col = {}
            for t, s in co[c].items():
                if t in pos and t in cells:
                    col[pos[t]] = field(s)
            cols.append(col)
        diffs.append(SparseMatrix.from_columns(dims[k + 1 - lo], cols, field))
    return ChainComplex(lo, dims, diffs, field)


class CellSet:
    """A locally closed set of cells, remembered with its kind.

    ``closed_part`` is the closure and ``open_part`` the up-closure; the
    set equals their intersection.
    """

    def __init__(self, X: CellComplex, members: Iterable[int], kind: str | None = None):
        self.complex = X
        self.members = frozenset(members)
        clo = X.closure(self.members)
        up = X.star(self.members)
        if set(clo) & set(up) != set(self.members):
            raise ValueError("cell set is not locally closed")
        is_closed = len(clo) == len(self.members)
        is_open = len(up) == len(self.members)
        if kind is None:
            kind = "closed" if is_closed else "open" if is_open else "locally_closed"
        if kind == "closed" and not is_closed:
            raise ValueError("cell set is not closed")
        if kind == "open" and not is_open:
            raise ValueError("cell set is not open")
        if kind not in ("open", "closed", "locally_closed"):
            raise ValueError(f"unknown kind {kind}")
        self.kind = kind
        self.closed_part = frozenset(clo)
        self.open_part = frozenset(up)

    @property
    def is_open(self) -> bool:
        return len(self.open_part) == len(self.members)

    @property
    def is_closed(self) -> bool:
        return len(self.closed_part) == len(self.members)

    def complement(self) -> "CellSet":
        if not (self.is_open or self.is_closed):
            raise ValueError("complement only defined for open or closed sets")
        rest = set(range(len(self.complex))) - self.members
        kind = "closed" if self.kind == "open" else "open"
        if self.is_open and self.is_closed:
            kind = "closed"
        return CellSet(self.complex, rest, kind)

    def closure(self) -> "CellSet":
        return CellSet(self.complex, self.closed_part, "closed")

    def __and__(self, other: "CellSet") -> "CellSet":
        return CellSet(self.complex, self.members & other.members)

    def __len__(self):
        return len(self.members)

    def __contains__(self, c):
        return c in self.members

    def __iter__(self):
        return iter(sorted(self.members))

    def __repr__(self):
        return f"CellSet({self.kind}, {len(self.members)} cells)"


def relative_cochain(X: CellComplex, A: CellSet | Iterable[int], field: Field = F2) -> ChainComplex:
    """Cochains of X vanishing on the closed set A."""
    members = A.members if isinstance(A, CellSet) else frozenset(A)
    if len(X.closure(members)) != len(members):
        raise ValueError("relative cochains need a closed subcomplex")
    return cochains_on(X, set(range(len(X))) - set(members), field)


def cells_from_values(X: CellComplex, values: dict, kind: str, tol: float = 1e-9) -> CellSet:
    """Region {g < 0} (open) or {g <= 0} (closed) from vertex values of g.

    The certificate: no cell may have vertex values of both strict signs,
    so every cell lies entirely on one side of the level set or inside it.
    """
    neg, zero = set(), set()
    for c in range(len(X)):
        lo_, hi_ = math.inf, -math.inf
        for v in X.vertices_of(c):
            g = values[v]
            lo_ = min(lo_, g)
            hi_ = max(hi_, g)
        if lo_ < -tol and hi_ > tol:
            raise AlignmentError(f"cell {c} (dim {X.dims[c]}) straddles the region boundary")
        if lo_ < -tol:
            neg.add(c)
        elif hi_ <= tol:
            zero.add(c)
    if kind == "open":
        return CellSet(X, neg, "open")
    if kind == "closed":
        return CellSet(X, neg | zero, "closed")
    raise ValueError("kind must be 'open' or 'closed'")


def cells_where(
    X: CellComplex,
    fn: Callable,
    kind: str | None = None,
    tol: float = 1e-9,
) -> CellSet:
    """Cell set cut out by a function of (point, time) at the vertices.

    ``fn`` may return a number (a signed level: negative inside) or a
    bool.  For levels the kind must be given.  For bools a closed set is
    the cells whose vertices all satisfy the predicate and an open set is
    the union of open stars of satisfying vertices; the default is closed.
    """
    vals = {v: fn(X.points.get(v), X.times.get(v)) for v in X.vertices}
    if all(isinstance(x, bool) for x in vals.values()):
        good = {v for v, x in vals.items() if x}
        kind = kind or "closed"
        if kind == "closed":
            mem = [c for c in range(len(X)) if X.vertices_of(c) <= good]
            return CellSet(X, mem, "closed")
        return CellSet(X, X.star(good), "open")
    if kind is None:
        raise ValueError("a signed level function needs an explicit kind")
    return cells_from_values(X, vals, kind, tol)


# constructors ---------------------------------------------------------------


def point_complex() -> CellComplex:
    return CellComplex([0], [{}], points={0: ()}, name="point")


def simplicial_complex(simplices: Iterable, points: dict | None = None, times: dict | None = None, name="") -> CellComplex:
    """Regular complex of a simplicial complex given by its maximal simplices.

    Vertex labels are arbitrary sortable values; orientation follows the
    sorted vertex order.
    """
    allsimp = set()
    for s in simplices:
        s = tuple(sorted(s))
        for k in range(1, len(s) + 1):
            allsimp.update(combinations(s, k))
    order = sorted(allsimp, key=lambda s: (len(s), s))
    ids = {s: i for i, s in enumerate(order)}
    dims = [len(s) - 1 for s in order]
    faces = []
    for s in order:
        fs = {}
        if len(s) > 1:
            for i in range(len(s)):
                fs[ids[s[:i] + s[i + 1 :]]] = (-1) ** i
        faces.append(fs)
    pts = {ids[(v,)]: p for v, p in (points or {}).items()}
    tms = {ids[(v,)]: t for v, t in (times or {}).items()}
    X = CellComplex(dims, faces, pts, tms, name=name)
    X.labels = order
    return X


def circle(m: int) -> CellComplex:
    """An m-gon with vertices at the m-th roots of unity."""
    if m < 3:
        raise ValueError("circle needs at least 3 vertices")
    dims = [0] * m + [1] * m
    faces: list[dict] = [dict() for _ in range(m)]
    for k in range(m):
        faces.append({k: -1, (k + 1) % m: 1})
    pts = {k: (math.cos(2 * math.pi * k / m), math.sin(2 * math.pi * k / m)) for k in range(m)}
    return CellComplex(dims, faces, pts, name=f"circle({m})")


def interval_grid(a, b, step) -> CellComplex:
    """The segment [a, b] cut at a, a+step, ...; times stay exact for rationals."""
    if not a < b:
        raise ValueError("need a < b")
    if step <= 0:
        raise ValueError("step must be positive")
    n = (b - a) / step
    k = int(round(n))
    if abs(n - k) > 1e-12 or k < 1:
        raise ValueError("step must divide b - a")
    dims = [0] * (k + 1) + [1] * k
    faces: list[dict] = [dict() for _ in range(k + 1)]
    for e in range(k):
        faces.append({e: -1, e + 1: 1})
    times = {v: a + v * step for v in range(k + 1)}
    pts = {v: () for v in range(k + 1)}
    return CellComplex(dims, faces, pts, times, name=f"interval[{a},{b}]")


def sphere2(subdiv: int) -> CellComplex:
    """Boundary of the octahedron, each triangle split into four per level."""
    if subdiv < 0:
        raise ValueError("subdiv must be >= 0")
    verts = [(1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, 1.0), (0.0, 0.0, -1.0)]
    tris = [(a, b, c) for a in (0, 1) for b in (2, 3) for c in (4, 5)]
    for _ in range(subdiv):
        mid: dict = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in mid:
                p = tuple((verts[i][k] + verts[j][k]) / 2 for k in range(3))
                nrm = math.sqrt(sum(x * x for x in p))
                verts.append(tuple(x / nrm for x in p))
                mid[key] = len(verts) - 1
            return mid[key]

        new = []
        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        tris = new
    pts = {i: p for i, p in enumerate(verts)}
    return simplicial_complex(tris, pts, name=f"sphere2({subdiv})")


# facets of the 9-vertex triangulation of CP^2 (vertex set Z/3 x Z/3,
# invariant under translations); f-vector (9, 36, 84, 90, 36)
CP2_FACETS = (
    (0, 1, 2, 3, 4),
    (0, 1, 2, 3, 5),
    (0, 1, 2, 4, 5),
    (0, 1, 6, 7, 8),
    (0, 2, 6, 7, 8),
    (1, 2, 6, 7, 8),
    (3, 4, 5, 6, 7),
    (3, 4, 5, 6, 8),
    (3, 4, 5, 7, 8),
    (0, 1, 3, 4, 6),
    (0, 1, 3, 6, 7),
    (0, 2, 3, 5, 8),
    (0, 2, 5, 6, 8),
    (0, 3, 4, 6, 7),
    (1, 2, 4, 5, 7),
    (1, 2, 4, 7, 8),
    (1, 4, 5, 7, 8),
    (2, 3, 5, 6, 8),
    (0, 1, 3, 5, 7),
    (0, 1, 5, 7, 8),
    (0, 2, 4, 5, 6),
    (0, 2, 4, 6, 7),
    (0, 3, 5, 7, 8),
    (1, 2, 3, 4, 8),
    (1, 2, 3, 6, 8),
    (1, 3, 4, 6, 8),
    (2, 4, 5, 6, 7),
    (0, 1, 4, 5, 6),
    (0, 1, 5, 6, 8),
    (0, 2, 3, 4, 8),
    (0, 2, 4, 7, 8),
    (0, 3, 4, 7, 8),
    (1, 2, 3, 5, 7),
    (1, 2, 3, 6, 7),
    (1, 4, 5, 6, 8),
    (2, 3, 5, 6, 7),
)


def cp2_nine_vertex() -> CellComplex:
    return simplicial_complex(CP2_FACETS, name="CP2_9")


def product(X: CellComplex, Y: CellComplex, name: str = "") -> CellComplex:
    """Product complex with d(a x b) = da x b + (-1)^{dim a} a x db."""
    pairs = sorted(
        ((a, b) for a in range(len(X)) for b in range(len(Y))),
        key=lambda ab: (X.dims[ab[0]] + Y.dims[ab[1]], ab),
    )
    ids = {ab: i for i, ab in enumerate(pairs)}
    dims, faces = [], []
    for a, b in pairs:
        dims.append(X.dims[a] + Y.dims[b])
        fs = {}
        for f, s in X.faces[a].items():
            fs[ids[(f, b)]] = s
        sg = -1 if X.dims[a] % 2 else 1
        for g, s in Y.faces[b].items():
            fs[ids[(a, g)]] = sg * s
        faces.append(fs)
    pts, tms = {}, {}
    for a in X.vertices:
        for b in Y.vertices:
            i = ids[(a, b)]
            pa, pb = X.points.get(a), Y.points.get(b)
            if pa is not None or pb is not None:
                pts[i] = tuple(pa or ()) + tuple(pb or ())
            ta, tb = X.times.get(a), Y.times.get(b)
            if ta is not None or tb is not None:
                tms[i] = ta if ta is not None else tb
    Z = CellComplex(dims, faces, pts, tms, name=name or f"{X.name}x{Y.name}")
    Z.pair_ids = ids
    Z.pairs = pairs
    return Z


def subcomplex(X: CellComplex, cells: Iterable[int], name: str = ""):
    """A closed subcomplex as a complex of its own; returns (Y, old -> new ids)."""
    keep = sorted(set(cells), key=lambda c: (X.dims[c], c))
    if len(X.closure(keep)) != len(keep):
        raise ValueError("subcomplex needs a closed cell set")
    new = {c: i for i, c in enumerate(keep)}
    dims = [X.dims[c] for c in keep]
    faces = [{new[f]: s for f, s in X.faces[c].items()} for c in keep]
    pts = {new[c]: p for c, p in X.points.items() if c in new}
    tms = {new[c]: t for c, t in X.times.items() if c in new}
    return CellComplex(dims, faces, pts, tms, name=name or f"sub({X.name})"), new
