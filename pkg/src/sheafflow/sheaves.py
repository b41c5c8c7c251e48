"""Complexes of sheaves on a finite regular cell complex.

Cells are ordered by the face relation and open sets are the up-closed
cell sets.  A sheaf is presented as a bounded complex of elementary
summands.  The workhorse summand is P_c, the constant sheaf on the open
star of the cell c extended by zero: Hom(P_c, G) is the stalk of G at c,
so complexes of P's behave like projective resolutions and derived Hom
out of them is an honest finite linear-algebra problem.  A summand may
also be the constant sheaf K_W on an arbitrary locally closed cell set W,
which is only ever used as a target.

A map P_a -> P_b is a scalar and exists when b's cell is a face of a's.
Degree conventions follow :mod:`sheafflow.homological`.
"""

from __future__ import annotations

import csv
import json
from sheafflow.cells import CellComplex, CellSet, subcomplex
from sheafflow.homological import ChainComplex, cohomology_ranks
from sheafflow.linalg import F2, Field, Reducer, SparseMatrix, rank

__all__ = [
    "CellularSheaf",
    "SheafMorphism",
    "HomComplex",
    "ResolutionError",
    "constant_on",
    "constant_summand",
    "cellular_resolution",
    "bar_resolution",
    "zero_sheaf",
    "global_sections_complex",
    "hom_sheaf",
    "ext_ranks",
    "stalk",
    "stalk_table",
    "restrict_slice",
    "sheaf_shift",
    "sheaf_cone",
    "sheaf_cocone",
    "lift_ext_class",
    "extend_morphism",
    "gamma_stalk",
    "micro_test",
    "DIRECTIONS",
]

# direction dictionary: coordinate covectors and the slope +-1 diagonals
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


class ResolutionError(ValueError):
    pass


class CellularSheaf:
    """A bounded complex of summands P_c (support None) or K_W (support W).

    ``diff[src]`` maps a generator to {target generator: coefficient}; the
    target sits one degree higher.
    """

    def __init__(self, X: CellComplex, cells, degrees, diff=None, field: Field = F2,
                 supports=None, model=None, check: bool = True, label: str = ""):
        self.complex = X
        self.cells = list(cells)
        self.degrees = list(degrees)
        self.field = field
        n = len(self.cells)
        if len(self.degrees) != n:
            raise ValueError("cells and degrees differ in length")
        self.supports = list(supports) if supports is not None else [None] * n
        self.diff: list[dict] = [dict() for _ in range(n)]
        if diff:
            for s, col in (diff.items() if isinstance(diff, dict) else enumerate(diff)):
                for t, c in col.items():
                    c = field(c)
                    if c != 0:
                        self.diff[s][t] = c
        self.model = model
        self.label = label
        self._inc = None
        self._by_cell = None
        self._general = None
        if check:
            self.check()

    # structure ---------------------------------------------------------

    def __len__(self):
        return len(self.cells)

    @property
    def is_projective(self) -> bool:
        return all(w is None for w in self.supports)

    @property
    def incoming(self) -> list[dict]:
        """incoming[t] = {s: c} for every entry s -> t of the differential."""
        if self._inc is None:
            inc: list[dict] = [dict() for _ in self.cells]
            for s, col in enumerate(self.diff):
                for t, c in col.items():
                    inc[t][s] = c
            self._inc = inc
        return self._inc

    def by_cell_degree(self) -> dict:
        """(cell, degree) -> generator ids, for projective summands only."""
        if self._by_cell is None:
            out: dict = {}
            for g, (c, d) in enumerate(zip(self.cells, self.degrees)):
                if self.supports[g] is None:
                    out.setdefault((c, d), []).append(g)
            self._by_cell = out
        return self._by_cell

    def general_summands(self) -> list[int]:
        if self._general is None:
            self._general = [g for g, w in enumerate(self.supports) if w is not None]
        return self._general

    def local_part(self, cells) -> "CellularSheaf":
        """Summands with a nonzero stalk somewhere on `cells`.

        Hom complexes out of summands P_c with c in `cells` only see these
        generators, so they may replace the whole sheaf there.
        """
        cells = set(cells)
        near = self.complex.closure(cells)
        keep = [g for g in range(len(self))
                if (self.cells[g] in near if self.supports[g] is None else bool(cells & self.supports[g]))]
        new = {g: i for i, g in enumerate(keep)}
        diff = [{new[t]: c for t, c in self.diff[g].items() if t in new} for g in keep]
        return CellularSheaf(self.complex, [self.cells[g] for g in keep], [self.degrees[g] for g in keep], diff,
                             self.field, [self.supports[g] for g in keep], self.model, check=False,
                             label=f"{self.label}|local")

    def contains(self, g: int, rho: int) -> bool:
        """Whether the summand g has a nonzero stalk at the cell rho."""
        w = self.supports[g]
        if w is None:
            return self.cells[g] in self.complex.closure_of(rho)
        return rho in w

    def check(self) -> None:
        X = self.complex
        for s, col in enumerate(self.diff):
            for t in col:
                if self.degrees[t] != self.degrees[s] + 1:
                    raise ValueError(f"differential {s}->{t} does not raise degree by one")
                ws, wt = self.supports[s], self.supports[t]
                if ws is None and wt is None:
                    if self.cells[t] not in X.closure_of(self.cells[s]):
                        raise ValueError(f"no map from P_{self.cells[s]} to P_{self.cells[t]}")
                else:
                    _check_natural(X, self._support_set(s), self._support_set(t))
        for s, col in enumerate(self.diff):
            acc: dict = {}
            for t, c in col.items():
                for u, e in self.diff[t].items():
                    acc[u] = self.field.add(acc.get(u, 0), self.field.mul(c, e))
            if any(v != 0 for v in acc.values()):
                raise ValueError("differential does not square to zero")

    def _support_set(self, g) -> frozenset:
        w = self.supports[g]
        return w if w is not None else frozenset(self.complex.star([self.cells[g]]))

    # stalks ------------------------------------------------------------

    def stalk_generators(self, rho: int) -> list[int]:
        """Generators whose summand has a nonzero stalk at rho."""
        out = []
        cell_index = self._cell_index()
        if cell_index:
            for c in self.complex.closure_of(rho):
                out.extend(cell_index.get(c, ()))
        out.extend(g for g in self.general_summands() if rho in self.supports[g])
        return sorted(out)

    def _cell_index(self) -> dict:
        if not hasattr(self, "_ci"):
            ci: dict = {}
            for g, c in enumerate(self.cells):
                if self.supports[g] is None:
                    ci.setdefault(c, []).append(g)
            self._ci = ci
        return self._ci

    def stalk_complex(self, rho: int) -> ChainComplex:
        return self._complex_on(self.stalk_generators(rho))

    def _complex_on(self, gens) -> ChainComplex:
        gens = list(gens)
        F = self.field
        if not gens:
            return ChainComplex.zero(F)
        by: dict = {}
        for g in gens:
            by.setdefault(self.degrees[g], []).append(g)
        pos = {g: i for gs in by.values() for i, g in enumerate(gs)}
        dims = {d: len(gs) for d, gs in by.items()}
        diffs = {}
        gset = set(gens)
        for d, gs in by.items():
            if d + 1 not in by:
                continue
            cols = [{pos[t]: c for t, c in self.diff[g].items() if t in gset} for g in gs]
            diffs[d] = SparseMatrix.from_columns(len(by[d + 1]), cols, F)
        return ChainComplex.from_dict(diffs, dims, F, check=False)

    def stalk_ranks(self, rho: int) -> dict:
        return cohomology_ranks(self.stalk_complex(rho))

    def degree_range(self) -> tuple[int, int]:
        if not self.degrees:
            return (0, 0)
        return min(self.degrees), max(self.degrees)

    # serialization -------------------------------------------------------

    def to_json(self) -> str:
        data = {
            "field": self.field.name,
            "label": self.label,
            "summands": [
                {"cell": c, "shift": -d, "support": None if w is None else sorted(w)}
                for c, d, w in zip(self.cells, self.degrees, self.supports)
            ],
            "differential": [[s, t, self.field.format(c)] for s, col in enumerate(self.diff) for t, c in sorted(col.items())],
        }
        return json.dumps(data, sort_keys=True)

    def __repr__(self):
        lo, hi = self.degree_range()
        return f"CellularSheaf({self.label or 'unnamed'}, {len(self)} summands, degrees {lo}..{hi})"


def _check_natural(X: CellComplex, W: frozenset, V: frozenset) -> None:
    """A nonzero scalar K_W -> K_V is a sheaf map iff no face pair crosses badly."""
    both = W & V
    for tau in both:
        for sigma in X.closure_of(tau):
            if sigma in W and sigma not in V:
                raise ValueError("scalar map between summands is not natural")
    for sigma in both:
        for tau in X.star([sigma]):
            if tau in V and tau not in W:
                raise ValueError("scalar map between summands is not natural")


def zero_sheaf(X: CellComplex, field: Field = F2) -> CellularSheaf:
    return CellularSheaf(X, [], [], field=field, label="zero")


def constant_summand(Z: CellSet, field: Field = F2, degree: int = 0) -> CellularSheaf:
    """The constant sheaf on Z as a single (non-projective) summand."""
    X = Z.complex
    if not Z.members:
        return zero_sheaf(X, field)
    return CellularSheaf(X, [min(Z.members)], [degree], field=field, supports=[Z.members], label="K_Z")


# resolutions --------------------------------------------------------------


def cellular_resolution(Z: CellSet, field: Field = F2, certify: bool = True):
    """Resolution of K_Z by P_c over cells c of the relative cell complex.

    With C the closure of Z and U the complement of its frontier C - Z
    (the largest open set meeting C exactly in Z), the generators are the
    cells whose closure lies in U but not in U - C, placed in degree -dim.  The stalk at every cell is checked (rank one in degree 0 on Z,
    zero elsewhere, nonzero restriction maps inside Z); returns None when
    the check fails.
    """
    X = Z.complex
    C = set(Z.closed_part)
    U = set(range(len(X))) - (C - Z.members)
    UC = U - C

    def inside(cells):
        return {c for c in cells if X.closure_of(c) <= cells}

    S = sorted(inside(U) - inside(UC), key=lambda c: (X.dims[c], c))
    gid = {c: i for i, c in enumerate(S)}
    diff = [{gid[f]: s for f, s in X.faces[c].items() if f in gid} for c in S]
    F = CellularSheaf(X, S, [-X.dims[c] for c in S], diff, field, check=False, label="K_Z")
    if certify and not _certify(F, Z):
        return None
    return F


def _certify(F: CellularSheaf, Z: CellSet) -> bool:
    X = Z.complex
    gens = set(F.cells)
    # a cell whose closure lies entirely in the generator set sees the
    # chains of a closed ball; one whose closure misses it sees nothing
    full = set()
    for rho in X.star(gens) | set(Z.members):
        cl = X.closure_of(rho)
        hit = len(cl & gens)
        if hit == len(cl):
            if rho not in Z.members:
                return False
            full.add(rho)
            continue
        r = cohomology_ranks(F.stalk_complex(rho)) if hit else {}
        if r != ({0: 1} if rho in Z.members else {}):
            return False
    for rho in Z.members:
        for f in X.faces[rho]:
            if f in Z.members and not (f in full and rho in full):
                if not _restriction_nonzero(F, f, rho):
                    return False
    return True


def _restriction_nonzero(F: CellularSheaf, small: int, big: int) -> bool:
    """H^0 of the stalk at `small` maps nonzero into H^0 at `big` (inclusion of generators)."""
    gs_small = F.stalk_generators(small)
    gs_big = F.stalk_generators(big)
    Cs = F._complex_on(gs_small)
    Cb = F._complex_on(gs_big)
    basis = Cs.cohomology_basis(0)
    if not basis:
        return False
    deg0_small = [g for g in gs_small if F.degrees[g] == 0]
    deg0_big = {g: i for i, g in enumerate(g for g in gs_big if F.degrees[g] == 0)}
    z = basis[0]
    image = {deg0_big[deg0_small[i]]: v for i, v in z.items()}
    return Cb.coboundary_preimage(0, image) is None


def bar_resolution(Z: CellSet, field: Field = F2) -> CellularSheaf:
    """Resolution of K_Z by chains s_0 < ... < s_k in the face poset with s_0 in Z.

    The chain gives P_{s_k} in degree -k.  Always valid; used when the
    cellular resolution fails its check.
    """
    X = Z.complex
    members = Z.members
    co_up: dict = {}

    def strict_up(c):
        got = co_up.get(c)
        if got is None:
            got = sorted(X.star([c]) - {c})
            co_up[c] = got
        return got

    chains = []
    stack = [(c,) for c in sorted(members, reverse=True)]
    while stack:
        ch = stack.pop()
        chains.append(ch)
        for t in reversed(strict_up(ch[-1])):
            stack.append(ch + (t,))
    chains.sort(key=lambda ch: (len(ch), ch))
    gid = {ch: i for i, ch in enumerate(chains)}
    diff = []
    one = field.one
    for ch in chains:
        col = {}
        k = len(ch) - 1
        for i in range(k + 1):
            if k == 0:
                break
            if i == 0 and ch[1] not in members:
                continue
            face = ch[:i] + ch[i + 1 :]
            col[gid[face]] = one if i % 2 == 0 else field.neg(one)
        diff.append(col)
    return CellularSheaf(X, [ch[-1] for ch in chains], [1 - len(ch) for ch in chains], diff, field,
                         check=False, label="K_Z(bar)")


def constant_on(Z: CellSet, field: Field = F2, model=None, method: str = "auto") -> CellularSheaf:
    """A projective resolution of the constant sheaf on a locally closed set.

    Every stalk has rank one in degree 0 on Z and vanishes off Z.
    """
    if not isinstance(Z, CellSet):
        raise TypeError("constant_on expects a CellSet")
    X = Z.complex
    if not Z.members:
        F = zero_sheaf(X, field)
    else:
        F = None
        if method in ("auto", "cellular"):
            F = cellular_resolution(Z, field)
            if F is None and method == "cellular":
                raise ResolutionError("cellular resolution failed its stalk check")
        if F is None:
            F = bar_resolution(Z, field)
    F.model = model
    F.support = Z
    return F


# Hom ------------------------------------------------------------------------


class HomComplex:
    """Hom(P, G) for a projective complex P, built one degree at a time.

    Basis of Hom^k: pairs (a, s) with deg s = deg a + k and the stalk of
    summand s at a's cell nonzero.  d(phi) = d_G phi - (-1)^k phi d_P.
    """

    def __init__(self, P: CellularSheaf, G: CellularSheaf):
        if P.complex is not G.complex:
            raise ValueError("sheaves live on different complexes")
        if not P.is_projective:
            raise ValueError("the source must be a complex of P summands")
        self.P, self.G = P, G
        self.field = P.field
        self._basis: dict = {}
        self._d: dict = {}
        self._rank: dict = {}

    def degree_range(self) -> tuple[int, int]:
        if not len(self.P) or not len(self.G):
            return (0, -1)
        plo, phi = self.P.degree_range()
        glo, ghi = self.G.degree_range()
        return glo - phi, ghi - plo

    def basis(self, k: int) -> tuple[list, dict]:
        got = self._basis.get(k)
        if got is not None:
            return got
        P, G = self.P, self.G
        X = P.complex
        idx = G.by_cell_degree()
        gen_general = G.general_summands()
        out = []
        for a, (ca, da) in enumerate(zip(P.cells, P.degrees)):
            want = da + k
            targets = []
            if idx:
                for c in X.closure_of(ca):
                    targets.extend(idx.get((c, want), ()))
            for s in gen_general:
                if G.degrees[s] == want and ca in G.supports[s]:
                    targets.append(s)
            for s in sorted(targets):
                out.append((a, s))
        pos = {e: i for i, e in enumerate(out)}
        self._basis[k] = (out, pos)
        return out, pos

    def dim(self, k: int) -> int:
        return len(self.basis(k)[0])

    def d(self, k: int) -> SparseMatrix:
        got = self._d.get(k)
        if got is not None:
            return got
        F = self.field
        P, G = self.P, self.G
        src, _ = self.basis(k)
        tgt, tpos = self.basis(k + 1)
        inc = P.incoming
        eps = F.one if k % 2 else F.neg(F.one)  # -(-1)^k
        cols = []
        for a, s in src:
            col: dict = {}
            for s2, c in G.diff[s].items():
                j = tpos.get((a, s2))
                if j is not None:
                    col[j] = F.add(col.get(j, 0), c)
            for a2, c in inc[a].items():
                j = tpos.get((a2, s))
                if j is not None:
                    col[j] = F.add(col.get(j, 0), F.mul(eps, c))
            cols.append({j: v for j, v in col.items() if v != 0})
        m = SparseMatrix.from_columns(len(tgt), cols, F)
        self._d[k] = m
        return m

    def rank_d(self, k: int) -> int:
        if k not in self._rank:
            self._rank[k] = rank(self.d(k)) if self.dim(k) and self.dim(k + 1) else 0
        return self._rank[k]

    def ext_rank(self, k: int) -> int:
        n = self.dim(k)
        if not n:
            return 0
        return n - self.rank_d(k) - self.rank_d(k - 1)

    def ext_ranks(self, degrees=None) -> dict:
        lo, hi = self.degree_range()
        rng = range(lo, hi + 1) if degrees is None else degrees
        out = {}
        for k in rng:
            r = self.ext_rank(k)
            if r:
                out[k] = r
        return out

    def to_chain_complex(self) -> ChainComplex:
        lo, hi = self.degree_range()
        if hi < lo:
            return ChainComplex.zero(self.field)
        dims = [self.dim(k) for k in range(lo, hi + 1)]
        diffs = [self.d(k) for k in range(lo, hi)]
        return ChainComplex(lo, dims, diffs, self.field, check=False)

    def local_complex(self, k: int) -> ChainComplex:
        """Three-term piece Hom^{k-1} -> Hom^k -> Hom^{k+1}."""
        dims = [self.dim(k - 1), self.dim(k), self.dim(k + 1)]
        return ChainComplex(k - 1, dims, [self.d(k - 1), self.d(k)], self.field, check=False)

    def cocycle_basis(self, k: int) -> list[dict]:
        """Representatives of a basis of Ext^k, in the deterministic order."""
        return self.local_complex(k).cohomology_basis(k)

    def is_coboundary(self, k: int, vec: dict) -> bool:
        return self.local_complex(k).coboundary_preimage(k, vec) is not None

    def vector_to_components(self, k: int, vec: dict) -> dict:
        basis, _ = self.basis(k)
        return {basis[i]: v for i, v in vec.items() if v != 0}

    def components_to_vector(self, k: int, comps: dict) -> dict:
        _, pos = self.basis(k)
        out = {}
        for e, v in comps.items():
            if v == 0:
                continue
            if e not in pos:
                raise ValueError(f"component {e} is not a basis element of Hom^{k}")
            out[pos[e]] = v
        return out


def _projective_source(F: CellularSheaf) -> CellularSheaf:
    if F.is_projective:
        return F
    raise ValueError("derived Hom needs a projective source; use constant_on")


def hom_sheaf(F: CellularSheaf, G: CellularSheaf) -> ChainComplex:
    """A cochain complex computing Ext^*(F, G)."""
    return HomComplex(_projective_source(F), G).to_chain_complex()


def ext_ranks(F: CellularSheaf, G: CellularSheaf, degrees=None) -> dict:
    if F.complex is not G.complex:
        raise ValueError("sheaves live on different complexes")
    if not len(F) or not len(G):
        return {}
    return HomComplex(_projective_source(F), G).ext_ranks(degrees)


def global_sections_complex(F: CellularSheaf) -> ChainComplex:
    """Derived global sections as Hom from the resolution of the constant sheaf."""
    X = F.complex
    if not len(F):
        return ChainComplex.zero(F.field)
    KX = _whole_resolution(X, F.field)
    return HomComplex(KX, F).to_chain_complex()


def _whole_resolution(X: CellComplex, field: Field) -> CellularSheaf:
    cells = list(range(len(X)))
    diff = [{f: s for f, s in X.faces[c].items()} for c in cells]
    return CellularSheaf(X, cells, [-X.dims[c] for c in cells], diff, field, check=False, label="K_X")


def stalk(F: CellularSheaf, cell: int) -> dict:
    return F.stalk_ranks(cell)


def stalk_table(F: CellularSheaf, cells=None) -> list[tuple[int, int, int]]:
    """(cell, degree, rank) rows with nonzero rank."""
    X = F.complex
    rows = []
    for c in (range(len(X)) if cells is None else cells):
        for d, r in sorted(F.stalk_ranks(c).items()):
            rows.append((c, d, r))
    return rows


def write_stalk_csv(F: CellularSheaf, path, cells=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "degree", "rank"])
        w.writerows(stalk_table(F, cells))


# operations -----------------------------------------------------------------


def restrict_slice(F: CellularSheaf, t=None, row: int | None = None):
    """Pull back to the time slice t (a lattice time); returns (sheaf, old -> new cell ids)."""
    model = F.model
    if model is None:
        raise ValueError("slices need a flow model attached to the sheaf")
    if row is None:
        x = t / model.h
        row = int(round(x))
        if abs(x - row) > 1e-9:
            raise ValueError(f"time {t} is not on the lattice")
    if abs(row) > model.rows:
        raise ValueError("slice outside the window")
    cells = model.slice_cells(row)
    Y, new = subcomplex(F.complex, cells, name=f"slice(row={row})")
    keep = [g for g in range(len(F)) if (F.cells[g] in new if F.supports[g] is None else bool(F.supports[g] & cells))]
    gid = {g: i for i, g in enumerate(keep)}
    diff = [{gid[t2]: c for t2, c in F.diff[g].items() if t2 in gid} for g in keep]
    sup = [None if F.supports[g] is None else frozenset(new[c] for c in F.supports[g] & cells) for g in keep]
    G = CellularSheaf(Y, [new[F.cells[g]] if F.supports[g] is None else min(sup[i]) for i, g in enumerate(keep)],
                      [F.degrees[g] for g in keep], diff, F.field, supports=sup, check=False,
                      label=f"{F.label}|row={row}")
    return G, new


def sheaf_shift(F: CellularSheaf, k: int) -> CellularSheaf:
    """F[k]: degrees lowered by k, differential times (-1)^k."""
    if k == 0:
        return F
    f = F.field
    sg = f.neg(f.one) if k % 2 else f.one
    diff = [{t: f.mul(sg, c) for t, c in col.items()} for col in F.diff]
    G = CellularSheaf(F.complex, F.cells, [d - k for d in F.degrees], diff, f, F.supports, F.model,
                      check=False, label=f"{F.label}[{k}]")
    return G


class SheafMorphism:
    """A degree-d cocycle of Hom(source, target), i.e. a chain map source -> target[d].

    ``components`` maps (source generator, target generator) to a scalar.
    """

    def __init__(self, source: CellularSheaf, target: CellularSheaf, degree: int, components: dict,
                 check: bool = True):
        self.source, self.target, self.degree = source, target, degree
        self.components = {e: v for e, v in components.items() if v != 0}
        if check:
            self.check()

    def check(self) -> None:
        H = HomComplex(self.source, self.target)
        vec = H.components_to_vector(self.degree, self.components)
        if H.d(self.degree).apply(vec):
            raise ValueError("not a chain map")

    def scaled(self, u) -> "SheafMorphism":
        f = self.source.field
        u = f(u)
        return SheafMorphism(self.source, self.target, self.degree,
                             {e: f.mul(v, u) for e, v in self.components.items()}, check=False)

    def is_null_homotopic(self) -> bool:
        H = HomComplex(self.source, self.target)
        return H.is_coboundary(self.degree, H.components_to_vector(self.degree, self.components))


def sheaf_cone(phi: SheafMorphism) -> CellularSheaf:
    """Cone of phi: P -> Q[d]; generators P (degree -1) then Q (shifted by d)."""
    P, Q, d = phi.source, phi.target, phi.degree
    f = P.field
    n = len(P)
    minus = f.neg(f.one)
    sq = minus if d % 2 else f.one
    cells = P.cells + Q.cells
    degrees = [x - 1 for x in P.degrees] + [x - d for x in Q.degrees]
    supports = P.supports + Q.supports
    diff: list[dict] = []
    for a in range(n):
        col = {t: f.mul(minus, c) for t, c in P.diff[a].items()}
        diff.append(col)
    for (a, s), v in phi.components.items():
        diff[a][n + s] = f.add(diff[a].get(n + s, 0), v)
    for s in range(len(Q)):
        diff.append({n + t: f.mul(sq, c) for t, c in Q.diff[s].items()})
    C = CellularSheaf(P.complex, cells, degrees, diff, f, supports, P.model or Q.model, check=False,
                      label=f"Cone({P.label}->{Q.label}[{d}])")
    C.blocks = {"source": range(0, n), "target": range(n, n + len(Q))}
    return C


def sheaf_cocone(phi: SheafMorphism) -> CellularSheaf:
    C = sheaf_shift(sheaf_cone(phi), -1)
    C.blocks = {"source": range(0, len(phi.source)), "target": range(len(phi.source), len(C))}
    C.label = f"Cocone({phi.source.label}->{phi.target.label}[{phi.degree}])"
    return C


def lift_ext_class(F: CellularSheaf, G: CellularSheaf, degree: int, index: int = 0) -> SheafMorphism:
    """Chain-level representative of the index-th basis class of Ext^degree(F, G)."""
    H = HomComplex(_projective_source(F), G)
    basis = H.cocycle_basis(degree)
    if index >= len(basis):
        raise ValueError(f"Ext^{degree} has rank {len(basis)}; no class number {index}")
    return SheafMorphism(F, G, degree, H.vector_to_components(degree, basis[index]), check=False)


def extend_morphism(source: CellularSheaf, target: CellularSheaf, degree: int, fixed: dict,
                    free_source=None, free_target=None):
    """Complete `fixed` to a cocycle by adding components on the free part.

    The free part is every basis pair (a, s) with a in free_source or s in
    free_target.  Returns a SheafMorphism, or None when no completion
    exists (a nonvanishing obstruction).
    """
    H = HomComplex(source, target)
    basis, pos = H.basis(degree)
    fs = set(free_source or ())
    ft = set(free_target or ())
    free = [i for i, (a, s) in enumerate(basis) if a in fs or s in ft]
    d = H.d(degree)
    f = source.field
    base = H.components_to_vector(degree, fixed)
    rhs = d.apply(base)
    if not rhs:
        return SheafMorphism(source, target, degree, dict(fixed), check=False)
    red = Reducer(f, track=True)
    for j, i in enumerate(free):
        col = d.column(i)
        if col:
            red.add(red._pack(col), j)
    neg_rhs = {r: f.neg(v) for r, v in rhs.items()}
    sol = red.solve(red._pack(neg_rhs))
    if sol is None:
        return None
    sol = red.unpack(sol) if red.binary else sol
    comps = dict(fixed)
    for j, v in sol.items():
        e = basis[free[j]]
        comps[e] = f.add(comps.get(e, 0), v)
    return SheafMorphism(source, target, degree, comps, check=False)


# microlocal test --------------------------------------------------------------


def _displacement_fn(F: CellularSheaf):
    model = F.model
    if model is not None:
        return model.displacement
    X = F.complex

    def disp(v, w):
        pv, pw = tuple(X.points.get(v) or ()), tuple(X.points.get(w) or ())
        tv, tw = X.times.get(v), X.times.get(w)
        out = [b - a for a, b in zip(pv, pw)]
        if tv is not None and tw is not None:
            out.append(tw - tv)
        return tuple(out)

    return disp


def _half_space_closed_part(F: CellularSheaf, v: int, delta) -> CellSet:
    X = F.complex
    if X.dims[v] != 0:
        raise ValueError("microlocal tests are taken at vertices")
    model = F.model
    if model is not None:
        if tuple(delta) not in DIRECTIONS:
            raise ValueError(f"unsupported direction class {delta}")
        if model.kind == "sphere" and model.n == 2 and model.on_axis(v) and delta[0] != 0:
            raise ValueError("directions with a radial part are not supported on the polar axis")
    disp = _displacement_fn(F)
    star = X.star([v])
    bad = set()
    for c in star:
        for w in X.vertices_of(c):
            if w == v:
                continue
            dv = disp(v, w)
            if sum(a * b for a, b in zip(delta, dv)) < 0:
                bad.add(c)
                break
    return CellSet(X, star - bad)


def gamma_stalk(F: CellularSheaf, v: int, delta) -> dict:
    """Ranks of sections supported in {f >= 0} near v, for df = delta."""
    Z = _half_space_closed_part(F, v, delta)
    if not len(F):
        return {}
    if not Z.members:
        return {}
    R = cellular_resolution(Z, F.field) or bar_resolution(Z, F.field)
    return HomComplex(R, F.local_part(set(R.cells))).ext_ranks()


def micro_test(F: CellularSheaf, v: int, delta) -> bool:
    return bool(gamma_stalk(F, v, delta))
