"""Assemble the geodesic-flow kernel on a fiber model and verify it.

The base point x is held fixed and everything lives on Y x [-T, T]
(see :mod:`sheafflow.flowmodels`).  Because the isometry group acts
transitively and the regions only depend on dist(x, y), Ext groups over
the full product M x M x [-T, T] are the fiber groups tensored with
H^*(M); both are reported.

Pipeline:

1. regions Z_i (open for i > 0, closed for i < 0) with (|i| - 1) pi < T;
2. a generator psi_i of the rank-one Ext group between neighbouring
   regions, in degree equal to the i-th step size;
3. the plus tower K_i = Cocone(K_{i-1} -> K_{Z_{i+1}}[shift]) and the
   minus tower K_{-k} = Cone(K_{Z_{-(k+1)}}[shift] -> K_{-(k-1)}), each map
   obtained by extending psi_i over the earlier stages;
4. psi_0 generating Ext^{top}(K_-, K_+) and K = Cocone(psi_0).
"""

from __future__ import annotations

import multiprocessing as mp
import random

from sheafflow.cells import CellSet, cells_from_values, cochains_on, cp2_nine_vertex, product, simplicial_complex
from sheafflow.flowmodels import FlowModel, flat_model, sphere_model
from sheafflow.geometry import expected_ss_units, region_level_units, region_shift, step_total
from sheafflow.homological import convolve_ranks, shift_ranks, tensor
from sheafflow.linalg import F2, Field, PrimeField
from sheafflow.sheaves import (
    DIRECTIONS,
    CellularSheaf,
    SheafMorphism,
    constant_on,
    ext_ranks,
    extend_morphism,
    lift_ext_class,
    micro_test,
    restrict_slice,
    sheaf_cocone,
    sheaf_cone,
    sheaf_shift,
)

__all__ = [
    "KernelError",
    "KernelAssembly",
    "build_regions",
    "choose_generators",
    "assemble_plus",
    "assemble_minus",
    "assemble_kernel",
    "verify_ss_profile",
    "verify_slice_constructibility",
    "t0_check",
    "step2_demo",
    "sample_vertices",
    "ss_table",
    "slice_profile",
    "stalk_profile",
    "base_cohomology",
    "build_kernel",
    "cone_models",
    "cone_truth_table",
    "cp2_rank_checks",
    "window_growth_check",
    "tower_stabilization",
    "scaling_check",
    "kernel_report",
]


class KernelError(RuntimeError):
    """A rank precondition or a lifting step failed."""


def base_cohomology(space: str, n: int) -> dict:
    if space == "sphere":
        return {0: 1, n: 1}
    return {2 * k: 1 for k in range(n + 1)}


def _step(i: int, space: str, n: int) -> int:
    k = abs(i)
    return step_total(k, space, n) - step_total(k - 1, space, n)


class KernelAssembly:
    """State of one kernel construction on a fiber model."""

    def __init__(self, model: FlowModel, space: str = "sphere", field: Field = F2):
        if space not in ("sphere", "projective"):
            raise ValueError(f"unknown space {space}")
        if space == "projective" and model.n != 2:
            raise ValueError("CP^1 is modelled on the 2-sphere fiber")
        self.model = model
        self.space = space
        # complex dimension for CP^n; the CP^1 fiber is the 2-sphere model
        self.n = 1 if space == "projective" else model.n
        self.field = field
        self.regions: dict[int, CellSet] = {}
        self.resolutions: dict[int, CellularSheaf] = {}
        self.generators: dict[int, SheafMorphism] = {}
        self.generator_scale: dict[int, object] = {}
        self.tower_plus: list[CellularSheaf] = []
        self.tower_minus: list[CellularSheaf] = []
        self.psi0: SheafMorphism | None = None
        self.kernel: CellularSheaf | None = None
        self.ext_table: list[dict] = []
        self.lift_log: list[dict] = []
        self.report: dict = {}
        self.ss_table: dict = {}

    # bookkeeping -----------------------------------------------------------

    @property
    def top_degree(self) -> int:
        return self.n + 1 if self.space == "sphere" else 2 * self.n + 1

    def step(self, i: int) -> int:
        return _step(i, self.space, self.n)

    def shift(self, i: int) -> int:
        return region_shift(i, self.space, self.n)

    def max_index(self) -> int:
        """Largest k with (k - 1) pi < T, T = rows * h."""
        P, J = self.model.half_turn, self.model.rows
        k = 1
        while k * P < J:
            k += 1
        return k

    def indices(self, sign: int) -> list[int]:
        return [sign * k for k in range(1, self.max_index() + 1) if self.regions.get(sign * k) is not None and len(self.regions[sign * k])]

    @property
    def is_fiber(self) -> bool:
        return not self.model.base

    def total_ranks(self, ranks: dict) -> dict:
        """Ranks over the whole space: fiber groups times H^*(M), or as computed on a product model."""
        if not self.is_fiber:
            return dict(ranks)
        return convolve_ranks(base_cohomology(self.space, self.n), ranks)


def build_regions(assembly: KernelAssembly, offset=0) -> dict:
    """Regions Z_i as cell sets; `offset` (lattice units) perturbs every level."""
    M = assembly.model
    X = M.complex
    P = M.half_turn
    out = {}
    for k in range(1, assembly.max_index() + 1):
        for i in (k, -k):
            vals = {v: region_level_units(i, M.radius[v], M.row[v], P) + offset for v in X.vertices}
            Z = cells_from_values(X, vals, "open" if i > 0 else "closed", tol=0)
            out[i] = Z
    assembly.regions = out
    assembly.resolutions = {}
    for i, Z in out.items():
        assembly.resolutions[i] = constant_on(Z, assembly.field, model=M)
    return out


def _pair(i: int) -> tuple[int, int]:
    """(source, target) region indices of psi_i."""
    return (i, i + 1) if i > 0 else (i - 1, i)


def choose_generators(assembly: KernelAssembly, scales: dict | None = None) -> dict:
    """psi_i for every consecutive pair of nonempty regions; checks rank one."""
    scales = scales or {}
    gens = {}
    table = []
    for sign in (1, -1):
        for i in assembly.indices(sign):
            a, b = _pair(i)
            if b not in assembly.regions or a not in assembly.regions:
                continue
            if not len(assembly.regions[a]) or not len(assembly.regions[b]):
                continue
            S, T = assembly.resolutions[a], assembly.resolutions[b]
            ranks = ext_ranks(S, T)
            deg = assembly.step(i)
            table.append({"i": i, "source": a, "target": b, "degree": deg, "ranks": ranks,
                          "total": assembly.total_ranks(ranks)})
            if ranks.get(deg, 0) != 1:
                raise KernelError(f"Ext^{deg}(K_Z{a}, K_Z{b}) has rank {ranks.get(deg, 0)}, expected 1 (ranks {ranks})")
            psi = lift_ext_class(S, T, deg)
            u = scales.get(i)
            if u is not None:
                psi = psi.scaled(u)
            gens[i] = psi
    assembly.generators = gens
    assembly.ext_table = sorted(table, key=lambda r: r["i"])
    return gens


def _vanishing(assembly: KernelAssembly, a: int, b: int) -> dict:
    if a not in assembly.resolutions or b not in assembly.resolutions:
        return {}
    return ext_ranks(assembly.resolutions[a], assembly.resolutions[b])


def assemble_plus(assembly: KernelAssembly) -> CellularSheaf:
    R = assembly.resolutions
    idx = assembly.indices(1)
    K = R[1]
    K.blocks = {"target": range(len(K))}
    tower = [K]
    for i in idx:
        if i + 1 not in idx:
            break
        psi = assembly.generators[i]
        if i == 1:
            K = sheaf_cocone(psi)
        else:
            # extend psi_i from the last summand of K_{i-1} to all of it
            block = list(K.blocks["target"])
            fixed = {(block[a], s): v for (a, s), v in psi.components.items()}
            free = [g for g in range(len(K)) if g not in set(block)]
            deg = assembly.shift(i + 1)
            lifted = extend_morphism(K, R[i + 1], deg, fixed, free_source=free)
            assembly.lift_log.append({"stage": i, "degree": deg, "ok": lifted is not None,
                                      "obstruction_ext": _vanishing(assembly, i - 1, i + 1)})
            if lifted is None:
                raise KernelError(f"could not extend psi_{i} over K_{i - 1}")
            K = sheaf_cocone(lifted)
        K.label = f"K_{i}"
        tower.append(K)
    assembly.tower_plus = tower
    return tower[-1]


def assemble_minus(assembly: KernelAssembly) -> CellularSheaf:
    R = assembly.resolutions
    idx = assembly.indices(-1)
    K = R[-1]
    tower = [K]
    for i in idx:
        src = i - 1
        if src not in idx:
            break
        psi = assembly.generators[i]
        r = assembly.shift(src)
        if i == -1:
            K = sheaf_shift(sheaf_cone(psi), r)
            K.blocks = {"source": range(len(R[src]))}
        else:
            block = list(K.blocks["source"])
            fixed = {(a, block[s]): v for (a, s), v in psi.components.items()}
            free = [g for g in range(len(K)) if g not in set(block)]
            lifted = extend_morphism(R[src], K, -r, fixed, free_target=free)
            assembly.lift_log.append({"stage": i, "degree": -r, "ok": lifted is not None,
                                      "obstruction_ext": _vanishing(assembly, src, i + 1)})
            if lifted is None:
                raise KernelError(f"could not extend psi_{i} into K_{i + 1}")
            K = sheaf_shift(sheaf_cone(lifted), r)
            K.blocks = {"source": range(len(R[src]))}
        K.label = f"K_{i}"
        tower.append(K)
    assembly.tower_minus = tower
    return tower[-1]


def assemble_kernel(assembly: KernelAssembly, scale=None) -> CellularSheaf:
    Kp = assembly.tower_plus[-1] if assembly.tower_plus else assemble_plus(assembly)
    Km = assembly.tower_minus[-1] if assembly.tower_minus else assemble_minus(assembly)
    ranks = ext_ranks(Km, Kp)
    d = assembly.top_degree
    assembly.ext_minus_plus = {"ranks": ranks, "total": assembly.total_ranks(ranks), "degree": d}
    if ranks.get(d, 0) != 1:
        raise KernelError(f"Ext^{d}(K_-, K_+) has rank {ranks.get(d, 0)}, expected 1 (ranks {ranks})")
    psi0 = lift_ext_class(Km, Kp, d)
    if scale is not None:
        psi0 = psi0.scaled(scale)
    assembly.psi0 = psi0
    K = sheaf_cocone(psi0)
    K.label = "K"
    K.model = assembly.model
    assembly.kernel = K
    return K


# verification ---------------------------------------------------------------


def _chart_classes(assembly: KernelAssembly, v: int, mode: str) -> set:
    M = assembly.model
    tgt = expected_ss_units(assembly.space, M.n, M.radius[v], M.row[v], M.half_turn)
    if M.n == 1:
        u = M.signed_angle(v)
        if tgt.corner:
            return set(tgt.directions(mode))
        sign = 1 if u > 0 else -1
        if M.radius[v] == M.half_turn:
            sign = 1 if M.sheet[v] >= 0 else -1
        return set(tgt.in_chart(sign, mode))
    return set(tgt.directions(mode))


def _directions_at(assembly: KernelAssembly, v: int) -> list:
    M = assembly.model
    if M.n == 2 and M.on_axis(v):
        return [d for d in DIRECTIONS if d[0] == 0]
    return list(DIRECTIONS)


def sample_vertices(assembly: KernelAssembly, seed: int = 0, n_random: int = 200) -> list[int]:
    """Vertices on the corner slices t = 0, pi, 2pi plus a seeded sample of interior vertices."""
    M = assembly.model
    P = M.half_turn
    rows = [r for r in (0, P, 2 * P) if r < M.rows]
    fixed = sorted(v for r in rows for v in M.vertices_at(row=r))
    pool = sorted(v for v in M.complex.vertices if abs(M.row[v]) < M.rows and v not in set(fixed))
    rng = random.Random(seed)
    extra = sorted(rng.sample(pool, min(n_random, len(pool))))
    return fixed + extra


_SHARED: dict = {}


def _true_directions(v):
    F, assembly = _SHARED["sheaf"], _SHARED["assembly"]
    return [d for d in _directions_at(assembly, v) if micro_test(F, v, d)]


def ss_table(F: CellularSheaf, assembly: KernelAssembly, vertices, jobs: int = 1) -> dict:
    """{vertex: direction classes where micro_test holds}.

    Queries are independent; with jobs > 1 they run in forked workers and
    are merged back in vertex order.
    """
    vertices = list(vertices)
    _SHARED.update(sheaf=F, assembly=assembly)
    try:
        if jobs > 1 and len(vertices) > 1 and "fork" in mp.get_all_start_methods():
            with mp.get_context("fork").Pool(jobs) as pool:
                rows = pool.map(_true_directions, vertices, chunksize=max(1, len(vertices) // (4 * jobs)))
        else:
            rows = [_true_directions(v) for v in vertices]
    finally:
        _SHARED.clear()
    return dict(zip(vertices, rows))


def verify_ss_profile(assembly: KernelAssembly, seed: int = 0, n_random: int = 200, mode: str = "lambda",
                      sheaf: CellularSheaf | None = None, jobs: int = 1) -> dict:
    """Compare micro_test on the kernel with the expected direction classes."""
    F = sheaf if sheaf is not None else assembly.kernel
    M = assembly.model
    verts = sample_vertices(assembly, seed, n_random)
    table = ss_table(F, assembly, verts, jobs)
    mismatches = []
    for v in verts:
        expect = _chart_classes(assembly, v, mode)
        got = set(table[v])
        for d in _directions_at(assembly, v):
            if (d in got) != (d in expect):
                mismatches.append({"vertex": v, "radius": M.radius[v], "row": M.row[v], "sheet": M.sheet[v],
                                   "direction": list(d), "observed": d in got, "expected": d in expect})
    return {"sampled": len(verts), "seed": seed, "tests": sum(len(_directions_at(assembly, v)) for v in verts),
            "mismatches": mismatches, "table": table}


def step2_demo(assembly: KernelAssembly) -> dict:
    """Direction classes at (x, -x, pi) for K_{Z_1} alone and for the kernel."""
    M = assembly.model
    P = M.half_turn
    if P >= M.rows:
        return {}
    cand = [v for v in M.vertices_at(radius=P, row=P)]
    v = min(cand)
    out = {"vertex": v, "expected_closure": sorted(map(list, _chart_classes(assembly, v, "closure"))),
           "expected_lambda": sorted(map(list, _chart_classes(assembly, v, "lambda")))}
    for name, F in (("K_Z1", assembly.resolutions[1]), ("K", assembly.kernel)):
        out[name] = [list(d) for d in _directions_at(assembly, v) if micro_test(F, v, d)]
    return out


def slice_profile(F: CellularSheaf, row: int) -> tuple:
    """Stalk ranks of F restricted to a time slice, keyed by cell of the slice."""
    G, new = restrict_slice(F, row=row)
    back = {b: a for a, b in new.items()}
    return G, {back[c]: G.stalk_ranks(c) for c in range(len(G.complex))}


def t0_check(assembly: KernelAssembly) -> dict:
    """K restricted to t = 0 has the stalks of the constant sheaf on the diagonal."""
    M = assembly.model
    K = assembly.kernel
    _, prof = slice_profile(K, 0)
    bad = []
    for c, r in sorted(prof.items()):
        on_diag = all(M.radius[v] == 0 for v in M.complex.vertices_of(c))
        want = {0: 1} if on_diag else {}
        if r != want:
            bad.append({"cell": c, "ranks": r})
    return {"ok": not bad, "cells": len(prof), "bad": bad}


def verify_slice_constructibility(assembly: KernelAssembly, k: int) -> dict:
    """Stalk ranks of K at t = 2 k pi are constant on the diagonal and on its complement."""
    M = assembly.model
    row = 2 * k * M.half_turn
    if abs(row) >= M.rows:
        raise ValueError(f"slice t = {2 * k}pi lies outside the window")
    _, prof = slice_profile(assembly.kernel, row)
    strata: dict = {"diagonal": set(), "complement": set()}
    for c, r in prof.items():
        on_diag = all(M.radius[v] == 0 for v in M.complex.vertices_of(c))
        key = tuple(sorted(r.items()))
        strata["diagonal" if on_diag else "complement"].add(key)
    out = {"k": k, "row": row}
    for name, vals in strata.items():
        out[name] = [dict(v) for v in sorted(vals)]
    out["constant"] = all(len(v) <= 1 for v in strata.values())
    return out


def stalk_profile(F: CellularSheaf, model: FlowModel, cells=None) -> dict:
    """Stalk ranks keyed by the lattice coordinates of each cell's vertices."""
    X = model.complex
    out = {}
    for c in (range(len(X)) if cells is None else cells):
        key = tuple(sorted((model.radius[v], model.row[v], model.sheet[v]) for v in X.vertices_of(c)))
        out[key] = F.stalk_ranks(c)
    return out


def build_kernel(space: str = "sphere", n: int = 1, mesh: int = 12, window=2, field: Field = F2,
                 scales: dict | None = None, psi0_scale=None) -> KernelAssembly:
    """Regions, generators, both towers and the kernel."""
    if space == "sphere":
        model = sphere_model(n, mesh, window)
    else:
        if n != 1:
            raise ValueError("the full projective pipeline is only modelled for CP^1")
        model = sphere_model(2, mesh, window)
    A = KernelAssembly(model, space, field)
    build_regions(A)
    choose_generators(A, scales)
    assemble_plus(A)
    assemble_minus(A)
    assemble_kernel(A, psi0_scale)
    return A


# flat cone models -------------------------------------------------------------

_CONE_INTERIOR = {(0, -1)}
_CONE_BOUNDARY = {(1, -1), (-1, -1)}


def cone_models(variant: str = "open", mesh: int = 4, field: Field = F2):
    """K_A, K_B and Cocone(theta) on a box in the (x, t) plane.

    B = {|x| < t}.  A = {|x| > -t} for the open variant (theta in degree 1)
    and A = {|x| <= -t} for the closed one (theta in degree 2).
    """
    M = flat_model(mesh, 1)
    X = M.complex
    if variant == "open":
        A = cells_from_values(X, {v: -M.row[v] - abs(M.radius[v]) for v in X.vertices}, "open", tol=0)
        deg = 1
    elif variant == "closed":
        A = cells_from_values(X, {v: M.row[v] + abs(M.radius[v]) for v in X.vertices}, "closed", tol=0)
        deg = 2
    else:
        raise ValueError(f"unknown variant {variant}")
    B = cells_from_values(X, {v: abs(M.radius[v]) - M.row[v] for v in X.vertices}, "open", tol=0)
    KA, KB = constant_on(A, field, model=M), constant_on(B, field, model=M)
    ranks = ext_ranks(KA, KB)
    if ranks.get(deg, 0) != 1:
        raise KernelError(f"Ext^{deg}(K_A, K_B) has rank {ranks.get(deg, 0)} (ranks {ranks})")
    C = sheaf_cocone(lift_ext_class(KA, KB, deg))
    C.model = M
    return M, {"K_A": KA, "K_B": KB, "cocone": C}, {"degree": deg, "ranks": ranks}


def cone_truth_table(variant: str = "open", mesh: int = 4, field: Field = F2) -> dict:
    """micro_test at the apex, and its limit from the neighbouring vertices.

    Expected pointwise values: K_A is nonzero on the closed cone, K_B only
    on its interior (the boundary rays belong to SS(K_B) by closedness and
    are seen from the neighbouring vertices), the cocone only on the
    boundary rays.  The expected microsupport (pointwise or limit) is the
    closed cone for K_A and K_B and the boundary for the cocone.
    """
    M, sheaves, ext = cone_models(variant, mesh, field)
    X = M.complex
    o = next(v for v in X.vertices if M.radius[v] == 0 and M.row[v] == 0)
    nbrs = sorted(w for c in X.star([o]) for w in X.vertices_of(c) if w != o)
    nbrs = sorted(set(nbrs))
    cone = _CONE_INTERIOR | _CONE_BOUNDARY
    want_point = {"K_A": cone, "K_B": _CONE_INTERIOR, "cocone": _CONE_BOUNDARY}
    want_ss = {"K_A": cone, "K_B": cone, "cocone": _CONE_BOUNDARY}
    rows, mismatches = [], []
    for name, F in sheaves.items():
        for d in DIRECTIONS:
            point = micro_test(F, o, d)
            limit = any(micro_test(F, w, d) for w in nbrs)
            row = {"sheaf": name, "direction": list(d), "pointwise": point, "in_ss": point or limit,
                   "expected_pointwise": d in want_point[name], "expected_ss": d in want_ss[name]}
            rows.append(row)
            if row["pointwise"] != row["expected_pointwise"] or row["in_ss"] != row["expected_ss"]:
                mismatches.append(row)
    return {"variant": variant, "mesh": mesh, "theta": ext, "table": rows, "mismatches": mismatches}


# CP^2 rank checks -----------------------------------------------------------------


def cp2_rank_checks(field: Field = F2) -> dict:
    """Rank patterns on the 9-vertex CP^2.

    * H^*(CP^2);
    * Thom pattern H^*(X x X, X x X - diagonal) = H^*(CP^2)[-4], the pair
      being modelled by the product cells sigma x tau with sigma, tau disjoint;
    * C^*(CP^2) (x) C^*(D^4, S^3)[-1], the target ranks for Ext(K_-, K_+).
    """
    X = cp2_nine_vertex()
    coh = X.cochain_complex(field).cohomology_ranks()
    P = product(X, X)
    verts = [frozenset(X.vertices_of(c)) for c in range(len(X))]
    near = {c for c in range(len(P)) if verts[P.pairs[c][0]] & verts[P.pairs[c][1]]}
    thom = cochains_on(P, near, field).cohomology_ranks()
    simplex = simplicial_complex([tuple(range(5))])
    top = max(range(len(simplex)), key=lambda c: simplex.dims[c])
    disk_rel = cochains_on(simplex, {top}, field)
    minus_plus = shift_ranks(tensor(X.cochain_complex(field), disk_rel).cohomology_ranks(), -1)
    return {
        "cohomology": coh,
        "cohomology_expected": {0: 1, 2: 1, 4: 1},
        "thom": thom,
        "thom_expected": shift_ranks(coh, -4),
        "minus_plus": minus_plus,
        "minus_plus_expected": {5: 1, 7: 1, 9: 1},
        "ok": coh == {0: 1, 2: 1, 4: 1} and thom == shift_ranks(coh, -4) and minus_plus == {5: 1, 7: 1, 9: 1},
    }


# robustness -------------------------------------------------------------------------


def _rows_below(model: FlowModel, bound: int):
    X = model.complex
    return [c for c in range(len(X)) if all(abs(model.row[v]) < bound for v in X.vertices_of(c))]


def window_growth_check(space: str = "sphere", n: int = 1, mesh: int = 4, window=1, field: Field = F2) -> dict:
    """Stalks of K at |t| < T - pi are unchanged when T grows by pi."""
    small = build_kernel(space, n, mesh, window, field)
    big = build_kernel(space, n, mesh, window + 1, field)
    M = small.model
    cells = _rows_below(M, M.rows - M.half_turn)
    a = stalk_profile(small.kernel, M, cells)
    b = stalk_profile(big.kernel, big.model)
    diff = sorted(k for k in a if a[k] != b.get(k))
    return {"window": window, "compared": len(a), "differences": [list(map(list, k)) for k in diff], "ok": not diff}


def tower_stabilization(assembly: KernelAssembly) -> list[dict]:
    """Stage i and stage i + 1 of the plus tower agree on cells with t < (i - 1) pi."""
    M = assembly.model
    X = M.complex
    out = []
    for i in range(1, len(assembly.tower_plus) - 1):
        bound = (i - 1) * M.half_turn
        cells = [c for c in range(len(X)) if all(M.row[v] < bound for v in X.vertices_of(c))]
        a, b = assembly.tower_plus[i], assembly.tower_plus[i + 1]
        bad = [c for c in cells if a.stalk_ranks(c) != b.stalk_ranks(c)]
        out.append({"stage": i, "compared": len(cells), "differences": len(bad), "ok": not bad})
    return out


def scaling_check(space: str = "sphere", n: int = 1, mesh: int = 4, window=1, p: int = 5,
                  units=(2, 3), seed: int = 0, n_random: int = 40) -> dict:
    """Stalk and micro_test tables do not change when every psi_i is rescaled by a unit."""
    field = PrimeField(p)
    base = build_kernel(space, n, mesh, window, field)
    verts = sample_vertices(base, seed, n_random)
    X = base.model.complex
    ref_stalks = [base.kernel.stalk_ranks(c) for c in range(len(X))]
    ref_ss = ss_table(base.kernel, base, verts)
    runs = []
    for u in units:
        scales = {i: u for i in base.generators}
        other = build_kernel(space, n, mesh, window, field, scales=scales, psi0_scale=u)
        same_stalks = [other.kernel.stalk_ranks(c) for c in range(len(X))] == ref_stalks
        same_ss = ss_table(other.kernel, other, verts) == ref_ss
        runs.append({"unit": u, "stalks_equal": same_stalks, "ss_equal": same_ss})
    return {"field": field.name, "runs": runs, "ok": all(r["stalks_equal"] and r["ss_equal"] for r in runs)}


# report --------------------------------------------------------------------------------


def kernel_report(assembly: KernelAssembly, seed: int = 0, n_random: int = 200, jobs: int = 1,
                  ss: bool = True) -> dict:
    """All checks on an assembled kernel as a JSON-ready dict."""
    M = assembly.model
    rep: dict = {
        "space": assembly.space,
        "n": assembly.n,
        "field": assembly.field.name,
        "mesh": M.m,
        "window": (M.rows - 1) / M.half_turn,
        "rows": M.rows,
        "seed": seed,
        "cells": len(M.complex),
        "ext_table": assembly.ext_table,
        "generator_degrees": {i: assembly.step(i) for i in sorted(assembly.generators)},
        "ext_minus_plus": assembly.ext_minus_plus,
        "lifts": assembly.lift_log,
        "kernel_generators": len(assembly.kernel),
    }
    t0 = t0_check(assembly)
    rep["t0_check"] = t0["ok"]
    rep["t0_detail"] = t0
    slices = []
    k = 1
    while 2 * k * M.half_turn < M.rows:
        slices.append(verify_slice_constructibility(assembly, k))
        k += 1
    rep["slice_checks"] = slices
    rep["tower_stabilization"] = tower_stabilization(assembly)
    checks = {"t0": t0["ok"], "slices": all(s["constant"] for s in slices),
              "towers": all(s["ok"] for s in rep["tower_stabilization"])}
    if ss:
        res = verify_ss_profile(assembly, seed, n_random, jobs=jobs)
        rep["ss_sampled"] = res["sampled"]
        rep["ss_tests"] = res["tests"]
        rep["ss_mismatches"] = res["mismatches"]
        assembly.ss_table = res["table"]
        rep["step2_demo"] = step2_demo(assembly)
        checks["ss"] = not res["mismatches"]
    rep["checks"] = checks
    rep["ok"] = all(checks.values())
    assembly.report = rep
    return rep
