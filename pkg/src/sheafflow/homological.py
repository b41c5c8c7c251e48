"""Bounded cochain complexes of finite-dimensional vector spaces.

Grading is cohomological: d^k maps C^k to C^{k+1}.  Conventions used
everywhere in the package:

* ``shift(C, k)`` has C^{j+k} in degree j and differential (-1)^k d.
* ``cone(f: C -> D)`` has C^{k+1} + D^k in degree k with
  d(a, b) = (-d_C a, f a + d_D b); ``cocone(f) = shift(cone(f), -1)``.
* Hom^k(C, D) = prod_p Hom(C^p, D^{p+k}) with d(phi) = d_D phi - (-1)^k phi d_C.
* (C (x) D)^k = sum_{p+q=k} C^p (x) D^q with d(a(x)b) = da(x)b + (-1)^p a(x)db.
"""

from __future__ import annotations

import json
from pathlib import Path

from sheafflow.linalg import F2, Field, Reducer, SparseMatrix, field_from_name, rank

__all__ = [
    "ChainComplex",
    "ComplexMap",
    "cohomology_ranks",
    "euler_characteristic",
    "shift",
    "shift_map",
    "cone",
    "cocone",
    "hom_complex",
    "tensor",
    "convolve_ranks",
    "shift_ranks",
]


class ChainComplex:
    """C^lo -> ... -> C^hi with explicit sparse differentials."""

    def __init__(self, lo: int, dims, diffs=None, field: Field = F2, check: bool = True):
        dims = [int(x) for x in dims]
        if any(x < 0 for x in dims):
            raise ValueError("negative dimension")
        self.lo = int(lo)
        self.dims = dims
        self.field = field
        if diffs is None:
            diffs = [SparseMatrix(dims[i + 1], dims[i], field) for i in range(len(dims) - 1)]
        diffs = list(diffs)
        if len(diffs) != max(len(dims) - 1, 0):
            raise ValueError("need one differential between each pair of consecutive degrees")
        for i, d in enumerate(diffs):
            if d.shape != (dims[i + 1], dims[i]):
                raise ValueError(f"d^{self.lo + i} has shape {d.shape}, expected {(dims[i + 1], dims[i])}")
            if d.field != field:
                raise ValueError("differential over a different field")
        self.diffs = diffs
        if check:
            self.check()

    @property
    def hi(self) -> int:
        return self.lo + len(self.dims) - 1

    @property
    def degrees(self) -> range:
        return range(self.lo, self.hi + 1)

    def dim(self, k: int) -> int:
        i = k - self.lo
        return self.dims[i] if 0 <= i < len(self.dims) else 0

    def d(self, k: int) -> SparseMatrix:
        """The differential C^k -> C^{k+1} (a zero matrix outside the range)."""
        i = k - self.lo
        if 0 <= i < len(self.diffs):
            return self.diffs[i]
        return SparseMatrix(self.dim(k + 1), self.dim(k), self.field)

    def check(self) -> None:
        for i in range(len(self.diffs) - 1):
            if not (self.diffs[i + 1] @ self.diffs[i]).is_zero():
                raise ValueError(f"d o d != 0 at degree {self.lo + i}")

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @classmethod
    def point(cls, field: Field = F2, degree: int = 0) -> "ChainComplex":
        """The field concentrated in one degree."""
        return cls(degree, [1], [], field)

    @classmethod
    def zero(cls, field: Field = F2) -> "ChainComplex":
        return cls(0, [0], [], field)

    @classmethod
    def from_dict(cls, diffs: dict, dims: dict, field: Field = F2, check: bool = True) -> "ChainComplex":
        """Build from sparse per-degree data; missing degrees are zero."""
        keys = [k for k, v in dims.items() if v]
        if not keys:
            return cls.zero(field)
        lo, hi = min(keys), max(keys)
        dl = [dims.get(k, 0) for k in range(lo, hi + 1)]
        ds = []
        for k in range(lo, hi):
            m = diffs.get(k)
            ds.append(m if m is not None else SparseMatrix(dl[k + 1 - lo], dl[k - lo], field))
        return cls(lo, dl, ds, field, check)

    def trimmed(self) -> "ChainComplex":
        """Drop zero spaces at both ends."""
        nz = [i for i, x in enumerate(self.dims) if x]
        if not nz:
            return ChainComplex.zero(self.field)
        a, b = nz[0], nz[-1]
        return ChainComplex(self.lo + a, self.dims[a : b + 1], self.diffs[a:b], self.field, check=False)

    def same_data(self, other: "ChainComplex") -> bool:
        s, o = self.trimmed(), other.trimmed()
        return s.lo == o.lo and s.dims == o.dims and s.diffs == o.diffs and s.field == o.field

    def __repr__(self):
        return f"ChainComplex(lo={self.lo}, dims={self.dims}, {self.field.name})"

    # cohomology ------------------------------------------------------------

    def cohomology_ranks(self) -> dict[int, int]:
        return cohomology_ranks(self)

    def coboundary_reducer(self, k: int) -> Reducer:
        """Reducer loaded with the image of d^{k-1}, tracking preimages."""
        red = Reducer(self.field, track=True)
        dm = self.d(k - 1)
        for c, col in enumerate(dm.columns()):
            if col:
                red.add(red._pack(col), c)
        return red

    def cohomology_basis(self, k: int) -> list[dict]:
        """Deterministic cocycle representatives of a basis of H^k."""
        f = self.field
        dk = self.d(k)
        kred = Reducer(f, track=True)
        cocycles = []
        for c, col in enumerate(dk.columns()):
            new, combo = kred.add(kred._pack(col), c)
            if not new:
                cocycles.append(kred.unpack(combo) if kred.binary else combo)
        hred = self.coboundary_reducer(k)
        basis = []
        for z in cocycles:
            res, _ = hred.reduce(hred._pack(z))
            if res:
                new, _ = hred.add(res)
                basis.append(hred.unpack(res) if hred.binary else dict(res))
        return basis

    def coboundary_preimage(self, k: int, vec: dict):
        """Some y in C^{k-1} with d y = vec, or None."""
        red = self.coboundary_reducer(k)
        sol = red.solve(red._pack(vec))
        if sol is None:
            return None
        return red.unpack(sol) if red.binary else sol

    # serialization ---------------------------------------------------------

    def dump(self, path) -> None:
        """Write <path>.json plus one matrix file per differential."""
        path = Path(path)
        refs = {}
        for i, d in enumerate(self.diffs):
            k = self.lo + i
            ref = f"{path.name}.d{k}.mat"
            (path.parent / ref).write_text(d.dumps())
            refs[str(k)] = ref
        meta = {
            "field": self.field.name,
            "degrees": [self.lo, self.hi],
            "dims": self.dims,
            "differentials": refs,
        }
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "ChainComplex":
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text())
        f = field_from_name(meta["field"])
        lo = meta["degrees"][0]
        diffs = []
        for i in range(len(meta["dims"]) - 1):
            ref = meta["differentials"][str(lo + i)]
            diffs.append(SparseMatrix.loads((path.parent / ref).read_text()))
        return cls(lo, meta["dims"], diffs, f)


class ComplexMap:
    """Degree-preserving chain map source -> target."""

    def __init__(self, source: ChainComplex, target: ChainComplex, components: dict, check: bool = True):
        self.source, self.target = source, target
        self.field = source.field
        comps = {}
        for k in source.degrees:
            m = components.get(k)
            shape = (target.dim(k), source.dim(k))
            if m is None:
                m = SparseMatrix(*shape, self.field)
            if m.shape != shape:
                raise ValueError(f"component {k} has shape {m.shape}, expected {shape}")
            comps[k] = m
        self.components = comps
        if check:
            self.check()

    def at(self, k: int) -> SparseMatrix:
        m = self.components.get(k)
        return m if m is not None else SparseMatrix(self.target.dim(k), self.source.dim(k), self.field)

    def check(self) -> None:
        S, T = self.source, self.target
        lo = min(S.lo, T.lo) - 1
        hi = max(S.hi, T.hi) + 1
        for k in range(lo, hi):
            lhs = T.d(k) @ self.at(k)
            rhs = self.at(k + 1) @ S.d(k)
            if lhs != rhs:
                raise ValueError(f"map does not commute with differentials at degree {k}")

    @classmethod
    def identity(cls, C: ChainComplex) -> "ComplexMap":
        return cls(C, C, {k: SparseMatrix.identity(C.dim(k), C.field) for k in C.degrees})

    @classmethod
    def zero(cls, C: ChainComplex, D: ChainComplex) -> "ComplexMap":
        return cls(C, D, {}, check=False)

    def __matmul__(self, other: "ComplexMap") -> "ComplexMap":
        return ComplexMap(other.source, self.target, {k: self.at(k) @ other.at(k) for k in other.source.degrees})

    def induced_ranks(self) -> dict[int, int]:
        """Rank of the map induced on cohomology, per degree."""
        out = {}
        for k in self.source.degrees:
            basis = self.source.cohomology_basis(k)
            if not basis:
                continue
            red = self.target.coboundary_reducer(k)
            base = red.rank
            m = self.at(k)
            for z in basis:
                red.add(red._pack(m.apply(z)))
            r = red.rank - base
            if r:
                out[k] = r
        return out


def cohomology_ranks(C: ChainComplex) -> dict[int, int]:
    """Nonzero Betti numbers {degree: rank}."""
    rk = [rank(d) for d in C.diffs]
    out = {}
    for i, n in enumerate(C.dims):
        h = n - (rk[i] if i < len(rk) else 0) - (rk[i - 1] if i > 0 else 0)
        if h:
            out[C.lo + i] = h
    return out


def euler_characteristic(C: ChainComplex) -> int:
    return sum((-1) ** (C.lo + i) * n for i, n in enumerate(C.dims))


def shift_ranks(ranks: dict, k: int) -> dict:
    return {d - k: r for d, r in ranks.items()}


def convolve_ranks(a: dict, b: dict) -> dict:
    out: dict = {}
    for p, x in a.items():
        for q, y in b.items():
            out[p + q] = out.get(p + q, 0) + x * y
    return {k: v for k, v in sorted(out.items()) if v}


def shift(C: ChainComplex, k: int) -> ChainComplex:
    if k == 0:
        return C
    diffs = C.diffs if k % 2 == 0 else [d.scale(-1) for d in C.diffs]
    return ChainComplex(C.lo - k, C.dims, diffs, C.field, check=False)


def shift_map(f: ComplexMap, k: int) -> ComplexMap:
    """f[k]: components are reindexed, not re-signed."""
    S, T = shift(f.source, k), shift(f.target, k)
    return ComplexMap(S, T, {j: f.at(j + k) for j in S.degrees}, check=False)


def _block(rows_sizes, cols_sizes, blocks: dict, field: Field) -> SparseMatrix:
    """Assemble a block matrix from {(bi, bj): SparseMatrix}."""
    roff = [0]
    for s in rows_sizes:
        roff.append(roff[-1] + s)
    coff = [0]
    for s in cols_sizes:
        coff.append(coff[-1] + s)
    cols: list[dict] = [dict() for _ in range(coff[-1])]
    for (bi, bj), m in blocks.items():
        if m is None:
            continue
        ro, co = roff[bi], coff[bj]
        for c, col in enumerate(m.columns()):
            tgt = cols[co + c]
            for r, v in col.items():
                tgt[ro + r] = v
    return SparseMatrix.from_columns(roff[-1], cols, field)


def cone(f: ComplexMap) -> ChainComplex:
    C, D = f.source, f.target
    F = C.field
    lo = min(C.lo - 1, D.lo)
    hi = max(C.hi - 1, D.hi)
    dims = [C.dim(k + 1) + D.dim(k) for k in range(lo, hi + 1)]
    diffs = []
    for k in range(lo, hi):
        rs = (C.dim(k + 2), D.dim(k + 1))
        cs = (C.dim(k + 1), D.dim(k))
        blocks = {(0, 0): C.d(k + 1).scale(-1), (1, 0): f.at(k + 1), (1, 1): D.d(k)}
        diffs.append(_block(rs, cs, blocks, F))
    return ChainComplex(lo, dims, diffs, F)


def cocone(f: ComplexMap) -> ChainComplex:
    return shift(cone(f), -1)


def hom_complex(C: ChainComplex, D: ChainComplex) -> ChainComplex:
    """Total Hom complex; basis of Hom(C^p, D^{p+k}) is (row, col) column-major."""
    F = C.field
    lo = D.lo - C.hi
    hi = D.hi - C.lo

    def layout(k):
        off, out = 0, {}
        for p in C.degrees:
            n = C.dim(p) * D.dim(p + k)
            if n:
                out[p] = off
                off += n
        return out, off

    lays = {k: layout(k) for k in range(lo, hi + 1)}
    dims = [lays[k][1] for k in range(lo, hi + 1)]
    sign_one = F.one
    diffs = []
    for k in range(lo, hi):
        src, _ = lays[k]
        tgt, _ = lays[k + 1]
        eps = F.neg(sign_one) if k % 2 else sign_one  # (-1)^k
        cols = []
        for p in sorted(src):
            nd = D.dim(p + k)
            dD = D.d(p + k)
            dC = C.d(p - 1)
            dCt = dC.transpose()  # rows: C^p index j -> columns C^{p-1}
            for j in range(C.dim(p)):
                for i in range(nd):
                    col: dict = {}
                    # d_D o e_{ij}: lands in Hom(C^p, D^{p+k+1})
                    if p in tgt:
                        nd1 = D.dim(p + k + 1)
                        for r, v in dD.column(i).items():
                            col[tgt[p] + j * nd1 + r] = v
                    # -(-1)^k e_{ij} o d_C: lands in Hom(C^{p-1}, D^{p+k})
                    if (p - 1) in tgt:
                        for jj, v in dCt.column(j).items():
                            idx = tgt[p - 1] + jj * nd + i
                            val = F.add(col.get(idx, 0), F.neg(F.mul(eps, v)))
                            if val == 0:
                                col.pop(idx, None)
                            else:
                                col[idx] = val
                    cols.append(col)
        diffs.append(SparseMatrix.from_columns(dims[k + 1 - lo], cols, F))
    return ChainComplex(lo, dims, diffs, F)


def hom_index(C: ChainComplex, D: ChainComplex, k: int, p: int, i: int, j: int) -> int:
    """Position of the elementary map C^p[j] -> D^{p+k}[i] in hom_complex(C, D)^k."""
    off = 0
    for q in C.degrees:
        if q == p:
            return off + j * D.dim(p + k) + i
        off += C.dim(q) * D.dim(q + k)
    raise KeyError(p)


def tensor(C: ChainComplex, D: ChainComplex) -> ChainComplex:
    F = C.field
    lo, hi = C.lo + D.lo, C.hi + D.hi

    def layout(k):
        off, out = 0, {}
        for p in C.degrees:
            n = C.dim(p) * D.dim(k - p)
            if n:
                out[p] = off
                off += n
        return out, off

    lays = {k: layout(k) for k in range(lo, hi + 1)}
    dims = [lays[k][1] for k in range(lo, hi + 1)]
    diffs = []
    for k in range(lo, hi):
        src, _ = lays[k]
        tgt, _ = lays[k + 1]
        cols = []
        for p in sorted(src):
            q = k - p
            nq = D.dim(q)
            dC, dD = C.d(p), D.d(q)
            sgn = F(-1) if p % 2 else F.one
            for a in range(C.dim(p)):
                for b in range(nq):
                    col = {}
                    if (p + 1) in tgt:
                        for r, v in dC.column(a).items():
                            col[tgt[p + 1] + r * nq + b] = v
                    if p in tgt:
                        nq1 = D.dim(q + 1)
                        for r, v in dD.column(b).items():
                            col[tgt[p] + a * nq1 + r] = F.mul(sgn, v)
                    cols.append(col)
        diffs.append(SparseMatrix.from_columns(dims[k + 1 - lo], cols, F))
    return ChainComplex(lo, dims, diffs, F)
