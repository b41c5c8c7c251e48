"""Exact sparse linear algebra over F_p and Q.

Every rank, kernel and cohomology computation in the package bottoms out
here.  Matrices never store zeros, pivots are chosen deterministically
(lowest row index, then lowest column index) and nothing touches floating
point.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

import numpy as np

__all__ = [
    "Field",
    "PrimeField",
    "Rationals",
    "F2",
    "QQ",
    "field_from_name",
    "SparseMatrix",
    "Reducer",
    "rank",
    "kernel_basis",
    "solve",
    "set_dense_threshold",
]


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    k = 2
    while k * k <= p:
        if p % k == 0:
            return False
        k += 1
    return True


class Field:
    """Base class for the coefficient fields."""

    name = "field"
    characteristic = 0

    def __call__(self, x):
        raise NotImplementedError

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def add(self, a, b):
        return self(a + b)

    def sub(self, a, b):
        return self(a - b)

    def mul(self, a, b):
        return self(a * b)

    def neg(self, a):
        return self(-a)

    def inv(self, a):
        raise NotImplementedError

    def units(self) -> list:
        """A few nonzero scalars, used for rescaling checks."""
        raise NotImplementedError

    def format(self, a) -> str:
        return str(a)

    def parse(self, s: str):
        return self(int(s))

    def __eq__(self, other):
        return isinstance(other, Field) and other.name == self.name

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return f"<field {self.name}>"


class PrimeField(Field):
    """Integers modulo a prime p; elements are plain ints in [0, p)."""

    def __init__(self, p: int):
        if not _is_prime(int(p)):
            raise ValueError(f"{p} is not prime")
        self.p = int(p)
        self.characteristic = self.p
        self.name = "f2" if self.p == 2 else f"fp({self.p})"

    def __call__(self, x):
        if isinstance(x, Fraction):
            return (x.numerator * pow(x.denominator % self.p, -1, self.p)) % self.p
        return int(x) % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, -1, self.p)

    def units(self):
        return list(range(1, self.p))


class Rationals(Field):
    name = "rational"
    characteristic = 0

    def __call__(self, x):
        return Fraction(x)

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return 1 / Fraction(a)

    def units(self):
        return [Fraction(1), Fraction(-1), Fraction(2), Fraction(-3, 2)]

    def format(self, a):
        a = Fraction(a)
        return str(a.numerator) if a.denominator == 1 else f"{a.numerator}/{a.denominator}"

    def parse(self, s):
        return Fraction(s)


F2 = PrimeField(2)
QQ = Rationals()


def field_from_name(name: str) -> Field:
    """Parse 'f2', 'fp(p)', 'fp<p>', 'rational' or 'q'."""
    s = name.strip().lower().replace(" ", "")
    if s in ("f2", "gf2", "fp(2)"):
        return F2
    if s in ("rational", "rationals", "q", "qq"):
        return QQ
    if s.startswith("fp"):
        body = s[2:].strip("()")
        if body.isdigit():
            return PrimeField(int(body))
    raise ValueError(f"unknown field {name!r}")


class SparseMatrix:
    """Column-major sparse matrix with entries in a fixed field."""

    __slots__ = ("rows", "cols", "field", "_cols")

    def __init__(self, rows: int, cols: int, field: Field = F2, entries=None):
        if rows < 0 or cols < 0:
            raise ValueError("negative dimension")
        self.rows, self.cols, self.field = int(rows), int(cols), field
        self._cols: list[dict] = [dict() for _ in range(self.cols)]
        if entries is None:
            return
        items = entries.items() if isinstance(entries, dict) else (((r, c), v) for r, c, v in entries)
        for (r, c), v in items:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise IndexError(f"entry ({r},{c}) outside {self.rows}x{self.cols}")
            col = self._cols[c]
            val = field.add(col.get(r, field.zero), field(v))
            if val == 0:
                col.pop(r, None)
            else:
                col[r] = val

    @classmethod
    def from_columns(cls, rows: int, columns: list[dict], field: Field) -> "SparseMatrix":
        """Trusted constructor: columns already reduced, zero-free and in range."""
        m = cls.__new__(cls)
        m.rows, m.cols, m.field, m._cols = rows, len(columns), field, columns
        return m

    @classmethod
    def from_dense(cls, data, field: Field = F2) -> "SparseMatrix":
        data = [list(r) for r in data]
        nrows = len(data)
        ncols = len(data[0]) if nrows else 0
        ent = {(r, c): v for r, row in enumerate(data) for c, v in enumerate(row) if field(v) != 0}
        return cls(nrows, ncols, field, ent)

    @classmethod
    def identity(cls, n: int, field: Field = F2) -> "SparseMatrix":
        return cls.from_columns(n, [{i: field.one} for i in range(n)], field)

    @classmethod
    def zeros(cls, rows: int, cols: int, field: Field = F2) -> "SparseMatrix":
        return cls(rows, cols, field)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def column(self, c: int) -> dict:
        return self._cols[c]

    def columns(self) -> list[dict]:
        return self._cols

    def entries(self) -> dict:
        return {(r, c): v for c, col in enumerate(self._cols) for r, v in col.items()}

    @property
    def nnz(self) -> int:
        return sum(len(c) for c in self._cols)

    def __getitem__(self, rc):
        r, c = rc
        return self._cols[c].get(r, self.field.zero)

    def to_dense(self) -> list[list]:
        out = [[self.field.zero] * self.cols for _ in range(self.rows)]
        for c, col in enumerate(self._cols):
            for r, v in col.items():
                out[r][c] = v
        return out

    def transpose(self) -> "SparseMatrix":
        cols: list[dict] = [dict() for _ in range(self.rows)]
        for c, col in enumerate(self._cols):
            for r, v in col.items():
                cols[r][c] = v
        return SparseMatrix.from_columns(self.cols, cols, self.field)

    def matvec(self, vec) -> list:
        if len(vec) != self.cols:
            raise ValueError("dimension mismatch")
        f = self.field
        out = [f.zero] * self.rows
        for c, col in enumerate(self._cols):
            x = vec[c]
            if x == 0:
                continue
            for r, v in col.items():
                out[r] = f.add(out[r], f.mul(v, x))
        return out

    def apply(self, vec: dict) -> dict:
        """Multiply by a sparse vector given as {index: value}."""
        return _combine(self.field, ((self._cols[c], x) for c, x in vec.items()))

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = [self.apply(col) for col in other._cols]
        return SparseMatrix.from_columns(self.rows, cols, self.field)

    def scale(self, u) -> "SparseMatrix":
        f = self.field
        u = f(u)
        if u == 0:
            return SparseMatrix(self.rows, self.cols, f)
        cols = [{r: f.mul(v, u) for r, v in col.items()} for col in self._cols]
        return SparseMatrix.from_columns(self.rows, cols, f)

    def __neg__(self):
        return self.scale(-1)

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        cols = [_combine(self.field, ((a, 1), (b, 1))) for a, b in zip(self._cols, other._cols)]
        return SparseMatrix.from_columns(self.rows, cols, self.field)

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self) -> bool:
        return all(not c for c in self._cols)

    def __eq__(self, other):
        return (
            isinstance(other, SparseMatrix)
            and self.shape == other.shape
            and self.field == other.field
            and self._cols == other._cols
        )

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, {self.field.name}, nnz={self.nnz})"

    def dumps(self) -> str:
        f = self.field
        lines = [f"{self.rows} {self.cols} {f.name}"]
        for (r, c), v in sorted(self.entries().items()):
            lines.append(f"{r} {c} {f.format(v)}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def loads(text: str) -> "SparseMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        rows, cols, fname = lines[0].split()
        f = field_from_name(fname)
        ent = {}
        for ln in lines[1:]:
            r, c, v = ln.split()
            ent[(int(r), int(c))] = f.parse(v)
        return SparseMatrix(int(rows), int(cols), f, ent)


def _combine(field: Field, terms) -> dict:
    """Sum of scalar multiples of sparse vectors, zeros dropped."""
    out: dict = {}
    if field.characteristic == 2:
        for vec, x in terms:
            if x % 2 == 0:
                continue
            for r in vec:
                if r in out:
                    del out[r]
                else:
                    out[r] = 1
        return out
    for vec, x in terms:
        if x == 0:
            continue
        for r, v in vec.items():
            s = field.add(out.get(r, 0), field.mul(v, x))
            if s == 0:
                out.pop(r, None)
            else:
                out[r] = s
    return out


# ---------------------------------------------------------------------------
# incremental column reduction


def _bits(vec: dict) -> int:
    x = 0
    for r in vec:
        x |= 1 << r
    return x


def _unbits(x: int) -> dict:
    out = {}
    while x:
        low = x & -x
        out[low.bit_length() - 1] = 1
        x ^= low
    return out


class Reducer:
    """Incremental Gaussian elimination on sparse column vectors.

    Columns are added one at a time.  Each stored pivot vector is keyed by
    its lowest nonzero index.  With ``track=True`` every residual carries
    the combination of added tags that produced it, which is how kernel
    vectors and solutions are read off.  Over F2 vectors are packed into
    Python ints, which is the fast path for large complexes.
    """

    def __init__(self, field: Field, track: bool = False):
        self.field = field
        self.track = track
        self.binary = field.characteristic == 2
        self.pivots: dict = {}

    # vectors are ints (binary) or dicts otherwise; tags index the combo
    def _pack(self, vec: dict):
        return _bits(vec) if self.binary else dict(vec)

    def reduce(self, vec, combo=None):
        """Reduce a packed vector; returns (residual, combo)."""
        piv = self.pivots
        if self.binary:
            combo = combo if combo is not None else 0
            while vec:
                low = (vec & -vec).bit_length() - 1
                hit = piv.get(low)
                if hit is None:
                    break
                vec ^= hit[0]
                if self.track:
                    combo ^= hit[1]
            return vec, combo
        f = self.field
        combo = combo if combo is not None else {}
        while vec:
            low = min(vec)
            hit = piv.get(low)
            if hit is None:
                break
            c = vec[low]
            vec = _combine(f, ((vec, 1), (hit[0], f.neg(c))))
            if self.track:
                combo = _combine(f, ((combo, 1), (hit[1], f.neg(c))))
        return vec, combo

    def add(self, vec, tag=None):
        """Insert a packed vector; returns (is_new_pivot, combo).

        When the vector reduces to zero, ``combo`` is a relation among the
        added tags (a kernel vector when tags are column indices).
        """
        if self.binary:
            combo0 = (1 << tag) if (self.track and tag is not None) else 0
        else:
            combo0 = {tag: self.field.one} if (self.track and tag is not None) else {}
        res, combo = self.reduce(vec, combo0)
        if not res:
            return False, combo
        if self.binary:
            low = (res & -res).bit_length() - 1
        else:
            f = self.field
            low = min(res)
            s = f.inv(res[low])
            if s != 1:
                res = {r: f.mul(v, s) for r, v in res.items()}
                combo = {r: f.mul(v, s) for r, v in combo.items()}
        self.pivots[low] = (res, combo)
        return True, combo

    def solve(self, vec):
        """Combination of added tags summing to vec, or None."""
        if self.binary:
            res, combo = self.reduce(vec, 0)
            return None if res else combo
        res, combo = self.reduce(vec, {})
        if res:
            return None
        # residual = vec + sum(combo * columns), so the solution is -combo
        f = self.field
        return {k: f.neg(v) for k, v in combo.items() if v != 0}

    def unpack(self, vec) -> dict:
        return _unbits(vec) if self.binary else vec

    @property
    def rank(self) -> int:
        return len(self.pivots)


_DENSE_THRESHOLD = 4096


def set_dense_threshold(n: int) -> None:
    """Matrices with rows*cols <= n over a prime field use dense elimination."""
    global _DENSE_THRESHOLD
    _DENSE_THRESHOLD = int(n)


def _dense_rank_mod_p(M: SparseMatrix) -> int:
    p = M.field.p
    a = np.zeros((M.rows, M.cols), dtype=np.int64)
    for c, col in enumerate(M.columns()):
        for r, v in col.items():
            a[r, c] = v
    rk, row = 0, 0
    for c in range(M.cols):
        nz = np.nonzero(a[row:, c])[0]
        if nz.size == 0:
            continue
        piv = row + nz[0]
        if piv != row:
            a[[row, piv]] = a[[piv, row]]
        a[row] = (a[row] * pow(int(a[row, c]), -1, p)) % p
        others = np.nonzero(a[:, c])[0]
        others = others[others != row]
        if others.size:
            a[others] = (a[others] - np.outer(a[others, c], a[row])) % p
        row += 1
        rk += 1
        if row == M.rows:
            break
    return rk


def rank(M: SparseMatrix) -> int:
    """Exact rank over the matrix field."""
    if M.rows == 0 or M.cols == 0:
        return 0
    f = M.field
    if isinstance(f, PrimeField) and f.p > 2 and M.rows * M.cols <= _DENSE_THRESHOLD:
        return _dense_rank_mod_p(M)
    red = Reducer(f)
    for col in M.columns():
        if col:
            red.add(red._pack(col))
    return red.rank


def _rref(M: SparseMatrix):
    """Reduced row echelon form; returns (rows as dicts, pivot columns)."""
    f = M.field
    rows = [dict() for _ in range(M.rows)]
    for c, col in enumerate(M.columns()):
        for r, v in col.items():
            rows[r][c] = v
    pivots: list[int] = []
    top = 0
    for c in range(M.cols):
        pr = next((r for r in range(top, M.rows) if rows[r].get(c, 0) != 0), None)
        if pr is None:
            continue
        rows[top], rows[pr] = rows[pr], rows[top]
        s = f.inv(rows[top][c])
        rows[top] = {k: f.mul(v, s) for k, v in rows[top].items()}
        for r in range(M.rows):
            if r != top and rows[r].get(c, 0) != 0:
                rows[r] = _combine(f, ((rows[r], 1), (rows[top], f.neg(rows[r][c]))))
        pivots.append(c)
        top += 1
        if top == M.rows:
            break
    return rows[:top], pivots


def kernel_basis(M: SparseMatrix) -> list[list]:
    """Null-space basis from the reduced echelon form, free columns ascending."""
    f = M.field
    rows, pivots = _rref(M)
    pset = set(pivots)
    basis = []
    for free in range(M.cols):
        if free in pset:
            continue
        v = [f.zero] * M.cols
        v[free] = f.one
        for row, pc in zip(rows, pivots):
            x = row.get(free, 0)
            if x != 0:
                v[pc] = f.neg(x)
        basis.append(v)
    return basis


def solve(M: SparseMatrix, b) -> list | None:
    """Some x with Mx = b (free variables set to zero), or None."""
    if len(b) != M.rows:
        raise ValueError(f"right-hand side has length {len(b)}, expected {M.rows}")
    f = M.field
    aug_cols = [dict(c) for c in M.columns()] + [{r: f(v) for r, v in enumerate(b) if f(v) != 0}]
    aug = SparseMatrix.from_columns(M.rows, aug_cols, f)
    rows, pivots = _rref(aug)
    if pivots and pivots[-1] == M.cols:
        return None
    x = [f.zero] * M.cols
    for row, pc in zip(rows, pivots):
        x[pc] = row.get(M.cols, f.zero)
    return x


def columns_of(vectors: Iterable[dict], nrows: int, field: Field) -> SparseMatrix:
    return SparseMatrix.from_columns(nrows, [dict(v) for v in vectors], field)
