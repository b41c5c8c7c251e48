"""Brute-force reference computations shared by the test modules."""

from __future__ import annotations

from sheafflow.linalg import F2, SparseMatrix, rank


def interval_oracle(X, W) -> dict:
    """Cohomology of a locally closed cell set W from its face intervals.

    The complex has one generator per pair s <= t with both cells in W,
    graded by dim t - dim s; the differential moves either end by one
    step inside W.  Its cohomology is that of the pair (closure of W,
    closure of W minus W), computed without any sheaf machinery.
    """
    W = set(W)
    pairs = [(s, t) for t in W for s in X.closure_of(t) if s in W]
    by: dict = {}
    for s, t in pairs:
        by.setdefault(X.dims[t] - X.dims[s], []).append((s, t))
    pos = {p: i for ps in by.values() for i, p in enumerate(ps)}
    co = X.cofaces
    ranks = {}
    for k, ps in by.items():
        if k - 1 not in by:
            ranks[k] = 0
            continue
        cols = []
        for s, t in ps:
            col = {}
            for s2 in co[s]:
                if s2 in W and s2 in X.closure_of(t):
                    col[pos[(s2, t)]] = 1
            for t2 in X.faces[t]:
                if t2 in W and s in X.closure_of(t2):
                    col[pos[(s, t2)]] = 1
            cols.append(col)
        ranks[k] = rank(SparseMatrix.from_columns(len(by[k - 1]), cols, F2))
    out = {}
    for k, ps in by.items():
        h = len(ps) - ranks.get(k, 0) - ranks.get(k + 1, 0)
        if h:
            out[k] = h
    return out
