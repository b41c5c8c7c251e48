"""Reference-scale acceptance checks, one test per criterion.

Each test appends a ``criterion N: PASS|FAIL ...`` line that is printed
in the terminal summary.  Run alone with

    pytest tests/test_acceptance.py -v

or as a script (``python3 tests/test_acceptance.py``) for the bare lines.
"""

from __future__ import annotations

import json
import random
import time

import numpy as np
import pytest
from oracles import interval_oracle

from sheafflow.cells import CellSet, circle, interval_grid, product
from sheafflow.flowmodels import full_product, sphere_model
from sheafflow.geometry import ProjectivePoint, dist_cpn, dist_to_cut_locus, exp_cpn
from sheafflow.homological import convolve_ranks
from sheafflow.kernel import (
    KernelAssembly,
    assemble_kernel,
    assemble_minus,
    assemble_plus,
    base_cohomology,
    build_kernel,
    build_regions,
    choose_generators,
    cone_truth_table,
    kernel_report,
    scaling_check,
    step2_demo,
    t0_check,
    verify_slice_constructibility,
    verify_ss_profile,
    window_growth_check,
)
from sheafflow.sheaves import constant_on, constant_summand, ext_ranks

pytestmark = pytest.mark.slow

_cache: dict = {}


def circle_reference():
    """Circle kernel at mesh 12, T = 2.5 pi."""
    if "circle" not in _cache:
        _cache["circle"] = build_kernel("sphere", 1, 12, 2.5)
    return _cache["circle"]


def product_kernel(mesh, window):
    A = KernelAssembly(full_product(sphere_model(1, mesh, window), 3))
    build_regions(A)
    choose_generators(A)
    assemble_plus(A)
    assemble_minus(A)
    assemble_kernel(A)
    return A


def _band(X, T, rng):
    """Closed band: cells whose first circle coordinate lies in a short arc."""
    A = circle(8)
    a, w = rng.randrange(8), rng.randint(1, 3)
    edges = [e for e in A.cells_of_dim(1)
             if any({(a + k) % 8, (a + k + 1) % 8} == set(A.vertices_of(e)) for k in range(w))]
    arc = A.closure(edges)
    return {c for c in range(len(X)) if T.pairs[X.pairs[c][0]][0] in arc}


def _random_pair(X, T, rng):
    N = len(X)
    if rng.random() < 0.5:
        U = X.star(rng.sample(range(N), rng.randint(1, 8)))
    else:
        U = set(range(N)) - X.closure(rng.sample(range(N), rng.randint(1, 6)))
    r = rng.random()
    if r < 0.4:
        C = _band(X, T, rng)
    elif r < 0.7:
        C = X.closure(rng.sample(range(N), rng.randint(20, 300)))
    else:
        C = set(range(N)) - X.star(rng.sample(range(N), rng.randint(1, 10)))
    return CellSet(X, U, "open"), CellSet(X, C, "closed")


def criterion_1():
    t = time.perf_counter()
    T = product(circle(8), circle(8))
    X = product(T, interval_grid(0, 2, 1))
    rng = random.Random(20)
    trials, bad, degrees, nonempty = 30, [], set(), 0
    for k in range(trials):
        U, C = _random_pair(X, T, rng)
        got = ext_ranks(constant_on(U), constant_summand(C))
        W = U.members & C.members
        nonempty += bool(W)
        degrees |= set(got)
        if got != interval_oracle(X, W):
            bad.append(k)
    dt = time.perf_counter() - t
    ok = not bad and dt < 60 and nonempty >= 20
    return ok, (f"{trials} pairs ({nonempty} with nonempty intersection, degrees {sorted(degrees)}), "
                f"{len(bad)} mismatches, {dt:.1f} s")


def criterion_2():
    t = time.perf_counter()
    A = KernelAssembly(full_product(sphere_model(1, 12, 2.5), 3))
    build_regions(A)
    ranks = ext_ranks(A.resolutions[1], A.resolutions[2])
    dt = time.perf_counter() - t
    return ranks == {1: 1, 2: 1} and dt < 120, f"Ext(K_Z1, K_Z2) = {ranks} on the full product, {dt:.1f} s"


def criterion_3():
    full = product_kernel(6, 2.5).ext_minus_plus["ranks"]
    fiber = circle_reference().ext_minus_plus["ranks"]
    kunneth = convolve_ranks(base_cohomology("sphere", 1), fiber)
    want = {2: 1, 3: 1}
    return full == want and kunneth == want, f"full product (mesh 6) {full}; fiber (mesh 12) {fiber} -> {kunneth}"


def criterion_4():
    res = [t0_check(circle_reference()), t0_check(build_kernel("sphere", 2, 6, 1.5))]
    ok = all(r["ok"] for r in res)
    return ok, "; ".join(f"{r['cells']} slice cells, {len(r['bad'])} off-profile" for r in res)


def criterion_5():
    tables = [cone_truth_table(v, 6) for v in ("open", "closed")]
    n = sum(len(t["mismatches"]) for t in tables)
    rows = sum(len(t["table"]) for t in tables)
    return n == 0, f"{rows} rows over both cone variants, {n} mismatches"


def criterion_6():
    A = circle_reference()
    res = verify_ss_profile(A, seed=0, n_random=200)
    demo = step2_demo(A)
    extra = {tuple(d) for d in demo["K_Z1"]} - {tuple(d) for d in demo["K"]}
    ok = not res["mismatches"] and bool(extra)
    return ok, (f"{res['sampled']} vertices, {res['tests']} tests, {len(res['mismatches'])} mismatches; "
                f"K_Z1 alone adds {sorted(extra)} at (x, -x, pi)")


def criterion_7():
    rng = np.random.default_rng(7)
    speed_err = cut_err = period_err = 0.0
    eps = 1e-5
    for n in (1, 2, 3):
        x0 = ProjectivePoint(np.eye(n + 1)[0])
        for _ in range(3):
            z = rng.normal(size=n) + 1j * rng.normal(size=n)
            z = z / np.linalg.norm(z)
            for t in rng.uniform(eps, 2 * np.pi - eps, size=100):
                speed = dist_cpn(exp_cpn(z, t - eps), exp_cpn(z, t + eps)) / (2 * eps)
                speed_err = max(speed_err, abs(speed - 1))
                period_err = max(period_err, dist_cpn(exp_cpn(z, t), exp_cpn(z, t + 2 * np.pi)))
            cut_err = max(cut_err, dist_to_cut_locus(x0, exp_cpn(z, np.pi), "projective"))
    ok = speed_err < 1e-6 and cut_err < 1e-9 and period_err < 1e-9
    return ok, f"speed {speed_err:.1e}, cut locus {cut_err:.1e}, period {period_err:.1e}"


def criterion_8():
    t = time.perf_counter()
    A = build_kernel("projective", 1, 12, 2.5)
    res = verify_slice_constructibility(A, 1)
    dt = time.perf_counter() - t
    return res["constant"] and dt < 300, (f"diagonal {res['diagonal']}, complement {res['complement']}, "
                                          f"{dt:.1f} s")


def criterion_9():
    sc = scaling_check("sphere", 1, 6, 2.5, p=5, units=(2, 3, 4), n_random=60)
    wg = window_growth_check("sphere", 1, 4, 2)
    A = circle_reference()
    a = json.dumps(kernel_report(A, seed=3, n_random=30), sort_keys=True, default=sorted)
    B = build_kernel("sphere", 1, 12, 2.5)
    b = json.dumps(kernel_report(B, seed=3, n_random=30), sort_keys=True, default=sorted)
    ok = sc["ok"] and wg["ok"] and a == b
    return ok, (f"scaling {sc['ok']} ({len(sc['runs'])} units), window growth {wg['ok']} "
                f"({wg['compared']} cells), reports identical {a == b}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


def _line(k, ok, detail):
    return f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("k", range(1, 10))
def test_criterion(k, acceptance_log):
    ok, detail = CRITERIA[k - 1]()
    line = _line(k, ok, detail)
    print(line)
    acceptance_log.append(line)
    assert ok, line


if __name__ == "__main__":
    for k, fn in enumerate(CRITERIA, 1):
        print(_line(k, *fn()), flush=True)
