"""Command line entry point: ``sheafflow <command> [options]``.

Commands:

* ``build-kernel``  assemble the kernel and run every check, write a report
* ``verify-ext``    Ext ranks between neighbouring regions and for (K_-, K_+)
* ``verify-ss``     micro_test against the expected flow directions
* ``slice``         stalk profile of the kernel on a time slice
* ``cones``         truth tables of the flat cone models

Reports are JSON with sorted keys; figures go next to the report.  The
exit status is 0 exactly when every selected check passes.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from sheafflow.cells import AlignmentError
from sheafflow.flowmodels import rows_for_window
from sheafflow.kernel import (
    KernelAssembly,
    KernelError,
    build_kernel,
    cone_truth_table,
    cp2_rank_checks,
    kernel_report,
    slice_profile,
    verify_ss_profile,
)
from sheafflow.linalg import field_from_name
from sheafflow.sheaves import ResolutionError

log = logging.getLogger("sheafflow")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    space: str = "sphere"
    n: int = 1
    field: str = "f2"
    mesh: int = 12
    window: float = 2.0
    seed: int = 0
    out: str = "report.json"
    jobs: int = 1
    samples: int = 200
    feature_cp2: bool = False
    plots: bool = True

    def validate(self) -> None:
        if self.space not in ("sphere", "projective"):
            raise ConfigError(f"unknown space {self.space!r}")
        if self.mesh < 4:
            raise ConfigError(f"mesh must be at least 4 (got {self.mesh})")
        if self.window < 0.5:
            raise ConfigError(f"window must be at least 0.5 (got {self.window})")
        if self.space == "sphere" and self.n not in (1, 2):
            raise ConfigError("sphere models exist for n = 1 and n = 2")
        if self.space == "projective" and self.n != 1:
            raise ConfigError("the projective pipeline runs for n = 1; use --feature-cp2 for CP^2 rank checks")
        if self.jobs < 1:
            raise ConfigError("jobs must be positive")
        try:
            field_from_name(self.field)
            rows_for_window(self.mesh, self.window)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def field_obj(self):
        return field_from_name(self.field)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--space", default="sphere", choices=["sphere", "projective"])
    p.add_argument("--n", type=int, default=1, help="dimension (complex dimension for projective)")
    p.add_argument("--field", default="f2", help="f2, fp(p) or rational")
    p.add_argument("--mesh", type=int, default=12, help="lattice steps per quarter turn (>= 4)")
    p.add_argument("--window", type=float, default=2.0, help="T in units of pi")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="report.json")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for micro_test queries")
    p.add_argument("--samples", type=int, default=200, help="seeded interior vertices for verify-ss")
    p.add_argument("--feature-cp2", action="store_true", help="add rank checks on the 9-vertex CP^2")
    p.add_argument("--no-plots", dest="plots", action="store_false")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sheafflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("build-kernel", "assemble the kernel and run all checks"),
        ("verify-ext", "Ext ranks between consecutive regions"),
        ("verify-ss", "micro_test against expected directions"),
        ("slice", "stalk profile on a time slice"),
        ("cones", "flat cone truth tables"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name == "slice":
            p.add_argument("--t", type=float, default=0.0, help="slice time in units of pi")
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig(space=args.space, n=args.n, field=args.field, mesh=args.mesh, window=args.window,
                    seed=args.seed, out=args.out, jobs=args.jobs, samples=args.samples,
                    feature_cp2=args.feature_cp2, plots=args.plots)
    cfg.validate()
    return cfg


def _write(cfg: RunConfig, report: dict) -> None:
    Path(cfg.out).write_text(json.dumps(report, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, (set, frozenset, range)):
        return sorted(x)
    raise TypeError(f"not serialisable: {type(x).__name__}")


def _stem(cfg: RunConfig) -> str:
    p = Path(cfg.out)
    return str(p.with_suffix("")) if p.suffix == ".json" else str(p)


def _header(cfg: RunConfig, command: str) -> dict:
    d = asdict(cfg)
    d.pop("out")
    d.pop("jobs")
    d.pop("plots")
    return {"command": command, "config": d}


def _cp2(cfg: RunConfig, report: dict) -> bool:
    if not cfg.feature_cp2:
        return True
    res = cp2_rank_checks(cfg.field_obj)
    report["cp2"] = res
    return res["ok"]


def cmd_build_kernel(cfg: RunConfig) -> tuple[dict, bool]:
    A = build_kernel(cfg.space, cfg.n, cfg.mesh, cfg.window, cfg.field_obj)
    rep = _header(cfg, "build-kernel")
    rep.update(kernel_report(A, cfg.seed, cfg.samples, cfg.jobs))
    ok = rep["ok"] and _cp2(cfg, rep)
    rep["ok"] = ok
    if cfg.plots:
        from sheafflow.plotting import plot_report

        rep["figures"] = [Path(p).name for p in plot_report(A, A.ss_table, _stem(cfg))]
    return rep, ok


def _expected_pair_ranks(A: KernelAssembly, row: dict) -> dict:
    return A.total_ranks({row["degree"]: 1})


def cmd_verify_ext(cfg: RunConfig) -> tuple[dict, bool]:
    A = build_kernel(cfg.space, cfg.n, cfg.mesh, cfg.window, cfg.field_obj)
    rep = _header(cfg, "verify-ext")
    table = []
    ok = True
    for row in A.ext_table:
        want = _expected_pair_ranks(A, row)
        good = row["total"] == want
        ok &= good
        table.append(dict(row, expected_total=want, ok=good))
    mp = A.ext_minus_plus
    want = A.total_ranks({mp["degree"]: 1})
    rep["ext_table"] = table
    rep["ext_minus_plus"] = dict(mp, expected_total=want, ok=mp["total"] == want)
    ok &= mp["total"] == want
    ok &= _cp2(cfg, rep)
    rep["ok"] = ok
    return rep, ok


def cmd_verify_ss(cfg: RunConfig) -> tuple[dict, bool]:
    A = build_kernel(cfg.space, cfg.n, cfg.mesh, cfg.window, cfg.field_obj)
    res = verify_ss_profile(A, cfg.seed, cfg.samples, jobs=cfg.jobs)
    rep = _header(cfg, "verify-ss")
    rep.update({"sampled": res["sampled"], "tests": res["tests"], "ss_mismatches": res["mismatches"]})
    rep["ok"] = not res["mismatches"]
    if cfg.plots:
        from sheafflow.plotting import plot_microsupport

        path = f"{_stem(cfg)}_microsupport.png"
        plot_microsupport(A, res["table"], path)
        rep["figures"] = [Path(path).name]
    return rep, rep["ok"]


def cmd_slice(cfg: RunConfig, t: float) -> tuple[dict, bool]:
    A = build_kernel(cfg.space, cfg.n, cfg.mesh, cfg.window, cfg.field_obj)
    M = A.model
    row = t * M.half_turn
    if abs(row - round(row)) > 1e-9:
        raise ConfigError(f"t = {t} pi is not on the lattice")
    row = int(round(row))
    if abs(row) >= M.rows:
        raise ConfigError(f"t = {t} pi lies outside the window")
    _, prof = slice_profile(A.kernel, row)
    strata: dict = {"diagonal": {}, "complement": {}}
    for c, r in prof.items():
        name = "diagonal" if all(M.radius[v] == 0 for v in M.complex.vertices_of(c)) else "complement"
        key = json.dumps({str(k): v for k, v in sorted(r.items())})
        strata[name][key] = strata[name].get(key, 0) + 1
    rep = _header(cfg, "slice")
    rep.update({"t": t, "row": row, "cells": len(prof), "strata": strata})
    ok = all(len(v) <= 1 for v in strata.values())
    if row == 0:
        ok &= list(strata["diagonal"]) == ['{"0": 1}'] and list(strata["complement"]) in ([], ["{}"])
    rep["ok"] = ok
    return rep, ok


def cmd_cones(cfg: RunConfig) -> tuple[dict, bool]:
    rep = _header(cfg, "cones")
    tables = [cone_truth_table(v, cfg.mesh, cfg.field_obj) for v in ("open", "closed")]
    rep["tables"] = tables
    rep["ok"] = all(not t["mismatches"] for t in tables)
    return rep, rep["ok"]


def _summary(rep: dict) -> str:
    lines = [f"{rep['command']}: {'ok' if rep.get('ok') else 'FAILED'}"]
    for row in rep.get("ext_table", []):
        lines.append(f"  Ext(Z{row['source']}, Z{row['target']}) = {row['total']}")
    if "ext_minus_plus" in rep:
        lines.append(f"  Ext(K-, K+) = {rep['ext_minus_plus']['total']}")
    if "t0_check" in rep:
        lines.append(f"  t = 0 profile: {rep['t0_check']}")
    if "ss_mismatches" in rep:
        lines.append(f"  micro_test mismatches: {len(rep['ss_mismatches'])}")
    if "strata" in rep:
        lines.append(f"  strata: {rep['strata']}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        t = time.perf_counter()
        if args.command == "build-kernel":
            rep, ok = cmd_build_kernel(cfg)
        elif args.command == "verify-ext":
            rep, ok = cmd_verify_ext(cfg)
        elif args.command == "verify-ss":
            rep, ok = cmd_verify_ss(cfg)
        elif args.command == "slice":
            rep, ok = cmd_slice(cfg, args.t)
        else:
            rep, ok = cmd_cones(cfg)
        log.info("finished in %.1f s", time.perf_counter() - t)
    except (ConfigError, KernelError, AlignmentError, ResolutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write(cfg, rep)
    print(_summary(rep))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
