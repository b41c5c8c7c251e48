"""Geodesic geometry of the round sphere and of complex projective space.

Distances use the atan2 forms 2 atan2(|x - y|, |x + y|) (sphere) and
2 atan2(|x ^ y|, |<x, y>|) (projective space).  They agree with the
arccos of the clamped inner product but stay accurate near 0 and pi.

Region levels are signed functions: a point is in an open region when the
level is < 0 and in a closed region when it is <= 0.  The ``*_units``
variants work on integer lattice coordinates (pi = 2m units) and are what
the cell models use, so membership there is decided exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "UNIT_TOL",
    "SpherePoint",
    "ProjectivePoint",
    "RegionSpec",
    "MicrosupportTarget",
    "dist_sphere",
    "dist_cpn",
    "exp_cpn",
    "exp_sphere",
    "dist_to_cut_locus",
    "region_level",
    "region_member",
    "region_level_units",
    "region_shift",
    "step_total",
    "expected_ss",
    "expected_ss_units",
    "export_samples_csv",
]

UNIT_TOL = 1e-12


def _unit(v, complex_: bool = False) -> np.ndarray:
    a = np.asarray(v, dtype=complex if complex_ else float)
    nrm = float(np.sqrt(np.sum(np.abs(a) ** 2)))
    if abs(nrm - 1.0) > UNIT_TOL * max(1, len(a)) * 10:
        raise ValueError(f"not a unit vector (norm {nrm!r})")
    return a


class SpherePoint:
    """A unit vector in R^{n+1}."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        self.coords = _unit(coords)

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    def antipode(self) -> "SpherePoint":
        return SpherePoint(-self.coords)

    def __repr__(self):
        return f"SpherePoint({self.coords.tolist()})"


class ProjectivePoint:
    """A unit vector in C^{n+1}, taken up to a phase."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        self.coords = _unit(coords, complex_=True)

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    def __eq__(self, other):
        return isinstance(other, ProjectivePoint) and abs(abs(np.vdot(self.coords, other.coords)) - 1) < 1e-12

    def __hash__(self):
        return 0

    def bloch(self) -> np.ndarray:
        """For n = 1: the point of the unit 2-sphere under the Hopf map."""
        if self.n != 1:
            raise ValueError("only defined on CP^1")
        a, b = self.coords
        ab = np.conj(a) * b
        return np.array([2 * ab.real, 2 * ab.imag, abs(a) ** 2 - abs(b) ** 2])

    def __repr__(self):
        return f"ProjectivePoint({self.coords.tolist()})"


def _coords(p, complex_=False):
    if isinstance(p, (SpherePoint, ProjectivePoint)):
        return p.coords
    return _unit(p, complex_)


def dist_sphere(x, y) -> float:
    """Great-circle distance in [0, pi]."""
    a, b = _coords(x), _coords(y)
    return 2.0 * math.atan2(float(np.linalg.norm(a - b)), float(np.linalg.norm(a + b)))


def dist_cpn(x, y) -> float:
    """Fubini-Study distance normalised to diameter pi."""
    a, b = _coords(x, True), _coords(y, True)
    c = abs(np.vdot(a, b))
    # |a ^ b|^2 = sum_{i<j} |a_i b_j - a_j b_i|^2
    w = np.outer(a, b) - np.outer(b, a)
    s = math.sqrt(float(np.sum(np.abs(np.triu(w, 1)) ** 2)))
    return 2.0 * math.atan2(s, c)


def exp_sphere(x, v, t: float) -> np.ndarray:
    """Point at time t on the unit-speed geodesic from x with unit tangent v."""
    a, b = _coords(x), np.asarray(v, dtype=float)
    return math.cos(t) * a + math.sin(t) * b


def exp_cpn(z, t: float) -> ProjectivePoint:
    """Geodesic from (1:0:...:0) with unit tangent z in C^n, at time t."""
    zz = _unit(z, complex_=True)
    return ProjectivePoint(np.concatenate([[math.cos(t / 2)], zz * math.sin(t / 2)]))


def dist_to_cut_locus(x, y, space: str = "sphere") -> float:
    """Distance from x to the set of points at distance pi from y."""
    d = dist_sphere(x, y) if space == "sphere" else dist_cpn(x, y)
    return math.pi - d


@dataclass(frozen=True)
class RegionSpec:
    """One region of the family: index i != 0, open for i > 0 and closed for i < 0."""

    index: int
    space: str = "sphere"
    window: tuple = (-math.inf, math.inf)

    def __post_init__(self):
        if self.index == 0:
            raise ValueError("region index must be nonzero")
        if self.space not in ("sphere", "projective"):
            raise ValueError(f"unknown space {self.space}")

    @property
    def sense(self) -> str:
        return "open" if self.index > 0 else "closed"

    @property
    def uses_cut_locus(self) -> bool:
        return self.index % 2 == 0


def _level(index: int, d, t, half_turn):
    """Shared formula: d is dist(x, y), half_turn is pi in the same units."""
    k = abs(index)
    dd = half_turn - d if k % 2 == 0 else d
    if index > 0:
        return dd - (t - (k - 1) * half_turn)
    return dd - (-t - (k - 1) * half_turn)


def region_level(spec: RegionSpec, x, y, t: float) -> float:
    lo, hi = spec.window
    if not lo <= t <= hi:
        raise ValueError(f"time {t} outside window {spec.window}")
    d = dist_sphere(x, y) if spec.space == "sphere" else dist_cpn(x, y)
    return _level(spec.index, d, t, math.pi)


def region_member(spec: RegionSpec, x, y, t: float, tol: float = 1e-12) -> bool:
    g = region_level(spec, x, y, t)
    return g < -tol if spec.sense == "open" else g <= tol


def region_level_units(index: int, radius: int, row: int, half_turn: int) -> int:
    """Exact level on the lattice: radius = dist(x, y) and row = t, both in units of h."""
    if index == 0:
        raise ValueError("region index must be nonzero")
    return _level(index, radius, row, half_turn)


def step_total(j: int, space: str, n: int) -> int:
    """Sum of the first j step sizes: all n on the sphere, alternately 2 and 2n on CP^n."""
    if space == "sphere":
        return j * n
    a = j // 2
    return 2 * a + 2 * n * a + (2 if j % 2 else 0)


def region_shift(index: int, space: str, n: int) -> int:
    """Degree shift carried by the region with this index in the kernel tower.

    For |index| = k >= 2 the shift is +-(step_total(k - 1) - (k - 2)), with
    the sign of the index; the first regions on either side carry none.
    """
    if index == 0:
        raise ValueError("region index must be nonzero")
    k = abs(index)
    if k == 1:
        return 0
    s = step_total(k - 1, space, n) - (k - 2)
    return s if index > 0 else -s


@dataclass(frozen=True)
class MicrosupportTarget:
    """Expected covector directions at one point (x, y, t).

    Classes are written in the radial chart (r, t) with r = dist(x, y):
    (sigma, -1) stands for the covector sigma dr - dt (unit length fiber
    component).  ``closure`` adds the interior direction (0, -1) of the
    cone spanned at a corner.
    """

    space: str
    n: int
    corner: bool
    classes: frozenset
    closure: frozenset
    hamiltonian: object = field(default=None, compare=False, repr=False)

    def directions(self, mode: str = "lambda") -> frozenset:
        return self.classes if mode == "lambda" else self.closure

    def in_cone(self, a_r: float, a_t: float) -> bool:
        """Whether (a_r, a_t) lies in the closed convex cone the target spans."""
        if not self.classes:
            return a_r == 0 and a_t == 0
        if self.corner:
            return a_t <= 0 and a_r * a_r <= a_t * a_t
        (s, _), = tuple(self.classes)
        return a_t <= 0 and abs(a_r - s * -a_t) < 1e-12

    def in_chart(self, u_sign: int, mode: str = "lambda") -> frozenset:
        """Classes in the signed chart (u, t) with r = u_sign * u."""
        return frozenset((s * u_sign, t) for s, t in self.directions(mode))


def _norm_cov(x, xi) -> float:
    return float(np.linalg.norm(np.asarray(xi)))


def _target(space, n, kind) -> MicrosupportTarget:
    if kind is None:
        return MicrosupportTarget(space, n, False, frozenset(), frozenset(), _norm_cov)
    if kind == "corner":
        both = frozenset({(1, -1), (-1, -1)})
        return MicrosupportTarget(space, n, True, both, both | {(0, -1)}, _norm_cov)
    cls = frozenset({(kind, -1)})
    return MicrosupportTarget(space, n, False, cls, cls, _norm_cov)


def _classify(d, t, period_half, tol):
    """Front data from distance and time: None, 'corner', +1 or -1."""
    two = 2 * period_half
    tau = t % two
    if tol:
        if abs(tau - two) <= tol:
            tau = 0.0
    if abs(tau) <= tol:
        return "corner" if abs(d) <= tol else None
    if abs(tau - period_half) <= tol:
        return "corner" if abs(d - period_half) <= tol else None
    if tau < period_half:
        return 1 if abs(d - tau) <= tol else None
    return -1 if abs(d - (two - tau)) <= tol else None


def expected_ss(space: str, x, y, t: float, tol: float = 1e-9) -> MicrosupportTarget:
    """Directions of the flow graph over (x, y, t), empty off the fronts."""
    if space == "sphere":
        d, n = dist_sphere(x, y), len(_coords(x)) - 1
    elif space == "projective":
        d, n = dist_cpn(x, y), len(_coords(x, True)) - 1
    else:
        raise ValueError(f"unknown space {space}")
    return _target(space, n, _classify(d, t, math.pi, tol))


def expected_ss_units(space: str, n: int, radius: int, row: int, half_turn: int) -> MicrosupportTarget:
    """Exact lattice version of expected_ss."""
    return _target(space, n, _classify(radius, row, half_turn, 0))


def export_samples_csv(path, pairs, space: str = "sphere") -> None:
    """Write sampled point pairs and their distances for debugging."""
    dist = dist_sphere if space == "sphere" else dist_cpn
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "dist", "dist_to_cut_locus"])
        for x, y in pairs:
            d = dist(x, y)
            w.writerow([" ".join(map(str, np.ravel(_coords(x, space != "sphere")))),
                        " ".join(map(str, np.ravel(_coords(y, space != "sphere")))), d, math.pi - d])
