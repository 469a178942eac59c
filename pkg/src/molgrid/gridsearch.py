"""Neighbourhood search over boxes of a low-dimensional projection of feature space.

Around a seed solution ``x*`` the values ``theta(x) = W (x, 1)`` are cut
into axis-aligned boxes of width ``delta`` centred on ``theta(x*)``.  Each
box is tested for feasibility by adding its bounds to the base model.  Boxes
are visited in order of increasing distance from the centre; once a box is
proven infeasible, every box further out in the same orthant-wise direction
is skipped.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .descriptors import DescriptorRegistry
from .encode import encode_linear
from .milp import INF, MilpModel, SolveResult, SolverConfig, solve
from .regression import LinearModel

__all__ = [
    "GridError",
    "ProjectionSet",
    "GridGeometry",
    "GridRecord",
    "GridSearchResult",
    "theta",
    "subspace_bounds",
    "neighbor",
    "grid_leq",
    "grid_lt",
    "grid_search",
    "make_property_projections",
    "widths_from_range",
]

log = logging.getLogger(__name__)

Grid = tuple[int, ...]


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectionSet:
    """``p_max`` affine maps; row ``p`` holds ``K`` weights followed by the constant."""

    weights: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        if w.shape[1] < 1 or w.shape[0] < 1:
            raise GridError("projection weights must be a non-empty (p_max, K+1) array")
        if not np.all(np.isfinite(w)):
            raise GridError("projection weights must be finite")
        object.__setattr__(self, "weights", w)

    @property
    def p_max(self) -> int:
        return self.weights.shape[0]

    @property
    def K(self) -> int:
        return self.weights.shape[1] - 1


def theta(ps: ProjectionSet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != ps.K:
        raise GridError(f"feature vector has length {x.shape[-1]}, projections expect {ps.K}")
    return x @ ps.weights[:, :-1].T + ps.weights[:, -1]


@dataclass(frozen=True)
class GridGeometry:
    center: tuple[float, ...]
    widths: tuple[float, ...]
    radius: tuple[int, ...]

    def __post_init__(self):
        c, w, r = (tuple(self.center), tuple(float(v) for v in self.widths), tuple(int(v) for v in self.radius))
        if not (len(c) == len(w) == len(r)):
            raise GridError("center, widths and radius must have the same length")
        if any(not (v > 0) for v in w):
            raise GridError("grid widths must be positive")
        if any(v < 0 for v in r):
            raise GridError("grid radius must be non-negative")
        if any(v < 1e-3 for v in w):
            warnings.warn("grid width below 1e-3 may be lost in solver tolerances", stacklevel=3)
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        object.__setattr__(self, "widths", w)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return len(self.center)


def subspace_bounds(geo: GridGeometry, z: Sequence[int]) -> list[tuple[float, float]]:
    """Closed box of theta-values covered by grid ``z``."""
    if len(z) != geo.dim:
        raise GridError("grid and geometry dimensions differ")
    return [(s + (k - 0.5) * d, s + (k + 0.5) * d) for s, d, k in zip(geo.center, geo.widths, z)]


def neighbor(geo: GridGeometry | Sequence[int]) -> list[Grid]:
    """All grids within the radius, by shell ``max |z(p)|`` then lexicographically."""
    radius = geo.radius if isinstance(geo, GridGeometry) else tuple(int(r) for r in geo)
    grids = itertools.product(*(range(-r, r + 1) for r in radius))
    return sorted(grids, key=lambda z: (max((abs(v) for v in z), default=0), z))


def grid_leq(z_prime: Sequence[int], z: Sequence[int]) -> bool:
    """``z' <= z``: each coordinate of z' lies between 0 and the matching one of z."""
    if len(z_prime) != len(z):
        raise GridError("grids of different dimension")
    return all((0 <= a <= b) or (0 >= a >= b) for a, b in zip(z_prime, z))


def grid_lt(z_prime: Sequence[int], z: Sequence[int]) -> bool:
    return tuple(z_prime) != tuple(z) and grid_leq(z_prime, z)


@dataclass
class GridRecord:
    z: Grid
    state: str = "untested"  # feasible | infeasible | pruned | timeout | error | untested
    theta: tuple[float, ...] | None = None
    assignment: dict[str, float] | None = None
    pruned_by: Grid | None = None
    seconds: float = 0.0
    witness: object = None  # decoded graph when a decoder is supplied

    @property
    def witness_id(self) -> str:
        return "w_" + "_".join(str(v).replace("-", "m") for v in self.z)


@dataclass
class GridSearchResult:
    geometry: GridGeometry
    projections: ProjectionSet
    records: dict[Grid, GridRecord]
    seed_x: np.ndarray
    order: list[Grid] = field(default_factory=list)

    def by_state(self, state: str) -> list[Grid]:
        return [z for z in self.order if self.records[z].state == state]

    @property
    def feasible(self) -> list[Grid]:
        return self.by_state("feasible")

    def counts(self) -> dict[str, int]:
        out = {s: 0 for s in ("feasible", "infeasible", "pruned", "timeout", "error", "untested")}
        for r in self.records.values():
            out[r.state] += 1
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        p = self.geometry.dim
        w.writerow([*(f"z{k + 1}" for k in range(p)), "status", "witness", *(f"theta{k + 1}" for k in range(p)), "solve_seconds"])
        for z in self.order:
            r = self.records[z]
            ref = r.witness_id if r.state == "feasible" else (
                "by " + " ".join(map(str, r.pruned_by)) if r.pruned_by is not None else "")
            th = [f"{v:.9g}" for v in r.theta] if r.theta is not None else [""] * p
            w.writerow([*z, r.state, ref, *th, f"{r.seconds:.3f}"])
        return buf.getvalue()


def _augment(base: MilpModel, x_names: Sequence[str], ps: ProjectionSet, box) -> MilpModel:
    m = base.copy(name=base.name + "_grid")
    for p in range(ps.p_max):
        t = m.add_var(f"theta_{p}", "continuous", -INF, INF).name
        lin = LinearModel(ps.weights[p, :-1], float(ps.weights[p, -1]))
        encode_linear(lin, m, x_names, t, prefix=f"theta_def_{p}")
        lo, hi = box[p]
        m.add_constraint(m.var(t), ">=", lo, f"grid_lo_{p}")
        m.add_constraint(m.var(t), "<=", hi, f"grid_hi_{p}")
    return m


def grid_search(
    base: MilpModel,
    x_names: Sequence[str],
    ps: ProjectionSet,
    widths: Sequence[float],
    radius: Sequence[int],
    solver: SolverConfig | None = None,
    seed_x: Sequence[float] | None = None,
    prune: bool = True,
    workers: int = 1,
    decode: Callable[[Mapping[str, float]], object] | None = None,
    tol: float = 1e-6,
) -> GridSearchResult:
    """Search the neighbourhood of a seed solution of ``base``.

    ``x_names`` are the model variables forming the feature vector that the
    projections read.  Without ``seed_x`` the base model is solved first to
    obtain one.  With ``workers > 1`` the grids of one shell are solved
    concurrently and pruning is applied between shells only.
    """
    solver = solver or SolverConfig()
    if len(x_names) != ps.K:
        raise GridError(f"{len(x_names)} feature variables but projections expect {ps.K}")
    for n in x_names:
        if n not in base.variables:
            raise GridError(f"feature variable {n!r} is not in the base model")
    if seed_x is None:
        res = solve(base, solver)
        if not res.is_feasible:
            raise GridError(f"base model has no seed solution (status {res.status})")
        seed_x = [res.assignment[n] for n in x_names]
    seed_x = np.asarray(seed_x, dtype=float)
    geo = GridGeometry(tuple(theta(ps, seed_x)), tuple(widths), tuple(radius))
    order = neighbor(geo)
    records = {z: GridRecord(z) for z in order}
    infeasible: list[Grid] = []

    def run(z: Grid) -> tuple[Grid, SolveResult, float]:
        box = subspace_bounds(geo, z)
        t0 = time.perf_counter()
        res = solve(_augment(base, x_names, ps, box), solver)
        return z, res, time.perf_counter() - t0

    def record(z: Grid, res: SolveResult, seconds: float) -> None:
        rec = records[z]
        rec.seconds = seconds
        if res.is_feasible:
            x = np.array([res.assignment[n] for n in x_names])
            th = theta(ps, x)
            box = subspace_bounds(geo, z)
            if any(not (lo - tol <= v <= hi + tol) for v, (lo, hi) in zip(th, box)):
                rec.state = "error"
                return
            rec.state = "feasible"
            rec.theta = tuple(float(v) for v in th)
            rec.assignment = res.assignment
            if decode is not None:
                rec.witness = decode(res.assignment)
        elif res.status == "infeasible":
            rec.state = "infeasible"
            infeasible.append(z)
        elif res.status == "timeout":
            rec.state = "timeout"
        else:
            rec.state = "error"
            log.warning("grid %s: solver error\n%s", z, res.log[-2000:])

    def prune_from(witnesses: Sequence[Grid]) -> None:
        if not prune:
            return
        for z in order:
            r = records[z]
            if r.state != "untested":
                continue
            for w in witnesses:
                if grid_lt(w, z):
                    r.state = "pruned"
                    r.pruned_by = w
                    break

    if workers <= 1:
        for z in order:
            if records[z].state != "untested":
                continue
            record(*run(z))
            if records[z].state == "infeasible":
                prune_from([z])
    else:
        shells: dict[int, list[Grid]] = {}
        for z in order:
            shells.setdefault(max((abs(v) for v in z), default=0), []).append(z)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for shell in sorted(shells):
                todo = [z for z in shells[shell] if records[z].state == "untested"]
                before = len(infeasible)
                for z, res, sec in pool.map(run, todo):
                    record(z, res, sec)
                prune_from(infeasible[before:])
    return GridSearchResult(geo, ps, records, seed_x, order)


def make_property_projections(models: Sequence[LinearModel], reg: DescriptorRegistry) -> ProjectionSet:
    """Embed linear property models into projections over the raw descriptor vector.

    Each row reproduces the model's prediction in property units, so grids
    become bands of predicted auxiliary-property values.
    """
    if not models:
        raise GridError("need at least one model")
    rows = []
    for lin in models:
        if not lin.selected:
            raise GridError("linear model does not name its descriptors")
        w = np.zeros(reg.K + 1)
        y_lo, y_hi = lin.y_scaling
        y_span = y_hi - y_lo
        const = lin.bias
        for k, d in enumerate(lin.selected):
            if d not in reg.index:
                raise GridError(f"descriptor {d} is not in the registry")
            if lin.x_scaling is None:
                w[reg.index[d]] += y_span * lin.weights[k]
                continue
            lo = float(lin.x_scaling.lo[k])
            span = float(lin.x_scaling.hi[k] - lo)
            if span > 0:
                w[reg.index[d]] += y_span * lin.weights[k] / span
                const -= lin.weights[k] * lo / span
        w[-1] = y_lo + y_span * const
        rows.append(w)
    return ProjectionSet(np.array(rows))


def widths_from_range(values: np.ndarray, radius: Sequence[int], fraction: float = 1.0) -> tuple[float, ...]:
    """Widths so that ``radius`` shells on each side cover ``fraction`` of the value range."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    span = values.max(axis=0) - values.min(axis=0)
    out = []
    for s, r in zip(span, radius):
        out.append(max(float(s) * fraction / (2 * max(r, 1) + 1), 1e-3))
    return tuple(out)

