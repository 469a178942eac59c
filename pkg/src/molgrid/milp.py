"""Solver-agnostic MILP models, LP-format I/O and solver adapters.

Models are plain containers of named variables and linear constraints.  They
are written in CPLEX LP format and handed to an external solver process
(CBC by default); the returned assignment is always re-checked against the
model before a result is reported as feasible.
"""

from __future__ import annotations

import importlib.util
import math
import os
import re
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "LinExpr",
    "Var",
    "Constraint",
    "MilpModel",
    "MilpError",
    "SolverConfig",
    "SolveResult",
    "lin_sum",
    "merge",
    "write_lp",
    "read_lp",
    "solve",
    "find_cbc",
]

INF = math.inf
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\[\]]*$")
KINDS = ("continuous", "integer", "binary")
SENSES = ("<=", "=", ">=")


class MilpError(ValueError):
    pass


class LinExpr:
    """Sparse affine expression ``sum(coef * var) + const``."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Mapping[str, float] | None = None, const: float = 0.0):
        self.terms: dict[str, float] = dict(terms or {})
        self.const = float(const)

    @staticmethod
    def of(value) -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, Var):
            return LinExpr({value.name: 1.0})
        if isinstance(value, str):
            return LinExpr({value: 1.0})
        return LinExpr(const=float(value))

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def add_term(self, name: str, coef: float) -> "LinExpr":
        """In-place accumulation; returns ``self``."""
        if coef:
            self.terms[name] = self.terms.get(name, 0.0) + coef
        return self

    def __add__(self, other) -> "LinExpr":
        other = LinExpr.of(other)
        out = self.copy()
        for k, v in other.terms.items():
            out.terms[k] = out.terms.get(k, 0.0) + v
        out.const += other.const
        return out

    __radd__ = __add__

    def __neg__(self) -> "LinExpr":
        return LinExpr({k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other) -> "LinExpr":
        return self + (-LinExpr.of(other))

    def __rsub__(self, other) -> "LinExpr":
        return LinExpr.of(other) - self

    def __mul__(self, k) -> "LinExpr":
        k = float(k)
        return LinExpr({n: v * k for n, v in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def value(self, assignment: Mapping[str, float]) -> float:
        return self.const + sum(c * assignment[n] for n, c in self.terms.items())

    def __repr__(self) -> str:
        body = " + ".join(f"{c:g}*{n}" for n, c in self.terms.items())
        return f"LinExpr({body} + {self.const:g})"


def lin_sum(items: Iterable) -> LinExpr:
    out = LinExpr()
    for it in items:
        e = LinExpr.of(it)
        for k, v in e.terms.items():
            out.terms[k] = out.terms.get(k, 0.0) + v
        out.const += e.const
    return out


@dataclass(frozen=True)
class Var:
    name: str
    kind: str = "continuous"
    lb: float = 0.0
    ub: float = INF

    # arithmetic delegates to LinExpr
    def _e(self) -> LinExpr:
        return LinExpr({self.name: 1.0})

    def __add__(self, o):
        return self._e() + o

    __radd__ = __add__

    def __sub__(self, o):
        return self._e() - o

    def __rsub__(self, o):
        return LinExpr.of(o) - self._e()

    def __mul__(self, k):
        return self._e() * k

    __rmul__ = __mul__

    def __neg__(self):
        return -self._e()


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: Mapping[str, float]
    sense: str
    rhs: float

    def lhs(self, assignment: Mapping[str, float]) -> float:
        return sum(c * assignment[n] for n, c in self.terms.items())

    def violation(self, assignment: Mapping[str, float]) -> float:
        v = self.lhs(assignment)
        if self.sense == "<=":
            return max(0.0, v - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - v)
        return abs(v - self.rhs)


class MilpModel:
    """Named variables, linear constraints and an optional linear objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: dict[str, Var] = {}
        self.constraints: dict[str, Constraint] = {}
        self.objective: dict[str, float] = {}
        self.objective_const = 0.0
        self.sense = "min"
        self._auto = 0

    # construction

    def _check_name(self, name: str) -> None:
        if not _NAME_RE.match(name) or name[0] in "eE" or len(name) > 255:
            raise MilpError(f"name {name!r} is not LP-format safe")
        if name in self.variables or name in self.constraints:
            raise MilpError(f"duplicate name {name!r}")

    def add_var(self, name: str, kind: str = "continuous", lb: float = 0.0, ub: float = INF) -> Var:
        if kind not in KINDS:
            raise MilpError(f"unknown variable kind {kind!r}")
        if kind == "binary":
            lb, ub = 0.0, 1.0
        if lb > ub:
            raise MilpError(f"bounds of {name} are inverted: {lb} > {ub}")
        self._check_name(name)
        var = Var(name, kind, float(lb), float(ub))
        self.variables[name] = var
        return var

    def var(self, name: str) -> Var:
        return self.variables[name]

    def add_constraint(self, lhs, sense: str, rhs=0.0, name: str | None = None) -> Constraint:
        """Add ``lhs sense rhs``; constants on either side are folded into rhs."""
        if sense == "==":
            sense = "="
        if sense not in SENSES:
            raise MilpError(f"unknown constraint sense {sense!r}")
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        for n in expr.terms:
            if n not in self.variables:
                raise MilpError(f"constraint references undeclared variable {n!r}")
        if name is None:
            while True:
                self._auto += 1
                name = f"c{self._auto}"
                if name not in self.constraints and name not in self.variables:
                    break
        self._check_name(name)
        terms = {k: v for k, v in expr.terms.items() if v != 0.0}
        con = Constraint(name, terms, sense, -expr.const)
        self.constraints[name] = con
        return con

    def set_objective(self, expr, sense: str = "min") -> None:
        expr = LinExpr.of(expr)
        for n in expr.terms:
            if n not in self.variables:
                raise MilpError(f"objective references undeclared variable {n!r}")
        if sense not in ("min", "max"):
            raise MilpError("objective sense must be 'min' or 'max'")
        self.objective = {k: v for k, v in expr.terms.items() if v != 0.0}
        self.objective_const = expr.const
        self.sense = sense

    def fix(self, name: str, value: float) -> None:
        v = self.variables[name]
        self.variables[name] = replace(v, lb=float(value), ub=float(value))

    def set_bounds(self, name: str, lb: float, ub: float) -> None:
        if lb > ub:
            raise MilpError(f"bounds of {name} are inverted: {lb} > {ub}")
        v = self.variables[name]
        self.variables[name] = replace(v, lb=float(lb), ub=float(ub))

    def copy(self, name: str | None = None) -> "MilpModel":
        out = MilpModel(name or self.name)
        out.variables = dict(self.variables)
        out.constraints = dict(self.constraints)
        out.objective = dict(self.objective)
        out.objective_const = self.objective_const
        out.sense = self.sense
        out._auto = self._auto
        return out

    # inspection

    @property
    def is_feasibility_only(self) -> bool:
        return not self.objective

    def objective_value(self, assignment: Mapping[str, float]) -> float:
        return self.objective_const + sum(c * assignment[n] for n, c in self.objective.items())

    def violations(self, assignment: Mapping[str, float], tol: float = 1e-6) -> list[str]:
        """Human-readable list of every bound, integrality or row violation above ``tol``."""
        out = []
        for n, v in self.variables.items():
            if n not in assignment:
                out.append(f"{n}: missing")
                continue
            x = assignment[n]
            if x < v.lb - tol or x > v.ub + tol:
                out.append(f"{n}={x} outside [{v.lb}, {v.ub}]")
            if v.kind != "continuous" and abs(x - round(x)) > tol:
                out.append(f"{n}={x} not integral")
        for c in self.constraints.values():
            if any(n not in assignment for n in c.terms):
                continue
            viol = c.violation(assignment)
            if viol > tol:
                out.append(f"{c.name}: violated by {viol:.3g}")
        return out

    def __repr__(self) -> str:
        return f"MilpModel({self.name!r}, {len(self.variables)} vars, {len(self.constraints)} cons)"


def merge(*models: MilpModel, prefixes: Sequence[str] | None = None, name: str = "merged") -> MilpModel:
    """Disjoint union of models; ``prefixes`` renames each model's namespace."""
    if prefixes is not None and len(prefixes) != len(models):
        raise MilpError("need one prefix per model")
    out = MilpModel(name)
    for k, m in enumerate(models):
        p = prefixes[k] if prefixes is not None else ""
        for v in m.variables.values():
            out.add_var(p + v.name, v.kind, v.lb, v.ub)
        for c in m.constraints.values():
            out.add_constraint(LinExpr({p + n: a for n, a in c.terms.items()}), c.sense, c.rhs, p + c.name)
        for n, a in m.objective.items():
            out.objective[p + n] = out.objective.get(p + n, 0.0) + a
        out.objective_const += m.objective_const
        if m.objective:
            out.sense = m.sense
    return out


# ---------------------------------------------------------------------------
# LP format


def _num(x: float) -> str:
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    s = format(float(x), ".12g")
    return "0" if s == "-0" else s


def _terms(terms: Mapping[str, float], per_line: int = 8) -> str:
    parts = []
    for k, (n, c) in enumerate(terms.items()):
        sign = "-" if c < 0 else "+"
        mag = _num(abs(c))
        tok = f"{n}" if mag == "1" else f"{mag} {n}"
        if k == 0:
            parts.append(f"- {tok}" if sign == "-" else tok)
        else:
            parts.append(("\n   " if k % per_line == 0 else " ") + f"{sign} {tok}")
    return "".join(parts) if parts else "0"


def write_lp(model: MilpModel) -> str:
    """Deterministic CPLEX LP text.  Feasibility models get a zero objective."""
    out = [f"\\ {model.name}", "Minimize" if model.sense == "min" else "Maximize"]
    if model.objective:
        out.append(f" obj: {_terms(model.objective)}")
    elif model.variables:
        out.append(f" obj: 0 {next(iter(model.variables))}")
    else:
        out.append(" obj:")
    out.append("Subject To")
    for c in model.constraints.values():
        op = {"<=": "<=", ">=": ">=", "=": "="}[c.sense]
        out.append(f" {c.name}: {_terms(c.terms)} {op} {_num(c.rhs)}")
    bounds, generals, binaries = [], [], []
    for v in model.variables.values():
        if v.kind == "binary":
            binaries.append(v.name)
            continue
        if v.kind == "integer":
            generals.append(v.name)
        if v.lb == -INF and v.ub == INF:
            bounds.append(f" {v.name} free")
        elif v.ub == INF:
            bounds.append(f" {v.name} >= {_num(v.lb)}")
        else:
            bounds.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    if bounds:
        out.append("Bounds")
        out.extend(bounds)
    if generals:
        out.append("Generals")
        out.extend(f" {n}" for n in generals)
    if binaries:
        out.append("Binaries")
        out.extend(f" {n}" for n in binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def _parse_num(tok: str) -> float:
    t = tok.lower()
    if t in ("inf", "+inf", "infinity"):
        return INF
    if t in ("-inf", "-infinity"):
        return -INF
    return float(tok)


def _parse_terms(tokens: list[str]) -> dict[str, float]:
    terms: dict[str, float] = {}
    sign, coef = 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
            continue
        except ValueError:
            pass
        c = sign * (1.0 if coef is None else coef)
        terms[tok] = terms.get(tok, 0.0) + c
        sign, coef = 1.0, None
    return terms


def read_lp(text: str) -> MilpModel:
    """Parse LP text in the subset emitted by :func:`write_lp`."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("\\")]
    name = "model"
    if text.startswith("\\ "):
        name = text.splitlines()[0][2:].strip()
    model = MilpModel(name)
    section = None
    stmts: dict[str, list[str]] = {"obj": [], "st": [], "bounds": [], "gen": [], "bin": []}
    heads = {
        "minimize": "obj", "maximize": "obj", "subject to": "st",
        "bounds": "bounds", "generals": "gen", "binaries": "bin", "end": None,
    }
    for ln in lines:
        key = ln.strip().lower()
        if key in heads:
            section = heads[key]
            if key == "maximize":
                model.sense = "max"
            continue
        if section is None:
            continue
        if ln.startswith("   ") and stmts[section]:
            stmts[section][-1] += " " + ln.strip()
        else:
            stmts[section].append(ln.strip())
    kinds = {n: "integer" for n in stmts["gen"]}
    kinds.update({n: "binary" for n in stmts["bin"]})
    bounds: dict[str, tuple[float, float]] = {}
    for b in stmts["bounds"]:
        tok = b.split()
        if len(tok) == 2 and tok[1] == "free":
            bounds[tok[0]] = (-INF, INF)
        elif len(tok) == 3 and tok[1] == ">=":
            bounds[tok[0]] = (_parse_num(tok[2]), INF)
        elif len(tok) == 5:
            bounds[tok[2]] = (_parse_num(tok[0]), _parse_num(tok[4]))
        else:
            raise MilpError(f"unsupported bounds line {b!r}")
    rows = []
    for s in stmts["st"]:
        cname, _, body = s.partition(":")
        tok = body.split()
        rows.append((cname.strip(), _parse_terms(tok[:-2]), tok[-2], float(tok[-1])))
    obj_terms: dict[str, float] = {}
    for s in stmts["obj"]:
        _, _, body = s.partition(":")
        obj_terms.update(_parse_terms(body.split()))
    order: list[str] = []
    for _, terms, _, _ in rows:
        order.extend(terms)
    order.extend(obj_terms)
    order.extend(bounds)
    order.extend(kinds)
    for n in dict.fromkeys(order):
        kind = kinds.get(n, "continuous")
        lb, ub = bounds.get(n, (0.0, INF))
        model.add_var(n, kind, lb, ub)
    for cname, terms, op, rhs in rows:
        model.add_constraint(LinExpr(terms), op, rhs, cname)
    obj_terms = {k: v for k, v in obj_terms.items() if v != 0.0}
    if obj_terms:
        model.set_objective(LinExpr(obj_terms), model.sense)
    return model


# ---------------------------------------------------------------------------
# solving


def find_cbc() -> str | None:
    """Locate a CBC executable: $MOLGRID_SOLVER, PATH, then pulp's bundled copy."""
    env = os.environ.get("MOLGRID_SOLVER")
    if env:
        return env
    exe = shutil.which("cbc")
    if exe:
        return exe
    spec = importlib.util.find_spec("pulp")
    if spec and spec.submodule_search_locations:
        base = Path(spec.submodule_search_locations[0]) / "solverdir" / "cbc"
        import platform

        arch = {"x86_64": "64", "AMD64": "64", "aarch64": "arm64", "arm64": "arm64"}.get(platform.machine(), "64")
        osdir = {"linux": "linux", "darwin": "osx", "win32": "win"}.get(os.sys.platform, "linux")
        sub = "i64" if arch == "64" else arch
        cand = base / osdir / sub / ("cbc.exe" if osdir == "win" else "cbc")
        if cand.exists():
            return str(cand)
    return None


DEFAULT_STATUS_PATTERNS = (
    (r"^Optimal", "optimal"),
    (r"^(Integer )?[Ii]nfeasible", "infeasible"),
    (r"^Stopped on time", "timeout"),
    (r"^Stopped on (iterations|difficulties|ctrl-c)", "timeout"),
    (r"^Unbounded", "error"),
)


@dataclass(frozen=True)
class SolverConfig:
    """How to run a solver.

    ``backend`` is ``"cbc"`` (external process on LP files) or ``"highs"``
    (in-process, via scipy).  The argument template may use ``{exe}``,
    ``{lp}``, ``{sol}`` and ``{timelimit}``.
    """

    backend: str = "cbc"
    executable: str | None = None
    args: str = "{exe} {lp} sec {timelimit} printingOptions all solve solu {sol}"
    time_limit: float = 60.0
    tolerance: float = 1e-6
    status_patterns: tuple[tuple[str, str], ...] = DEFAULT_STATUS_PATTERNS
    value_pattern: str = r"^\s*(?:\*\*\s*)?\d+\s+(\S+)\s+(\S+)"
    polish: bool = True
    keep_files: str | None = None
    # CBC's preprocessing occasionally reports false infeasibility on big-M
    # models, so its infeasible verdicts are re-checked with HiGHS
    confirm_infeasible: bool = True


@dataclass
class SolveResult:
    status: str
    assignment: dict[str, float] = field(default_factory=dict)
    objective: float | None = None
    seconds: float = 0.0
    log: str = ""

    @property
    def is_feasible(self) -> bool:
        return self.status in ("optimal", "feasible")

    def __getitem__(self, name: str) -> float:
        return self.assignment[name]


def _matrix(model: MilpModel):
    from scipy import sparse

    names = list(model.variables)
    col = {n: j for j, n in enumerate(names)}
    rows, cols, vals, lo, hi = [], [], [], [], []
    for i, c in enumerate(model.constraints.values()):
        for n, a in c.terms.items():
            rows.append(i)
            cols.append(col[n])
            vals.append(a)
        lo.append(c.rhs if c.sense in (">=", "=") else -INF)
        hi.append(c.rhs if c.sense in ("<=", "=") else INF)
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(model.constraints), len(names)))
    c = np.zeros(len(names))
    for n, a in model.objective.items():
        c[col[n]] = a
    if model.sense == "max":
        c = -c
    return names, col, A, np.array(lo), np.array(hi), c


def _polish(model: MilpModel, assignment: dict[str, float]) -> dict[str, float]:
    """Round integers, then re-solve the continuous part as an LP in double precision."""
    from scipy.optimize import linprog

    out = dict(assignment)
    ints = [n for n, v in model.variables.items() if v.kind != "continuous"]
    for n in ints:
        out[n] = float(round(out[n]))
    conts = [n for n, v in model.variables.items() if v.kind == "continuous"]
    if not conts:
        return out
    names, col, A, lo, hi, c = _matrix(model)
    cidx = [col[n] for n in conts]
    iidx = [col[n] for n in ints]
    fixed = np.array([out[n] for n in ints]) if ints else np.zeros(0)
    shift = A[:, iidx] @ fixed if ints else np.zeros(A.shape[0])
    Ac = A[:, cidx]
    eq = np.isfinite(lo) & np.isfinite(hi) & (lo == hi)
    up = np.isfinite(hi) & ~eq
    dn = np.isfinite(lo) & ~eq
    from scipy import sparse

    A_ub = sparse.vstack([Ac[up], -Ac[dn]]).tocsr()
    b_ub = np.concatenate([hi[up] - shift[up], -(lo[dn] - shift[dn])])
    A_eq = Ac[eq]
    b_eq = lo[eq] - shift[eq]
    bounds = [(model.variables[n].lb if model.variables[n].lb > -INF else None,
               model.variables[n].ub if model.variables[n].ub < INF else None) for n in conts]
    res = linprog(
        c[cidx],
        A_ub=A_ub if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=A_eq if A_eq.shape[0] else None,
        b_eq=b_eq if A_eq.shape[0] else None,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 0:
        for n, x in zip(conts, res.x):
            out[n] = float(x)
    return out


def _finish(model: MilpModel, status: str, assignment: dict[str, float], cfg: SolverConfig, log: str, t0: float) -> SolveResult:
    seconds = time.perf_counter() - t0
    if status in ("optimal", "timeout") and assignment:
        for n in model.variables:
            assignment.setdefault(n, 0.0)
        if cfg.polish:
            assignment = _polish(model, assignment)
        bad = model.violations(assignment, cfg.tolerance)
        if bad:
            if status == "timeout":
                return SolveResult("timeout", {}, None, seconds, log)
            return SolveResult(
                "error", assignment, None, seconds,
                log + "\nverification failed:\n" + "\n".join(bad[:20]),
            )
        if status == "timeout":
            status = "feasible"
        return SolveResult(status, assignment, model.objective_value(assignment), seconds, log)
    if status == "optimal":
        # solver claimed optimality without reporting values
        status = "error"
    return SolveResult(status, {}, None, seconds, log)


def _solve_cbc(model: MilpModel, cfg: SolverConfig) -> SolveResult:
    t0 = time.perf_counter()
    res = _run_cbc(model, cfg, t0)
    if res.status == "infeasible" and cfg.confirm_infeasible:
        again = _solve_highs(model, cfg)
        if again.status != "infeasible":
            again.log = res.log + "\n-- CBC infeasibility not confirmed by HiGHS --\n" + again.log
        again.seconds = time.perf_counter() - t0
        return again
    return res


def _run_cbc(model: MilpModel, cfg: SolverConfig, t0: float) -> SolveResult:
    exe = cfg.executable or find_cbc()
    if exe is None:
        raise MilpError("no CBC executable found; set MOLGRID_SOLVER or install pulp")
    with tempfile.TemporaryDirectory(prefix="molgrid_") as tmp:
        lp = Path(tmp) / "model.lp"
        sol = Path(tmp) / "model.sol"
        lp.write_text(write_lp(model))
        if cfg.keep_files:
            shutil.copy(lp, cfg.keep_files)
        argv = [
            tok.format(exe=exe, lp=str(lp), sol=str(sol), timelimit=_num(cfg.time_limit))
            for tok in shlex.split(cfg.args)
        ]
        try:
            proc = subprocess.run(
                argv, capture_output=True, text=True, timeout=cfg.time_limit * 2 + 30
            )
        except FileNotFoundError:
            raise MilpError(f"solver executable not found: {exe}") from None
        except subprocess.TimeoutExpired as exc:
            return SolveResult("timeout", {}, None, time.perf_counter() - t0, str(exc))
        log = proc.stdout + proc.stderr
        if not sol.exists():
            return SolveResult("error", {}, None, time.perf_counter() - t0, log)
        text = sol.read_text()
    lines = text.splitlines()
    head = lines[0].strip() if lines else ""
    status = "error"
    for pat, st in cfg.status_patterns:
        if re.search(pat, head):
            status = st
            break
    # a time-limited run without any integer solution reports the LP relaxation
    if status == "timeout" and "no integer solution" in head:
        return SolveResult("timeout", {}, None, time.perf_counter() - t0, log)
    vre = re.compile(cfg.value_pattern)
    assignment: dict[str, float] = {}
    for ln in lines[1:]:
        m = vre.match(ln)
        if m and m.group(1) in model.variables:
            try:
                assignment[m.group(1)] = float(m.group(2))
            except ValueError:
                return SolveResult("error", {}, None, time.perf_counter() - t0, log + f"\nunparsable: {ln}")
    return _finish(model, status, assignment, cfg, log + "\n" + head, t0)


def _solve_highs(model: MilpModel, cfg: SolverConfig) -> SolveResult:
    from scipy.optimize import Bounds, LinearConstraint, milp

    t0 = time.perf_counter()
    names, col, A, lo, hi, c = _matrix(model)
    integrality = np.array([0 if model.variables[n].kind == "continuous" else 1 for n in names])
    lb = np.array([model.variables[n].lb for n in names])
    ub = np.array([model.variables[n].ub for n in names])
    cons = [LinearConstraint(A, lo, hi)] if A.shape[0] else []
    res = milp(
        c, integrality=integrality, bounds=Bounds(lb, ub), constraints=cons,
        options={"time_limit": cfg.time_limit, "disp": False},
    )
    status = {0: "optimal", 1: "timeout", 2: "infeasible"}.get(res.status, "error")
    assignment = {}
    if res.x is not None:
        assignment = {n: float(x) for n, x in zip(names, res.x)}
    return _finish(model, status, assignment, cfg, res.message, t0)


def solve(model: MilpModel, cfg: SolverConfig | None = None) -> SolveResult:
    cfg = cfg or SolverConfig()
    if cfg.backend == "cbc":
        return _solve_cbc(model, cfg)
    if cfg.backend == "highs":
        return _solve_highs(model, cfg)
    raise MilpError(f"unknown solver backend {cfg.backend!r}")
