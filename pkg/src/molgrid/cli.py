"""Command-line pipeline: featurize, train, infer, grid-search, eval.

Every command reads one sectioned ``key = value`` configuration file and
writes its artifacts into the configured run directory, whose
``manifest.txt`` lists a SHA-256 digest per file.

Exit codes: 0 success, 2 infeasible (the solver proved that no graph meets
the requirements), 1 any error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .chemgraph import DEFAULT_ELEMENTS, ElementTable, GraphError, format_graph, parse_element_table, parse_graph
from .descriptors import (
    DescriptorError,
    DescriptorRegistry,
    build_registry,
    descriptor_counts,
    featurize,
    normalize,
    read_feature_csv,
    write_feature_csv,
)
from .encode import EncodeError, TargetInterval, assemble_inference, encode_graph, parse_topology_spec
from .gridsearch import GridError, ProjectionSet, grid_search, make_property_projections, theta, widths_from_range
from .milp import MilpError, SolverConfig, solve
from .regression import (
    LinearModel,
    RegressionError,
    TrainConfig,
    cross_validate,
    r_squared,
    read_model,
    train_lasso,
    train_mlp,
    write_model,
)

log = logging.getLogger("molgrid")

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
INFEASIBLE_MESSAGE = (
    "infeasible: no chemical graph satisfies the topological specification "
    "with a predicted value inside the target interval"
)


class CliError(Exception):
    pass


@dataclass
class PipelineConfig:
    base_dir: Path
    run_dir: Path
    dataset: Path | None = None
    graphs: Path | None = None
    elements: Path | None = None
    topology: Path | None = None
    rho: int = 2
    kind: str = "mlp"
    hidden: tuple[int, ...] = (4,)
    train: TrainConfig = field(default_factory=TrainConfig)
    folds: int = 5
    repeats: int = 10
    target: TargetInterval | None = None
    projection_descriptors: tuple[str, ...] = ()
    projection_models: tuple[Path, ...] = ()
    projection_weights: Path | None = None
    widths: tuple[float, ...] | None = None
    radius: tuple[int, ...] = (1,)
    prune: bool = True
    workers: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0

    def element_table(self) -> ElementTable:
        if self.elements is None:
            return DEFAULT_ELEMENTS
        return parse_element_table(_read(self.elements))


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except FileNotFoundError:
        raise CliError(f"file not found: {path}") from None


def _floats(text: str, key: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise CliError(f"{key}: expected numbers, got {text!r}") from None


def _ints(text: str, key: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise CliError(f"{key}: expected integers, got {text!r}") from None


def load_config(path: str | Path, seed: int | None = None, time_limit: float | None = None,
                solver: str | None = None) -> PipelineConfig:
    path = Path(path)
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None, comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(_read(path))
    except configparser.Error as exc:
        raise CliError(f"{path}: {exc}") from None
    base = path.resolve().parent

    def get(section: str, key: str, default=None):
        return cp.get(section, key, fallback=default) if cp.has_section(section) else default

    def p(section: str, key: str) -> Path | None:
        v = get(section, key)
        return (base / v) if v else None

    cfg = PipelineConfig(base_dir=base, run_dir=p("paths", "run_dir") or base / "run")
    cfg.dataset = p("paths", "dataset")
    cfg.graphs = p("paths", "graphs")
    cfg.elements = p("paths", "elements")
    cfg.topology = p("paths", "topology")
    try:
        cfg.seed = int(get("run", "seed", "0")) if seed is None else seed
        cfg.rho = int(get("descriptors", "rho", "2"))
        if cfg.rho < 1:
            raise CliError("rho must be at least 1")
        cfg.kind = get("train", "model", "mlp")
        cfg.hidden = _ints(get("train", "hidden", "4"), "hidden")
        cfg.train = TrainConfig(
            r_stop=float(get("train", "r_stop", "0.95")),
            it_stop=int(get("train", "it_stop", "200")),
            learning_rate=float(get("train", "learning_rate", "0.05")),
            batch_size=int(get("train", "batch_size", "16")),
            seed=cfg.seed,
            lasso_lambda=float(get("train", "lasso_lambda", "0")),
        )
        cfg.folds = int(get("train", "folds", "5"))
        cfg.repeats = int(get("train", "repeats", "10"))
        if get("infer", "target"):
            lo, hi = _floats(get("infer", "target"), "target")
            cfg.target = TargetInterval(lo, hi)
        cfg.projection_descriptors = tuple(get("grid", "projection_descriptors", "").split())
        cfg.projection_models = tuple(base / v for v in get("grid", "projection_models", "").split())
        cfg.projection_weights = p("grid", "projection_weights")
        w = get("grid", "widths", "auto")
        cfg.widths = None if w.strip() == "auto" else _floats(w, "widths")
        cfg.radius = _ints(get("grid", "radius", "1"), "radius")
        cfg.prune = get("grid", "prune", "yes").lower() in ("1", "yes", "true", "on")
        cfg.workers = int(get("grid", "workers", "1"))
        sc = SolverConfig(
            backend=get("solver", "backend", "cbc"),
            executable=get("solver", "executable") or None,
            time_limit=float(get("solver", "time_limit", "60")),
        )
        if get("solver", "args"):
            sc = replace(sc, args=get("solver", "args"))
        confirm = get("solver", "confirm_infeasible", "yes").strip().lower()
        if confirm not in ("1", "yes", "true", "on", "0", "no", "false", "off"):
            raise ValueError(f"[solver] confirm_infeasible must be yes or no, got {confirm!r}")
        sc = replace(sc, confirm_infeasible=confirm in ("1", "yes", "true", "on"))
    except (ValueError, EncodeError, RegressionError) as exc:
        raise CliError(f"{path}: {exc}") from None
    if time_limit is not None:
        sc = replace(sc, time_limit=time_limit)
    if solver is not None:
        sc = replace(sc, backend=solver) if solver in ("cbc", "highs") else replace(sc, backend="cbc", executable=solver)
    cfg.solver = sc
    return cfg


# ---------------------------------------------------------------------------
# artifacts


def _write(cfg: PipelineConfig, name: str, text: str) -> Path:
    path = cfg.run_dir / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def update_manifest(run_dir: Path) -> Path:
    lines = []
    for f in sorted(run_dir.rglob("*")):
        if f.is_file() and f.name != "manifest.txt":
            digest = hashlib.sha256(f.read_bytes()).hexdigest()
            lines.append(f"{digest}  {f.relative_to(run_dir).as_posix()}")
    out = run_dir / "manifest.txt"
    out.write_text("\n".join(lines) + "\n")
    return out


def read_dataset(path: Path) -> list[tuple[str, float]]:
    rows = list(csv.reader(io.StringIO(_read(path))))
    if not rows or [c.strip() for c in rows[0][:2]] != ["graph_id", "value"]:
        raise CliError(f"{path}: expected header 'graph_id,value'")
    out = []
    for k, r in enumerate(rows[1:], 2):
        if not r:
            continue
        try:
            out.append((r[0].strip(), float(r[1])))
        except (IndexError, ValueError):
            raise CliError(f"{path}:{k}: malformed row {r!r}") from None
    return out


def _need(path: Path | None, what: str) -> Path:
    if path is None:
        raise CliError(f"configuration lacks the {what} path")
    if not path.exists():
        raise CliError(f"{what} not found: {path}")
    return path


def _registry(cfg: PipelineConfig) -> DescriptorRegistry:
    return DescriptorRegistry.from_text(_read(cfg.run_dir / "registry.txt"))


# ---------------------------------------------------------------------------
# commands


def cmd_featurize(cfg: PipelineConfig) -> int:
    data = read_dataset(_need(cfg.dataset, "dataset"))
    gdir = _need(cfg.graphs, "graph directory")
    table = cfg.element_table()
    graphs, errors = [], []
    for gid, _ in data:
        try:
            g = parse_graph(_read(gdir / f"{gid}.graph"), table)
            descriptor_counts(g, cfg.rho, table.hydrogen)
            graphs.append(g)
        except (GraphError, DescriptorError, CliError) as exc:
            errors.append(f"{gid}: {exc}")
    if errors:
        for e in errors:
            print(e, file=sys.stderr)
        print(f"{len(errors)} of {len(data)} graphs failed", file=sys.stderr)
        return EXIT_ERROR
    reg = build_registry(graphs, cfg.rho, table)
    X = np.array([featurize(g, reg).values for g in graphs])
    ids = [gid for gid, _ in data]
    _write(cfg, "registry.txt", reg.to_text())
    _write(cfg, "features.csv", write_feature_csv(reg.ids, list(zip(ids, X))))
    Xn, _ = normalize(X)
    _write(cfg, "features_normalized.csv", write_feature_csv(reg.ids, list(zip(ids, Xn))))
    update_manifest(cfg.run_dir)
    print(f"graphs={len(graphs)} {reg.summary()}")
    return EXIT_OK


def _training_data(cfg: PipelineConfig):
    ids, gids, X = read_feature_csv(_read(cfg.run_dir / "features.csv"))
    values = dict(read_dataset(_need(cfg.dataset, "dataset")))
    missing = [g for g in gids if g not in values]
    if missing:
        raise CliError("no property value for: " + ", ".join(missing))
    y = np.array([values[g] for g in gids])
    return ids, gids, X, y


def fit_predictor(X, y, ids: Sequence[str], kind: str, hidden: Sequence[int], tcfg: TrainConfig):
    """Train on non-constant descriptors with min-max scaled inputs and target."""
    sel = [j for j in range(X.shape[1]) if X[:, j].max() > X[:, j].min()]
    if not sel:
        raise CliError("every descriptor is constant over the dataset")
    Xn, sc = normalize(X[:, sel])
    y_lo, y_hi = float(y.min()), float(y.max())
    if y_hi == y_lo:
        raise CliError("property values are constant")
    yn = (y - y_lo) / (y_hi - y_lo)
    selected = tuple(ids[j] for j in sel)
    if kind == "lasso":
        model = train_lasso(Xn, yn, tcfg, selected)
    else:
        model = train_mlp(Xn, yn, (len(sel), *hidden, 1), tcfg, selected)
    return replace(model, x_scaling=sc, y_scaling=(y_lo, y_hi)), Xn, yn


def cmd_train(cfg: PipelineConfig) -> int:
    from .plotting import plot_cv_scores, plot_parity

    ids, gids, X, y = _training_data(cfg)
    model, Xn, yn = fit_predictor(X, y, ids, cfg.kind, cfg.hidden, cfg.train)
    arch = (Xn.shape[1], *cfg.hidden, 1)
    report = cross_validate(Xn, yn, arch, cfg.train, cfg.folds, cfg.repeats, cfg.seed, cfg.kind)
    _write(cfg, "model.txt", write_model(model))
    _write(cfg, "cv_report.txt", report.to_text())
    plot_cv_scores(report, cfg.run_dir / "cv_scores.png")
    plot_parity(y, model.predict(X[:, [ids.index(d) for d in model.selected]]), cfg.run_dir / "parity.png")
    update_manifest(cfg.run_dir)
    print(f"model={cfg.kind} K'={Xn.shape[1]} trials={len(report.scores)} median_test_r2={report.median:.4f}")
    return EXIT_OK


def _inference(cfg: PipelineConfig, with_target: bool = True):
    reg = _registry(cfg)
    model = read_model(_read(cfg.run_dir / "model.txt"))
    spec = parse_topology_spec(_read(_need(cfg.topology, "topology spec")))
    if with_target and cfg.target is None:
        raise CliError("configuration lacks [infer] target")
    enc = encode_graph(spec, reg)
    return assemble_inference(enc, model, cfg.target if with_target else None)


def cmd_infer(cfg: PipelineConfig) -> int:
    inf = _inference(cfg)
    res = solve(inf.model, cfg.solver)
    if res.status == "infeasible":
        print(INFEASIBLE_MESSAGE)
        return EXIT_INFEASIBLE
    if not res.is_feasible:
        raise CliError(f"solver returned {res.status}:\n{res.log[-1500:]}")
    g = inf.encoding.decode(res.assignment)
    y = inf.check(g)
    reg = inf.encoding.registry
    _write(cfg, "seed.graph", format_graph(g, "inferred"))
    _write(cfg, "seed_features.csv", write_feature_csv(reg.ids, [("seed", featurize(g, reg).values)]))
    _write(cfg, "seed_milp_features.csv",
           write_feature_csv(reg.ids, [("seed", inf.encoding.descriptor_values(res.assignment))]))
    _write(cfg, "seed.txt", f"predicted = {y!r}\nmilp_y = {res.assignment['y']!r}\n")
    update_manifest(cfg.run_dir)
    print(f"feasible: n={len(g)} predicted={y:.6g}")
    return EXIT_OK


def _projections(cfg: PipelineConfig, reg: DescriptorRegistry) -> ProjectionSet:
    if cfg.projection_weights is not None:
        rows = [_floats(ln, "projection_weights") for ln in _read(cfg.projection_weights).splitlines() if ln.strip()]
        return ProjectionSet(np.array(rows))
    if cfg.projection_models:
        models = [read_model(_read(p)) for p in cfg.projection_models]
        if not all(isinstance(m, LinearModel) for m in models):
            raise CliError("projection models must be linear")
        return make_property_projections(models, reg)
    if cfg.projection_descriptors:
        W = np.zeros((len(cfg.projection_descriptors), reg.K + 1))
        for p, d in enumerate(cfg.projection_descriptors):
            if d not in reg.index:
                raise CliError(f"projection descriptor {d} is not in the registry")
            W[p, reg.index[d]] = 1.0
        return ProjectionSet(W)
    raise CliError("configure one of projection_weights, projection_models, projection_descriptors")


def cmd_grid_search(cfg: PipelineConfig) -> int:
    from .plotting import plot_grid_status

    inf = _inference(cfg)
    enc = inf.encoding
    reg = enc.registry
    ps = _projections(cfg, reg)
    radius = cfg.radius * ps.p_max if len(cfg.radius) == 1 else cfg.radius
    seed_x = None
    seed_file = cfg.run_dir / "seed_features.csv"
    if seed_file.exists():
        ids, _, Xs = read_feature_csv(seed_file.read_text())
        if tuple(ids) != reg.ids:
            raise CliError("seed features do not match the registry")
        seed_x = Xs[0]
    if cfg.widths is None:
        _, _, X = read_feature_csv(_read(cfg.run_dir / "features.csv"))
        widths = widths_from_range(theta(ps, X), radius)
    else:
        widths = cfg.widths * ps.p_max if len(cfg.widths) == 1 else cfg.widths
    try:
        result = grid_search(inf.model, enc.x_names, ps, widths, radius, cfg.solver, seed_x=seed_x,
                             prune=cfg.prune, workers=cfg.workers, decode=enc.decode)
    except GridError as exc:
        if "status infeasible" in str(exc):
            print(INFEASIBLE_MESSAGE)
            return EXIT_INFEASIBLE
        raise
    _write(cfg, "grid_report.csv", result.to_csv())
    wdir = cfg.run_dir / "witnesses"
    if wdir.exists():
        for old in wdir.glob("*.graph"):
            old.unlink()
    for z in result.feasible:
        rec = result.records[z]
        _write(cfg, f"witnesses/{rec.witness_id}.graph", format_graph(rec.witness, f"grid {' '.join(map(str, z))}"))
    plot_grid_status(result, cfg.run_dir / "grid_status.png")
    update_manifest(cfg.run_dir)
    counts = result.counts()
    print(" ".join(f"{k}={v}" for k, v in counts.items() if k != "untested"))
    return EXIT_OK


def cmd_eval(cfg: PipelineConfig, graph_files: Sequence[str] = ()) -> int:
    model = read_model(_read(cfg.run_dir / "model.txt"))
    reg = _registry(cfg)
    cols = [reg.index[d] for d in model.selected]
    if graph_files:
        table = cfg.element_table()
        for f in graph_files:
            g = parse_graph(_read(Path(f)), table)
            y = float(model.predict(featurize(g, reg).values[cols]))
            print(f"{f},{y!r}")
        return EXIT_OK
    ids, gids, X, y = _training_data(cfg)
    pred = model.predict(X[:, [ids.index(d) for d in model.selected]])
    print(f"r2={r_squared(pred, None, y):.6f} n={len(y)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="molgrid", description="Inverse design of chemical graphs with MILP and grid search.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("featurize", "train", "infer", "grid-search", "eval"):
        sp = sub.add_parser(name)
        sp.add_argument("config", help="pipeline configuration file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--time-limit", type=float)
        sp.add_argument("--solver", help="backend name (cbc, highs) or path to a CBC executable")
        if name == "eval":
            sp.add_argument("--graph", nargs="*", default=[], help="graph files to predict")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.seed, args.time_limit, args.solver)
        if args.command == "featurize":
            return cmd_featurize(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "infer":
            return cmd_infer(cfg)
        if args.command == "grid-search":
            return cmd_grid_search(cfg)
        return cmd_eval(cfg, args.graph)
    except (CliError, GraphError, DescriptorError, RegressionError, EncodeError, MilpError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
