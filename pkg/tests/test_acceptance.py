"""Acceptance suite: one PASS/FAIL line per criterion, printed even under capture.

Run with ``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import math
import random
import time
from collections import Counter

import numpy as np
import pytest

from molgrid.chemgraph import ChemicalGraph, canonical_code, decompose, parse_graph
from molgrid.descriptors import (
    AdjacencyConfiguration,
    ChemicalSymbol,
    EdgeConfiguration,
    build_registry,
    canonical_fringe_code,
    count_adjacency_configs,
    count_chemical_symbols,
    count_edge_configs,
    featurize,
)
from molgrid.encode import TopologySpec, encode_graph, encode_mlp
from molgrid.gridsearch import ProjectionSet, grid_lt, grid_search, neighbor
from molgrid.milp import INF, MilpModel, SolverConfig, lin_sum, solve
from molgrid.regression import MlpModel, TrainConfig, cross_validate, forward, loss_and_grad, r_squared, train_mlp
from molgrid.synth import interior_family, random_tree_dataset

from conftest import HAVE_CBC, benzene, chain, el
from oracles import brute_rooted_form, rooted_trees, solve_all_grids

DESK_SOLVER = SolverConfig(backend="cbc" if HAVE_CBC else "highs", time_limit=60)
HIGHS = SolverConfig(backend="highs", time_limit=60)


@pytest.fixture
def report(capsys):
    def emit(name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} [{name}] {detail}")
    return emit


def feasible(status: str) -> bool:
    return status in ("optimal", "feasible")


# ---------------------------------------------------------------------------


def test_network_encoding_exactness(report):
    """Random ReLU networks: MILP-implied output equals the forward pass."""
    rng = np.random.default_rng(20240)
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for _ in range(110):
        k = int(rng.integers(1, 7))
        hidden = [int(rng.integers(1, 9)) for _ in range(int(rng.integers(1, 4)))]
        arch = [k, *hidden, 1]
        net = MlpModel(tuple((rng.normal(size=(o, i)), rng.normal(size=o)) for i, o in zip(arch[:-1], arch[1:])))
        x = rng.random(k)
        m = MilpModel("net")
        names = [m.add_var(f"x{j}", "continuous", 0.0, 1.0).name for j in range(k)]
        m.add_var("y", "continuous", -INF, INF)
        encode_mlp(net, m, names, "y")
        for n, v in zip(names, x):
            m.fix(n, float(v))
        res = solve(m, DESK_SOLVER)
        err = abs(res["y"] - forward(net, x)) if res.is_feasible else math.inf
        worst = max(worst, err)
        count += 1
    seconds = time.perf_counter() - t0
    ok = worst <= 1e-6 and seconds < 300
    report("Network encoding exactness", ok,
           f"{count} networks via {DESK_SOLVER.backend}, max |y - forward(x)| = {worst:.2e} (tol 1e-6), {seconds:.1f} s (limit 300 s)")
    assert ok


# ---------------------------------------------------------------------------


def diamond_instance(rng: random.Random):
    """Feasible iff a weighted L1 distance from an integer center stays within a budget.

    Feasibility shrinks monotonically away from the center, which is the seed.
    """
    m = MilpModel("diamond")
    s = (rng.randint(2, 6), rng.randint(2, 6))
    c = (rng.randint(1, 3), rng.randint(1, 3))
    R = rng.randint(1, 6)
    expr = []
    for name, center, weight in (("a", s[0], c[0]), ("b", s[1], c[1])):
        v = m.add_var(name, "integer", -20, 20)
        up = m.add_var(f"{name}p", "integer", 0, 20)
        dn = m.add_var(f"{name}n", "integer", 0, 20)
        m.add_constraint(v - up + dn, "=", center)
        expr.append(weight * (up + dn))
    m.add_constraint(lin_sum(expr), "<=", R)
    return m, [float(s[0]), float(s[1])]


def random_instance(rng: random.Random):
    """A random two-variable integer program; no monotonicity guaranteed."""
    m = MilpModel("rand")
    a = m.add_var("a", "integer", 0, 8)
    b = m.add_var("b", "integer", 0, 8)
    seed = [float(rng.randint(2, 5)), float(rng.randint(2, 5))]
    for _ in range(rng.randint(1, 3)):
        ca, cb = rng.randint(-3, 3), rng.randint(-3, 3)
        rhs = ca * seed[0] + cb * seed[1] + rng.randint(0, 4)
        m.add_constraint(a * ca + b * cb, "<=", rhs)
    return m, seed


def test_grid_search_oracle_equivalence(report):
    rng = random.Random(77)
    problems, worst_time, n = [], 0.0, 0
    for kind in ("monotone",) * 12 + ("random",) * 12:
        base, seed = diamond_instance(rng) if kind == "monotone" else random_instance(rng)
        p_max = rng.choice((1, 2))
        radius = tuple(rng.randint(0, 3) for _ in range(p_max))
        W = np.zeros((p_max, 3))
        for p in range(p_max):
            W[p, p] = 1.0
        ps = ProjectionSet(W)
        t0 = time.perf_counter()
        res = grid_search(base, ["a", "b"], ps, (1.0,) * p_max, radius, DESK_SOLVER, seed_x=seed)
        worst_time = max(worst_time, time.perf_counter() - t0)
        oracle = solve_all_grids(base, ["a", "b"], ps.weights, seed[:p_max], (1.0,) * p_max, neighbor(radius), DESK_SOLVER)
        truth = {z for z, s in oracle.items() if feasible(s)}
        got = set(res.feasible)
        n += 1
        if not got <= truth:
            problems.append(f"{kind}#{n}: feasible grids outside the oracle")
        if kind == "monotone" and got != truth:
            problems.append(f"{kind}#{n}: monotone instance lost grids {sorted(truth - got)}")
        for z in res.by_state("pruned"):
            w = res.records[z].pruned_by
            if not (grid_lt(w, z) and res.records[w].state == "infeasible" and oracle[w] == "infeasible"):
                problems.append(f"{kind}#{n}: pruned {z} without a verified witness")
        if res.counts()["untested"]:
            problems.append(f"{kind}#{n}: untested grids remain")
    ok = not problems and worst_time < 60
    report("Grid-search oracle equivalence", ok,
           f"{n} instances (12 monotone, 12 random), slowest {worst_time:.2f} s (limit 60 s)"
           + ("" if not problems else "; " + "; ".join(problems[:3])))
    assert ok


# ---------------------------------------------------------------------------


def test_graph_encoding_round_trip(report):
    family = interior_family(labels=("C", "O", "N"), max_interior=4)
    reg = build_registry(family, 2)
    t0 = time.perf_counter()
    failures = []
    for g in family:
        x = featurize(g, reg).values
        enc = encode_graph(TopologySpec.pinned(dict(zip(reg.ids, x)), reg, 4), reg)
        res = solve(enc.model, HIGHS)
        if not res.is_feasible:
            failures.append(f"{g}: {res.status}")
            continue
        got = featurize(enc.decode(res.assignment), reg).values
        for j, d in enumerate(reg.ids):
            if d.split(":")[0] in ("ac", "ec", "cs") and got[j] != x[j]:
                failures.append(f"{g}: {d} {got[j]} != {x[j]}")
                break
    O, N = el("O"), el("N")
    base = build_registry([chain("CCOOCC"), chain("CCNNCC")], 2)
    fixtures = []
    for e, m in ((O, 3), (O, 2), (N, 3)):
        reg_v = base.with_extra(
            adjacency=[AdjacencyConfiguration(e, e, m)],
            edge=[EdgeConfiguration(ChemicalSymbol(e, 2), ChemicalSymbol(e, 2), m)],
        )
        key = f"{e.label}.{e.label}.{m}"
        status = solve(encode_graph(TopologySpec(3, ac_bounds={key: (1, 2)}), reg_v).model, HIGHS).status
        fixtures.append((key, status))
        if status != "infeasible":
            failures.append(f"valence fixture ac({key}) >= 1 gave {status}")
    ok = not failures
    report("Graph encoding round-trip", ok,
           f"{len(family)} family graphs pinned and decoded, valence fixtures "
           + ", ".join(f"{k}:{s}" for k, s in fixtures) + f", {time.perf_counter() - t0:.1f} s"
           + ("" if ok else "; " + "; ".join(failures[:3])))
    assert ok


# ---------------------------------------------------------------------------


def descriptor_fixtures() -> list[ChemicalGraph]:
    out = [chain("CCCCCC"), benzene(), chain("CCOCCNCC", [1, 1, 1, 1, 1, 2, 1])]
    out += interior_family(labels=("C", "O", "N"), max_interior=4)
    out += random_tree_dataset(40, seed=21)
    return out


def test_descriptor_identities(report):
    problems = []
    graphs = descriptor_fixtures()
    rng = random.Random(1)
    for g in graphs:
        d = decompose(g, 2)
        ac, ec, cs = count_adjacency_configs(d), count_edge_configs(d), count_chemical_symbols(d)
        if not (sum(ac.values()) == sum(ec.values()) == len(d.interior_edges)):
            problems.append(f"{g}: edge sums")
        proj: Counter = Counter()
        for gamma, c in ec.items():
            proj[gamma.adjacency.canonical()] += c
        if proj != ac or sum(cs.values()) != len(d.interior):
            problems.append(f"{g}: projection")
        reg = build_registry([g], 2)
        ref = featurize(g, reg).values
        for _ in range(50):
            perm = list(range(len(g)))
            rng.shuffle(perm)
            if not np.array_equal(featurize(g.relabel(perm), reg).values, ref):
                problems.append(f"{g}: permutation {perm}")
                break
    t0 = time.perf_counter()
    classes: dict[tuple, set[str]] = {}
    trees = 0
    for g, children in rooted_trees(5, labels=("C", "O"), mults=(1, 2)):
        trees += 1
        classes.setdefault(brute_rooted_form(g), set()).add(canonical_fringe_code(g, 0, children))
    codes = [next(iter(c)) for c in classes.values()]
    if any(len(c) != 1 for c in classes.values()) or len(set(codes)) != len(codes):
        problems.append("fringe codes disagree with the isomorphism oracle")
    ok = not problems
    report("Descriptor identities", ok,
           f"{len(graphs)} fixtures x 50 permutations; fringe codes on {trees} rooted trees "
           f"({len(classes)} classes) agree with brute force in {time.perf_counter() - t0:.1f} s"
           + ("" if ok else "; " + "; ".join(problems[:3])))
    assert ok


# ---------------------------------------------------------------------------


def test_regression(report):
    rng = np.random.default_rng(5)
    worst_rel = 0.0
    for trial in range(5):
        arch = (3, 5, 3, 1)
        net = MlpModel(tuple((rng.normal(size=(o, i)), rng.normal(size=o)) for i, o in zip(arch[:-1], arch[1:])))
        X, y = rng.normal(size=(8, 3)), rng.normal(size=8)
        _, grads = loss_and_grad(net, X, y)
        for k in range(len(net.layers)):
            for a in range(2):
                for idx in np.ndindex(net.layers[k][a].shape):
                    def at(delta):
                        layers = [(W.copy(), b.copy()) for W, b in net.layers]
                        layers[k][a][idx] += delta
                        return loss_and_grad(MlpModel(tuple(layers)), X, y)[0]
                    num = (at(1e-5) - at(-1e-5)) / 2e-5
                    ana = grads[k][a][idx]
                    if abs(num) > 1e-8 or abs(ana) > 1e-8:
                        worst_rel = max(worst_rel, abs(ana - num) / max(abs(num), abs(ana)))
    Xl = rng.random((60, 3))
    yl = Xl @ np.array([0.2, 0.5, -0.3]) + 0.4
    cfg = TrainConfig(r_stop=0.99, it_stop=1000, learning_rate=0.1, batch_size=8, seed=1)
    fitted = train_mlp(Xl, yl, (3, 4, 1), cfg)
    train_r2 = r_squared(fitted, Xl, yl)
    noisy_y = rng.normal(size=60)
    capped = [train_mlp(Xl, noisy_y, (3, 4, 1), TrainConfig(r_stop=1.0, it_stop=it)).epochs for it in (1, 7, 10)]
    expected_caps = [math.ceil(1.5 * it) for it in (1, 7, 10)]
    cv = cross_validate(Xl, yl, (3, 4, 1), TrainConfig(r_stop=0.9, it_stop=50, learning_rate=0.1, batch_size=8),
                        folds=5, repeats=10, seed=2)
    s = sorted(cv.scores)
    median_ok = len(cv.scores) == 50 and cv.median == pytest.approx((s[24] + s[25]) / 2, abs=0)
    ok = (worst_rel <= 1e-4 and train_r2 > 0.99 and fitted.epochs <= math.ceil(1.5 * cfg.it_stop)
          and capped == expected_caps and median_ok)
    report("Regression", ok,
           f"gradient rel. error {worst_rel:.1e} (tol 1e-4); linear data train R^2 {train_r2:.4f} after "
           f"{fitted.epochs} epochs (cap {math.ceil(1.5 * cfg.it_stop)}); epoch caps {capped} vs {expected_caps}; "
           f"CV scores {len(cv.scores)}, median {cv.median:.4f}")
    assert ok


# ---------------------------------------------------------------------------


def test_end_to_end_pipeline(report, tmp_path, capsys):
    from molgrid.cli import EXIT_OK, main
    from test_cli import make_workspace, reachable_target, set_target

    t0 = time.perf_counter()
    cfg = make_workspace(tmp_path, count=40, radius=2)
    text = cfg.read_text().replace("backend = highs", f"backend = {DESK_SOLVER.backend}")
    cfg.write_text(text)
    codes = [main(["featurize", str(cfg)]), main(["train", str(cfg)])]
    model_text = (tmp_path / "run" / "model.txt").read_text()
    arch = model_text.split("architecture = ")[1].split("\n")[0].split()
    set_target(cfg, *reachable_target(tmp_path / "run", tmp_path / "graphs" / "g000.graph"))
    codes += [main(["infer", str(cfg)]), main(["grid-search", str(cfg)])]
    seed_code = canonical_code(parse_graph((tmp_path / "run" / "seed.graph").read_text()))
    witness_codes = {
        canonical_code(parse_graph(p.read_text())) for p in (tmp_path / "run" / "witnesses").glob("*.graph")
    }
    extra = witness_codes - {seed_code}
    seconds = time.perf_counter() - t0
    ok = codes == [EXIT_OK] * 4 and len(arch) == 3 and arch[1:] == ["4", "1"] and len(extra) >= 1 and seconds < 600
    report("End-to-end desk pipeline", ok,
           f"exit codes {codes}, architecture ({', '.join(arch)}), {len(witness_codes)} distinct witness graphs, "
           f"{len(extra)} differ from the seed, {seconds:.1f} s (limit 600 s)")
    assert ok
