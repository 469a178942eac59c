"""Independent brute-force oracles shared by unit and acceptance tests."""

from __future__ import annotations

import itertools
from typing import Iterator

import numpy as np

from molgrid.chemgraph import DEFAULT_ELEMENTS, ChemicalGraph
from molgrid.milp import LinExpr, MilpModel, SolverConfig, solve


def prufer_trees(n: int) -> Iterator[list[tuple[int, int]]]:
    """Every labeled tree on vertices 0..n-1, via Pruefer sequences."""
    if n == 1:
        yield []
        return
    if n == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for v in seq:
            degree[v] += 1
        edges = []
        for v in seq:
            leaf = min(u for u in range(n) if degree[u] == 1)
            edges.append((min(leaf, v), max(leaf, v)))
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = [x for x in range(n) if degree[x] == 1]
        edges.append((u, w))
        yield edges


def rooted_trees(max_n: int, labels=("C", "O"), mults=(1, 2)):
    """(graph, children-map) for every vertex-labeled rooted tree, root 0."""
    els = [DEFAULT_ELEMENTS.lookup(x) for x in labels]
    for n in range(1, max_n + 1):
        for edges in prufer_trees(n):
            children = _children(n, edges, 0)
            for lab in itertools.product(els, repeat=n):
                for ms in itertools.product(mults, repeat=len(edges)):
                    g = ChemicalGraph(list(lab), dict(zip(edges, ms)), check=False)
                    yield g, children


def _children(n, edges, root):
    adj = {v: [] for v in range(n)}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    children, seen, stack = {}, {root}, [root]
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                children.setdefault(u, []).append(w)
                stack.append(w)
    return children


def brute_rooted_form(g: ChemicalGraph) -> tuple:
    """Minimum relabeled encoding over all vertex permutations fixing root 0."""
    n = len(g)
    best = None
    for rest in itertools.permutations(range(1, n)):
        perm = (0, *rest)
        lab = [None] * n
        for v in range(n):
            lab[perm[v]] = g.elements[v].label
        edges = tuple(sorted((min(perm[u], perm[v]), max(perm[u], perm[v]), m) for (u, v), m in g.bonds.items()))
        key = (tuple(lab), edges)
        if best is None or key < best:
            best = key
    return best


def mlp_forward_loops(layers, x) -> float:
    """Forward pass with explicit loops, no matrix products."""
    h = [float(v) for v in x]
    for k, (W, b) in enumerate(layers):
        out = []
        for i in range(W.shape[0]):
            s = float(b[i])
            for j in range(W.shape[1]):
                s += float(W[i, j]) * h[j]
            out.append(s if k == len(layers) - 1 else max(s, 0.0))
        h = out
    return h[0]


def solve_all_grids(base: MilpModel, x_names, weights: np.ndarray, center, widths, grids, solver: SolverConfig):
    """Feasibility of every grid box, each solved independently."""
    out = {}
    for z in grids:
        m = base.copy()
        for p in range(weights.shape[0]):
            expr = LinExpr({n: float(w) for n, w in zip(x_names, weights[p, :-1]) if w != 0}, float(weights[p, -1]))
            lo = center[p] + (z[p] - 0.5) * widths[p]
            hi = center[p] + (z[p] + 0.5) * widths[p]
            m.add_constraint(expr, ">=", lo, f"oracle_lo_{p}")
            m.add_constraint(expr, "<=", hi, f"oracle_hi_{p}")
        out[tuple(z)] = solve(m, solver).status
    return out
