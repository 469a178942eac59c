"""Synthetic chemical-graph families for tests, demos and benchmarks."""

from __future__ import annotations

import itertools
from pathlib import Path
from typing import Sequence

import numpy as np

from .chemgraph import (
    DEFAULT_ELEMENTS,
    ChemicalGraph,
    ElementTable,
    GraphError,
    canonical_code,
    format_graph,
)

__all__ = ["small_trees", "interior_family", "random_tree_dataset", "write_dataset", "property_value"]


def small_trees(k: int) -> list[list[tuple[int, int]]]:
    """Edge lists of all unlabeled trees on ``k`` vertices (``k <= 4``), one per class."""
    if k == 1:
        return [[]]
    if k == 2:
        return [[(0, 1)]]
    if k == 3:
        return [[(0, 1), (1, 2)]]
    if k == 4:
        return [[(0, 1), (1, 2), (2, 3)], [(0, 1), (0, 2), (0, 3)]]
    raise ValueError("small_trees supports 1..4 vertices")


def _ethyl(elements, bonds, root: int, carbon) -> None:
    a = len(elements)
    elements.extend([carbon, carbon])
    bonds[(root, a)] = 1
    bonds[(a, a + 1)] = 1


def interior_family(
    labels: Sequence[str] = ("C", "N", "O"),
    max_interior: int = 4,
    multiplicities: Sequence[int] = (1, 2, 3),
    table: ElementTable = DEFAULT_ELEMENTS,
) -> list[ChemicalGraph]:
    """Every valid graph whose interior (for rho=2) is a given labeled tree.

    Each interior tree on at most ``max_interior`` vertices, with any
    element labels and bond multiplicities, is completed by hanging ethyl
    groups on vertices of interior degree below two so that the whole
    interior survives two rounds of leaf stripping.  Graphs violating a
    valence are dropped; isomorphic duplicates are removed.
    """
    els = [table.lookup(x) for x in labels]
    carbon = table.lookup("C")
    seen: set[str] = set()
    out: list[ChemicalGraph] = []
    for k in range(1, max_interior + 1):
        for edges in small_trees(k):
            for lab in itertools.product(els, repeat=k):
                for mults in itertools.product(multiplicities, repeat=len(edges)):
                    elements = list(lab)
                    bonds = {e: m for e, m in zip(edges, mults)}
                    deg = [sum(1 for e in edges if v in e) for v in range(k)]
                    for v in range(k):
                        for _ in range(max(0, 2 - deg[v])):
                            _ethyl(elements, bonds, v, carbon)
                    try:
                        g = ChemicalGraph(elements, bonds)
                    except GraphError:
                        continue
                    code = canonical_code(g)
                    if code not in seen:
                        seen.add(code)
                        out.append(g)
    return out


_SHALLOW = ("C", "O", "N")
_DEEP = (("C", "C", 1), ("C", "O", 1), ("C", "O", 2), ("C", "N", 1), ("O", "C", 1), ("N", "C", 1))


def random_tree_dataset(
    count: int,
    seed: int = 0,
    max_interior: int = 3,
    table: ElementTable = DEFAULT_ELEMENTS,
) -> list[ChemicalGraph]:
    """Random acyclic graphs with a non-empty rho=2 interior, distinct up to isomorphism."""
    rng = np.random.default_rng(seed)
    out: list[ChemicalGraph] = []
    seen: set[str] = set()
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 200 * count:
            raise RuntimeError("could not draw enough distinct graphs")
        k = int(rng.integers(1, max_interior + 1))
        elements = [table.lookup(str(rng.choice(["C", "C", "C", "N", "O"]))) for _ in range(k)]
        bonds: dict[tuple[int, int], int] = {}
        for v in range(1, k):
            bonds[(int(rng.integers(0, v)), v)] = int(rng.choice([1, 1, 1, 2]))
        deg = [sum(1 for e in bonds if v in e) for v in range(k)]
        for v in range(k):
            n_deep = max(0, 2 - deg[v]) + int(rng.integers(0, 2))
            for _ in range(n_deep):
                a, b, m = _DEEP[int(rng.integers(len(_DEEP)))]
                i = len(elements)
                elements += [table.lookup(a), table.lookup(b)]
                bonds[(v, i)] = 1
                bonds[(i, i + 1)] = m
            for _ in range(int(rng.integers(0, 2))):
                i = len(elements)
                elements.append(table.lookup(str(rng.choice(_SHALLOW))))
                bonds[(v, i)] = 1
        try:
            g = ChemicalGraph(elements, bonds)
        except GraphError:
            continue
        code = canonical_code(g)
        if code in seen:
            continue
        seen.add(code)
        out.append(g)
    return out


_ATOM_WEIGHT = {"C": 1.0, "N": 1.6, "O": 2.2}


def property_value(g: ChemicalGraph) -> float:
    """A smooth additive toy property: atom contributions plus multiple-bond bonus."""
    atoms = sum(_ATOM_WEIGHT.get(el.symbol, 1.0) for el in g.elements)
    multi = sum(m - 1 for m in g.bonds.values())
    return atoms + 0.7 * multi + 0.3 * sum(g.hydrogens) / len(g)


def write_dataset(graphs: Sequence[ChemicalGraph], directory: str | Path, values: Sequence[float] | None = None) -> Path:
    """Write graph files plus ``properties.csv``; returns the CSV path."""
    d = Path(directory)
    (d / "graphs").mkdir(parents=True, exist_ok=True)
    if values is None:
        values = [property_value(g) for g in graphs]
    lines = ["graph_id,value"]
    for k, (g, y) in enumerate(zip(graphs, values)):
        gid = f"g{k:03d}"
        (d / "graphs" / f"{gid}.graph").write_text(format_graph(g, gid))
        lines.append(f"{gid},{float(y)!r}")
    path = d / "properties.csv"
    path.write_text("\n".join(lines) + "\n")
    return path
