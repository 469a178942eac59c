"""Feature function over the two-layered model.

The descriptor vector of a chemical graph holds, in registry order:

* scalar counts: non-hydrogen atoms ``n``, hydrogens ``n_H``, average mass
  per non-hydrogen atom ``mass_avg``, cycle rank, interior vertices and
  interior edges;
* per-element atom counts (``elem:C``);
* interior chemical-symbol counts (``cs:C2`` is a carbon of degree two in
  the hydrogen-suppressed graph);
* adjacency-configuration counts of interior edges (``ac:C.O.1``);
* edge-configuration counts of interior edges (``ec:C2.O1.1``);
* fringe-tree class counts keyed by canonical code (``fc:C[1C]``).
"""

from __future__ import annotations

import math
import csv
import io
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .chemgraph import (
    DEFAULT_ELEMENTS,
    ChemicalGraph,
    ElementSpec,
    ElementTable,
    TwoLayerDecomposition,
    decompose,
    rank,
)

__all__ = [
    "AdjacencyConfiguration",
    "ChemicalSymbol",
    "EdgeConfiguration",
    "FringeClass",
    "DescriptorRegistry",
    "DescriptorError",
    "FeatureVector",
    "Scaling",
    "SCALAR_IDS",
    "count_adjacency_configs",
    "count_edge_configs",
    "count_chemical_symbols",
    "canonical_fringe_code",
    "fringe_codes",
    "descriptor_counts",
    "featurize",
    "build_registry",
    "normalize",
    "write_feature_csv",
    "read_feature_csv",
]

SCALAR_IDS = ("n", "n_H", "mass_avg", "rank", "n_int", "n_int_edge")
BOND_CHAR = {1: "1", 2: "2", 3: "3"}


class DescriptorError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class AdjacencyConfiguration:
    a: ElementSpec
    b: ElementSpec
    m: int

    def reversed(self) -> "AdjacencyConfiguration":
        return AdjacencyConfiguration(self.b, self.a, self.m)

    def canonical(self) -> "AdjacencyConfiguration":
        return self if self.a <= self.b else self.reversed()

    @property
    def key(self) -> str:
        return f"{self.a.label}.{self.b.label}.{self.m}"


@dataclass(frozen=True, order=True)
class ChemicalSymbol:
    element: ElementSpec
    degree: int

    @property
    def key(self) -> str:
        return f"{self.element.label}{self.degree}"


@dataclass(frozen=True, order=True)
class EdgeConfiguration:
    mu: ChemicalSymbol
    mu_prime: ChemicalSymbol
    m: int

    def reversed(self) -> "EdgeConfiguration":
        return EdgeConfiguration(self.mu_prime, self.mu, self.m)

    def canonical(self) -> "EdgeConfiguration":
        return self if self.mu <= self.mu_prime else self.reversed()

    @property
    def adjacency(self) -> AdjacencyConfiguration:
        return AdjacencyConfiguration(self.mu.element, self.mu_prime.element, self.m)

    @property
    def key(self) -> str:
        return f"{self.mu.key}.{self.mu_prime.key}.{self.m}"


# ---------------------------------------------------------------------------
# configuration counts


def count_adjacency_configs(d: TwoLayerDecomposition) -> Counter:
    g = d.graph
    out: Counter = Counter()
    for u, v in d.interior_edges:
        nu = AdjacencyConfiguration(g.elements[u], g.elements[v], g.bond(u, v))
        out[nu.canonical()] += 1
    return out


def _symbol(d: TwoLayerDecomposition, v: int) -> ChemicalSymbol:
    return ChemicalSymbol(d.graph.elements[v], d.graph.degree(v))


def count_edge_configs(d: TwoLayerDecomposition) -> Counter:
    g = d.graph
    out: Counter = Counter()
    for u, v in d.interior_edges:
        gamma = EdgeConfiguration(_symbol(d, u), _symbol(d, v), g.bond(u, v))
        out[gamma.canonical()] += 1
    return out


def count_chemical_symbols(d: TwoLayerDecomposition) -> Counter:
    return Counter(_symbol(d, v) for v in d.interior)


# ---------------------------------------------------------------------------
# fringe trees


def canonical_fringe_code(
    g: ChemicalGraph, root: int, children: Mapping[int, Sequence[int]]
) -> str:
    """Canonical string of the rooted tree ``root`` with the given child lists.

    Children codes are prefixed by the bond multiplicity and sorted, so two
    trees share a code exactly when they are rooted-isomorphic with labels
    and multiplicities respected.
    """

    def code(v: int) -> str:
        kids = children.get(v, ())
        label = g.elements[v].label
        if not kids:
            return label
        parts = sorted(BOND_CHAR[g.bond(v, c)] + code(c) for c in kids)
        return f"{label}[{','.join(parts)}]"

    return code(root)


def fringe_codes(d: TwoLayerDecomposition) -> dict[int, str]:
    """Canonical fringe-tree code for every interior vertex that has exterior vertices."""
    children: dict[int, list[int]] = {}
    for v, p in d.parent.items():
        children.setdefault(p, []).append(v)
    return {r: canonical_fringe_code(d.graph, r, children) for r in sorted(d.interior) if d.fringe.get(r)}


@dataclass(frozen=True)
class _Node:
    element: ElementSpec
    mult: int  # bond to parent, 0 for the root
    children: tuple["_Node", ...]


def _parse_code(code: str, lookup) -> _Node:
    pos = 0

    def label_end(i: int) -> int:
        depth = 0
        while i < len(code):
            ch = code[i]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif depth == 0 and ch in "[],":
                break
            i += 1
        return i

    def node(mult: int) -> _Node:
        nonlocal pos
        end = label_end(pos)
        element = lookup(code[pos:end])
        pos = end
        kids = []
        if pos < len(code) and code[pos] == "[":
            pos += 1
            while True:
                m = int(code[pos])
                pos += 1
                kids.append(node(m))
                if code[pos] == ",":
                    pos += 1
                    continue
                if code[pos] == "]":
                    pos += 1
                    break
                raise DescriptorError(f"malformed fringe code {code!r}")
        return _Node(element, mult, tuple(kids))

    try:
        root = node(0)
    except (IndexError, ValueError, KeyError) as exc:
        raise DescriptorError(f"malformed fringe code {code!r}: {exc}") from None
    if pos != len(code):
        raise DescriptorError(f"trailing characters in fringe code {code!r}")
    return root


class FringeClass:
    """A fringe-tree class reconstructed from its canonical code.

    Exterior quantities exclude the root, whose bonds to interior vertices
    are not part of the class.
    """

    def __init__(self, code: str, lookup):
        self.code = code
        self._root = _parse_code(code, lookup)

    def __repr__(self) -> str:
        return f"FringeClass({self.code})"

    @property
    def root_element(self) -> ElementSpec:
        return self._root.element

    @cached_property
    def _walk(self) -> list[tuple[_Node, int, int]]:
        """(node, parent index, depth) in preorder; root has parent -1."""
        out: list[tuple[_Node, int, int]] = []

        def visit(nd: _Node, parent: int, depth: int) -> None:
            idx = len(out)
            out.append((nd, parent, depth))
            for c in nd.children:
                visit(c, idx, depth + 1)

        visit(self._root, -1, 0)
        return out

    @property
    def size(self) -> int:
        """Number of exterior vertices."""
        return len(self._walk) - 1

    @property
    def root_degree(self) -> int:
        return len(self._root.children)

    @property
    def root_bond_sum(self) -> int:
        return sum(c.mult for c in self._root.children)

    @cached_property
    def height(self) -> int:
        def h(nd: _Node) -> int:
            return 0 if not nd.children else 1 + max(h(c) for c in nd.children)

        return h(self._root)

    def deep_children(self, rho: int) -> int:
        """Root children of height ``rho - 1`` inside the tree."""

        def h(nd: _Node) -> int:
            return 0 if not nd.children else 1 + max(h(c) for c in nd.children)

        return sum(1 for c in self._root.children if h(c) == rho - 1)

    @cached_property
    def element_counts(self) -> Counter:
        return Counter(nd.element for nd, p, _ in self._walk if p >= 0)

    @cached_property
    def hydrogens(self) -> int:
        total = 0
        for nd, p, _ in self._walk:
            if p < 0:
                continue
            bsum = nd.mult + sum(c.mult for c in nd.children)
            total += nd.element.valence - bsum
        return total

    @property
    def valid(self) -> bool:
        """Every exterior vertex respects its valence."""
        for nd, p, _ in self._walk:
            if p < 0:
                continue
            if nd.mult + sum(c.mult for c in nd.children) > nd.element.valence:
                return False
        return self.root_bond_sum <= self._root.element.valence

    def exterior_edges(self) -> list[tuple[int, int, int, ElementSpec]]:
        """(child index, parent index, multiplicity, element) in preorder.

        Index 0 is the root.
        """
        return [(i, p, nd.mult, nd.element) for i, (nd, p, _) in enumerate(self._walk) if p >= 0]


# ---------------------------------------------------------------------------
# registry


def _split_label_list(text: str) -> list[str]:
    # split "C.S(6).1" on dots outside parentheses
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "." and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


class DescriptorRegistry:
    """Ordered, named descriptor space of dimension ``K``."""

    def __init__(
        self,
        rho: int,
        elements: Iterable[ElementSpec],
        hydrogen: ElementSpec,
        symbols: Iterable[ChemicalSymbol] = (),
        adjacency: Iterable[AdjacencyConfiguration] = (),
        edge: Iterable[EdgeConfiguration] = (),
        fringe: Iterable[str] = (),
    ):
        self.rho = int(rho)
        self.hydrogen = hydrogen
        self.elements: tuple[ElementSpec, ...] = tuple(sorted(set(elements)))
        self.symbols: tuple[ChemicalSymbol, ...] = tuple(sorted(set(symbols)))
        self.adjacency: tuple[AdjacencyConfiguration, ...] = tuple(
            sorted({a.canonical() for a in adjacency})
        )
        self.edge: tuple[EdgeConfiguration, ...] = tuple(sorted({e.canonical() for e in edge}))
        self._label_map = {el.label: el for el in self.elements}
        self._label_map[hydrogen.label] = hydrogen
        self.fringe: tuple[FringeClass, ...] = tuple(
            FringeClass(c, self.element) for c in sorted(set(fringe))
        )
        ids = list(SCALAR_IDS)
        ids += [f"elem:{el.label}" for el in self.elements]
        ids += [f"cs:{s.key}" for s in self.symbols]
        ids += [f"ac:{a.key}" for a in self.adjacency]
        ids += [f"ec:{e.key}" for e in self.edge]
        ids += [f"fc:{f.code}" for f in self.fringe]
        self.ids: tuple[str, ...] = tuple(ids)
        self.index = {d: j for j, d in enumerate(self.ids)}
        if len(self.index) != len(self.ids):
            raise DescriptorError("duplicate descriptor identifiers")

    def element(self, label: str) -> ElementSpec:
        try:
            return self._label_map[label]
        except KeyError:
            raise DescriptorError(f"element {label} not in registry") from None

    @property
    def K(self) -> int:
        return len(self.ids)

    @property
    def n_edge_configs(self) -> int:
        return len(self.edge)

    @property
    def n_fringe_classes(self) -> int:
        return len(self.fringe)

    def summary(self) -> str:
        return f"|Gamma|={self.n_edge_configs} |F|={self.n_fringe_classes} K={self.K}"

    def __eq__(self, other) -> bool:
        return isinstance(other, DescriptorRegistry) and self.to_text() == other.to_text()

    def with_extra(
        self,
        adjacency: Iterable[AdjacencyConfiguration] = (),
        edge: Iterable[EdgeConfiguration] = (),
        symbols: Iterable[ChemicalSymbol] = (),
        fringe: Iterable[str] = (),
    ) -> "DescriptorRegistry":
        return DescriptorRegistry(
            self.rho,
            self.elements,
            self.hydrogen,
            list(self.symbols) + list(symbols),
            list(self.adjacency) + list(adjacency),
            list(self.edge) + list(edge),
            [f.code for f in self.fringe] + list(fringe),
        )

    # serialization

    def to_text(self) -> str:
        lines = ["# molgrid descriptor registry", f"rho {self.rho}"]
        for el in (self.hydrogen, *self.elements):
            lines.append(f"element {el.label} {el.valence} {el.mass!r}")
        for d in self.ids:
            kind = d.split(":", 1)[0] if ":" in d else "scalar"
            lines.append(f"{kind} {d}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DescriptorRegistry":
        rho = None
        specs: dict[str, ElementSpec] = {}
        ids: list[str] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, _, rest = line.partition(" ")
            if head == "rho":
                rho = int(rest)
            elif head == "element":
                label, valence, mass = rest.split()
                symbol = label.split("(", 1)[0]
                specs[label] = ElementSpec(symbol, int(valence), float(mass), suffixed="(" in label)
            else:
                ids.append(rest.strip())
        if rho is None or "H" not in specs:
            raise DescriptorError("registry file lacks rho or the hydrogen element line")

        def el(label: str) -> ElementSpec:
            return specs[label]

        def sym(key: str) -> ChemicalSymbol:
            return ChemicalSymbol(el(key[:-1]), int(key[-1]))

        elements, symbols, adjacency, edge, fringe = [], [], [], [], []
        for d in ids:
            kind, _, body = d.partition(":")
            if not body:
                continue
            if kind == "elem":
                elements.append(el(body))
            elif kind == "cs":
                symbols.append(sym(body))
            elif kind == "ac":
                a, b, m = _split_label_list(body)
                adjacency.append(AdjacencyConfiguration(el(a), el(b), int(m)))
            elif kind == "ec":
                a, b, m = _split_label_list(body)
                edge.append(EdgeConfiguration(sym(a), sym(b), int(m)))
            elif kind == "fc":
                fringe.append(body)
            else:
                raise DescriptorError(f"unknown descriptor kind in {d!r}")
        reg = cls(rho, elements, specs["H"], symbols, adjacency, edge, fringe)
        if reg.ids != tuple(ids):
            raise DescriptorError("registry file is not in canonical order")
        return reg


# ---------------------------------------------------------------------------
# featurization


def _suppressed(g: ChemicalGraph) -> ChemicalGraph:
    if any(el.is_hydrogen for el in g.elements):
        from .chemgraph import hydrogen_suppress

        g, _ = hydrogen_suppress(g)
    return g


def descriptor_counts(
    g: ChemicalGraph, rho: int, hydrogen: ElementSpec | None = None
) -> dict[str, float]:
    """Descriptor id -> value for every descriptor that ``g`` realizes."""
    g = _suppressed(g)
    d = decompose(g, rho)
    if d.empty_interior:
        raise DescriptorError(f"{g!r} has an empty interior for rho={rho}")
    if hydrogen is None:
        hydrogen = DEFAULT_ELEMENTS.hydrogen
    n = len(g)
    n_h = sum(g.hydrogens)
    mass = math.fsum([el.mass for el in g.elements] + [n_h * hydrogen.mass])
    out: dict[str, float] = {
        "n": n,
        "n_H": n_h,
        "mass_avg": mass / n,
        "rank": rank(g),
        "n_int": len(d.interior),
        "n_int_edge": len(d.interior_edges),
    }
    for el, c in Counter(g.elements).items():
        out[f"elem:{el.label}"] = c
    for s, c in count_chemical_symbols(d).items():
        out[f"cs:{s.key}"] = c
    for a, c in count_adjacency_configs(d).items():
        out[f"ac:{a.key}"] = c
    for e, c in count_edge_configs(d).items():
        out[f"ec:{e.key}"] = c
    for code, c in Counter(fringe_codes(d).values()).items():
        out[f"fc:{code}"] = c
    return out


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    registry: DescriptorRegistry

    def __getitem__(self, descriptor_id: str) -> float:
        return float(self.values[self.registry.index[descriptor_id]])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.registry.ids, self.values.tolist()))


def featurize(g: ChemicalGraph, reg: DescriptorRegistry, rho: int | None = None) -> FeatureVector:
    if rho is not None and rho != reg.rho:
        raise DescriptorError(f"rho={rho} does not match the registry's rho={reg.rho}")
    counts = descriptor_counts(g, reg.rho, reg.hydrogen)
    unknown = sorted(k for k in counts if k not in reg.index)
    if unknown:
        raise DescriptorError("configurations absent from the registry: " + ", ".join(unknown))
    values = np.zeros(reg.K)
    for k, v in counts.items():
        values[reg.index[k]] = v
    return FeatureVector(values, reg)


def build_registry(
    dataset: Sequence[ChemicalGraph], rho: int, table: ElementTable = DEFAULT_ELEMENTS
) -> DescriptorRegistry:
    """Registry of exactly the configurations and classes occurring in ``dataset``."""
    if not dataset:
        raise DescriptorError("empty dataset")
    elements, symbols, adjacency, edge, fringe = set(), set(), set(), set(), set()
    for g in dataset:
        g = _suppressed(g)
        d = decompose(g, rho)
        if d.empty_interior:
            raise DescriptorError(f"{g!r} has an empty interior for rho={rho}")
        elements.update(g.elements)
        symbols.update(count_chemical_symbols(d))
        adjacency.update(count_adjacency_configs(d))
        edge.update(count_edge_configs(d))
        fringe.update(fringe_codes(d).values())
    return DescriptorRegistry(rho, elements, table.hydrogen, symbols, adjacency, edge, fringe)


# ---------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class Scaling:
    """Per-column min-max scaling; constant columns map to 0."""

    lo: np.ndarray
    hi: np.ndarray

    @property
    def span(self) -> np.ndarray:
        return self.hi - self.lo

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        span = self.span
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (X - self.lo) / safe, 0.0)

    def inverse(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return self.lo + Z * self.span

    def subset(self, columns: Sequence[int]) -> "Scaling":
        cols = list(columns)
        return Scaling(self.lo[cols], self.hi[cols])


def normalize(X) -> tuple[np.ndarray, Scaling]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    scaling = Scaling(X.min(axis=0), X.max(axis=0))
    return scaling.transform(X), scaling


def write_feature_csv(ids: Sequence[str], rows: Sequence[tuple[str, Sequence[float]]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["graph_id", *ids])
    for gid, values in rows:
        w.writerow([gid, *(_fmt(v) for v in values)])
    return buf.getvalue()


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def read_feature_csv(text: str) -> tuple[list[str], list[str], np.ndarray]:
    """Return (descriptor ids, graph ids, matrix)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "graph_id":
        raise DescriptorError("feature CSV must start with a 'graph_id' header column")
    ids = rows[0][1:]
    gids = [r[0] for r in rows[1:]]
    X = np.array([[float(x) for x in r[1:]] for r in rows[1:]], dtype=float).reshape(len(gids), len(ids))
    return ids, gids, X
