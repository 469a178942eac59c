"""Chemical graphs, structural graph algorithms and the two-layered decomposition.

A :class:`ChemicalGraph` is a simple connected graph whose vertices carry an
element (with a fixed valence) and whose edges carry a bond multiplicity in
``[1, 3]``.  Graphs read from files are canonicalized to their
hydrogen-suppressed form, with the number of attached hydrogens stored per
vertex.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

__all__ = [
    "ElementSpec",
    "ElementTable",
    "ChemicalGraph",
    "TwoLayerDecomposition",
    "GraphError",
    "GraphSyntaxError",
    "DEFAULT_ELEMENTS",
    "parse_graph",
    "format_graph",
    "parse_element_table",
    "rank",
    "core_edges",
    "heights",
    "is_k_lean",
    "decompose",
    "hydrogen_suppress",
    "passes_data_filter",
    "canonical_code",
]


class GraphError(ValueError):
    """Raised for structurally invalid chemical graphs."""


class GraphSyntaxError(GraphError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True, order=True)
class ElementSpec:
    """A chemical element with a fixed valence.

    Ordering and equality use ``(symbol, valence)`` only.  ``suffixed`` marks
    elements that share their symbol with another valence in the same table;
    their label carries the valence, as in ``S(6)``.
    """

    symbol: str
    valence: int
    mass: float = field(default=0.0, compare=False)
    suffixed: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.symbol:
            raise ValueError("empty element symbol")
        if not 1 <= self.valence <= 6:
            raise ValueError(f"valence of {self.symbol} must lie in [1, 6], got {self.valence}")
        if self.mass < 0:
            raise ValueError(f"negative mass for {self.symbol}")

    @property
    def label(self) -> str:
        return f"{self.symbol}({self.valence})" if self.suffixed else self.symbol

    @property
    def is_hydrogen(self) -> bool:
        return self.symbol == "H"

    def __repr__(self) -> str:
        return f"ElementSpec({self.label})"


_LABEL_RE = re.compile(r"^([A-Z][a-z]?)(?:\((\d)\))?$")


class ElementTable:
    """Lookup of element labels such as ``C`` or ``S(6)``."""

    def __init__(self, entries: Iterable[tuple[str, int, float]]):
        entries = list(entries)
        by_symbol: dict[str, list[tuple[int, float]]] = {}
        for symbol, valence, mass in entries:
            by_symbol.setdefault(symbol, []).append((int(valence), float(mass)))
        self._specs: dict[tuple[str, int], ElementSpec] = {}
        self._default: dict[str, ElementSpec] = {}
        for symbol, items in by_symbol.items():
            valences = [v for v, _ in items]
            if len(set(valences)) != len(valences):
                raise ValueError(f"duplicate (symbol, valence) entry for {symbol}")
            multi = len(items) > 1
            for valence, mass in items:
                spec = ElementSpec(symbol, valence, mass, suffixed=multi)
                self._specs[(symbol, valence)] = spec
            if not multi:
                self._default[symbol] = self._specs[(symbol, items[0][0])]

    def __iter__(self):
        return iter(sorted(self._specs.values()))

    def __len__(self) -> int:
        return len(self._specs)

    def __contains__(self, label: str) -> bool:
        try:
            self.lookup(label)
        except KeyError:
            return False
        return True

    def lookup(self, label: str) -> ElementSpec:
        m = _LABEL_RE.match(label)
        if m is None:
            raise KeyError(f"malformed element label {label!r}")
        symbol, valence = m.group(1), m.group(2)
        if valence is None:
            if symbol in self._default:
                return self._default[symbol]
            if any(s == symbol for s, _ in self._specs):
                raise KeyError(f"element {symbol} has several valences; write e.g. {symbol}(2)")
            raise KeyError(f"unknown element {symbol}")
        key = (symbol, int(valence))
        if key not in self._specs:
            raise KeyError(f"unknown element {label}")
        return self._specs[key]

    @property
    def hydrogen(self) -> ElementSpec:
        return self.lookup("H")


DEFAULT_ELEMENTS = ElementTable(
    [
        ("H", 1, 1.008),
        ("B", 3, 10.81),
        ("C", 4, 12.011),
        ("N", 3, 14.007),
        ("O", 2, 15.999),
        ("F", 1, 18.998),
        ("Si", 4, 28.086),
        ("P", 5, 30.974),
        ("S", 2, 32.067),
        ("S", 4, 32.067),
        ("S", 6, 32.067),
        ("Cl", 1, 35.453),
        ("Br", 1, 79.904),
        ("I", 1, 126.904),
        ("Pb", 2, 207.2),
    ]
)


def parse_element_table(text: str) -> ElementTable:
    """Parse lines ``symbol valence mass``; ``#`` starts a comment."""
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphSyntaxError("expected 'symbol valence mass'", lineno)
        try:
            entries.append((parts[0], int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise GraphSyntaxError(str(exc), lineno) from None
    return ElementTable(entries)


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class ChemicalGraph:
    """Immutable chemical graph ``(H, alpha, beta)``.

    ``hydrogens[v]`` is the number of hydrogen atoms attached to ``v`` that are
    not present as vertices.  When omitted it is filled by saturation,
    ``val(alpha(v)) - beta_C(v)``, for every non-hydrogen vertex.
    """

    __slots__ = ("_elements", "_bonds", "_adj", "_hydrogens")

    def __init__(
        self,
        elements: Sequence[ElementSpec],
        bonds: Mapping[tuple[int, int], int],
        hydrogens: Sequence[int] | None = None,
        *,
        check: bool = True,
    ):
        n = len(elements)
        norm: dict[tuple[int, int], int] = {}
        for (u, v), m in bonds.items():
            if check:
                if u == v:
                    raise GraphError(f"self-loop on vertex {u}")
                if not (0 <= u < n and 0 <= v < n):
                    raise GraphError(f"edge ({u}, {v}) references an unknown vertex")
                if m not in (1, 2, 3):
                    raise GraphError(f"bond multiplicity {m} on ({u}, {v}) outside [1, 3]")
            key = _edge_key(u, v)
            if key in norm:
                raise GraphError(f"duplicate edge {key}")
            norm[key] = int(m)
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in norm:
            adj[u].append(v)
            adj[v].append(u)
        self._elements = tuple(elements)
        self._bonds = MappingProxyType(dict(sorted(norm.items())))
        self._adj = tuple(tuple(sorted(a)) for a in adj)
        if hydrogens is None:
            hydrogens = [
                0 if el.is_hydrogen else max(el.valence - self.bond_sum(v), 0)
                for v, el in enumerate(self._elements)
            ]
        if len(hydrogens) != n:
            raise GraphError("hydrogen count list has the wrong length")
        self._hydrogens = tuple(int(h) for h in hydrogens)
        if check:
            self._validate()

    def _validate(self) -> None:
        if not self._elements:
            raise GraphError("empty graph")
        for v, el in enumerate(self._elements):
            if self._hydrogens[v] < 0:
                raise GraphError(f"negative hydrogen count on vertex {v}")
            total = self.bond_sum(v) + self._hydrogens[v]
            if total > el.valence:
                raise GraphError(
                    f"valence violation at vertex {v} ({el.label}): "
                    f"bond sum {total} exceeds valence {el.valence}"
                )
        if not self.is_connected():
            raise GraphError("graph is disconnected")

    # basic accessors

    @property
    def elements(self) -> tuple[ElementSpec, ...]:
        return self._elements

    @property
    def bonds(self) -> Mapping[tuple[int, int], int]:
        return self._bonds

    @property
    def hydrogens(self) -> tuple[int, ...]:
        return self._hydrogens

    def __len__(self) -> int:
        return len(self._elements)

    @property
    def n_edges(self) -> int:
        return len(self._bonds)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def bond(self, u: int, v: int) -> int:
        return self._bonds[_edge_key(u, v)]

    def bond_sum(self, v: int) -> int:
        """beta_C(v): total bond multiplicity of edges at ``v``."""
        return sum(self._bonds[_edge_key(v, u)] for u in self._adj[v])

    def electron_degree(self, v: int) -> int:
        return self.bond_sum(v) - self._elements[v].valence

    def is_connected(self) -> bool:
        n = len(self._elements)
        if n == 0:
            return False
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w in self._adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == n

    def relabel(self, perm: Sequence[int]) -> "ChemicalGraph":
        """Return the graph with vertex ``v`` renamed to ``perm[v]``."""
        n = len(self)
        elements: list[ElementSpec | None] = [None] * n
        hydrogens = [0] * n
        for v in range(n):
            elements[perm[v]] = self._elements[v]
            hydrogens[perm[v]] = self._hydrogens[v]
        bonds = {_edge_key(perm[u], perm[v]): m for (u, v), m in self._bonds.items()}
        return ChemicalGraph(elements, bonds, hydrogens)  # type: ignore[arg-type]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ChemicalGraph):
            return NotImplemented
        return (
            self._elements == other._elements
            and dict(self._bonds) == dict(other._bonds)
            and self._hydrogens == other._hydrogens
        )

    def __hash__(self):
        return hash((self._elements, tuple(self._bonds.items()), self._hydrogens))

    def __repr__(self) -> str:
        atoms = "".join(el.label for el in self._elements)
        return f"ChemicalGraph({atoms}, {len(self._bonds)} bonds)"


# ---------------------------------------------------------------------------
# file format


def parse_graph(
    text: str, table: ElementTable = DEFAULT_ELEMENTS, *, suppress: bool = True
) -> ChemicalGraph:
    """Parse the line-oriented graph format.

    Line 1 holds ``n m``, followed by ``n`` vertex lines ``index label`` and
    ``m`` edge lines ``u v mult``.  Vertex indices are 1-based.  Text after
    ``#`` is ignored.  With ``suppress`` (the default) hydrogen vertices are
    folded into per-vertex hydrogen counts.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if line.strip():
            lines.append((lineno, line))
    if not lines:
        raise GraphSyntaxError("empty graph file", 1)

    def ints(lineno: int, line: str, count: int, what: str) -> list[int]:
        tokens = line.split()
        if len(tokens) != count:
            raise GraphSyntaxError(f"expected {what}", lineno)
        out = []
        for tok in tokens:
            try:
                out.append(int(tok))
            except ValueError:
                raise GraphSyntaxError(f"not an integer: {tok!r}", lineno, line.find(tok) + 1) from None
        return out

    lineno, line = lines[0]
    n, m = ints(lineno, line, 2, "'n m' header")
    if n < 1 or m < 0:
        raise GraphSyntaxError("header counts out of range", lineno)
    if len(lines) != 1 + n + m:
        raise GraphSyntaxError(
            f"expected {n} vertex and {m} edge lines, found {len(lines) - 1} lines", lines[-1][0]
        )
    elements: list[ElementSpec] = []
    for k in range(n):
        lineno, line = lines[1 + k]
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphSyntaxError("expected 'index element'", lineno)
        try:
            idx = int(tokens[0])
        except ValueError:
            raise GraphSyntaxError(f"not an integer: {tokens[0]!r}", lineno) from None
        if idx != k + 1:
            raise GraphSyntaxError(f"vertex index {idx} out of sequence (expected {k + 1})", lineno)
        try:
            elements.append(table.lookup(tokens[1]))
        except KeyError as exc:
            raise GraphSyntaxError(exc.args[0], lineno, line.find(tokens[1]) + 1) from None
    bonds: dict[tuple[int, int], int] = {}
    for k in range(m):
        lineno, line = lines[1 + n + k]
        u, v, mult = ints(lineno, line, 3, "'u v mult'")
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphSyntaxError(f"edge endpoint out of range: {u} {v}", lineno)
        if u == v:
            raise GraphSyntaxError("self-loop", lineno)
        key = _edge_key(u - 1, v - 1)
        if key in bonds:
            raise GraphError(f"line {lineno}: duplicate edge {u}-{v}")
        if mult not in (1, 2, 3):
            raise GraphSyntaxError(f"bond multiplicity {mult} outside [1, 3]", lineno)
        bonds[key] = mult
    has_h = any(el.is_hydrogen for el in elements)
    if has_h:
        # explicit-hydrogen input: nothing beyond the listed atoms is implied
        hydro = [0] * n
        graph = ChemicalGraph(elements, bonds, hydro)
    else:
        graph = ChemicalGraph(elements, bonds)
    if suppress and has_h:
        graph, _ = hydrogen_suppress(graph)
    return graph


def format_graph(g: ChemicalGraph, comment: str | None = None) -> str:
    """Serialize ``g`` (hydrogen counts are implied by saturation)."""
    out = []
    if comment:
        out.extend(f"# {line}" for line in comment.splitlines())
    out.append(f"{len(g)} {g.n_edges}")
    out.extend(f"{v + 1} {el.label}" for v, el in enumerate(g.elements))
    out.extend(f"{u + 1} {v + 1} {m}" for (u, v), m in g.bonds.items())
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# structure


def hydrogen_suppress(g: ChemicalGraph) -> tuple[ChemicalGraph, tuple[int, ...]]:
    """Remove hydrogen vertices; return the graph and per-vertex H counts."""
    keep = [v for v, el in enumerate(g.elements) if not el.is_hydrogen]
    if not keep:
        raise GraphError("graph consists of hydrogen atoms only")
    index = {v: k for k, v in enumerate(keep)}
    deghyd = []
    for v in keep:
        removed = sum(1 for u in g.neighbors(v) if g.elements[u].is_hydrogen)
        deghyd.append(removed + g.hydrogens[v])
    bonds = {
        (index[u], index[v]): m for (u, v), m in g.bonds.items() if u in index and v in index
    }
    out = ChemicalGraph([g.elements[v] for v in keep], bonds, deghyd)
    return out, tuple(deghyd)


def rank(g: ChemicalGraph) -> int:
    """Cycle rank |E| - |V| + 1 of a connected graph."""
    return g.n_edges - len(g) + 1


def _strip_leaves(
    n: int, adj: Sequence[Sequence[int]], root: int | None = None
) -> dict[int, int]:
    """Leaf-stripping rounds: vertex -> index of the round that removes it.

    A leaf is a non-root vertex of degree at most one in the current graph
    (degree zero covers the last vertex of a tree).
    """
    deg = [len(adj[v]) for v in range(n)]
    alive = set(range(n))
    removed: dict[int, int] = {}
    layer = [v for v in range(n) if v != root and deg[v] <= 1]
    i = 0
    while layer:
        for v in layer:
            removed[v] = i
            alive.discard(v)
        nxt = set()
        for v in layer:
            for u in adj[v]:
                if u in alive:
                    deg[u] -= 1
                    if u != root and deg[u] <= 1:
                        nxt.add(u)
        layer = sorted(nxt)
        i += 1
    return removed


def core_edges(g: ChemicalGraph) -> frozenset[tuple[int, int]]:
    """Edges on a cycle plus bridges joining two cyclic parts.

    For a connected graph these are exactly the edges that survive repeated
    removal of degree-one vertices.  An acyclic graph yields the empty set.
    """
    if rank(g) < 1:
        return frozenset()
    removed = _strip_leaves(len(g), [g.neighbors(v) for v in range(len(g))])
    return frozenset(e for e in g.bonds if e[0] not in removed and e[1] not in removed)


def heights(
    n_or_graph: ChemicalGraph | int,
    adj: Sequence[Sequence[int]] | None = None,
    root: int | None = None,
) -> dict[int, int]:
    """Height of every tree vertex and of non-tree vertices next to one.

    Accepts a :class:`ChemicalGraph` or a vertex count with adjacency lists.
    Non-tree vertices without tree neighbours (e.g. inner cycle vertices) are
    absent from the result.
    """
    if isinstance(n_or_graph, ChemicalGraph):
        g = n_or_graph
        n = len(g)
        adj = [g.neighbors(v) for v in range(n)]
    else:
        n = n_or_graph
        assert adj is not None
    h = _strip_leaves(n, adj, root)
    out = dict(h)
    for v in range(n):
        if v in h:
            continue
        tree_nbrs = [h[u] for u in adj[v] if u in h]
        if tree_nbrs:
            out[v] = max(tree_nbrs) + 1
    return out


def is_k_lean(n: int, adj: Sequence[Sequence[int]], root: int, k: int) -> bool:
    """True iff the rooted tree has at most one vertex of height exactly ``k``."""
    h = heights(n, adj, root)
    return sum(1 for v in h.values() if v == k) <= 1


@dataclass(frozen=True)
class TwoLayerDecomposition:
    """Interior/exterior split of a hydrogen-suppressed graph.

    ``fringe`` maps each interior vertex to the exterior vertices of the
    fringe tree rooted at it; ``parent`` gives the tree parent of each
    exterior vertex.
    """

    graph: ChemicalGraph
    rho: int
    interior: frozenset[int]
    exterior: frozenset[int]
    fringe: Mapping[int, tuple[int, ...]]
    parent: Mapping[int, int]
    heights: Mapping[int, int]

    @property
    def empty_interior(self) -> bool:
        return not self.interior

    @property
    def interior_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(e for e in self.graph.bonds if e[0] in self.interior and e[1] in self.interior)

    def fringe_children(self, v: int) -> tuple[int, ...]:
        return tuple(u for u in self.graph.neighbors(v) if self.parent.get(u) == v)

    def suppressed_degree(self, v: int) -> int:
        return self.graph.degree(v)


def decompose(g: ChemicalGraph, rho: int) -> TwoLayerDecomposition:
    """Split non-hydrogen vertices into interior and exterior.

    Exterior vertices are tree vertices of height below ``rho``; everything
    else is interior.  Each maximal exterior subtree hangs from exactly one
    interior vertex, which roots its fringe tree.
    """
    if rho < 1:
        raise ValueError("rho must be >= 1")
    if any(el.is_hydrogen for el in g.elements):
        g, _ = hydrogen_suppress(g)
    n = len(g)
    adj = [g.neighbors(v) for v in range(n)]
    tree_h = _strip_leaves(n, adj)
    all_h = heights(n, adj)
    exterior = frozenset(v for v, hv in tree_h.items() if hv < rho)
    interior = frozenset(range(n)) - exterior
    parent: dict[int, int] = {}
    fringe: dict[int, tuple[int, ...]] = {}
    if interior:
        for r in sorted(interior):
            members = []
            queue = deque([r])
            while queue:
                u = queue.popleft()
                for w in adj[u]:
                    if w in exterior and w not in parent:
                        parent[w] = u
                        members.append(w)
                        queue.append(w)
            fringe[r] = tuple(members)
    return TwoLayerDecomposition(
        graph=g,
        rho=rho,
        interior=interior,
        exterior=exterior,
        fringe=MappingProxyType(fringe),
        parent=MappingProxyType(parent),
        heights=MappingProxyType(all_h),
    )


def passes_data_filter(g: ChemicalGraph, min_carbon: int = 4, max_degree: int = 4) -> bool:
    """Dataset admission rule: connected, enough carbons, bounded degree."""
    if any(el.is_hydrogen for el in g.elements):
        g, _ = hydrogen_suppress(g)
    if not g.is_connected():
        return False
    if sum(1 for el in g.elements if el.symbol == "C") < min_carbon:
        return False
    return all(g.degree(v) <= max_degree for v in range(len(g)))


def canonical_code(g: ChemicalGraph) -> str:
    """Isomorphism-invariant string for acyclic chemical graphs.

    The smallest rooted code over all choices of root.  Vertices whose
    hydrogen count differs from saturation carry it in their label.
    """
    if rank(g) != 0:
        raise GraphError("canonical codes are only defined for acyclic graphs")

    def label(v: int) -> str:
        el = g.elements[v]
        sat = 0 if el.is_hydrogen else max(el.valence - g.bond_sum(v), 0)
        return el.label if g.hydrogens[v] == sat else f"{el.label}{{{g.hydrogens[v]}}}"

    def code(v: int, parent: int) -> str:
        parts = sorted(str(g.bond(v, u)) + code(u, v) for u in g.neighbors(v) if u != parent)
        return label(v) + (f"[{','.join(parts)}]" if parts else "")

    return min(code(r, -1) for r in range(len(g)))
