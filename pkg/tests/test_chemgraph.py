from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from molgrid.chemgraph import (
    DEFAULT_ELEMENTS,
    ChemicalGraph,
    ElementSpec,
    GraphError,
    GraphSyntaxError,
    canonical_code,
    core_edges,
    decompose,
    format_graph,
    heights,
    hydrogen_suppress,
    is_k_lean,
    parse_element_table,
    parse_graph,
    passes_data_filter,
    rank,
)

from conftest import benzene, chain, el


def carbon_graph(n: int, edges) -> ChemicalGraph:
    """All-carbon graph with single bonds, ignoring valence (S(6) gives room)."""
    s6 = DEFAULT_ELEMENTS.lookup("S(6)")
    return ChemicalGraph([s6] * n, {e: 1 for e in edges})


# ---------------------------------------------------------------------------
# parsing


def test_parse_c_c_o():
    g = parse_graph("3 2\n1 C\n2 C\n3 O\n1 2 1\n2 3 1\n")
    assert [e.symbol for e in g.elements] == ["C", "C", "O"]
    assert dict(g.bonds) == {(0, 1): 1, (1, 2): 1}
    assert g.hydrogens == (3, 2, 1)


def test_parse_valence_violation():
    with pytest.raises(GraphError, match="valence"):
        parse_graph("3 2\n1 O\n2 O\n3 O\n1 2 2\n2 3 2\n")


def test_parse_disconnected():
    with pytest.raises(GraphError, match="disconnected"):
        parse_graph("4 2\n1 C\n2 C\n3 C\n4 C\n1 2 1\n3 4 1\n")


def test_parse_duplicate_edge():
    with pytest.raises(GraphError, match="duplicate"):
        parse_graph("2 2\n1 C\n2 C\n1 2 1\n2 1 1\n")


def test_parse_syntax_error_has_position():
    with pytest.raises(GraphSyntaxError) as info:
        parse_graph("2 1\n1 C\n2 C\n1 x 1\n")
    assert info.value.line == 4
    assert info.value.column == 3


def test_parse_comments_and_suffixed_labels():
    g = parse_graph("# sulfone\n3 2  # header\n1 C\n2 S(6)\n3 O\n1 2 1\n2 3 2\n")
    assert g.elements[1].valence == 6
    assert g.elements[1].label == "S(6)"
    assert g.hydrogens == (3, 3, 0)


def test_unknown_element_is_syntax_error():
    with pytest.raises(GraphSyntaxError):
        parse_graph("1 0\n1 Xx\n")


def test_format_parse_roundtrip():
    g = ChemicalGraph([el("C"), el("N"), el("O"), el("C")], {(0, 1): 1, (1, 2): 1, (2, 3): 1})
    assert parse_graph(format_graph(g, "round trip")) == g


def test_element_table_file():
    table = parse_element_table("# symbol valence mass\nC 4 12.011\nH 1 1.008\nS 2 32.06\nS 6 32.06\n")
    assert table.lookup("C").valence == 4
    assert table.lookup("S(6)").valence == 6
    assert table.lookup("S(2)").valence == 2


def test_element_spec_identity_ignores_mass():
    assert ElementSpec("C", 4, 12.0) == ElementSpec("C", 4, 12.011)


# ---------------------------------------------------------------------------
# rank and core


@pytest.mark.parametrize(
    "n,edges,expected",
    [
        (4, [(0, 1), (1, 2), (2, 3)], 0),
        (3, [(0, 1), (1, 2), (0, 2)], 1),
        (4, list(itertools.combinations(range(4), 2)), 3),
    ],
)
def test_rank_examples(n, edges, expected):
    assert rank(carbon_graph(n, edges)) == expected


def _connected(n, edges) -> bool:
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


def _component(n, edges, start):
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen, stack = {start}, [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def core_oracle(n, edges) -> set:
    """Edges on a cycle, plus bridges whose two sides both contain a cycle."""
    out = set()
    for e in edges:
        rest = [f for f in edges if f != e]
        if _connected(n, rest):
            out.add(e)
            continue
        sides = [_component(n, rest, e[0]), _component(n, rest, e[1])]
        if all(sum(1 for f in rest if f[0] in s and f[1] in s) >= len(s) for s in sides):
            out.add(e)
    return out


def test_core_two_triangles_and_bridge():
    edges = [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]
    g = carbon_graph(6, edges)
    assert set(core_edges(g)) == core_oracle(6, edges)
    assert len(core_edges(g)) == 7


def test_core_triangle_with_pendant_path():
    edges = [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)]
    assert set(core_edges(carbon_graph(5, edges))) == {(0, 1), (1, 2), (0, 2)}


def test_core_of_tree_is_empty():
    assert core_edges(chain("CCCC")) == frozenset()


def random_connected(rng: random.Random, n: int, extra: int):
    edges = set()
    for v in range(1, n):
        u = rng.randrange(v)
        edges.add((u, v))
    pairs = [p for p in itertools.combinations(range(n), 2) if p not in edges]
    rng.shuffle(pairs)
    edges.update(pairs[:extra])
    return sorted(edges)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 6), st.integers(0, 10**6))
def test_core_matches_oracle_and_is_permutation_equivariant(n, extra, seed):
    rng = random.Random(seed)
    edges = random_connected(rng, n, extra)
    g = carbon_graph(n, edges)
    assert set(core_edges(g)) == (core_oracle(n, edges) if rank(g) >= 1 else set())
    perm = list(range(n))
    rng.shuffle(perm)
    h = g.relabel(perm)
    mapped = {tuple(sorted((perm[u], perm[v]))) for u, v in core_edges(g)}
    assert set(core_edges(h)) == mapped


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 8), st.integers(1, 6), st.integers(0, 10**6))
def test_rank_drops_by_removed_nonseparating_edges(n, extra, seed):
    rng = random.Random(seed)
    edges = random_connected(rng, n, extra)
    g = carbon_graph(n, edges)
    removed = []
    for e in rng.sample(edges, len(edges)):
        rest = [f for f in edges if f != e and f not in removed]
        if _connected(n, rest) and rng.random() < 0.6:
            removed.append(e)
    h = carbon_graph(n, [e for e in edges if e not in removed])
    assert rank(h) == rank(g) - len(removed)


# ---------------------------------------------------------------------------
# heights


def test_heights_path_of_five():
    h = heights(chain("CCCCC"))
    assert [h[v] for v in range(5)] == [0, 1, 2, 1, 0]


def test_heights_single_vertex():
    assert heights(ChemicalGraph([el("C")], {})) == {0: 0}


def test_heights_triangle_with_pendant():
    g = carbon_graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    assert heights(g) == {3: 0, 2: 1}


def test_heights_is_stripping_round():
    # recompute by literal stripping of the graph
    rng = random.Random(4)
    for _ in range(20):
        n = rng.randint(2, 9)
        edges = random_connected(rng, n, rng.randint(0, 3))
        alive = set(range(n))
        live_edges = set(edges)
        expected = {}
        i = 0
        while True:
            deg = {v: 0 for v in alive}
            for u, v in live_edges:
                deg[u] += 1
                deg[v] += 1
            leaves = {v for v in alive if deg[v] <= 1}
            if not leaves:
                break
            for v in leaves:
                expected[v] = i
            alive -= leaves
            live_edges = {e for e in live_edges if e[0] in alive and e[1] in alive}
            i += 1
        got = heights(carbon_graph(n, edges))
        assert {v: got[v] for v in expected} == expected


def test_k_lean_examples():
    star = [[1, 2, 3], [0], [0], [0]]
    assert is_k_lean(4, star, 0, 1)
    binary = [[1, 2], [0, 3, 4], [0, 5, 6], [1], [1], [2], [2]]
    assert not is_k_lean(7, binary, 0, 1)
    assert is_k_lean(7, binary, 0, 5)


# ---------------------------------------------------------------------------
# decomposition


def test_decompose_six_carbon_path():
    d = decompose(chain("CCCCCC"), 2)
    assert d.interior == {2, 3}
    assert d.interior_edges == ((2, 3),)
    assert {r: set(m) for r, m in d.fringe.items()} == {2: {0, 1}, 3: {4, 5}}


def test_decompose_benzene_all_interior():
    d = decompose(benzene(), 2)
    assert d.interior == set(range(6))
    assert not d.exterior


def test_decompose_single_vertex_has_empty_interior():
    d = decompose(ChemicalGraph([el("C")], {}), 2)
    assert d.empty_interior


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(0, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_decomposition_partitions_and_reassembles(n, extra, rho, seed):
    rng = random.Random(seed)
    edges = random_connected(rng, n, extra) if n > 1 else []
    g = carbon_graph(n, edges)
    d = decompose(g, rho)
    assert d.interior | d.exterior == set(range(n))
    assert not (d.interior & d.exterior)
    for v in d.exterior:
        assert d.heights[v] < rho
    if d.interior:
        members = [v for m in d.fringe.values() for v in m]
        assert sorted(members) == sorted(d.exterior)
        # fringe edges plus interior edges give back every edge
        rebuilt = set(d.interior_edges) | {tuple(sorted((v, p))) for v, p in d.parent.items()}
        assert rebuilt == set(g.bonds)


def test_interior_edges_exclude_interior_to_fringe_root_edges():
    d = decompose(chain("CCCCCC"), 2)
    assert all(u in d.interior and v in d.interior for u, v in d.interior_edges)


# ---------------------------------------------------------------------------
# hydrogens


def test_explicit_ethanol_suppression():
    text = "9 8\n1 C\n2 C\n3 O\n4 H\n5 H\n6 H\n7 H\n8 H\n9 H\n1 2 1\n2 3 1\n1 4 1\n1 5 1\n1 6 1\n2 7 1\n2 8 1\n3 9 1\n"
    full = parse_graph(text, suppress=False)
    assert len(full) == 9
    g, deghyd = hydrogen_suppress(full)
    assert len(g) == 3
    assert deghyd == (3, 2, 1)
    assert parse_graph(text) == g


def test_suppressing_suppressed_graph_is_identity():
    g = chain("CCO")
    h, deghyd = hydrogen_suppress(g)
    assert h == g
    # without explicit H vertices nothing is removed
    assert all(len(g.neighbors(v)) == len(h.neighbors(v)) for v in range(3))
    assert deghyd == g.hydrogens


def test_hydrogen_only_graph_is_error():
    with pytest.raises(GraphError):
        parse_graph("2 1\n1 H\n2 H\n1 2 1\n")


def test_electron_degree_definition():
    g = ChemicalGraph([el("C"), el("O")], {(0, 1): 2})
    for v in range(2):
        assert g.electron_degree(v) == g.bond_sum(v) - g.elements[v].valence


# ---------------------------------------------------------------------------
# misc


def test_data_filter():
    assert passes_data_filter(chain("CCCCO"))
    assert not passes_data_filter(chain("CCO"))


def test_canonical_code_is_isomorphism_invariant():
    g = ChemicalGraph([el("C"), el("N"), el("O"), el("C"), el("C")], {(0, 1): 1, (1, 2): 1, (1, 3): 1, (3, 4): 1})
    rng = random.Random(0)
    for _ in range(20):
        perm = list(range(5))
        rng.shuffle(perm)
        assert canonical_code(g.relabel(perm)) == canonical_code(g)
    other = ChemicalGraph([el("C"), el("N"), el("O"), el("C"), el("C")], {(0, 1): 1, (1, 2): 1, (1, 3): 1, (3, 4): 2})
    assert canonical_code(other) != canonical_code(g)
