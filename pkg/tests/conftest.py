from __future__ import annotations

import pytest

from molgrid.chemgraph import DEFAULT_ELEMENTS, ChemicalGraph
from molgrid.milp import SolverConfig, find_cbc

HAVE_CBC = find_cbc() is not None


@pytest.fixture(params=["cbc", "highs"])
def any_solver(request) -> SolverConfig:
    if request.param == "cbc" and not HAVE_CBC:
        pytest.skip("no CBC executable")
    return SolverConfig(backend=request.param, time_limit=60)


@pytest.fixture
def solver() -> SolverConfig:
    return SolverConfig(backend="cbc" if HAVE_CBC else "highs", time_limit=60)


def el(label: str):
    return DEFAULT_ELEMENTS.lookup(label)


def chain(labels: str, mults=None) -> ChemicalGraph:
    """Path graph over single-letter labels, e.g. chain("CCO")."""
    n = len(labels)
    mults = mults or [1] * (n - 1)
    return ChemicalGraph([el(c) for c in labels], {(i, i + 1): m for i, m in enumerate(mults)})


def benzene() -> ChemicalGraph:
    return ChemicalGraph([el("C")] * 6, {(i, (i + 1) % 6): 1 + i % 2 for i in range(6)})
