from __future__ import annotations

import numpy as np

from molgrid.gridsearch import GridGeometry, GridRecord, GridSearchResult, ProjectionSet, neighbor
from molgrid.plotting import plot_cv_scores, plot_grid_status, plot_parity
from molgrid.regression import CVReport

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def fake_result(radius) -> GridSearchResult:
    dim = len(radius)
    states = ["feasible", "infeasible", "pruned", "timeout"]
    order = neighbor(radius)
    records = {z: GridRecord(z, states[k % 4]) for k, z in enumerate(order)}
    geo = GridGeometry((0.0,) * dim, (1.0,) * dim, tuple(radius))
    return GridSearchResult(geo, ProjectionSet(np.ones((dim, 3))), records, np.zeros(2), order)


def test_figures_are_written_and_reproducible(tmp_path):
    rep = CVReport(tuple(np.linspace(0.2, 0.9, 10)), folds=5, repeats=2)
    for name, draw in (
        ("cv.png", lambda p: plot_cv_scores(rep, p)),
        ("parity.png", lambda p: plot_parity([1, 2, 3], [1.1, 1.9, 3.2], p)),
        ("grid1.png", lambda p: plot_grid_status(fake_result((2,)), p)),
        ("grid2.png", lambda p: plot_grid_status(fake_result((1, 2)), p)),
    ):
        first = draw(tmp_path / name).read_bytes()
        assert first[:8] == PNG_MAGIC
        assert draw(tmp_path / name).read_bytes() == first


def test_grid_plot_skipped_above_two_dimensions(tmp_path):
    assert plot_grid_status(fake_result((1, 1, 1)), tmp_path / "g3.png") is None
    assert not (tmp_path / "g3.png").exists()
