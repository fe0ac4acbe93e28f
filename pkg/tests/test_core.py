"""Container validation and the stacked (M*N, T) layout."""

import numpy as np
import pytest

from oracles import stack_by_loops, unstack_by_loops

from trifactor.core import (
    CountryBlock,
    Decomposition,
    GlobalBlock,
    PanelTensor,
    Side,
    default_labels,
    slice_exporter,
    slice_importer,
    stack,
    unstack,
    unstack_values,
)
from trifactor.errors import PanelDataError


def _panel(m, n, t, seed=0):
    rng = np.random.default_rng(seed)
    return PanelTensor(rng.standard_normal((m, n, t)), *default_labels(m, n, t))


def test_panel_basic_properties():
    p = _panel(3, 4, 5)
    assert p.shape == (3, 4, 5)
    assert p.n_exporters == 3 and p.n_importers == 4 and p.n_periods == 5
    assert len(p.exporter_labels) == 3
    assert p.exporter_labels[0] == "E001"
    assert p.importer_labels[-1] == "I004"
    assert p.period_labels[0] == "t0001"


def test_panel_rejects_bad_shapes_and_values():
    with pytest.raises(PanelDataError):
        PanelTensor(np.zeros((3, 4)), ("a",), ("b",), ("c",))
    values = np.zeros((2, 2, 2))
    values[1, 0, 1] = np.nan
    with pytest.raises(PanelDataError, match="non-finite"):
        PanelTensor(values, ("a", "b"), ("c", "d"), ("s", "u"))
    with pytest.raises(PanelDataError, match="exporter labels"):
        PanelTensor(np.zeros((2, 2, 2)), ("a",), ("c", "d"), ("s", "u"))
    with pytest.raises(PanelDataError, match="period labels"):
        PanelTensor(np.zeros((2, 2, 2)), ("a", "b"), ("c", "d"), ("s",))


def test_panel_values_are_copied_to_float():
    ints = np.arange(8, dtype=int).reshape(2, 2, 2)
    p = PanelTensor(ints, ("a", "b"), ("c", "d"), ("s", "u"))
    assert p.values.dtype == float
    assert p.values[1, 1, 1] == 7.0


def test_stack_matches_loop_oracle():
    p = _panel(3, 4, 5, seed=7)
    stacked = stack(p)
    assert stacked.matrix.shape == (12, 5)
    assert np.array_equal(stacked.matrix, stack_by_loops(p.values))


def test_stack_row_convention():
    # row j*M + i carries the series of pair (i, j)
    p = _panel(4, 3, 6, seed=1)
    stacked = stack(p)
    for i in range(4):
        for j in range(3):
            row = stacked.row_index(i, j)
            assert row == j * 4 + i
            assert stacked.pair(row) == (i, j)
            assert np.array_equal(stacked.matrix[row], p.values[i, j])


def test_unstack_round_trip():
    p = _panel(5, 2, 9, seed=3)
    stacked = stack(p)
    back = unstack(stacked, p.exporter_labels, p.importer_labels, p.period_labels)
    assert np.array_equal(back.values, p.values)
    assert back.exporter_labels == p.exporter_labels

    values = unstack_values(stacked.matrix, 5, 2)
    assert np.array_equal(values, unstack_by_loops(stacked.matrix, 5, 2))


def test_unstack_values_rejects_wrong_row_count():
    with pytest.raises(PanelDataError, match="rows"):
        unstack_values(np.zeros((7, 4)), 2, 3)


def test_slices_match_loops():
    p = _panel(4, 5, 3, seed=11)
    for j in range(5):
        assert np.array_equal(slice_importer(p, j), p.values[:, j, :])
    for i in range(4):
        assert np.array_equal(slice_exporter(p, i), p.values[i, :, :])
    with pytest.raises(PanelDataError, match="importer index"):
        slice_importer(p, 5)
    with pytest.raises(PanelDataError, match="exporter index"):
        slice_exporter(p, -1)


def test_slice_returns_independent_copy():
    p = _panel(3, 3, 3)
    s = slice_importer(p, 0)
    s[0, 0] = 123.0
    assert p.values[0, 0, 0] != 123.0


def test_global_block_validation():
    gb = GlobalBlock(
        factors=np.zeros((6, 2)),
        loadings=np.zeros((12, 2)),
        eigenvalues=np.array([2.0, 1.0, 0.5]),
        rank=2,
        omega=0.3,
    )
    assert gb.n_periods == 6
    with pytest.raises(PanelDataError, match="factors"):
        GlobalBlock(np.zeros((6, 1)), np.zeros((12, 2)), np.zeros(3), 2, 0.3)
    with pytest.raises(PanelDataError, match="loadings"):
        GlobalBlock(np.zeros((6, 2)), np.zeros((12, 3)), np.zeros(3), 2, 0.3)
    with pytest.raises(PanelDataError, match="omega"):
        GlobalBlock(np.zeros((6, 2)), np.zeros((12, 2)), np.zeros(3), 2, 0.0)
    with pytest.raises(PanelDataError, match="rank"):
        GlobalBlock(np.zeros((6, 2)), np.zeros((12, 2)), np.zeros(3), -1, 0.3)


def test_country_block_validation():
    cb = CountryBlock(
        side=Side.IMPORTER,
        index=1,
        factors=np.zeros((6, 1)),
        loadings=np.zeros((4, 1)),
        eigenvalues=np.array([1.0]),
        rank=1,
    )
    assert cb.side is Side.IMPORTER
    with pytest.raises(PanelDataError, match="factors"):
        CountryBlock(Side.EXPORTER, 0, np.zeros((6, 2)), np.zeros((4, 1)), np.zeros(1), 1)


def _tiny_decomposition():
    m, n, t = 2, 2, 4
    gb = GlobalBlock(
        factors=np.arange(t * 1.0).reshape(t, 1),
        loadings=np.ones((m * n, 1)),
        eigenvalues=np.array([1.0]),
        rank=1,
        omega=0.5,
    )
    exporters = tuple(
        CountryBlock(Side.EXPORTER, i, np.ones((t, 1)), np.full((n, 1), i + 1.0),
                     np.array([1.0]), 1)
        for i in range(m)
    )
    importers = tuple(
        CountryBlock(Side.IMPORTER, j, np.ones((t, 1)), np.full((m, 1), -1.0),
                     np.array([1.0]), 1)
        for j in range(n)
    )
    residuals = np.random.default_rng(5).standard_normal((m, n, t))
    return Decomposition(gb, exporters, importers, residuals)


def test_decomposition_fitted_components():
    d = _tiny_decomposition()
    fit_g = d.fitted_global()
    # loadings are all ones, so every pair carries the factor path itself
    assert np.allclose(fit_g[1, 0], np.arange(4.0))
    fit_e = d.fitted_exporter()
    assert np.allclose(fit_e[0], 1.0)
    assert np.allclose(fit_e[1], 2.0)
    fit_i = d.fitted_importer()
    assert np.allclose(fit_i, -1.0)
    recon = d.reconstruct()
    assert np.allclose(recon, fit_g + fit_e + fit_i + d.residuals)


def test_decomposition_shape_check():
    d = _tiny_decomposition()
    with pytest.raises(PanelDataError, match="residuals"):
        Decomposition(d.global_block, d.exporters, d.importers, np.zeros((2, 2, 3)))


def test_default_labels_are_sortable_and_unique():
    es, is_, ts = default_labels(12, 3, 105)
    assert len(set(es)) == 12 and len(set(is_)) == 3 and len(set(ts)) == 105
    assert list(es) == sorted(es)
    assert list(ts) == sorted(ts)
