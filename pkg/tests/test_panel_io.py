"""Tests for long-format CSV ingestion, atomic writes and loading rescales."""

import numpy as np
import pytest

from trifactor.core import PanelTensor, default_labels
from trifactor.errors import PanelDataError
from trifactor.panel_io import (
    HEADER,
    atomic_write_text,
    fmt_real,
    load_long_csv,
    rescale_country_loadings,
    rescale_global_loadings,
    write_panel_csv,
)


def _write(tmp_path, text, name="panel.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def _small_panel(seed=0, m=3, n=4, t=5):
    rng = np.random.default_rng(seed)
    return PanelTensor(rng.standard_normal((m, n, t)), *default_labels(m, n, t))


def test_write_then_load_round_trips_bitwise(tmp_path):
    panel = _small_panel(seed=12)
    path = tmp_path / "out" / "panel.csv"  # parent is created on demand
    write_panel_csv(panel, path)
    loaded = load_long_csv(path)
    assert np.array_equal(loaded.values, panel.values)
    assert loaded.exporter_labels == panel.exporter_labels
    assert loaded.importer_labels == panel.importer_labels
    assert loaded.period_labels == panel.period_labels


def test_label_ordering_is_lexicographic_and_first_appearance(tmp_path):
    # Exporters/importers are sorted; periods keep file order.
    rows = ["exporter,importer,period,value"]
    for per in ("q4", "q1"):
        for exp in ("ZZ", "AA"):
            for imp in ("m2", "m1"):
                rows.append(f"{exp},{imp},{per},1.5")
    panel = load_long_csv(_write(tmp_path, "\n".join(rows) + "\n"))
    assert panel.exporter_labels == ("AA", "ZZ")
    assert panel.importer_labels == ("m1", "m2")
    assert panel.period_labels == ("q4", "q1")
    assert panel.values.shape == (2, 2, 2)


def test_values_land_in_the_right_cells(tmp_path):
    text = (
        "exporter,importer,period,value\n"
        "B,x,t1,1\n"
        "B,x,t2,2\n"
        "A,x,t1,3\n"
        "A,x,t2,4\n"
    )
    panel = load_long_csv(_write(tmp_path, text))
    assert panel.values[0, 0, 0] == 3.0  # A sorts first
    assert panel.values[1, 0, 1] == 2.0


def test_blank_lines_and_padding_are_tolerated(tmp_path):
    text = (
        "exporter , importer , period , value\n"
        " A , x , t1 , 1.0 \n"
        "\n"
        " B , x , t1 , 2.0 \n"
    )
    panel = load_long_csv(_write(tmp_path, text))
    assert panel.values[:, 0, 0].tolist() == [1.0, 2.0]


def test_load_rejects_malformed_files(tmp_path):
    with pytest.raises(PanelDataError, match="file is empty"):
        load_long_csv(_write(tmp_path, ""))
    with pytest.raises(PanelDataError, match="header must be"):
        load_long_csv(_write(tmp_path, "a,b,c,d\nA,x,t1,1\n"))
    with pytest.raises(PanelDataError, match="no data rows"):
        load_long_csv(_write(tmp_path, "exporter,importer,period,value\n"))
    with pytest.raises(PanelDataError, match="row 3 has 3 fields, expected 4"):
        load_long_csv(
            _write(tmp_path, "exporter,importer,period,value\nA,x,t1,1\nA,x,t2\n")
        )
    with pytest.raises(PanelDataError, match="row 2 has an empty label"):
        load_long_csv(_write(tmp_path, "exporter,importer,period,value\n,x,t1,1\n"))
    with pytest.raises(PanelDataError, match="row 2 has non-numeric value 'one'"):
        load_long_csv(_write(tmp_path, "exporter,importer,period,value\nA,x,t1,one\n"))
    with pytest.raises(PanelDataError, match="row 2 has non-finite value"):
        load_long_csv(_write(tmp_path, "exporter,importer,period,value\nA,x,t1,inf\n"))
    with pytest.raises(PanelDataError, match="row 3 duplicates cell"):
        load_long_csv(
            _write(tmp_path, "exporter,importer,period,value\nA,x,t1,1\nA,x,t1,2\n")
        )


def test_self_pairs_need_explicit_opt_in(tmp_path):
    text = (
        "exporter,importer,period,value\n"
        "A,A,t1,1\n"
        "A,B,t1,2\n"
        "B,A,t1,3\n"
        "B,B,t1,4\n"
    )
    path = _write(tmp_path, text)
    with pytest.raises(PanelDataError, match="row 2 pairs 'A' with itself"):
        load_long_csv(path)
    panel = load_long_csv(path, allow_self_pairs=True)
    assert panel.values[0, 0, 0] == 1.0 and panel.values[1, 1, 0] == 4.0


def test_unbalanced_panel_lists_missing_cells(tmp_path):
    text = (
        "exporter,importer,period,value\n"
        "A,x,t1,1\n"
        "A,y,t1,2\n"
        "B,x,t1,3\n"
    )
    with pytest.raises(
        PanelDataError, match=r"1 cell\(s\) missing; first: \('B', 'y', 't1'\)"
    ):
        load_long_csv(_write(tmp_path, text))


def test_unbalanced_panel_truncates_long_missing_lists(tmp_path):
    # 5 exporters x 5 importers x 1 period with 9 rows present: 16 cells
    # are missing but only the first ten are shown.
    text = "exporter,importer,period,value\nE1,i1,t1,1\n"
    for k in range(2, 6):
        text += f"E{k},i1,t1,1\n"
        text += f"E1,i{k},t1,1\n"
    with pytest.raises(PanelDataError) as excinfo:
        load_long_csv(_write(tmp_path, text))
    message = str(excinfo.value)
    assert "panel is unbalanced" in message
    assert message.count("(") - message.count("(s)") == 10  # ten cells listed


def test_atomic_write_replaces_and_leaves_no_temp_files(tmp_path):
    target = tmp_path / "nested" / "file.txt"
    atomic_write_text(target, "first\n")
    atomic_write_text(target, "second\n")
    assert target.read_text() == "second\n"
    assert [p.name for p in target.parent.iterdir()] == ["file.txt"]


def test_fmt_real_round_trips_doubles():
    rng = np.random.default_rng(77)
    for x in rng.standard_normal(200) * 10.0 ** rng.integers(-8, 9, 200):
        assert float(fmt_real(x)) == x
    assert fmt_real(1.0) == "1"


def test_header_constant_matches_loader():
    assert HEADER == ("exporter", "importer", "period", "value")


def test_rescale_global_loadings_min_max():
    out = rescale_global_loadings(np.array([1.0, 2.0, 3.0]))
    assert np.allclose(out, [0.0, 0.5, 1.0])
    out = rescale_global_loadings(np.array([-4.0, 0.0, 4.0]))
    assert np.allclose(out, [0.0, 0.5, 1.0])
    with pytest.warns(RuntimeWarning, match="constant loading column"):
        out = rescale_global_loadings(np.full(5, 2.5))
    assert np.array_equal(out, np.full(5, 0.5))
    with pytest.raises(ValueError, match="1-d column"):
        rescale_global_loadings(np.ones((2, 2)))


def test_rescale_country_loadings_max_abs():
    out = rescale_country_loadings(np.array([-2.0, 1.0]))
    assert np.allclose(out, [-1.0, 0.5])
    col = np.zeros(3)
    with pytest.warns(RuntimeWarning, match="all-zero loading column"):
        out = rescale_country_loadings(col)
    assert np.array_equal(out, col)
    assert out is not col  # a copy, the input is never aliased
    with pytest.raises(ValueError, match="1-d column"):
        rescale_country_loadings(np.ones((2, 2)))
