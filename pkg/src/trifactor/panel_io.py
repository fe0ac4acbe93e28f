"""Long-format CSV ingestion, atomic file writes and loading rescales."""

from __future__ import annotations

import csv
import os
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .core import PanelTensor
from .errors import PanelDataError

HEADER = ("exporter", "importer", "period", "value")
_MAX_REPORTED_MISSING = 10


def fmt_real(x: float) -> str:
    """Render a float with 17 significant digits (round-trips exactly)."""
    return format(float(x), ".17g")


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write a file via a temp sibling and rename, never leaving partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def load_long_csv(path: str | Path, allow_self_pairs: bool = False) -> PanelTensor:
    """Read a balanced panel from long-format CSV.

    The header must be exactly ``exporter,importer,period,value``. Exporter
    and importer labels are ordered lexicographically; periods keep their
    first-appearance order. Every (exporter, importer, period) cell must be
    present exactly once; up to ten missing cells are listed in the error.
    Rows with ``exporter == importer`` are rejected unless
    ``allow_self_pairs`` is set.
    """
    path = Path(path)
    seen: dict[tuple[str, str, str], float] = {}
    periods: list[str] = []
    period_set: set[str] = set()
    exporters: set[str] = set()
    importers: set[str] = set()

    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelDataError(f"{path}: file is empty") from None
        if tuple(h.strip() for h in header) != HEADER:
            raise PanelDataError(
                f"{path}: header must be {','.join(HEADER)!r}, got {','.join(header)!r}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise PanelDataError(
                    f"{path}: row {line_no} has {len(row)} fields, expected 4"
                )
            exp, imp, per, raw = (field.strip() for field in row)
            if not exp or not imp or not per:
                raise PanelDataError(f"{path}: row {line_no} has an empty label")
            if exp == imp and not allow_self_pairs:
                raise PanelDataError(
                    f"{path}: row {line_no} pairs {exp!r} with itself; "
                    "pass allow_self_pairs to accept such rows"
                )
            try:
                value = float(raw)
            except ValueError:
                raise PanelDataError(
                    f"{path}: row {line_no} has non-numeric value {raw!r}"
                ) from None
            if not np.isfinite(value):
                raise PanelDataError(
                    f"{path}: row {line_no} has non-finite value {raw!r}"
                )
            key = (exp, imp, per)
            if key in seen:
                raise PanelDataError(
                    f"{path}: row {line_no} duplicates cell (exporter={exp!r}, "
                    f"importer={imp!r}, period={per!r})"
                )
            seen[key] = value
            exporters.add(exp)
            importers.add(imp)
            if per not in period_set:
                period_set.add(per)
                periods.append(per)

    if not seen:
        raise PanelDataError(f"{path}: no data rows")

    exporter_labels = tuple(sorted(exporters))
    importer_labels = tuple(sorted(importers))
    period_labels = tuple(periods)

    missing = []
    for exp in exporter_labels:
        for imp in importer_labels:
            for per in period_labels:
                if (exp, imp, per) not in seen:
                    missing.append((exp, imp, per))
                    if len(missing) > _MAX_REPORTED_MISSING:
                        break
            if len(missing) > _MAX_REPORTED_MISSING:
                break
        if len(missing) > _MAX_REPORTED_MISSING:
            break
    if missing:
        total = (
            len(exporter_labels) * len(importer_labels) * len(period_labels) - len(seen)
        )
        shown = ", ".join(
            f"({e!r}, {i!r}, {p!r})" for e, i, p in missing[:_MAX_REPORTED_MISSING]
        )
        raise PanelDataError(
            f"{path}: panel is unbalanced, {total} cell(s) missing; first: {shown}"
        )

    values = np.empty((len(exporter_labels), len(importer_labels), len(period_labels)))
    for i, exp in enumerate(exporter_labels):
        for j, imp in enumerate(importer_labels):
            for t, per in enumerate(period_labels):
                values[i, j, t] = seen[(exp, imp, per)]
    return PanelTensor(values, exporter_labels, importer_labels, period_labels)


def write_panel_csv(panel: PanelTensor, path: str | Path) -> None:
    """Write a panel in the long format accepted by :func:`load_long_csv`."""
    lines = [",".join(HEADER)]
    for i, exp in enumerate(panel.exporter_labels):
        for j, imp in enumerate(panel.importer_labels):
            for t, per in enumerate(panel.period_labels):
                lines.append(f"{exp},{imp},{per},{fmt_real(panel.values[i, j, t])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def rescale_global_loadings(column) -> np.ndarray:
    """Min-max rescale one loading column to [0, 1].

    A constant column carries no ordering information; it maps to all 0.5
    with a warning.
    """
    col = np.asarray(column, dtype=float)
    if col.ndim != 1:
        raise ValueError(f"expected a 1-d column, got shape {col.shape}")
    lo, hi = float(col.min()), float(col.max())
    if hi == lo:
        warnings.warn(
            "constant loading column rescaled to 0.5 everywhere", RuntimeWarning
        )
        return np.full(col.shape, 0.5)
    return (col - lo) / (hi - lo)


def rescale_country_loadings(column) -> np.ndarray:
    """Divide one loading column by its max absolute value, keeping signs.

    An all-zero column is returned unchanged with a warning.
    """
    col = np.asarray(column, dtype=float)
    if col.ndim != 1:
        raise ValueError(f"expected a 1-d column, got shape {col.shape}")
    peak = float(np.max(np.abs(col))) if col.size else 0.0
    if peak == 0.0:
        warnings.warn("all-zero loading column left unscaled", RuntimeWarning)
        return col.copy()
    return col / peak
