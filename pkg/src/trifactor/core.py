"""Panel containers and the stacking layout shared by every estimation step.

A panel holds one time series per (exporter, importer) pair, stored as a
dense ``(M, N, T)`` array. Matrix-level work runs on the stacked
``(M*N, T)`` view whose row for the 0-based pair ``(i, j)`` is ``j*M + i``:
the exporter index varies fastest within each importer block, matching the
column ordering ``(y_11t, ..., y_M1t, y_12t, ..., y_MNt)'``.

Indexing is 0-based everywhere inside the package; user-facing output uses
the panel's labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import PanelDataError


class Side(str, Enum):
    """Which country dimension a factor block belongs to."""

    EXPORTER = "exporter"
    IMPORTER = "importer"


def _float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise PanelDataError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class PanelTensor:
    """Balanced panel of shape ``(M, N, T)`` with axis labels.

    ``values[i, j, t]`` is the observation for exporter ``i``, importer
    ``j``, period ``t``. Construction rejects non-finite entries and
    label/shape mismatches; instances are immutable and safe to share
    across threads by read-only reference. Missing data is rejected, not
    imputed.
    """

    values: np.ndarray
    exporter_labels: tuple[str, ...]
    importer_labels: tuple[str, ...]
    period_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        values = _float_array(self.values, "panel")
        if values.ndim != 3:
            raise PanelDataError(f"panel values must be 3-d, got ndim={values.ndim}")
        if min(values.shape) < 1:
            raise PanelDataError(f"panel dimensions must be positive, got {values.shape}")
        object.__setattr__(self, "values", values)
        for attr, size, what in (
            ("exporter_labels", values.shape[0], "exporter"),
            ("importer_labels", values.shape[1], "importer"),
            ("period_labels", values.shape[2], "period"),
        ):
            labels = tuple(str(x) for x in getattr(self, attr))
            if len(labels) != size:
                raise PanelDataError(
                    f"expected {size} {what} labels, got {len(labels)}"
                )
            object.__setattr__(self, attr, labels)

    @property
    def n_exporters(self) -> int:
        return self.values.shape[0]

    @property
    def n_importers(self) -> int:
        return self.values.shape[1]

    @property
    def n_periods(self) -> int:
        return self.values.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


def default_labels(m: int, n: int, t: int) -> tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]:
    """Sortable synthetic labels for generated panels."""
    return (
        tuple(f"E{i + 1:03d}" for i in range(m)),
        tuple(f"I{j + 1:03d}" for j in range(n)),
        tuple(f"t{t_ + 1:04d}" for t_ in range(t)),
    )


@dataclass(frozen=True)
class StackedPanel:
    """``(M*N, T)`` matrix view of a panel.

    Row ``j*M + i`` holds the series of the 0-based pair ``(i, j)``; the
    exporter index varies fastest.
    """

    matrix: np.ndarray
    n_exporters: int
    n_importers: int

    def row_index(self, i: int, j: int) -> int:
        return j * self.n_exporters + i

    def pair(self, row: int) -> tuple[int, int]:
        return row % self.n_exporters, row // self.n_exporters


def stack(panel: PanelTensor) -> StackedPanel:
    """Stack a panel into its ``(M*N, T)`` matrix form."""
    m, n, t = panel.shape
    # transpose to (N, M, T) so that reshaping walks exporters fastest
    matrix = np.ascontiguousarray(panel.values.transpose(1, 0, 2).reshape(m * n, t))
    return StackedPanel(matrix=matrix, n_exporters=m, n_importers=n)


def unstack(
    stacked: StackedPanel,
    exporter_labels,
    importer_labels,
    period_labels,
) -> PanelTensor:
    """Invert :func:`stack`, restoring the ``(M, N, T)`` tensor."""
    values = unstack_values(stacked.matrix, stacked.n_exporters, stacked.n_importers)
    return PanelTensor(values, exporter_labels, importer_labels, period_labels)


def unstack_values(matrix: np.ndarray, m: int, n: int) -> np.ndarray:
    """Reshape an ``(M*N, T)`` stacked matrix back to ``(M, N, T)``."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != m * n:
        raise PanelDataError(
            f"stacked matrix must have {m * n} rows, got shape {matrix.shape}"
        )
    return np.ascontiguousarray(matrix.reshape(n, m, matrix.shape[1]).transpose(1, 0, 2))


def slice_importer(panel: PanelTensor, j: int) -> np.ndarray:
    """All exporter series facing importer ``j``, as an ``(M, T)`` matrix."""
    if not 0 <= j < panel.n_importers:
        raise PanelDataError(
            f"importer index {j} out of range [0, {panel.n_importers - 1}]"
        )
    return np.array(panel.values[:, j, :])


def slice_exporter(panel: PanelTensor, i: int) -> np.ndarray:
    """All importer series facing exporter ``i``, as an ``(N, T)`` matrix."""
    if not 0 <= i < panel.n_exporters:
        raise PanelDataError(
            f"exporter index {i} out of range [0, {panel.n_exporters - 1}]"
        )
    return np.array(panel.values[i, :, :])


@dataclass(frozen=True)
class GlobalBlock:
    """Step-one output: global factors, their loadings, the eigenvalue ladder.

    ``factors`` is ``(T, rank)`` with ``(1/T) factors' factors = I``;
    ``loadings`` is ``(M*N, rank)`` in stacked row order. ``eigenvalues``
    keeps the full descending ladder (``k_max + 1`` entries, one extra so
    the ratio at the cap is defined) so the rank choice can be audited
    after the fact.
    """

    factors: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    omega: float

    def __post_init__(self) -> None:
        factors = np.asarray(self.factors, dtype=float)
        loadings = np.asarray(self.loadings, dtype=float)
        eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if self.rank < 0:
            raise PanelDataError(f"rank must be >= 0, got {self.rank}")
        if factors.ndim != 2 or factors.shape[1] != self.rank:
            raise PanelDataError(
                f"factors must be (T, {self.rank}), got {factors.shape}"
            )
        if loadings.ndim != 2 or loadings.shape[1] != self.rank:
            raise PanelDataError(
                f"loadings must be (M*N, {self.rank}), got {loadings.shape}"
            )
        if eigenvalues.ndim != 1:
            raise PanelDataError("eigenvalues must be 1-d")
        if not self.omega > 0:
            raise PanelDataError(f"omega must be positive, got {self.omega}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "loadings", loadings)
        object.__setattr__(self, "eigenvalues", eigenvalues)

    @property
    def n_periods(self) -> int:
        return self.factors.shape[0]


@dataclass(frozen=True)
class CountryBlock:
    """Step-two output for one country on one side.

    Exporter-side loadings are ``(N, rank)`` (one row per importer it
    faces); importer-side loadings are ``(M, rank)``.
    """

    side: Side
    index: int
    factors: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    rank: int

    def __post_init__(self) -> None:
        factors = np.asarray(self.factors, dtype=float)
        loadings = np.asarray(self.loadings, dtype=float)
        eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if self.rank < 0:
            raise PanelDataError(f"rank must be >= 0, got {self.rank}")
        if factors.ndim != 2 or factors.shape[1] != self.rank:
            raise PanelDataError(
                f"factors must be (T, {self.rank}), got {factors.shape}"
            )
        if loadings.ndim != 2 or loadings.shape[1] != self.rank:
            raise PanelDataError(
                f"loadings must be 2-d with {self.rank} columns, got {loadings.shape}"
            )
        if eigenvalues.ndim != 1:
            raise PanelDataError("eigenvalues must be 1-d")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "loadings", loadings)
        object.__setattr__(self, "eigenvalues", eigenvalues)


@dataclass(frozen=True)
class Decomposition:
    """Full two-step decomposition of a panel.

    ``residuals`` is defined as the original values minus the three fitted
    components, so the additive identity holds exactly by construction.
    """

    global_block: GlobalBlock
    exporters: tuple[CountryBlock, ...]
    importers: tuple[CountryBlock, ...]
    residuals: np.ndarray

    def __post_init__(self) -> None:
        residuals = np.asarray(self.residuals, dtype=float)
        m, n, t = len(self.exporters), len(self.importers), self.global_block.n_periods
        if residuals.shape != (m, n, t):
            raise PanelDataError(
                f"residuals must be ({m}, {n}, {t}), got {residuals.shape}"
            )
        object.__setattr__(self, "exporters", tuple(self.exporters))
        object.__setattr__(self, "importers", tuple(self.importers))
        object.__setattr__(self, "residuals", residuals)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.residuals.shape

    def fitted_global(self) -> np.ndarray:
        """Global component ``loadings @ factors'`` as an ``(M, N, T)`` tensor."""
        m, n, t = self.shape
        fit = self.global_block.loadings @ self.global_block.factors.T
        return unstack_values(fit, m, n)

    def fitted_exporter(self) -> np.ndarray:
        """Exporter-specific component as an ``(M, N, T)`` tensor."""
        m, n, t = self.shape
        out = np.zeros((m, n, t))
        for block in self.exporters:
            out[block.index, :, :] = block.loadings @ block.factors.T
        return out

    def fitted_importer(self) -> np.ndarray:
        """Importer-specific component as an ``(M, N, T)`` tensor."""
        m, n, t = self.shape
        out = np.zeros((m, n, t))
        for block in self.importers:
            out[:, block.index, :] = block.loadings @ block.factors.T
        return out

    def reconstruct(self) -> np.ndarray:
        """Sum of the three fitted components and the residuals."""
        return (
            self.fitted_global()
            + self.fitted_exporter()
            + self.fitted_importer()
            + self.residuals
        )
