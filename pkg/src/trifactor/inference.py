"""Pointwise confidence bands for estimated factors.

The bands plug estimated loadings and composite residuals into the
sandwich form of the factors' limiting variance. For the global factors
the composite residual of a pair is everything its series contains beyond
the global component (both country components plus the idiosyncratic
part); for a country's factors it is everything beyond that country's
component and the global one, i.e. the other side's component plus the
idiosyncratic part.

The global composite is cross-sectionally dependent by construction:
pairs sharing an exporter also share that exporter's factors, and
likewise for importers. The middle matrix of the global sandwich is
therefore estimated with two-way clustered score sums (exporter clusters
plus importer clusters minus the diagonal term) rather than the purely
heteroskedasticity-robust diagonal, which understates the variance and
undercovers. Country-band composites mix a different exporter (or
importer) per row, so their rows are uncorrelated and the diagonal form
is the right analogue there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .core import Decomposition, Side
from .errors import ConfigError, NumericError

_COND_TOL = 1e-12


@dataclass(frozen=True)
class FactorBand:
    """Pointwise band: ``center[t, k] +- half_width[t, k]`` at ``level``."""

    center: np.ndarray
    half_width: np.ndarray
    level: float

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=float)
        half = np.asarray(self.half_width, dtype=float)
        if center.shape != half.shape or center.ndim != 2:
            raise ValueError(
                f"center and half_width must be matching (T, r) arrays, got {center.shape} and {half.shape}"
            )
        if half.size and half.min() < 0:
            raise ValueError("half_width must be non-negative")
        if not 0 < self.level < 1:
            raise ConfigError(f"level must be in (0, 1), got {self.level}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_width", half)

    def lower(self) -> np.ndarray:
        return self.center - self.half_width

    def upper(self) -> np.ndarray:
        return self.center + self.half_width


def _stacked(values: np.ndarray) -> np.ndarray:
    m, n, t = values.shape
    return values.transpose(1, 0, 2).reshape(m * n, t)


def _inv_loading_moment(lam: np.ndarray, count: int, what: str) -> np.ndarray:
    sigma = (lam.T @ lam) / count
    eigs = np.linalg.eigvalsh(sigma)
    if eigs[0] <= _COND_TOL * max(1.0, eigs[-1]):
        raise NumericError(
            f"{what}: loading second-moment matrix is singular "
            f"(eigenvalues {eigs[0]:.3e} .. {eigs[-1]:.3e})"
        )
    return np.linalg.inv(sigma)


def _psd_clip(meat: np.ndarray) -> np.ndarray:
    """Clip each (r, r) slice to the PSD cone (two-way sums can dip below)."""
    w, v = np.linalg.eigh((meat + meat.transpose(0, 2, 1)) / 2.0)
    if w.min() >= 0.0:
        return meat
    w = np.clip(w, 0.0, None)
    return np.einsum("tak,tk,tbk->tab", v, w, v)


def _sandwich_half_width(
    lam: np.ndarray,
    composite: np.ndarray,
    level: float,
    what: str,
    clusters: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Half-widths from loadings ``lam`` (p, r) and composites (p, T).

    Without ``clusters`` the middle matrix is the diagonal sum of
    ``lam lam' composite^2``. With ``clusters`` — two integer label arrays
    of length p — it is the two-way clustered sum: within-cluster score
    outer products for both partitions, minus the diagonal counted twice.
    """
    count = lam.shape[0]
    sinv = _inv_loading_moment(lam, count, what)
    diag_meat = np.einsum("pa,pb,pt->tab", lam, lam, composite**2)
    if clusters is None:
        meat = diag_meat / count
    else:
        meat = -diag_meat
        for labels in clusters:
            groups = np.unique(labels)
            scores = np.zeros((groups.size, lam.shape[1], composite.shape[1]))
            for g_pos, g in enumerate(groups):
                rows = labels == g
                scores[g_pos] = lam[rows].T @ composite[rows]
            meat = meat + np.einsum("gat,gbt->tab", scores, scores)
        meat = _psd_clip(meat / count)
    var = np.einsum("ab,tbc,cd->tad", sinv, meat, sinv) / count
    diag = np.clip(np.einsum("tkk->tk", var), 0.0, None)
    z = norm.ppf(0.5 * (1.0 + level))
    return z * np.sqrt(diag)


def global_band(decomp: Decomposition, level: float = 0.95) -> FactorBand:
    """Pointwise band around the estimated global factors.

    Returns an empty band when the selected global rank is zero.
    """
    if not 0 < level < 1:
        raise ConfigError(f"level must be in (0, 1), got {level}")
    block = decomp.global_block
    t = block.n_periods
    if block.rank == 0:
        empty = np.zeros((t, 0))
        return FactorBand(center=empty, half_width=empty.copy(), level=level)
    composite = _stacked(
        decomp.fitted_exporter() + decomp.fitted_importer() + decomp.residuals
    )
    m, n, _ = decomp.residuals.shape
    rows = np.arange(m * n)
    # stacked row j*M + i: cluster on the exporter i and on the importer j
    clusters = (rows % m, rows // m)
    half = _sandwich_half_width(
        block.loadings, composite, level, "global band", clusters=clusters
    )
    return FactorBand(center=block.factors.copy(), half_width=half, level=level)


def country_band(
    decomp: Decomposition, side: Side, index: int, level: float = 0.95
) -> FactorBand:
    """Pointwise band around one country's estimated factors.

    For an importer the composite residual is the exporter component plus
    the idiosyncratic part of its slice, and vice versa.
    """
    if not 0 < level < 1:
        raise ConfigError(f"level must be in (0, 1), got {level}")
    side = Side(side)
    blocks = decomp.importers if side is Side.IMPORTER else decomp.exporters
    if not 0 <= index < len(blocks):
        raise ConfigError(
            f"{side.value} index {index} out of range [0, {len(blocks) - 1}]"
        )
    block = blocks[index]
    t = block.factors.shape[0]
    if block.rank == 0:
        empty = np.zeros((t, 0))
        return FactorBand(center=empty, half_width=empty.copy(), level=level)
    if side is Side.IMPORTER:
        composite = (decomp.fitted_exporter() + decomp.residuals)[:, index, :]
    else:
        composite = (decomp.fitted_importer() + decomp.residuals)[index, :, :]
    what = f"{side.value} band (index {index})"
    half = _sandwich_half_width(block.loadings, composite, level, what)
    return FactorBand(center=block.factors.copy(), half_width=half, level=level)
