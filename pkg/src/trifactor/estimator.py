"""Two-step estimation: global factors first, country factors from deflated slices.

Step one runs principal components on the scaled ``T x T`` Gram matrix of
the stacked panel and keeps as many factors as the eigenvalue-ratio rule
selects. Step two removes the fitted global component from each country's
slice and repeats the same procedure slice by slice, importers on the
``(M, T)`` slices and exporters on the ``(N, T)`` slices. The slice
estimations are independent of each other and may run in parallel.
"""

from __future__ import annotations

import dataclasses
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import (
    CountryBlock,
    Decomposition,
    GlobalBlock,
    PanelTensor,
    Side,
    slice_exporter,
    slice_importer,
    stack,
)
from .errors import ConfigError, PanelDataError, TrifactorError
from .linalg import eigvecs_to_factors, gram_scaled, sym_eig_topk
from .selection import omega as omega_threshold
from .selection import select_rank


def _check_estimable(panel: PanelTensor) -> None:
    m, n, t = panel.shape
    if m < 2 or n < 2 or t < 2:
        raise PanelDataError(
            f"estimation needs at least 2 exporters, 2 importers and 2 periods, got {panel.shape}"
        )


def _warn_if_binding(rank: int, k_max: int, what: str) -> None:
    if rank == k_max:
        warnings.warn(
            f"{what}: selected rank equals k_max={k_max}; the cap may be binding, "
            "consider raising k_max",
            RuntimeWarning,
            stacklevel=3,
        )


def estimate_global(panel: PanelTensor, k_max: int, omega_value: float) -> GlobalBlock:
    """Principal-components step on the stacked panel.

    The Gram matrix is ``(1/(M N T)) Y' Y`` where ``Y`` is the ``(M*N, T)``
    stacked matrix; factors are the top eigenvectors scaled by ``sqrt(T)``
    and loadings are ``(1/T) Y F``. The retained count is chosen by the
    eigenvalue-ratio rule at threshold ``omega_value``; the ladder carries
    ``k_max + 1`` eigenvalues so every candidate count up to ``k_max`` has
    a well-defined ratio.
    """
    _check_estimable(panel)
    m, n, t = panel.shape
    if not 1 <= k_max < t:
        raise ConfigError(f"k_max must satisfy 1 <= k_max < T={t}, got {k_max}")
    if k_max >= m * n:
        raise ConfigError(f"k_max must be below M*N={m * n}, got {k_max}")
    y = stack(panel).matrix
    s = gram_scaled(y, 1.0 / (m * n * t))
    eig = sym_eig_topk(s, k_max + 1)
    diag = select_rank(eig.eigenvalues, omega_value)
    r = diag.chosen_k
    factors = eigvecs_to_factors(eig, t)[:, :r]
    loadings = (y @ factors) / t
    _warn_if_binding(r, k_max, "global step")
    return GlobalBlock(
        factors=factors,
        loadings=loadings,
        eigenvalues=eig.eigenvalues,
        rank=r,
        omega=float(omega_value),
    )


def _check_global_block(panel: PanelTensor, global_block: GlobalBlock) -> None:
    m, n, t = panel.shape
    if global_block.n_periods != t:
        raise PanelDataError(
            f"global block has {global_block.n_periods} periods, panel has {t}"
        )
    if global_block.loadings.shape[0] != m * n:
        raise PanelDataError(
            f"global block has {global_block.loadings.shape[0]} loading rows, expected {m * n}"
        )


def deflated_importer_slice(
    panel: PanelTensor, global_block: GlobalBlock, j: int
) -> np.ndarray:
    """Importer ``j``'s ``(M, T)`` slice with the fitted global component removed."""
    _check_global_block(panel, global_block)
    m = panel.n_exporters
    y_j = slice_importer(panel, j)
    gamma_j = global_block.loadings[j * m : (j + 1) * m, :]
    return y_j - gamma_j @ global_block.factors.T


def deflated_exporter_slice(
    panel: PanelTensor, global_block: GlobalBlock, i: int
) -> np.ndarray:
    """Exporter ``i``'s ``(N, T)`` slice with the fitted global component removed."""
    _check_global_block(panel, global_block)
    m = panel.n_exporters
    y_i = slice_exporter(panel, i)
    # stacked rows for exporter i sit at j*M + i, one per importer j
    gamma_i = global_block.loadings[i::m, :]
    return y_i - gamma_i @ global_block.factors.T


def estimate_importer(
    panel: PanelTensor,
    global_block: GlobalBlock,
    j: int,
    k_max: int,
    omega_value: float,
) -> CountryBlock:
    """Factor step for one importer on its deflated ``(M, T)`` slice.

    Uses the Gram matrix ``(1/(M T)) R' R`` and the same ratio rule and
    threshold as the global step.
    """
    m, n, t = panel.shape
    if not 1 <= k_max < t:
        raise ConfigError(f"k_max must satisfy 1 <= k_max < T={t}, got {k_max}")
    if k_max >= m:
        raise ConfigError(f"importer step needs k_max below M={m}, got {k_max}")
    r_mat = deflated_importer_slice(panel, global_block, j)
    s = gram_scaled(r_mat, 1.0 / (m * t))
    eig = sym_eig_topk(s, k_max + 1)
    diag = select_rank(eig.eigenvalues, omega_value)
    r = diag.chosen_k
    factors = eigvecs_to_factors(eig, t)[:, :r]
    loadings = (r_mat @ factors) / t
    _warn_if_binding(r, k_max, f"importer {panel.importer_labels[j]!r}")
    return CountryBlock(
        side=Side.IMPORTER,
        index=j,
        factors=factors,
        loadings=loadings,
        eigenvalues=eig.eigenvalues,
        rank=r,
    )


def estimate_exporter(
    panel: PanelTensor,
    global_block: GlobalBlock,
    i: int,
    k_max: int,
    omega_value: float,
) -> CountryBlock:
    """Factor step for one exporter on its deflated ``(N, T)`` slice."""
    m, n, t = panel.shape
    if not 1 <= k_max < t:
        raise ConfigError(f"k_max must satisfy 1 <= k_max < T={t}, got {k_max}")
    if k_max >= n:
        raise ConfigError(f"exporter step needs k_max below N={n}, got {k_max}")
    r_mat = deflated_exporter_slice(panel, global_block, i)
    s = gram_scaled(r_mat, 1.0 / (n * t))
    eig = sym_eig_topk(s, k_max + 1)
    diag = select_rank(eig.eigenvalues, omega_value)
    r = diag.chosen_k
    factors = eigvecs_to_factors(eig, t)[:, :r]
    loadings = (r_mat @ factors) / t
    _warn_if_binding(r, k_max, f"exporter {panel.exporter_labels[i]!r}")
    return CountryBlock(
        side=Side.EXPORTER,
        index=i,
        factors=factors,
        loadings=loadings,
        eigenvalues=eig.eigenvalues,
        rank=r,
    )


def _standardized(panel: PanelTensor) -> PanelTensor:
    mu = panel.values.mean(axis=2, keepdims=True)
    sd = panel.values.std(axis=2, keepdims=True)
    flat = np.argwhere(sd[:, :, 0] == 0.0)
    if flat.size:
        i, j = flat[0]
        raise PanelDataError(
            "standardize=True needs non-constant series; series for pair "
            f"({panel.exporter_labels[i]!r}, {panel.importer_labels[j]!r}) has zero variance"
        )
    return PanelTensor(
        (panel.values - mu) / sd,
        panel.exporter_labels,
        panel.importer_labels,
        panel.period_labels,
    )


def _with_context(fn, label: str, what: str):
    def run():
        try:
            return fn()
        except TrifactorError as exc:
            raise type(exc)(f"{what} {label!r}: {exc}") from exc

    return run


def decompose(
    panel: PanelTensor,
    k_max: int = 8,
    omega_override: float | None = None,
    standardize: bool = False,
    threads: int = 1,
) -> Decomposition:
    """Run both estimation steps and return the full decomposition.

    Parameters
    ----------
    panel : PanelTensor
        Balanced panel with at least 2 exporters, 2 importers, 2 periods.
    k_max : int
        Cap on every candidate factor count. Must be below M, N and T.
    omega_override : float, optional
        Replaces the default threshold ``1 / ln(max(M, N, T))``; the same
        value is used in both steps.
    standardize : bool
        Demean and scale each (exporter, importer) series to unit variance
        before estimating. The returned decomposition then refers to the
        standardized panel.
    threads : int
        Worker threads for the per-country step. Results do not depend on
        the thread count.

    Returns
    -------
    Decomposition
        Global block, one block per exporter and importer, and residuals
        defined as the (possibly standardized) values minus all three
        fitted components.
    """
    _check_estimable(panel)
    m, n, t = panel.shape
    if not 1 <= k_max < min(m, n, t):
        raise ConfigError(
            f"k_max must satisfy 1 <= k_max < min(M, N, T)={min(m, n, t)}, got {k_max}"
        )
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    if omega_override is not None and not omega_override > 0:
        raise ConfigError(f"omega_override must be positive, got {omega_override}")
    if standardize:
        panel = _standardized(panel)
    om = omega_threshold(m, n, t) if omega_override is None else float(omega_override)

    global_block = estimate_global(panel, k_max, om)

    importer_jobs = [
        _with_context(
            lambda j=j: estimate_importer(panel, global_block, j, k_max, om),
            panel.importer_labels[j],
            "importer",
        )
        for j in range(n)
    ]
    exporter_jobs = [
        _with_context(
            lambda i=i: estimate_exporter(panel, global_block, i, k_max, om),
            panel.exporter_labels[i],
            "exporter",
        )
        for i in range(m)
    ]
    if threads == 1:
        importers = [job() for job in importer_jobs]
        exporters = [job() for job in exporter_jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            importer_futs = [pool.submit(job) for job in importer_jobs]
            exporter_futs = [pool.submit(job) for job in exporter_jobs]
            importers = [f.result() for f in importer_futs]
            exporters = [f.result() for f in exporter_futs]

    skeleton = Decomposition(
        global_block=global_block,
        exporters=tuple(exporters),
        importers=tuple(importers),
        residuals=np.zeros(panel.shape),
    )
    fitted = (
        skeleton.fitted_global()
        + skeleton.fitted_exporter()
        + skeleton.fitted_importer()
    )
    return dataclasses.replace(skeleton, residuals=panel.values - fitted)
