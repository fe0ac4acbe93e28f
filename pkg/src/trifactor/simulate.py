"""Synthetic panel generation and the Monte Carlo harness.

Factors and idiosyncratic noise follow stationary AR(1) laws with unit
innovation variance (the first draw is scaled by ``1/sqrt(1 - phi^2)`` so
the path starts in the stationary distribution); loadings are standard
normal and redrawn every replication. Per-replication seeds are derived
from the master seed with counter-style spawn keys, so reports are
byte-identical at any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import Decomposition, PanelTensor, default_labels
from .errors import ConfigError, TrifactorError
from .estimator import decompose
from .linalg import projection_distance

_DGP1_RANKS = (3, 2, 1)  # global, per-exporter, per-importer
_DGP2_PHI = 0.5


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class DgpConfig:
    """Parameters of one synthetic panel draw."""

    m: int
    n: int
    t: int
    r_global: int
    r_exporter: tuple[int, ...]
    r_importer: tuple[int, ...]
    phi_global: float
    phi_exporter: float
    phi_importer: float
    phi_noise: float
    seed: int

    def __post_init__(self) -> None:
        if min(self.m, self.n, self.t) < 2:
            raise ConfigError(
                f"dimensions must be >= 2, got ({self.m}, {self.n}, {self.t})"
            )
        object.__setattr__(self, "r_exporter", tuple(int(r) for r in self.r_exporter))
        object.__setattr__(self, "r_importer", tuple(int(r) for r in self.r_importer))
        if self.r_global < 0:
            raise ConfigError(f"r_global must be >= 0, got {self.r_global}")
        if len(self.r_exporter) != self.m:
            raise ConfigError(
                f"r_exporter must have one entry per exporter ({self.m}), got {len(self.r_exporter)}"
            )
        if len(self.r_importer) != self.n:
            raise ConfigError(
                f"r_importer must have one entry per importer ({self.n}), got {len(self.r_importer)}"
            )
        if any(r < 0 for r in self.r_exporter) or any(r < 0 for r in self.r_importer):
            raise ConfigError("country factor counts must be >= 0")
        for name in ("phi_global", "phi_exporter", "phi_importer", "phi_noise"):
            phi = getattr(self, name)
            if not -1.0 < phi < 1.0:
                raise ConfigError(f"{name} must lie in (-1, 1), got {phi}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")


def dgp1(m: int, n: int, t: int, seed: int) -> DgpConfig:
    """Serially uncorrelated design: ranks (3, 2, 1), all phi = 0."""
    r_g, r_e, r_i = _DGP1_RANKS
    return DgpConfig(
        m=m,
        n=n,
        t=t,
        r_global=r_g,
        r_exporter=(r_e,) * m,
        r_importer=(r_i,) * n,
        phi_global=0.0,
        phi_exporter=0.0,
        phi_importer=0.0,
        phi_noise=0.0,
        seed=seed,
    )


def dgp2(m: int, n: int, t: int, seed: int) -> DgpConfig:
    """Persistent design: ranks (3, 2, 1), all phi = 0.5."""
    r_g, r_e, r_i = _DGP1_RANKS
    return DgpConfig(
        m=m,
        n=n,
        t=t,
        r_global=r_g,
        r_exporter=(r_e,) * m,
        r_importer=(r_i,) * n,
        phi_global=_DGP2_PHI,
        phi_exporter=_DGP2_PHI,
        phi_importer=_DGP2_PHI,
        phi_noise=_DGP2_PHI,
        seed=seed,
    )


@dataclass(frozen=True)
class SimTruth:
    """The latent quantities behind one generated panel."""

    global_factors: np.ndarray  # (T, r_g)
    exporter_factors: tuple[np.ndarray, ...]  # M arrays (T, r_E_i)
    importer_factors: tuple[np.ndarray, ...]  # N arrays (T, r_I_j)
    global_loadings: np.ndarray  # (M, N, r_g)
    exporter_loadings: tuple[np.ndarray, ...]  # M arrays (N, r_E_i)
    importer_loadings: tuple[np.ndarray, ...]  # N arrays (M, r_I_j)
    noise: np.ndarray  # (M, N, T)


def _ar1_path(rng: np.random.Generator, t: int, r: int, phi: float) -> np.ndarray:
    """Stationary AR(1) path with N(0, 1) innovations, shape (t, r)."""
    x = rng.standard_normal((t, r))
    if r == 0 or phi == 0.0:
        return x
    x[0] /= np.sqrt(1.0 - phi * phi)
    for s in range(1, t):
        x[s] += phi * x[s - 1]
    return x


def _ar1_noise(rng: np.random.Generator, m: int, n: int, t: int, phi: float) -> np.ndarray:
    u = rng.standard_normal((m, n, t))
    if phi == 0.0:
        return u
    u[..., 0] /= np.sqrt(1.0 - phi * phi)
    for s in range(1, t):
        u[..., s] += phi * u[..., s - 1]
    return u


def gen_dgp(config: DgpConfig) -> tuple[PanelTensor, SimTruth]:
    """Draw one panel and its latent truth.

    Draw order is fixed (global factors, exporter factors, importer
    factors, global loadings, exporter loadings, importer loadings, noise)
    so a given seed always produces the same panel.
    """
    m, n, t = config.m, config.n, config.t
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))

    g = _ar1_path(rng, t, config.r_global, config.phi_global)
    f_e = tuple(_ar1_path(rng, t, r, config.phi_exporter) for r in config.r_exporter)
    f_i = tuple(_ar1_path(rng, t, r, config.phi_importer) for r in config.r_importer)
    gamma = rng.standard_normal((m, n, config.r_global))
    lam_e = tuple(rng.standard_normal((n, r)) for r in config.r_exporter)
    lam_i = tuple(rng.standard_normal((m, r)) for r in config.r_importer)
    noise = _ar1_noise(rng, m, n, t, config.phi_noise)

    values = np.einsum("ijr,tr->ijt", gamma, g)
    for i in range(m):
        values[i] += lam_e[i] @ f_e[i].T
    for j in range(n):
        values[:, j] += lam_i[j] @ f_i[j].T
    values += noise

    panel = PanelTensor(values, *default_labels(m, n, t))
    truth = SimTruth(
        global_factors=g,
        exporter_factors=f_e,
        importer_factors=f_i,
        global_loadings=gamma,
        exporter_loadings=lam_e,
        importer_loadings=lam_i,
        noise=noise,
    )
    return panel, truth


@dataclass(frozen=True)
class RateTriple:
    """Fractions of correct, under- and over-selected ranks; they sum to 1."""

    correct: float
    under: float
    over: float


@dataclass(frozen=True)
class _RepSummary:
    g_correct: bool
    g_under: bool
    e_counts: tuple[int, int, int]  # correct, under, over across exporters
    i_counts: tuple[int, int, int]
    sq_dist_global: float
    sq_dist_exporter: float  # averaged over exporters
    sq_dist_importer: float


def _count_triple(hats, trues) -> tuple[int, int, int]:
    correct = under = over = 0
    for h, r in zip(hats, trues):
        if h == r:
            correct += 1
        elif h < r:
            under += 1
        else:
            over += 1
    return correct, under, over


def _summarize(decomp: Decomposition, truth: SimTruth) -> _RepSummary:
    r_g_true = truth.global_factors.shape[1]
    r_g_hat = decomp.global_block.rank
    e_hats = [b.rank for b in decomp.exporters]
    e_trues = [f.shape[1] for f in truth.exporter_factors]
    i_hats = [b.rank for b in decomp.importers]
    i_trues = [f.shape[1] for f in truth.importer_factors]
    d_g = projection_distance(decomp.global_block.factors, truth.global_factors)
    d2_e = [
        projection_distance(decomp.exporters[i].factors, truth.exporter_factors[i]) ** 2
        for i in range(len(e_hats))
    ]
    d2_i = [
        projection_distance(decomp.importers[j].factors, truth.importer_factors[j]) ** 2
        for j in range(len(i_hats))
    ]
    return _RepSummary(
        g_correct=r_g_hat == r_g_true,
        g_under=r_g_hat < r_g_true,
        e_counts=_count_triple(e_hats, e_trues),
        i_counts=_count_triple(i_hats, i_trues),
        sq_dist_global=d_g**2,
        sq_dist_exporter=float(np.mean(d2_e)),
        sq_dist_importer=float(np.mean(d2_i)),
    )


def _rates(summaries: list[_RepSummary]) -> tuple[RateTriple, RateTriple, RateTriple]:
    reps = len(summaries)
    g_c = sum(s.g_correct for s in summaries) / reps
    g_u = sum(s.g_under for s in summaries) / reps
    g_o = sum(not (s.g_correct or s.g_under) for s in summaries) / reps
    e_tot = sum(sum(s.e_counts) for s in summaries)
    i_tot = sum(sum(s.i_counts) for s in summaries)
    e = tuple(sum(s.e_counts[k] for s in summaries) / e_tot for k in range(3))
    i = tuple(sum(s.i_counts[k] for s in summaries) / i_tot for k in range(3))
    return (
        RateTriple(g_c, g_u, g_o),
        RateTriple(*e),
        RateTriple(*i),
    )


def _rmse(summaries: list[_RepSummary]) -> tuple[float, float, float]:
    return (
        float(np.sqrt(np.mean([s.sq_dist_global for s in summaries]))),
        float(np.sqrt(np.mean([s.sq_dist_exporter for s in summaries]))),
        float(np.sqrt(np.mean([s.sq_dist_importer for s in summaries]))),
    )


def selection_metrics(
    estimates, truths
) -> tuple[RateTriple, RateTriple, RateTriple]:
    """Correct/under/over selection rates (global, exporter, importer).

    Country rates pool over countries and replications; each triple sums
    to 1 exactly.
    """
    if len(estimates) != len(truths) or not estimates:
        raise ValueError("estimates and truths must be non-empty and aligned")
    return _rates([_summarize(d, t) for d, t in zip(estimates, truths)])


def rmse_metrics(estimates, truths) -> tuple[float, float, float]:
    """Root mean squared projection distances (global, exporter, importer).

    Country values average the squared distances over countries inside the
    mean before the square root.
    """
    if len(estimates) != len(truths) or not estimates:
        raise ValueError("estimates and truths must be non-empty and aligned")
    return _rmse([_summarize(d, t) for d, t in zip(estimates, truths)])


@dataclass(frozen=True)
class McCell:
    """Monte Carlo results for one (M, N, T) cell."""

    m: int
    n: int
    t: int
    p_g: RateTriple
    p_e: RateTriple
    p_i: RateTriple
    rmse_global: float
    rmse_exporter: float
    rmse_importer: float
    replications: int


@dataclass(frozen=True)
class McReport:
    """All cells of one Monte Carlo run plus the settings that produced it."""

    cells: tuple[McCell, ...]
    master_seed: int
    k_max: int
    replications: int
    phi: tuple[float, float, float, float]  # global, exporter, importer, noise
    ranks: tuple[int, int, int]  # r_global, per-exporter, per-importer

    def to_json_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "k_max": self.k_max,
            "replications": self.replications,
            "phi": {
                "global": self.phi[0],
                "exporter": self.phi[1],
                "importer": self.phi[2],
                "noise": self.phi[3],
            },
            "ranks": {
                "global": self.ranks[0],
                "exporter": self.ranks[1],
                "importer": self.ranks[2],
            },
            "cells": [
                {
                    "M": c.m,
                    "N": c.n,
                    "T": c.t,
                    "P_gc": c.p_g.correct,
                    "P_gu": c.p_g.under,
                    "P_go": c.p_g.over,
                    "P_Ec": c.p_e.correct,
                    "P_Eu": c.p_e.under,
                    "P_Eo": c.p_e.over,
                    "P_Ic": c.p_i.correct,
                    "P_Iu": c.p_i.under,
                    "P_Io": c.p_i.over,
                    "RMSE_G": c.rmse_global,
                    "RMSE_E": c.rmse_exporter,
                    "RMSE_I": c.rmse_importer,
                    "replications": c.replications,
                }
                for c in self.cells
            ],
        }

    def to_csv_text(self) -> str:
        header = (
            "M,N,T,P_gc,P_gu,P_go,P_Ec,P_Eu,P_Eo,P_Ic,P_Iu,P_Io,"
            "RMSE_G,RMSE_E,RMSE_I,replications"
        )
        lines = [header]
        for c in self.cells:
            rates = [
                c.p_g.correct, c.p_g.under, c.p_g.over,
                c.p_e.correct, c.p_e.under, c.p_e.over,
                c.p_i.correct, c.p_i.under, c.p_i.over,
                c.rmse_global, c.rmse_exporter, c.rmse_importer,
            ]
            lines.append(
                f"{c.m},{c.n},{c.t},"
                + ",".join(_fmt(x) for x in rates)
                + f",{c.replications}"
            )
        return "\n".join(lines) + "\n"


def mc_report_from_dict(d: dict) -> McReport:
    """Rebuild a report from its :meth:`McReport.to_json_dict` form."""
    cells = tuple(
        McCell(
            m=int(c["M"]),
            n=int(c["N"]),
            t=int(c["T"]),
            p_g=RateTriple(c["P_gc"], c["P_gu"], c["P_go"]),
            p_e=RateTriple(c["P_Ec"], c["P_Eu"], c["P_Eo"]),
            p_i=RateTriple(c["P_Ic"], c["P_Iu"], c["P_Io"]),
            rmse_global=float(c["RMSE_G"]),
            rmse_exporter=float(c["RMSE_E"]),
            rmse_importer=float(c["RMSE_I"]),
            replications=int(c["replications"]),
        )
        for c in d["cells"]
    )
    return McReport(
        cells=cells,
        master_seed=int(d["master_seed"]),
        k_max=int(d["k_max"]),
        replications=int(d["replications"]),
        phi=(
            float(d["phi"]["global"]),
            float(d["phi"]["exporter"]),
            float(d["phi"]["importer"]),
            float(d["phi"]["noise"]),
        ),
        ranks=(
            int(d["ranks"]["global"]),
            int(d["ranks"]["exporter"]),
            int(d["ranks"]["importer"]),
        ),
    )


def _cell_config(template: DgpConfig, m: int, n: int, t: int, seed: int) -> DgpConfig:
    if (m, n, t) == (template.m, template.n, template.t):
        r_e, r_i = template.r_exporter, template.r_importer
    else:
        if len(set(template.r_exporter)) > 1 or len(set(template.r_importer)) > 1:
            raise ConfigError(
                "per-country factor counts vary, so the template only applies to "
                f"its own dimensions ({template.m}, {template.n}, {template.t})"
            )
        r_e = (template.r_exporter[0],) * m
        r_i = (template.r_importer[0],) * n
    return DgpConfig(
        m=m,
        n=n,
        t=t,
        r_global=template.r_global,
        r_exporter=r_e,
        r_importer=r_i,
        phi_global=template.phi_global,
        phi_exporter=template.phi_exporter,
        phi_importer=template.phi_importer,
        phi_noise=template.phi_noise,
        seed=seed,
    )


def rep_seed(master_seed: int, cell_index: int, rep_index: int) -> int:
    """Counter-derived 64-bit seed for one replication of one cell."""
    seq = np.random.SeedSequence(master_seed, spawn_key=(cell_index, rep_index))
    return int(seq.generate_state(1, np.uint64)[0])


def run_monte_carlo(
    template: DgpConfig,
    dims,
    reps: int = 200,
    k_max: int = 8,
    threads: int = 1,
) -> McReport:
    """Run the simulation study over a grid of panel sizes.

    ``template`` fixes ranks and AR coefficients; its ``seed`` acts as the
    master seed. Each cell in ``dims`` is a ``(M, N, T)`` triple; when a
    cell's dimensions differ from the template's, the per-country factor
    counts must be homogeneous and are repeated to the cell's sizes.
    Replication ``r`` of cell ``c`` uses a seed derived from
    ``(master_seed, c, r)``, and results are reduced in replication order,
    so the report does not depend on ``threads``.
    """
    dims = [tuple(int(x) for x in d) for d in dims]
    if not dims:
        raise ConfigError("dims must contain at least one (M, N, T) cell")
    if any(len(d) != 3 for d in dims):
        raise ConfigError("each cell must be an (M, N, T) triple")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    for m, n, t in dims:
        if k_max >= min(m, n, t):
            raise ConfigError(
                f"k_max={k_max} must be below min(M, N, T)={min(m, n, t)} for cell ({m}, {n}, {t})"
            )

    def one_rep(cell_index: int, rep_index: int, m: int, n: int, t: int) -> _RepSummary:
        try:
            cfg = _cell_config(
                template, m, n, t, rep_seed(template.seed, cell_index, rep_index)
            )
            panel, truth = gen_dgp(cfg)
            return _summarize(decompose(panel, k_max=k_max, threads=1), truth)
        except TrifactorError as exc:
            raise type(exc)(
                f"cell ({m}, {n}, {t}), replication {rep_index}: {exc}"
            ) from exc
        except Exception as exc:  # pragma: no cover - defensive context
            raise RuntimeError(
                f"cell ({m}, {n}, {t}), replication {rep_index}: {exc}"
            ) from exc

    cells = []
    for cell_index, (m, n, t) in enumerate(dims):
        if threads == 1:
            summaries = [one_rep(cell_index, r, m, n, t) for r in range(reps)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [
                    pool.submit(one_rep, cell_index, r, m, n, t) for r in range(reps)
                ]
                summaries = [f.result() for f in futures]
        p_g, p_e, p_i = _rates(summaries)
        rmse_g, rmse_e, rmse_i = _rmse(summaries)
        cells.append(
            McCell(
                m=m,
                n=n,
                t=t,
                p_g=p_g,
                p_e=p_e,
                p_i=p_i,
                rmse_global=rmse_g,
                rmse_exporter=rmse_e,
                rmse_importer=rmse_i,
                replications=reps,
            )
        )
    return McReport(
        cells=tuple(cells),
        master_seed=template.seed,
        k_max=k_max,
        replications=reps,
        phi=(
            template.phi_global,
            template.phi_exporter,
            template.phi_importer,
            template.phi_noise,
        ),
        ranks=(
            template.r_global,
            template.r_exporter[0] if template.r_exporter else 0,
            template.r_importer[0] if template.r_importer else 0,
        ),
    )
