"""HTTP service exposing decompose, select and simulate.

The pydantic models double as the wire format and the in-process API: the
``handle_*`` functions are plain request -> response calls, and the
FastAPI routes are thin wrappers around them. Domain errors map to HTTP
422 with a single-object JSON body.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .core import Decomposition, PanelTensor, Side
from .errors import ConfigError, TrifactorError
from .estimator import decompose as run_decompose
from .estimator import estimate_global
from .inference import FactorBand, country_band, global_band
from .selection import SelectionDiagnostics, omega as omega_threshold, select_rank
from .simulate import dgp1, dgp2, run_monte_carlo


class PanelPayload(BaseModel):
    exporter_labels: list[str]
    importer_labels: list[str]
    period_labels: list[str]
    values: list[list[list[float]]]

    @classmethod
    def from_panel(cls, panel: PanelTensor) -> "PanelPayload":
        return cls(
            exporter_labels=list(panel.exporter_labels),
            importer_labels=list(panel.importer_labels),
            period_labels=list(panel.period_labels),
            values=panel.values.tolist(),
        )

    def to_panel(self) -> PanelTensor:
        return PanelTensor(
            np.asarray(self.values, dtype=float),
            self.exporter_labels,
            self.importer_labels,
            self.period_labels,
        )


class DiagnosticsPayload(BaseModel):
    eigenvalues: list[float]
    mock: float
    omega: float
    ratios: list[float]
    criterion_values: list[float]
    chosen_k: int

    @classmethod
    def from_diagnostics(cls, diag: SelectionDiagnostics) -> "DiagnosticsPayload":
        return cls(**diag.to_dict())


class BandPayload(BaseModel):
    lower: list[list[float]]
    upper: list[list[float]]
    level: float

    @classmethod
    def from_band(cls, band: FactorBand) -> "BandPayload":
        return cls(
            lower=band.lower().tolist(),
            upper=band.upper().tolist(),
            level=band.level,
        )


class GlobalResult(BaseModel):
    rank: int
    eigenvalues: list[float]
    factors: list[list[float]]
    loadings: list[list[float]]
    band: BandPayload
    diagnostics: DiagnosticsPayload


class CountryResult(BaseModel):
    label: str
    side: str
    rank: int
    eigenvalues: list[float]
    factors: list[list[float]]
    loadings: list[list[float]]
    band: BandPayload
    diagnostics: DiagnosticsPayload


class ResidualStats(BaseModel):
    n_cells: int
    rss: float
    tss: float
    fraction_explained: float
    ss_global: float
    ss_exporter: float
    ss_importer: float
    max_abs_residual: float


class DecomposeRequest(BaseModel):
    panel: PanelPayload
    k_max: int = 8
    omega_override: float | None = None
    standardize: bool = False
    confidence_level: float = Field(default=0.95, gt=0.0, lt=1.0)
    threads: int = 1


class DecomposeResponse(BaseModel):
    exporter_labels: list[str]
    importer_labels: list[str]
    period_labels: list[str]
    omega: float
    k_max: int
    global_block: GlobalResult
    exporters: list[CountryResult]
    importers: list[CountryResult]
    residual_stats: ResidualStats


class SelectRequest(BaseModel):
    panel: PanelPayload
    k_max: int = 8
    omega_override: float | None = None


class SelectResponse(BaseModel):
    omega: float
    k_max: int
    rank: int
    diagnostics: DiagnosticsPayload


class SimulateRequest(BaseModel):
    dgp: int = Field(ge=1, le=2)
    dims: list[list[int]]
    seed: int
    reps: int = 200
    k_max: int = 8
    threads: int = 1


class SimulateResponse(BaseModel):
    report: dict


def _residual_stats(decomp: Decomposition) -> ResidualStats:
    fit_g = decomp.fitted_global()
    fit_e = decomp.fitted_exporter()
    fit_i = decomp.fitted_importer()
    values = fit_g + fit_e + fit_i + decomp.residuals
    rss = float(np.sum(decomp.residuals**2))
    tss = float(np.sum(values**2))
    return ResidualStats(
        n_cells=int(decomp.residuals.size),
        rss=rss,
        tss=tss,
        fraction_explained=1.0 if tss == 0.0 else 1.0 - rss / tss,
        ss_global=float(np.sum(fit_g**2)),
        ss_exporter=float(np.sum(fit_e**2)),
        ss_importer=float(np.sum(fit_i**2)),
        max_abs_residual=float(np.max(np.abs(decomp.residuals))) if decomp.residuals.size else 0.0,
    )


def _country_result(decomp, side: Side, index: int, label: str, level: float, omega_value: float) -> CountryResult:
    blocks = decomp.exporters if side is Side.EXPORTER else decomp.importers
    block = blocks[index]
    band = country_band(decomp, side, index, level)
    return CountryResult(
        label=label,
        side=side.value,
        rank=block.rank,
        eigenvalues=block.eigenvalues.tolist(),
        factors=block.factors.tolist(),
        loadings=block.loadings.tolist(),
        band=BandPayload.from_band(band),
        diagnostics=DiagnosticsPayload.from_diagnostics(
            select_rank(block.eigenvalues, omega_value)
        ),
    )


def handle_decompose(req: DecomposeRequest) -> DecomposeResponse:
    panel = req.panel.to_panel()
    decomp = run_decompose(
        panel,
        k_max=req.k_max,
        omega_override=req.omega_override,
        standardize=req.standardize,
        threads=req.threads,
    )
    gb = decomp.global_block
    level = req.confidence_level
    global_result = GlobalResult(
        rank=gb.rank,
        eigenvalues=gb.eigenvalues.tolist(),
        factors=gb.factors.tolist(),
        loadings=gb.loadings.tolist(),
        band=BandPayload.from_band(global_band(decomp, level)),
        diagnostics=DiagnosticsPayload.from_diagnostics(
            select_rank(gb.eigenvalues, gb.omega)
        ),
    )
    exporters = [
        _country_result(decomp, Side.EXPORTER, i, label, level, gb.omega)
        for i, label in enumerate(panel.exporter_labels)
    ]
    importers = [
        _country_result(decomp, Side.IMPORTER, j, label, level, gb.omega)
        for j, label in enumerate(panel.importer_labels)
    ]
    return DecomposeResponse(
        exporter_labels=list(panel.exporter_labels),
        importer_labels=list(panel.importer_labels),
        period_labels=list(panel.period_labels),
        omega=gb.omega,
        k_max=req.k_max,
        global_block=global_result,
        exporters=exporters,
        importers=importers,
        residual_stats=_residual_stats(decomp),
    )


def handle_select(req: SelectRequest) -> SelectResponse:
    panel = req.panel.to_panel()
    m, n, t = panel.shape
    om = (
        omega_threshold(m, n, t)
        if req.omega_override is None
        else float(req.omega_override)
    )
    if req.omega_override is not None and not req.omega_override > 0:
        raise ConfigError(f"omega_override must be positive, got {req.omega_override}")
    gb = estimate_global(panel, req.k_max, om)
    return SelectResponse(
        omega=om,
        k_max=req.k_max,
        rank=gb.rank,
        diagnostics=DiagnosticsPayload.from_diagnostics(
            select_rank(gb.eigenvalues, om)
        ),
    )


def handle_simulate(req: SimulateRequest) -> SimulateResponse:
    dims = [tuple(d) for d in req.dims]
    if not dims or any(len(d) != 3 for d in dims):
        raise ConfigError("dims must be a non-empty list of (M, N, T) triples")
    maker = dgp1 if req.dgp == 1 else dgp2
    template = maker(dims[0][0], dims[0][1], dims[0][2], req.seed)
    report = run_monte_carlo(
        template, dims, reps=req.reps, k_max=req.k_max, threads=req.threads
    )
    return SimulateResponse(report=report.to_json_dict())


app = FastAPI(title="trifactor", version="0.1.0")


@app.exception_handler(TrifactorError)
async def _domain_error(request: Request, exc: TrifactorError) -> JSONResponse:
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok"}


@app.post("/v1/decompose", response_model=DecomposeResponse)
def decompose_route(req: DecomposeRequest) -> DecomposeResponse:
    return handle_decompose(req)


@app.post("/v1/select", response_model=SelectResponse)
def select_route(req: SelectRequest) -> SelectResponse:
    return handle_select(req)


@app.post("/v1/simulate", response_model=SimulateResponse)
def simulate_route(req: SimulateRequest) -> SimulateResponse:
    return handle_simulate(req)
