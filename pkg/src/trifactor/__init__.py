"""Decomposition of exporter x importer x time panels into global and
country-specific factor components, with rank selection, confidence bands
and a Monte Carlo harness."""

from .core import (
    CountryBlock,
    Decomposition,
    GlobalBlock,
    PanelTensor,
    Side,
    StackedPanel,
    default_labels,
    slice_exporter,
    slice_importer,
    stack,
    unstack,
    unstack_values,
)
from .errors import ConfigError, NumericError, PanelDataError, TrifactorError
from .estimator import (
    decompose,
    deflated_exporter_slice,
    deflated_importer_slice,
    estimate_exporter,
    estimate_global,
    estimate_importer,
)
from .inference import FactorBand, country_band, global_band
from .linalg import (
    EigenResult,
    eigvecs_to_factors,
    gram_scaled,
    projection_distance,
    sym_eig_topk,
)
from .panel_io import (
    load_long_csv,
    rescale_country_loadings,
    rescale_global_loadings,
    write_panel_csv,
)
from .selection import SelectionDiagnostics, omega, select_rank
from .simulate import (
    DgpConfig,
    McCell,
    McReport,
    RateTriple,
    SimTruth,
    dgp1,
    dgp2,
    gen_dgp,
    mc_report_from_dict,
    rep_seed,
    rmse_metrics,
    run_monte_carlo,
    selection_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "CountryBlock",
    "Decomposition",
    "DgpConfig",
    "EigenResult",
    "FactorBand",
    "GlobalBlock",
    "McCell",
    "McReport",
    "NumericError",
    "PanelDataError",
    "PanelTensor",
    "RateTriple",
    "SelectionDiagnostics",
    "Side",
    "SimTruth",
    "StackedPanel",
    "TrifactorError",
    "country_band",
    "decompose",
    "default_labels",
    "deflated_exporter_slice",
    "deflated_importer_slice",
    "dgp1",
    "dgp2",
    "eigvecs_to_factors",
    "estimate_exporter",
    "estimate_global",
    "estimate_importer",
    "gen_dgp",
    "global_band",
    "gram_scaled",
    "load_long_csv",
    "mc_report_from_dict",
    "omega",
    "projection_distance",
    "rep_seed",
    "rescale_country_loadings",
    "rescale_global_loadings",
    "rmse_metrics",
    "run_monte_carlo",
    "select_rank",
    "selection_metrics",
    "slice_exporter",
    "slice_importer",
    "stack",
    "sym_eig_topk",
    "unstack",
    "unstack_values",
    "write_panel_csv",
]
