"""Command-line front end: a thin client over the service API.

Subcommands run in-process by default; ``--server URL`` sends the same
request to a running server instead. All errors are written to stderr as
single-line JSON. Exit codes: 0 success, 1 data or numeric error, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from pydantic import ValidationError

from . import service
from .client import ServiceClient
from .errors import ConfigError, TrifactorError
from .panel_io import (
    atomic_write_text,
    fmt_real,
    load_long_csv,
    rescale_country_loadings,
    rescale_global_loadings,
)
from .simulate import mc_report_from_dict


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        print(json.dumps({"error": "usage", "detail": message}), file=sys.stderr)
        raise SystemExit(2)


def _emit_error(kind: str, detail: str) -> None:
    print(json.dumps({"error": kind, "detail": detail}), file=sys.stderr)


def _resolve_threads(value: int | None) -> int:
    if value is not None:
        if value < 1:
            raise _UsageError(f"--threads must be >= 1, got {value}")
        return value
    env = os.environ.get("TRIFACTOR_THREADS")
    if env:
        try:
            parsed = int(env)
        except ValueError:
            raise ConfigError(
                f"TRIFACTOR_THREADS must be an integer, got {env!r}"
            ) from None
        if parsed < 1:
            raise ConfigError(f"TRIFACTOR_THREADS must be >= 1, got {env!r}")
        return parsed
    return os.cpu_count() or 1


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _safe_names(labels) -> list[str]:
    names = []
    used: set[str] = set()
    for pos, label in enumerate(labels):
        base = re.sub(r"[^A-Za-z0-9._-]", "_", label) or "blank"
        name = base if base not in used else f"{base}_{pos}"
        used.add(name)
        names.append(name)
    return names


def _factor_csv(periods, factors, lower, upper) -> str:
    r = len(factors[0]) if factors else 0
    header = (
        ["period"]
        + [f"factor_{k + 1}" for k in range(r)]
        + [f"lower_{k + 1}" for k in range(r)]
        + [f"upper_{k + 1}" for k in range(r)]
    )
    lines = [",".join(header)]
    for t, period in enumerate(periods):
        cells = [period]
        cells += [fmt_real(factors[t][k]) for k in range(r)]
        cells += [fmt_real(lower[t][k]) for k in range(r)]
        cells += [fmt_real(upper[t][k]) for k in range(r)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _loading_columns(loadings, rescale) -> tuple[int, list[list[float]]]:
    rows = len(loadings)
    r = len(loadings[0]) if rows and loadings[0] is not None else 0
    rescaled = []
    for k in range(r):
        column = [loadings[p][k] for p in range(rows)]
        rescaled.append(list(rescale(column)))
    return r, rescaled


def _country_loading_csv(row_labels, loadings) -> str:
    r, rescaled = _loading_columns(loadings, rescale_country_loadings)
    header = (
        ["country"]
        + [f"loading_{k + 1}" for k in range(r)]
        + [f"rescaled_{k + 1}" for k in range(r)]
    )
    lines = [",".join(header)]
    for p, label in enumerate(row_labels):
        cells = [label]
        cells += [fmt_real(loadings[p][k]) for k in range(r)]
        cells += [fmt_real(rescaled[k][p]) for k in range(r)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _write_decompose_outputs(out_dir: Path, resp: service.DecomposeResponse) -> None:
    gb = resp.global_block
    periods = resp.period_labels
    exporter_names = _safe_names(resp.exporter_labels)
    importer_names = _safe_names(resp.importer_labels)
    m = len(resp.exporter_labels)

    atomic_write_text(
        out_dir / "global_factors.csv",
        _factor_csv(periods, gb.factors, gb.band.lower, gb.band.upper),
    )

    r, rescaled = _loading_columns(gb.loadings, rescale_global_loadings)
    header = (
        ["exporter", "importer"]
        + [f"loading_{k + 1}" for k in range(r)]
        + [f"rescaled_{k + 1}" for k in range(r)]
    )
    lines = [",".join(header)]
    for p in range(len(gb.loadings)):
        # stacked row p holds the pair (i, j) = (p mod M, p div M)
        cells = [resp.exporter_labels[p % m], resp.importer_labels[p // m]]
        cells += [fmt_real(gb.loadings[p][k]) for k in range(r)]
        cells += [fmt_real(rescaled[k][p]) for k in range(r)]
        lines.append(",".join(cells))
    atomic_write_text(out_dir / "global_loadings.csv", "\n".join(lines) + "\n")

    for block, name in zip(resp.exporters, exporter_names):
        atomic_write_text(
            out_dir / "exporter_factors" / f"{name}.csv",
            _factor_csv(periods, block.factors, block.band.lower, block.band.upper),
        )
        atomic_write_text(
            out_dir / "exporter_loadings" / f"{name}.csv",
            _country_loading_csv(resp.importer_labels, block.loadings),
        )
    for block, name in zip(resp.importers, importer_names):
        atomic_write_text(
            out_dir / "importer_factors" / f"{name}.csv",
            _factor_csv(periods, block.factors, block.band.lower, block.band.upper),
        )
        atomic_write_text(
            out_dir / "importer_loadings" / f"{name}.csv",
            _country_loading_csv(resp.exporter_labels, block.loadings),
        )

    ranks = {
        "omega": resp.omega,
        "k_max": resp.k_max,
        "global": {
            "rank": gb.rank,
            "diagnostics": gb.diagnostics.model_dump(),
        },
        "exporters": {
            block.label: {
                "rank": block.rank,
                "diagnostics": block.diagnostics.model_dump(),
            }
            for block in resp.exporters
        },
        "importers": {
            block.label: {
                "rank": block.rank,
                "diagnostics": block.diagnostics.model_dump(),
            }
            for block in resp.importers
        },
    }
    atomic_write_text(out_dir / "ranks.json", _json_text(ranks))
    atomic_write_text(
        out_dir / "residual_stats.json", _json_text(resp.residual_stats.model_dump())
    )


def _cmd_decompose(args: argparse.Namespace) -> int:
    panel = load_long_csv(args.input, allow_self_pairs=args.allow_self_pairs)
    req = service.DecomposeRequest(
        panel=service.PanelPayload.from_panel(panel),
        k_max=args.k_max,
        omega_override=args.omega,
        standardize=args.standardize,
        confidence_level=args.confidence_level,
        threads=_resolve_threads(args.threads),
    )
    resp = ServiceClient(args.server).decompose(req)
    _write_decompose_outputs(Path(args.output_dir), resp)
    return 0


def _parse_dims(text: str) -> list[list[int]]:
    cells = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 3:
            raise _UsageError(f"--dims cell {chunk!r} is not of the form M,N,T")
        try:
            cell = [int(p) for p in parts]
        except ValueError:
            raise _UsageError(f"--dims cell {chunk!r} has non-integer entries") from None
        if min(cell) < 2:
            raise _UsageError(f"--dims cell {chunk!r} has dimensions below 2")
        cells.append(cell)
    if not cells:
        raise _UsageError("--dims must contain at least one M,N,T cell")
    return cells


def _cmd_simulate(args: argparse.Namespace) -> int:
    req = service.SimulateRequest(
        dgp=args.dgp,
        dims=_parse_dims(args.dims),
        seed=args.seed,
        reps=args.reps,
        k_max=args.k_max,
        threads=_resolve_threads(args.threads),
    )
    resp = ServiceClient(args.server).simulate(req)
    out_dir = Path(args.output_dir)
    report = mc_report_from_dict(resp.report)
    atomic_write_text(out_dir / "mc_report.csv", report.to_csv_text())
    atomic_write_text(out_dir / "mc_report.json", _json_text(resp.report))
    return 0


def _cmd_select(args: argparse.Namespace) -> int:
    panel = load_long_csv(args.input, allow_self_pairs=args.allow_self_pairs)
    req = service.SelectRequest(
        panel=service.PanelPayload.from_panel(panel),
        k_max=args.k_max,
        omega_override=args.omega,
    )
    resp = ServiceClient(args.server).select(req)
    print(json.dumps(resp.model_dump(), indent=2, sort_keys=True))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run(service.app, host=args.host, port=args.port)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="trifactor", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_dec = sub.add_parser("decompose", help="decompose a long-format CSV panel")
    p_dec.add_argument("--input", required=True, help="long-format CSV panel")
    p_dec.add_argument(
        "--out", "--output-dir", dest="output_dir", required=True,
        help="directory for result files",
    )
    p_dec.add_argument("--k-max", type=int, default=8)
    p_dec.add_argument("--omega", type=float, default=None, help="override the selection threshold")
    p_dec.add_argument("--standardize", action="store_true")
    p_dec.add_argument("--allow-self-pairs", action="store_true")
    p_dec.add_argument(
        "--level", "--confidence-level", dest="confidence_level",
        type=float, default=0.95,
    )
    p_dec.add_argument("--threads", type=int, default=None)
    p_dec.add_argument("--server", default=None, help="base URL of a running server")
    p_dec.set_defaults(func=_cmd_decompose)

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo study")
    p_sim.add_argument("--dgp", type=int, choices=(1, 2), required=True)
    p_sim.add_argument("--dims", required=True, help="cells like 20,20,20;40,40,40")
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--reps", type=int, default=200)
    p_sim.add_argument("--k-max", type=int, default=8)
    p_sim.add_argument("--threads", type=int, default=None)
    p_sim.add_argument(
        "--out", "--output-dir", dest="output_dir", required=True,
        help="directory for result files",
    )
    p_sim.add_argument("--server", default=None)
    p_sim.set_defaults(func=_cmd_simulate)

    p_sel = sub.add_parser("select", help="print global rank selection diagnostics")
    p_sel.add_argument("--input", required=True)
    p_sel.add_argument("--k-max", type=int, default=8)
    p_sel.add_argument("--omega", type=float, default=None)
    p_sel.add_argument("--allow-self-pairs", action="store_true")
    p_sel.add_argument("--server", default=None)
    p_sel.set_defaults(func=_cmd_select)

    p_srv = sub.add_parser("serve", help="run the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except _UsageError as exc:
        _emit_error("usage", str(exc))
        return 2
    except ValidationError as exc:
        _emit_error("ValidationError", str(exc))
        return 2
    except TrifactorError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1
    except OSError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 1


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))
