"""Shared fixtures and the acceptance reporter.

The Monte Carlo runs behind the acceptance suite are expensive, so each
one is computed once per session and shared by every test that reads it.
The acceptance tests record one summary line each; a terminal-summary
hook replays them at the end of the run so the verdicts are visible even
when the per-test output is captured.
"""

from __future__ import annotations

import sys
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from trifactor.core import PanelTensor, Side, default_labels
from trifactor.estimator import decompose
from trifactor.inference import country_band, global_band
from trifactor.simulate import dgp1, dgp2, gen_dgp, rep_seed, run_monte_carlo

MASTER_SEED = 20240817
DGP1_DIMS = ((20, 20, 20), (40, 40, 40), (80, 80, 80))
DGP2_DIMS = ((20, 20, 20), (80, 80, 80))
MC_REPS = 200

_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter) -> None:
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance():
    """Recorder for the one-line verdicts of the acceptance tests."""
    return record_acceptance


@pytest.fixture(scope="session")
def dgp1_report():
    """Three-cell study on the serially uncorrelated design, with runtime."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        start = time.perf_counter()
        report = run_monte_carlo(
            dgp1(*DGP1_DIMS[0], MASTER_SEED), list(DGP1_DIMS), reps=MC_REPS, k_max=8
        )
        elapsed = time.perf_counter() - start
    return report, elapsed


@pytest.fixture(scope="session")
def dgp2_report():
    """Two-cell study on the persistent design."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        report = run_monte_carlo(
            dgp2(*DGP2_DIMS[0], MASTER_SEED), list(DGP2_DIMS), reps=MC_REPS, k_max=8
        )
    return report


@pytest.fixture(scope="session")
def band_study():
    """Coverage and width behaviour of the plug-in bands.

    Global-factor coverage pools 10 sampled periods per replication over
    200 draws at (40, 40, 40); the target is aligned to the estimate by
    regressing the estimated factors on the true ones. The same loop
    tracks one importer's band over the first 50 draws, and two 25-rep
    side studies record median half-widths at (20, 20, 20) and
    (80, 80, 80).
    """
    rng_pick = np.random.default_rng(12345)
    hits = total = 0
    chits = ctotal = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for rep in range(200):
            cfg = dgp1(40, 40, 40, rep_seed(MASTER_SEED, 0, rep))
            panel, truth = gen_dgp(cfg)
            dec = decompose(panel, k_max=8)
            ts = rng_pick.choice(40, size=10, replace=False)
            if dec.global_block.rank:
                band = global_band(dec, level=0.95)
                g, ghat = truth.global_factors, dec.global_block.factors
                aligned = g @ np.linalg.lstsq(g, ghat, rcond=None)[0]
                inside = (aligned[ts] >= band.lower()[ts]) & (
                    aligned[ts] <= band.upper()[ts]
                )
                hits += int(inside.sum())
                total += inside.size
            if rep < 50:
                blk = dec.importers[0]
                if blk.rank:
                    cband = country_band(dec, Side.IMPORTER, 0, level=0.95)
                    f, fhat = truth.importer_factors[0], blk.factors
                    al = f @ np.linalg.lstsq(f, fhat, rcond=None)[0]
                    ins = (al[ts] >= cband.lower()[ts]) & (al[ts] <= cband.upper()[ts])
                    chits += int(ins.sum())
                    ctotal += ins.size

        medians = {}
        for cell, dims in ((1, (20, 20, 20)), (2, (80, 80, 80))):
            vals = []
            for rep in range(25):
                cfg = dgp1(*dims, rep_seed(MASTER_SEED, cell, rep))
                panel, _ = gen_dgp(cfg)
                dec = decompose(panel, k_max=8)
                if dec.global_block.rank:
                    vals.append(float(np.median(global_band(dec, 0.95).half_width)))
            medians[dims] = float(np.median(vals))

    return {
        "global_coverage": hits / total,
        "importer_coverage": chits / ctotal,
        "median_half_20": medians[(20, 20, 20)],
        "median_half_80": medians[(80, 80, 80)],
    }


@pytest.fixture()
def small_panel():
    """A 5 x 6 x 7 noise panel for structural tests."""
    rng = np.random.default_rng(42)
    return PanelTensor(rng.standard_normal((5, 6, 7)), *default_labels(5, 6, 7))
