"""Thresholded eigenvalue-ratio rule for choosing how many factors to keep."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def omega(m: int, n: int, t: int) -> float:
    """Threshold ``1 / ln(max(m, n, t))`` used to mask negligible eigenvalues."""
    top = max(m, n, t)
    if top <= 1:
        raise ValueError(f"omega is undefined for max dimension {top} (needs > 1)")
    return 1.0 / math.log(top)


@dataclass(frozen=True)
class SelectionDiagnostics:
    """Everything needed to audit one rank choice.

    ``eigenvalues`` is the clamped descending ladder as passed in; ``mock``
    is the artificial leading value rho_0 = 1 that lets a count of zero win.
    With L ladder entries the candidate counts are 0..L-1, so ``ratios`` and
    ``criterion_values`` both have length L: ``ratios[k]`` is
    ``rho_{k+1} / rho_k`` (reported as 0 when the denominator is 0) and
    ``criterion_values[k]`` is that ratio when rho_k clears the threshold,
    1 otherwise.
    """

    eigenvalues: tuple[float, ...]
    mock: float
    omega: float
    ratios: tuple[float, ...]
    criterion_values: tuple[float, ...]
    chosen_k: int

    def to_dict(self) -> dict:
        return {
            "eigenvalues": list(self.eigenvalues),
            "mock": self.mock,
            "omega": self.omega,
            "ratios": list(self.ratios),
            "criterion_values": list(self.criterion_values),
            "chosen_k": self.chosen_k,
        }


def select_rank(eigenvalues, omega_value: float) -> SelectionDiagnostics:
    """Pick a factor count from a descending eigenvalue ladder.

    A mock eigenvalue of 1 is prepended as rho_0. Candidate counts run
    k = 0..len(eigenvalues)-1; the criterion at k is rho_{k+1}/rho_k when
    rho_k clears the threshold and 1 otherwise, so the last ladder entry
    only ever serves as a ratio numerator (callers wanting counts up to
    k_max pass k_max + 1 eigenvalues). The chosen count is the argmin,
    ties going to the smallest k. Eigenvalues in [-1e-10, 0) are clamped
    to 0 first; an increasing ladder or a negative value beyond that
    tolerance is a caller bug and raises.
    """
    rho = np.asarray(eigenvalues, dtype=float)
    if rho.ndim != 1 or rho.size == 0:
        raise ValueError("eigenvalues must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(rho)):
        raise ValueError("eigenvalues must be finite")
    if not omega_value > 0:
        raise ValueError(f"omega must be positive, got {omega_value}")
    scale = max(1.0, abs(float(rho[0])))
    if np.any(np.diff(rho) > 1e-12 * scale):
        raise ValueError("eigenvalues must be non-increasing")
    if np.any(rho < -1e-10 * scale):
        raise ValueError("eigenvalues are negative beyond roundoff")
    rho = np.maximum(rho, 0.0)
    n_candidates = rho.size  # counts 0 .. size-1

    mock = 1.0
    ext = np.concatenate(([mock], rho))  # ext[k] = rho_k with rho_0 mocked
    ratios = []
    for k in range(n_candidates):
        ratios.append(ext[k + 1] / ext[k] if ext[k] > 0 else 0.0)
    criterion = []
    for k in range(n_candidates):
        # omega > 0, so the ratio branch never divides by zero.
        criterion.append(ext[k + 1] / ext[k] if ext[k] >= omega_value else 1.0)
    chosen = int(np.argmin(criterion))
    return SelectionDiagnostics(
        eigenvalues=tuple(float(x) for x in rho),
        mock=mock,
        omega=float(omega_value),
        ratios=tuple(float(x) for x in ratios),
        criterion_values=tuple(float(x) for x in criterion),
        chosen_k=chosen,
    )
