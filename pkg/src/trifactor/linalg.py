"""Symmetric eigendecomposition, Gram construction and subspace distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError

# columns with singular value below this multiple of the largest are treated
# as rank deficiency rather than silently dropped
_RANK_TOL = 1e-12
_SYM_TOL = 1e-10
# projector distances below this floor are roundoff from coinciding column
# spaces (two SVD runs of the same span differ in the last bits) and are
# reported as exactly zero so rotation invariance holds identically
_ZERO_SNAP = 1e-10


@dataclass(frozen=True)
class EigenResult:
    """Top-k eigenpairs of a symmetric matrix.

    ``eigenvalues`` is descending; ``eigenvectors`` has orthonormal columns
    aligned with it. Each column's sign is fixed so that its
    largest-magnitude entry is positive (ties broken by the first such
    index), which makes repeated runs and different backends agree.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def gram_scaled(x: np.ndarray, scale: float) -> np.ndarray:
    """Return ``scale * x.T @ x`` symmetrised as ``(a + a.T) / 2``.

    The symmetrisation costs one addition and guarantees the result is
    accepted by :func:`sym_eig_topk` regardless of accumulated roundoff.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"gram_scaled expects a matrix, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise NumericError("gram_scaled: input contains non-finite entries")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    a = scale * (x.T @ x)
    return (a + a.T) / 2.0


def sym_eig_topk(s: np.ndarray, k: int) -> EigenResult:
    """Largest ``k`` eigenpairs of the symmetric matrix ``s``.

    Raises ``ValueError`` if ``s`` departs from symmetry by more than
    1e-10 (callers are expected to symmetrise via :func:`gram_scaled`), and
    :class:`NumericError` if the underlying solver fails to converge.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"matrix must be square, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise NumericError("sym_eig_topk: matrix contains non-finite entries")
    asym = float(np.max(np.abs(s - s.T))) if s.size else 0.0
    if asym > _SYM_TOL:
        raise ValueError(
            f"matrix is not symmetric: max |s - s'| = {asym:.3e} exceeds {_SYM_TOL}"
        )
    if not 1 <= k <= s.shape[0]:
        raise ValueError(f"k must be in [1, {s.shape[0]}], got {k}")
    try:
        w, v = np.linalg.eigh(s)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed to converge: {exc}") from exc
    order = np.argsort(w)[::-1][:k]
    return EigenResult(eigenvalues=w[order].copy(), eigenvectors=_fix_signs(v[:, order]))


def _fix_signs(v: np.ndarray) -> np.ndarray:
    v = np.array(v)
    if v.shape[1] == 0:
        return v
    lead = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[lead, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def eigvecs_to_factors(result: EigenResult, n_periods: int) -> np.ndarray:
    """Rescale unit eigenvector columns to factor normalisation.

    Multiplies by ``sqrt(T)`` so the returned ``(T, k)`` matrix ``F``
    satisfies ``(1/T) F' F = I``.
    """
    if result.eigenvectors.shape[0] != n_periods:
        raise ValueError(
            f"eigenvectors have {result.eigenvectors.shape[0]} rows, expected {n_periods}"
        )
    return np.sqrt(n_periods) * result.eigenvectors


def _orthonormal_basis(x: np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[1] == 0:
        return x.reshape(x.shape[0], 0)
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    if s[0] == 0.0 or s[-1] < _RANK_TOL * s[0]:
        raise NumericError(
            f"projection_distance: matrix {name} is rank deficient "
            f"(singular values {s.min():.3e} .. {s.max():.3e})"
        )
    return u


def projection_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance between the orthogonal projectors of two column spans.

    Both inputs must have the same number of rows; a matrix with zero
    columns denotes the zero projector. Rank-deficient inputs raise
    :class:`NumericError` naming the offending argument rather than
    guessing an effective rank. Distances below 1e-10 are returned as
    exactly 0.0: coinciding column spaces (``b = a @ r`` for invertible
    ``r``) produce only last-bit projector roundoff, and snapping it keeps
    the distance an exact zero under rotations.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("projection_distance expects matrices")
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"row counts differ: {a.shape[0]} vs {b.shape[0]}"
        )
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NumericError("projection_distance: input contains non-finite entries")
    qa = _orthonormal_basis(a, "a")
    qb = _orthonormal_basis(b, "b")
    pa = qa @ qa.T
    pb = qb @ qb.T
    dist = float(np.linalg.norm(pa - pb, ord="fro"))
    return 0.0 if dist < _ZERO_SNAP else dist
