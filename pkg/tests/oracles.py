"""Independent reference implementations used to cross-check the package.

Nothing here imports from trifactor's numerics: the eigensolver is a plain
cyclic Jacobi sweep, the subspace distance comes from the principal-angle
identity, and the stacking helpers are written as explicit loops. Slow is
fine; these only run on small inputs.
"""

from __future__ import annotations

import numpy as np


def jacobi_eig(s, tol=1e-13, max_sweeps=100):
    """Full eigendecomposition of a small symmetric matrix by cyclic Jacobi.

    Returns (eigenvalues descending, eigenvectors as columns). Each sweep
    zeroes every off-diagonal pair once with an explicit 2x2 rotation
    applied as a dense matrix product, so the only shared machinery with
    the library is numpy's matmul.
    """
    a = np.array(s, dtype=float)
    p = a.shape[0]
    if p == 0:
        return np.zeros(0), np.zeros((0, 0))
    v = np.eye(p)
    mask = ~np.eye(p, dtype=bool)
    for _ in range(max_sweeps):
        off = float(np.sqrt(np.sum(a[mask] ** 2)))
        if off <= tol * max(1.0, float(np.max(np.abs(np.diag(a))))):
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                diff = a[j, j] - a[i, i]
                if abs(a[i, j]) * 1e15 <= abs(diff):
                    continue  # rotation angle below double precision
                # classic 2x2 symmetric Schur: pick the smaller rotation
                tau = diff / (2.0 * a[i, j])
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau))
                if tau == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * c
                rot = np.eye(p)
                rot[i, i] = c
                rot[j, j] = c
                rot[i, j] = sn
                rot[j, i] = -sn
                a = rot.T @ a @ rot
                v = v @ rot
    w = np.diag(a).copy()
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def principal_angle_distance(a, b):
    """Projector distance via the principal-angle identity.

    With orthonormal bases Qa (r1 cols) and Qb (r2 cols),
    ||Pa - Pb||_F^2 = r1 + r2 - 2 ||Qa' Qb||_F^2. Bases come from QR,
    not SVD, so the route differs from the library's.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    qa = np.linalg.qr(a)[0] if a.shape[1] else a.reshape(a.shape[0], 0)
    qb = np.linalg.qr(b)[0] if b.shape[1] else b.reshape(b.shape[0], 0)
    cross = qa.T @ qb
    sq = qa.shape[1] + qb.shape[1] - 2.0 * float(np.sum(cross * cross))
    return float(np.sqrt(max(sq, 0.0)))


def stack_by_loops(values):
    """(M, N, T) -> (M*N, T) with row j*M + i, written as explicit loops."""
    m, n, t = values.shape
    out = np.zeros((m * n, t))
    for i in range(m):
        for j in range(n):
            out[j * m + i, :] = values[i, j, :]
    return out


def unstack_by_loops(matrix, m, n):
    """Inverse of stack_by_loops."""
    t = matrix.shape[1]
    out = np.zeros((m, n, t))
    for i in range(m):
        for j in range(n):
            out[i, j, :] = matrix[j * m + i, :]
    return out


def gram_by_loops(x, scale):
    """scale * x'x accumulated entry by entry."""
    t = x.shape[1]
    out = np.zeros((t, t))
    for a in range(t):
        for b in range(t):
            out[a, b] = scale * float(np.dot(x[:, a], x[:, b]))
    return (out + out.T) / 2.0
