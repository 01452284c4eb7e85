"""Dense symmetric eigenvalue solvers written out in full.

Two independent algorithms: Householder reduction to tridiagonal form
followed by implicit-shift QL, and cyclic Jacobi rotations.  They serve as
cross-checks for the LAPACK path in :mod:`mp_spectra.spectral`; both return
eigenvalues only, in ascending order.
"""
import math

import numpy as np


def tridiagonalize(A):
    """Householder reduction of symmetric ``A``; returns (diagonal, off-diagonal)."""
    a = np.array(A, dtype=float)
    m = a.shape[0]
    for k in range(m - 2):
        x = a[k + 1:, k].copy()
        norm = np.linalg.norm(x)
        if norm == 0.0:
            continue
        alpha = -norm if x[0] >= 0 else norm
        v = x
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        block = a[k + 1:, k + 1:]
        w = block @ v
        q = w - (v @ w) * v
        block -= 2.0 * (np.outer(v, q) + np.outer(q, v))
        a[k + 1:, k] = 0.0
        a[k, k + 1:] = 0.0
        a[k + 1, k] = a[k, k + 1] = alpha
    diag = np.diag(a).copy()
    off = np.diag(a, -1).copy()
    return diag, off


def tridiagonal_ql(diag, off, max_iter=60):
    """Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL."""
    d = [float(v) for v in diag]
    m = len(d)
    e = [float(v) for v in off] + [0.0]
    eps = np.finfo(float).eps
    # absolute floor so tiny off-diagonals next to zero diagonals still split
    floor = eps * max((abs(v) for v in d + e), default=0.0)
    for l in range(m):
        iterations = 0
        while True:
            for mm in range(l, m - 1):
                dd = abs(d[mm]) + abs(d[mm + 1])
                if abs(e[mm]) <= eps * dd or abs(e[mm]) <= floor:
                    break
            else:
                mm = m - 1
            if mm == l:
                break
            iterations += 1
            if iterations > max_iter:
                raise RuntimeError("QL iteration failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[mm] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            deflated = False
            for i in range(mm - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[mm] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[mm] = 0.0
    return np.sort(np.array(d))


def _normalise(A):
    a = np.array(A, dtype=float)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    return (a / scale, scale) if scale > 0 else (a, 1.0)


def householder_ql_eigenvalues(A):
    a, scale = _normalise(A)
    if a.shape[0] == 1:
        return a[0] * scale
    return tridiagonal_ql(*tridiagonalize(a)) * scale


def jacobi_eigenvalues(A, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi; stops when the off-diagonal Frobenius norm is below ``tol * ||A||``."""
    a, unit = _normalise(A)
    m = a.shape[0]
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for i in range(m - 1):
            for j in range(i + 1, m):
                if abs(a[i, j]) <= 1e-3 * tol * scale:
                    # negligible next to the matrix norm; dropping it avoids overflow in theta
                    a[i, j] = a[j, i] = 0.0
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * a[i, j])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                rot_i = a[:, i].copy()
                rot_j = a[:, j].copy()
                a[:, i] = c * rot_i - s * rot_j
                a[:, j] = s * rot_i + c * rot_j
                row_i = a[i, :].copy()
                row_j = a[j, :].copy()
                a[i, :] = c * row_i - s * row_j
                a[j, :] = s * row_i + c * row_j
    else:
        raise RuntimeError("Jacobi sweeps failed to converge")
    return np.sort(np.diag(a)) * unit
