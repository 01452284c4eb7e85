"""Sample covariance matrices and their empirical spectral distributions."""
from dataclasses import dataclass, field

import numpy as np

from .eigen import householder_ql_eigenvalues, jacobi_eigenvalues
from .ensembles import DataMatrix
from .errors import DomainError, InputError

SYMMETRY_RTOL = 1e-12


def _entries(X):
    return X.entries if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)


def sample_covariance(X):
    """``V = X @ X.T / n``, symmetric by construction (upper triangle mirrored).

    Also accepts a stack of matrices with shape ``(r, p, n)``.
    """
    x = _entries(X)
    if x.size == 0:
        raise InputError("empty data matrix")
    n = x.shape[-1]
    V = x @ np.swapaxes(x, -1, -2) / n
    upper = np.triu(V)
    return upper + np.swapaxes(np.triu(V, 1), -1, -2)


def _check_symmetric(V):
    V = np.asarray(V, dtype=float)
    if V.ndim < 2 or V.shape[-1] != V.shape[-2]:
        raise InputError(f"expected a square matrix, got shape {V.shape}")
    scale = max(1.0, float(np.max(np.abs(V)))) if V.size else 1.0
    if np.max(np.abs(V - np.swapaxes(V, -1, -2)), initial=0.0) > SYMMETRY_RTOL * scale:
        raise InputError("matrix is not symmetric within tolerance")
    return V


def eigenvalues_sym(V, method="lapack"):
    """Ascending eigenvalues of a symmetric matrix (or a stack of them).

    ``method`` is ``"lapack"`` (default), ``"householder_ql"`` or ``"jacobi"``;
    the last two are the in-package solvers and handle single matrices only.
    """
    V = _check_symmetric(V)
    if method == "lapack":
        return np.linalg.eigvalsh(V)
    if V.ndim != 2:
        raise InputError("in-package solvers take one matrix at a time")
    if method == "householder_ql":
        return householder_ql_eigenvalues(V)
    if method == "jacobi":
        return jacobi_eigenvalues(V)
    raise InputError(f"unknown eigensolver {method!r}")


@dataclass
class SpectrumSummary:
    eigenvalues: np.ndarray
    p: int
    n: int
    esd_moments: dict = field(default_factory=dict)

    @property
    def op_norm(self):
        return float(self.eigenvalues[-1])

    def moment(self, k):
        return esd_moment(self, k)


def spectrum(X, moments=(1, 2, 3, 4), method="lapack"):
    """Spectrum summary of ``V = X X^T / n`` for a data matrix ``X``."""
    x = _entries(X)
    p, n = x.shape
    eig = eigenvalues_sym(sample_covariance(x), method=method)
    summary = SpectrumSummary(eig, p, n)
    summary.esd_moments = {k: esd_moment(summary, k) for k in moments}
    return summary


def esd_moment(summary, k):
    """``(1/p) * sum(lambda_i**k)``."""
    if int(k) != k or k < 1:
        raise DomainError(f"moment order must be a positive integer, got {k!r}")
    eig = summary.eigenvalues if isinstance(summary, SpectrumSummary) else np.asarray(summary)
    return float(np.mean(eig ** int(k)))


def trace_moment(V, k):
    """``tr(V**k) / p`` by repeated multiplication; cross-check path only."""
    V = np.asarray(V, dtype=float)
    return float(np.trace(np.linalg.matrix_power(V, int(k))) / V.shape[0])


def operator_norm(summary):
    return summary.op_norm


def check_invariants(summary, V):
    """Names of violated spectrum invariants (empty when all hold)."""
    eig = summary.eigenvalues
    top = float(eig[-1])
    tol = 1e-8 * (1.0 + top)
    bad = []
    if np.any(np.diff(eig) < 0):
        bad.append("sorted")
    if eig[0] < -tol:
        bad.append("psd")
    if abs(float(np.sum(eig)) - float(np.trace(V))) > 1e-8 * summary.p * max(1.0, top):
        bad.append("trace")
    if summary.n < summary.p and np.count_nonzero(eig < tol) < summary.p - summary.n:
        bad.append("rank")
    return bad


@dataclass
class EsdHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    clamped_low: int = 0
    clamped_high: int = 0

    @property
    def total(self):
        return int(self.counts.sum())

    def density(self):
        """Counts normalised so that density times bin width sums to one."""
        widths = np.diff(self.bin_edges)
        return self.counts / (self.total * widths)


def histogram(summary, bins=50, range=None):
    """Equal-width histogram of the eigenvalues; outliers clamp into the end bins."""
    eig = summary.eigenvalues if isinstance(summary, SpectrumSummary) else np.asarray(summary)
    lo, hi = (float(eig.min()), float(eig.max())) if range is None else map(float, range)
    if not hi > lo:
        raise DomainError(f"histogram range must be increasing, got ({lo}, {hi})")
    edges = np.linspace(lo, hi, int(bins) + 1)
    low = int(np.count_nonzero(eig < lo))
    high = int(np.count_nonzero(eig > hi))
    counts, _ = np.histogram(np.clip(eig, lo, hi), bins=edges)
    return EsdHistogram(edges, counts.astype(np.int64), low, high)


def fmt(x):
    return f"{float(x):.17g}"


def write_eigenvalues_csv(path, eigenvalues):
    with open(path, "w") as fh:
        fh.write("eigenvalue\n")
        for v in eigenvalues:
            fh.write(fmt(v) + "\n")


def write_histogram_csv(path, hist):
    with open(path, "w") as fh:
        fh.write("edge,count\n")
        for edge, count in zip(hist.bin_edges[:-1], hist.counts):
            fh.write(f"{fmt(edge)},{int(count)}\n")
        fh.write(f"{fmt(hist.bin_edges[-1])},0\n")
