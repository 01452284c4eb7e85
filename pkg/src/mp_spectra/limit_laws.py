"""Limit laws for the largest eigenvalue under rank-one equicovariance.

With correlation ``rho = n**-delta`` the scaled operator norm has three
regimes: a point mass at the bulk edge ``y+ = (1 + sqrt(y))**2`` for
``delta > 1``, the law of ``y Z**2`` (after scaling by ``n**(delta-1)``) for
``delta < 1``, and for ``delta = 1`` the mixed law of

    y+                     if Z**2 <= 1 + 1/sqrt(y)
    h(Z**2) = Z**2 (y + 1/(Z**2 - 1))   otherwise

where ``Z`` is standard normal.  ``h`` is the detached-spike branch of the
rank-one spike map, which is also exposed here.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rng import make_rng, standard_normal

BISECT_TOL = 1e-12
BY_N = "by_n"
BY_P = "by_p"


def normal_cdf(x):
    """Standard normal CDF through ``erfc``, accurate in both tails."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _check_y(y):
    if not (math.isfinite(y) and y > 0):
        raise DomainError(f"aspect ratio must be positive, got {y!r}")


def bulk_edge(y):
    return (1.0 + math.sqrt(y)) ** 2


def spike_threshold(y):
    return 1.0 + 1.0 / math.sqrt(y)


def spike_value(eta_sq, y, normalization=BY_N):
    """Limiting top eigenvalue for a rank-one spike of strength ``eta_sq``.

    ``by_n`` normalises the sample covariance by ``n``; ``by_p`` by ``p``.
    """
    _check_y(y)
    if eta_sq < 0:
        raise DomainError(f"spike strength must be nonnegative, got {eta_sq!r}")
    above = eta_sq > spike_threshold(y)
    if normalization == BY_N:
        return eta_sq * (y + 1.0 / (eta_sq - 1.0)) if above else bulk_edge(y)
    if normalization == BY_P:
        return eta_sq * (1.0 + (1.0 / y) / (eta_sq - 1.0)) if above else (1.0 + 1.0 / math.sqrt(y)) ** 2
    raise DomainError(f"unknown normalization {normalization!r}")


@dataclass(frozen=True)
class SpikeMap:
    y: float
    normalization: str = BY_N

    def __call__(self, eta_sq):
        return spike_value(eta_sq, self.y, self.normalization)


def critical_branch(u, y):
    """``h(u) = u y + u / (u - 1)``; increasing for ``u`` above the spike threshold."""
    return u * y + u / (u - 1.0)


def critical_branch_inverse(t, y, tol=BISECT_TOL):
    """Solve ``h(u) = t`` for ``u`` above the threshold by bracketed bisection.

    ``h(u) >= u y`` puts the root below ``t / y``; the bracket is
    ``[threshold, t / y + 2]``.  Requires ``t >= y+`` (the branch minimum).
    """
    _check_y(y)
    lo = spike_threshold(y)
    if t < bulk_edge(y):
        raise DomainError(f"t={t} lies below the branch minimum {bulk_edge(y)}")
    hi = t / y + 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if critical_branch(mid, y) < t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def chi2_1_cdf(u):
    """``P(Z**2 <= u)``."""
    if u <= 0:
        return 0.0
    return math.erf(math.sqrt(u / 2.0))


def critical_atom_mass(y):
    return chi2_1_cdf(spike_threshold(y))


def critical_cdf(t, y):
    """CDF of the mixed critical law: atom at ``y+``, continuous part above it."""
    _check_y(y)
    edge = bulk_edge(y)
    if t < edge:
        return 0.0
    if math.isinf(t):
        return 1.0
    return chi2_1_cdf(critical_branch_inverse(t, y))


def subcritical_cdf(t, y):
    """``P(y Z**2 <= t)``."""
    _check_y(y)
    return chi2_1_cdf(t / y) if t > 0 else 0.0


def supercritical_cdf(t, y):
    _check_y(y)
    return 1.0 if t >= bulk_edge(y) else 0.0


SUPERCRITICAL = "supercritical"
SUBCRITICAL = "subcritical"
CRITICAL = "critical"


@dataclass(frozen=True)
class OpNormLimitLaw:
    regime: str
    y: float

    def __post_init__(self):
        _check_y(self.y)
        if self.regime not in (SUPERCRITICAL, SUBCRITICAL, CRITICAL):
            raise DomainError(f"unknown regime {self.regime!r}")

    @classmethod
    def from_delta(cls, delta, y):
        if delta > 1:
            return cls(SUPERCRITICAL, y)
        if delta < 1:
            return cls(SUBCRITICAL, y)
        return cls(CRITICAL, y)

    @property
    def atoms(self):
        if self.regime == SUPERCRITICAL:
            return (bulk_edge(self.y),)
        if self.regime == CRITICAL:
            return (bulk_edge(self.y),)
        return ()

    def cdf(self, t):
        fn = {SUPERCRITICAL: supercritical_cdf, SUBCRITICAL: subcritical_cdf, CRITICAL: critical_cdf}[self.regime]
        return fn(t, self.y)

    def transform(self, z):
        """The limit as a function of the standard normal ``z``."""
        u = z * z
        if self.regime == SUPERCRITICAL:
            return bulk_edge(self.y)
        if self.regime == SUBCRITICAL:
            return self.y * u
        if u <= spike_threshold(self.y):
            return bulk_edge(self.y)
        return critical_branch(u, self.y)


def sample_limit(law, rng, size=None):
    """Draw from ``law`` by mapping standard normals through its branch map."""
    gen = make_rng(rng)
    z = standard_normal(gen, size)
    if size is None:
        return law.transform(z)
    return np.array([law.transform(v) for v in np.ravel(z)]).reshape(np.shape(z))


def ks_statistic(samples, cdf, atoms=()):
    """Exact sup-distance between the empirical CDF and ``cdf``.

    Both one-sided gaps are taken at every sample point, with the left limit
    ``F(x-)`` of the reference evaluated just below ``x`` so jumps of either
    function are handled.  ``atoms`` adds the reference jump locations as
    extra evaluation points.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    m = x.size
    if m == 0:
        raise DomainError("KS statistic of an empty sample")
    points = np.unique(np.concatenate([x, np.asarray(atoms, dtype=float)]))
    right = np.searchsorted(x, points, side="right") / m
    left = np.searchsorted(x, points, side="left") / m
    best = 0.0
    for pt, fr, fl in zip(points, right, left):
        ref = cdf(pt)
        ref_left = cdf(np.nextafter(pt, -np.inf))
        best = max(best, abs(fr - ref), abs(fl - ref_left))
    return float(best)


def write_cdf_table(path, grid, cdf):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "F"])
        for t in grid:
            w.writerow([f"{float(t):.17g}", f"{float(cdf(t)):.17g}"])
