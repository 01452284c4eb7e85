"""Marchenko-Pastur law with ratio index ``y``.

The law has the Lebesgue density ``sqrt((y+ - x)(x - y-)) / (2 pi x y)`` on
``(y-, y+)`` with ``y+- = (1 +- sqrt(y))**2`` and, when ``y > 1``, an atom of
mass ``1 - 1/y`` at zero.  The atom is kept out of :func:`mp_density` and is
reported by :attr:`MPLaw.atom_mass`.
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError

QUAD_TOL = 1e-10


def _check_ratio(y):
    if isinstance(y, Fraction):
        ok = y > 0
    else:
        ok = math.isfinite(float(y)) and float(y) > 0
    if not ok:
        raise DomainError(f"aspect ratio must be positive and finite, got {y!r}")


@dataclass(frozen=True)
class MPLaw:
    y: float

    def __post_init__(self):
        _check_ratio(self.y)

    @property
    def y_minus(self):
        return (1.0 - math.sqrt(self.y)) ** 2

    @property
    def y_plus(self):
        return (1.0 + math.sqrt(self.y)) ** 2

    @property
    def atom_mass(self):
        return max(0.0, 1.0 - 1.0 / self.y)

    def moment(self, k):
        return mp_moment(k, self.y)

    def density(self, x):
        return mp_density(x, self.y)

    def cdf(self, x):
        return mp_cdf(x, self.y)


def _moment_terms(k, y):
    return (y**r * math.comb(k, r) * math.comb(k - 1, r) / (r + 1) for r in range(k))


def mp_moment(k, y):
    """k-th moment: sum over r < k of y**r/(r+1) * C(k, r) * C(k-1, r)."""
    if int(k) != k or k < 1:
        raise DomainError(f"moment order must be a positive integer, got {k!r}")
    _check_ratio(y)
    return math.fsum(_moment_terms(int(k), float(y)))


def mp_moment_exact(k, y):
    """Exact rational moment; ``y`` is converted with :class:`fractions.Fraction`."""
    if int(k) != k or k < 1:
        raise DomainError(f"moment order must be a positive integer, got {k!r}")
    y = Fraction(y)
    _check_ratio(y)
    k = int(k)
    return sum(
        (y**r * Fraction(math.comb(k, r) * math.comb(k - 1, r), r + 1) for r in range(k)),
        Fraction(0),
    )


def mp_density(x, y):
    """Continuous part of the law; zero outside the open support interval.

    Accepts scalars or arrays.
    """
    _check_ratio(y)
    law = MPLaw(float(y))
    lo, hi = law.y_minus, law.y_plus
    xa = np.asarray(x, dtype=float)
    inside = (xa > lo) & (xa < hi) & (xa > 0)
    safe = np.where(inside, xa, 1.0)
    val = np.sqrt(np.clip((hi - safe) * (safe - lo), 0.0, None)) / (2.0 * math.pi * safe * law.y)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


# The substitution x = y- + (y+ - y-) sin^2(theta/2), theta in [0, pi], turns
# the square-root edges (and the 1/sqrt(x) pole at y = 1) into a smooth
# integrand on a finite interval.
def _theta_of(x, lo, hi):
    frac = min(1.0, max(0.0, (x - lo) / (hi - lo)))
    return 2.0 * math.asin(math.sqrt(frac))


def _x_of(theta, lo, hi):
    return lo + (hi - lo) * math.sin(0.5 * theta) ** 2


def _mass_integrand(theta, y, lo, hi, power=0):
    half_width = 0.5 * (hi - lo)
    x = _x_of(theta, lo, hi)
    s = math.sin(theta)
    if x <= 0.0:
        # lo == 0 (y == 1): sin^2(theta)/x -> (1 + cos theta) * 2 / (hi - lo)
        base = half_width**2 * 2.0 * (1.0 + math.cos(theta)) / (hi - lo) / (2.0 * math.pi * y)
        return base * x**power
    return half_width**2 * s * s * x ** (power - 1) / (2.0 * math.pi * y)


def _quad(fn, a, b, args):
    val, _ = integrate.quad(fn, a, b, args=args, epsabs=QUAD_TOL * 1e-2, epsrel=QUAD_TOL, limit=200)
    return val


def mp_cdf(x, y):
    """Distribution function, atom at zero included (right-continuous)."""
    law = MPLaw(float(y))
    if x < 0:
        return 0.0
    lo, hi = law.y_minus, law.y_plus
    if x > hi:
        return 1.0
    if x <= lo:
        return law.atom_mass
    theta = _theta_of(x, lo, hi)
    cont = _quad(_mass_integrand, 0.0, theta, (law.y, lo, hi, 0))
    return min(1.0, law.atom_mass + cont)


@lru_cache(maxsize=256)
def quadrature_moment(k, y):
    """k-th moment by adaptive quadrature of the density plus the atom term.

    Independent of the closed-form sum; used to cross-check :func:`mp_moment`.
    """
    law = MPLaw(float(y))
    lo, hi = law.y_minus, law.y_plus
    cont = _quad(_mass_integrand, 0.0, math.pi, (law.y, lo, hi, int(k)))
    return cont + (law.atom_mass if k == 0 else 0.0)
