"""Correlated Gaussian data matrices.

Entries of a ``p x n`` data matrix are indexed by pairs ``(a, b)`` with
0-based row ``a`` and column ``b``; the vectorised matrix is row-major, so
entry ``(a, b)`` sits at position ``a * n + b`` of the ``pn x pn``
covariance matrix.
"""
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import CapacityError, DomainError, ModelError
from .rng import make_rng, standard_normal

EXPLICIT_CAP = 4096
PIVOT_TOL = 1e-10

IDENTITY = "identity"
EQUICOVARIANT = "equicovariant"
EXPLICIT = "explicit"
DECAY_RULE = "decay_rule"


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    """Rule assigning ``Cov(X(a,b), X(c,d))`` on ``[p] x [n]``; unit diagonal always.

    Build instances with :func:`identity`, :func:`equicovariant`,
    :func:`explicit` or :func:`decay_rule` rather than directly.
    """

    kind: str
    p: int
    n: int
    rho: float = 0.0
    sigma: Optional[np.ndarray] = field(default=None, repr=False)
    rule: Optional[Callable] = field(default=None, repr=False)
    shared_z: bool = False
    label: str = ""

    @property
    def size(self):
        return self.p * self.n

    @property
    def equality_only(self):
        """True when covariances depend only on whether two index pairs coincide."""
        return self.kind in (IDENTITY, EQUICOVARIANT)

    @property
    def model_id(self):
        if self.label:
            return self.label
        if self.kind == EQUICOVARIANT:
            return f"equicovariant(rho={float(self.rho)!r})"
        return self.kind

    def index(self, a, b):
        return a * self.n + b

    def cov(self, e1, e2):
        """Covariance of the entries at index pairs ``e1`` and ``e2``."""
        if e1 == e2:
            return 1.0
        if self.kind == IDENTITY:
            return 0.0
        if self.kind == EQUICOVARIANT:
            return float(self.rho)
        if self.kind == EXPLICIT:
            return float(self.sigma[self.index(*e1), self.index(*e2)])
        return float(self.rule(self.n, tuple(e1), tuple(e2)))

    def cov_exact(self, e1, e2):
        """As :meth:`cov` but as a :class:`~fractions.Fraction` (floats convert exactly)."""
        if e1 == e2:
            return Fraction(1)
        if self.kind == IDENTITY:
            return Fraction(0)
        if self.kind == EQUICOVARIANT:
            return Fraction(self.rho)
        if self.kind == EXPLICIT:
            return Fraction(float(self.sigma[self.index(*e1), self.index(*e2)]))
        return Fraction(self.rule(self.n, tuple(e1), tuple(e2)))

    def cov_matrix(self):
        """Dense ``pn x pn`` covariance matrix."""
        m = self.size
        if self.kind == IDENTITY:
            return np.eye(m)
        if self.kind == EQUICOVARIANT:
            out = np.full((m, m), float(self.rho))
            np.fill_diagonal(out, 1.0)
            return out
        if self.kind == EXPLICIT:
            return np.array(self.sigma, dtype=float)
        if m > EXPLICIT_CAP:
            raise CapacityError(f"pn = {m} exceeds the dense cap {EXPLICIT_CAP}", m, EXPLICIT_CAP)
        pairs = [(a, b) for a in range(self.p) for b in range(self.n)]
        out = np.eye(m)
        for i in range(m):
            for j in range(i + 1, m):
                out[i, j] = out[j, i] = self.cov(pairs[i], pairs[j])
        return out


def _check_dims(p, n):
    if int(p) != p or int(n) != n or p < 1 or n < 1:
        raise DomainError(f"dimensions must be positive integers, got p={p!r}, n={n!r}")


def identity(p, n):
    _check_dims(p, n)
    return CorrelationModel(IDENTITY, int(p), int(n))


def equicovariant(p, n, rho, shared_z=False):
    """Every distinct pair of entries has covariance ``rho``.

    ``rho`` must lie in ``[-1/(pn-1), 1]``; negative values are only samplable
    through the explicit (Cholesky) route.
    """
    _check_dims(p, n)
    m = p * n
    lower = -1.0 / (m - 1) if m > 1 else -math.inf
    if not (lower - 1e-15 <= float(rho) <= 1.0):
        raise DomainError(f"equicovariance {rho!r} outside [{lower}, 1]")
    return CorrelationModel(EQUICOVARIANT, int(p), int(n), rho=rho, shared_z=shared_z)


def explicit(sigma, p, n, label=""):
    _check_dims(p, n)
    sigma = np.array(sigma, dtype=float)
    m = p * n
    if sigma.shape != (m, m):
        raise DomainError(f"sigma must be {m}x{m}, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=1e-12):
        raise ModelError("explicit covariance is not symmetric")
    return CorrelationModel(EXPLICIT, int(p), int(n), sigma=sigma, label=label)


def decay_rule(p, n, rule, label=""):
    """Off-diagonal covariances from ``rule(n, (a, b), (c, d))``."""
    _check_dims(p, n)
    return CorrelationModel(DECAY_RULE, int(p), int(n), rule=rule, label=label)


@dataclass(frozen=True)
class DecayBudget:
    """Uniform off-diagonal bound, either ``a_n / n`` or ``C / n**delta``."""

    a_n: Optional[Callable] = None
    C: float = 1.0
    delta: Optional[float] = None

    def __post_init__(self):
        if (self.a_n is None) == (self.delta is None):
            raise DomainError("give exactly one of a_n or delta")
        if self.delta is not None and (self.delta <= 0 or self.C <= 0):
            raise DomainError("C and delta must be positive")

    def bound(self, n):
        if self.a_n is not None:
            return float(self.a_n(n)) / n
        return self.C / n**self.delta

    def admits(self, model):
        return validate(model).max_offdiag <= self.bound(model.n) * (1 + 1e-12)

    def equicovariant(self, p, n, shared_z=False):
        """Equicovariant model saturating the bound at size ``n``."""
        return equicovariant(p, n, min(1.0, self.bound(n)), shared_z=shared_z)


@dataclass(frozen=True)
class ValidationReport:
    unit_diagonal: bool
    max_offdiag: float
    psd: bool


@dataclass(frozen=True)
class DataMatrix:
    entries: np.ndarray
    model_id: str = ""
    seed: Optional[int] = None

    @property
    def shape(self):
        return self.entries.shape


def pivoted_cholesky(sigma, tol=PIVOT_TOL):
    """Factor ``L`` (row-permuted lower triangle) with ``L @ L.T == sigma``.

    Diagonal pivoting; once the largest remaining pivot falls below ``tol``
    the trailing block is taken to be zero.  Raises :class:`ModelError` when
    ``sigma`` is not positive semidefinite (negative pivot, or a nonzero
    trailing block with vanishing diagonal).
    """
    a = np.array(sigma, dtype=float)
    m = a.shape[0]
    perm = np.arange(m)
    L = np.zeros((m, m))
    for j in range(m):
        piv = j + int(np.argmax(np.diag(a)[j:]))
        if a[piv, piv] < tol:
            tail = a[j:, j:]
            if np.min(np.diag(tail)) < -tol or np.max(np.abs(tail)) > math.sqrt(tol):
                raise ModelError("covariance matrix is not positive semidefinite")
            break
        if piv != j:
            a[[j, piv], :] = a[[piv, j], :]
            a[:, [j, piv]] = a[:, [piv, j]]
            L[[j, piv], :j] = L[[piv, j], :j]
            perm[[j, piv]] = perm[[piv, j]]
        d = math.sqrt(a[j, j])
        L[j, j] = d
        col = a[j + 1:, j] / d
        L[j + 1:, j] = col
        a[j + 1:, j + 1:] -= np.outer(col, col)
    # undo the symmetric permutation: sigma = P^T L L^T P
    out = np.zeros_like(L)
    out[perm] = L
    return out


def _is_psd_dense(sigma):
    try:
        np.linalg.cholesky(sigma)
        return True
    except np.linalg.LinAlgError:
        pass
    try:
        pivoted_cholesky(sigma)
        return True
    except ModelError:
        return False


def validate(model):
    if model.kind == IDENTITY:
        return ValidationReport(True, 0.0, True)
    m = model.size
    if model.kind == EQUICOVARIANT:
        rho = float(model.rho)
        lower = -1.0 / (m - 1) if m > 1 else -math.inf
        return ValidationReport(True, abs(rho) if m > 1 else 0.0, lower <= rho <= 1.0)
    if m > EXPLICIT_CAP:
        raise CapacityError(f"pn = {m} exceeds the factorisation cap {EXPLICIT_CAP}", m, EXPLICIT_CAP)
    sigma = model.cov_matrix()
    unit = bool(np.all(np.diag(sigma) == 1.0))
    off = np.abs(sigma - np.diag(np.diag(sigma)))
    max_off = float(off.max()) if m > 1 else 0.0
    return ValidationReport(unit, max_off, _is_psd_dense(sigma))


def counterexample_model(p, n, eps, c, in_J=True):
    """Equicovariant with ``rho = c * n**(eps - 1)`` on the subsequence, identity off it.

    Satisfies ``|Sigma| <= a_n / n`` with ``a_n = c * n**eps``.
    """
    if not (0 < eps < 1) or not (0 < c < 1):
        raise DomainError(f"need 0 < eps < 1 and 0 < c < 1, got eps={eps!r}, c={c!r}")
    if not in_J:
        return identity(p, n)
    model = equicovariant(p, n, c * n ** (eps - 1.0))
    return CorrelationModel(
        model.kind, model.p, model.n, rho=model.rho,
        label=f"counterexample(eps={eps!r},c={c!r},n={n})",
    )


def _seed_of(rng):
    return None if isinstance(rng, np.random.Generator) else int(rng)


def sample_equicovariant(p, n, rho, rng, shared_z=None, size=None):
    """``X = sqrt(1 - rho) * Y + sqrt(rho) * Z`` with ``Y`` i.i.d. N(0,1) and one ``Z``.

    ``Y`` is drawn before ``Z``.  With ``size`` set, returns a stack of
    ``size`` independent matrices (one ``Z`` each) as a plain array.
    """
    if not (0.0 <= rho <= 1.0):
        raise DomainError(f"rank-one construction needs rho in [0, 1], got {rho!r}")
    seed = _seed_of(rng)
    gen = make_rng(rng)
    reps = 1 if size is None else int(size)
    Y = standard_normal(gen, (reps, p, n))
    if shared_z is None:
        Z = standard_normal(gen, (reps, 1, 1))
    else:
        Z = np.full((reps, 1, 1), float(shared_z))
    X = math.sqrt(1.0 - rho) * Y + math.sqrt(rho) * Z
    if size is not None:
        return X
    return DataMatrix(X[0], f"equicovariant(rho={float(rho)!r})", seed)


def covariance_factor(model):
    """Factor ``L`` with ``L @ L.T`` equal to the model covariance."""
    sigma = model.cov_matrix()
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        return pivoted_cholesky(sigma)


def sample_explicit(model, rng, size=None, factor=None):
    """Vectorised draw ``L @ g``, reshaped row-major to ``p x n``."""
    if model.size > EXPLICIT_CAP:
        raise CapacityError(f"pn = {model.size} exceeds the factorisation cap", model.size, EXPLICIT_CAP)
    L = covariance_factor(model) if factor is None else factor
    seed = _seed_of(rng)
    gen = make_rng(rng)
    reps = 1 if size is None else int(size)
    g = standard_normal(gen, (reps, model.size))
    X = (g @ L.T).reshape(reps, model.p, model.n)
    if size is not None:
        return X
    return DataMatrix(X[0], model.model_id, seed)


def sample(model, rng, size=None):
    """Draw from any model, choosing the rank-one route when it applies."""
    if model.kind == IDENTITY:
        out = sample_equicovariant(model.p, model.n, 0.0, rng, size=size)
    elif model.kind == EQUICOVARIANT and float(model.rho) >= 0:
        out = sample_equicovariant(model.p, model.n, float(model.rho), rng, size=size)
    else:
        return sample_explicit(model, rng, size=size)
    if size is None:
        return DataMatrix(out.entries, model.model_id, out.seed)
    return out


def coupled_equicovariant_path(y, n_grid, delta, rng):
    """Data matrices along ``n_grid`` sharing one ``Z`` and nested ``Y`` blocks.

    Entry ``(i, j)`` of ``Y`` is the same for every ``n`` that contains it, so
    the sequence realises an almost-sure coupling; ``p = round(y * n)``.
    """
    gen = make_rng(rng)
    n_max = max(n_grid)
    p_max = max(round(y * n) for n in n_grid)
    Y = standard_normal(gen, (p_max, n_max))
    Z = standard_normal(gen)
    out = []
    for n in n_grid:
        p = round(y * n)
        rho = n ** (-delta)
        X = math.sqrt(1.0 - rho) * Y[:p, :n] + math.sqrt(rho) * Z
        out.append(DataMatrix(X, f"equicovariant(rho={rho!r})", _seed_of(rng)))
    return out, Z


def load_explicit_csv(path, p, n, label=""):
    """Explicit model from ``a,b,c,d,value`` rows with 1-based indices.

    Unlisted off-diagonal entries are 0 and the diagonal is 1; a listed
    diagonal entry other than 1 is rejected.
    """
    _check_dims(p, n)
    m = p * n
    if m > EXPLICIT_CAP:
        raise CapacityError(f"pn = {m} exceeds the cap {EXPLICIT_CAP}", m, EXPLICIT_CAP)
    sigma = np.eye(m)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                a, b, c, d = (int(v) for v in row[:4])
                value = float(row[4])
            except ValueError:
                if reader.line_num == 1:
                    continue  # header
                raise ModelError(f"bad covariance row {row!r}")
            if not (1 <= a <= p and 1 <= c <= p and 1 <= b <= n and 1 <= d <= n):
                raise ModelError(f"index out of range in row {row!r}")
            i, j = (a - 1) * n + (b - 1), (c - 1) * n + (d - 1)
            if i == j:
                if value != 1.0:
                    raise ModelError(f"diagonal entry must be 1, got {value} at ({a},{b})")
                continue
            sigma[i, j] = sigma[j, i] = value
    return explicit(sigma, p, n, label=label or f"csv:{path}")
