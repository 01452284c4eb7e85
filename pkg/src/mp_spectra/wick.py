"""Exact Gaussian moments of ESD moments by Isserlis/Wick summation.

The k-th ESD moment of ``V = X X^T / n`` expands as

    (1 / (p n^k)) * sum over s in [p]^k, t in [n]^k of
        X(s1,t1) X(s2,t1) X(s2,t2) X(s3,t2) ... X(sk,tk) X(s1,tk)

and each product of jointly Gaussian entries has expectation equal to the
sum over pair partitions of the products of pairwise covariances.  The
functions here evaluate these sums by brute force (with memoisation over
factor multisets); they are the ground truth for the Monte Carlo paths.

Positions inside a product are 0-based.
"""
import itertools
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DomainError
from .rng import make_rng
from .spectral import eigenvalues_sym, sample_covariance

MAX_FACTORS = 12
COST_CAP = 10**8


def double_factorial(m):
    """``m!!`` for odd ``m`` (``(-1)!! = 1``)."""
    return math.prod(range(m, 0, -2)) if m > 0 else 1


@dataclass(frozen=True)
class CyclePair:
    s: tuple
    t: tuple

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(int(v) for v in self.s))
        object.__setattr__(self, "t", tuple(int(v) for v in self.t))
        if len(self.s) != len(self.t) or not self.s:
            raise DomainError("s and t must be nonempty and of equal length")

    @property
    def k(self):
        return len(self.s)

    def check_range(self, p, n):
        if min(self.s) < 0 or max(self.s) >= p or min(self.t) < 0 or max(self.t) >= n:
            raise DomainError(f"cycle {self} out of range for p={p}, n={n}")


@dataclass(frozen=True)
class EdgeList:
    edges: tuple
    parity: tuple

    def __len__(self):
        return len(self.edges)


def cycle_edges(s, t):
    """The ``2k`` index pairs of a cycle, alternating down and up."""
    k = len(s)
    out = []
    for l in range(k):
        out.append((s[l], t[l]))
        out.append((s[(l + 1) % k], t[l]))
    return out


def edges_of_cycle(cp):
    edges = tuple(cycle_edges(cp.s, cp.t))
    return EdgeList(edges, ("down", "up") * cp.k)


@dataclass(frozen=True)
class PairPartition:
    blocks: tuple  # ((i, j), ...) with i < j, sorted by i


def _pairings(items):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for tail in _pairings(rest[:i] + rest[i + 1:]):
            yield ((first, other),) + tail


def _check_even(m):
    if int(m) != m or m < 0 or m % 2:
        raise DomainError(f"pair partitions need an even size, got {m!r}")
    if m > MAX_FACTORS:
        raise DomainError(f"pair partitions capped at {MAX_FACTORS} elements, got {m}")


def enumerate_pair_partitions(m):
    """All ``(m-1)!!`` pair partitions of ``{0, ..., m-1}``, each exactly once."""
    _check_even(m)
    for blocks in _pairings(tuple(range(m))):
        yield PairPartition(blocks)


@lru_cache(maxsize=None)
def _partition_array(m):
    arr = np.array([blocks for blocks in _pairings(tuple(range(m)))], dtype=np.intp)
    return arr.reshape(-1, m // 2, 2)


@lru_cache(maxsize=None)
def _noncontained_mask(m):
    arr = _partition_array(m)
    half = m // 2
    return np.any((arr[:, :, 0] < half) != (arr[:, :, 1] < half), axis=1)


def isserlis_expectation(cov, noncontained_only=False):
    """``E[Y_0 ... Y_{m-1}]`` for centred Gaussians with covariance matrix ``cov``.

    With ``noncontained_only`` the sum runs over partitions having at least
    one block that joins the first half of the factors to the second half.
    """
    cov = np.asarray(cov, dtype=float)
    m = cov.shape[0]
    if m % 2:
        return 0.0
    _check_even(m)
    if m == 0:
        return 1.0
    arr = _partition_array(m)
    if noncontained_only:
        arr = arr[_noncontained_mask(m)]
    prods = np.prod(cov[arr[:, :, 0], arr[:, :, 1]], axis=1)
    return math.fsum(prods)


def isserlis_expectation_exact(cov, noncontained_only=False):
    """Rational counterpart of :func:`isserlis_expectation`; ``cov`` holds Fractions."""
    m = len(cov)
    if m % 2:
        return Fraction(0)
    _check_even(m)
    total = Fraction(0)
    half = m // 2
    for blocks in _pairings(tuple(range(m))):
        if noncontained_only and not any((i < half) != (j < half) for i, j in blocks):
            continue
        term = Fraction(1)
        for i, j in blocks:
            term *= cov[i][j]
            if not term:
                break
        total += term
    return total


# Memo keys.  When covariances depend only on index coincidence the Wick sum
# is determined by the multiplicity pattern; otherwise by the sorted multiset.
def _single_key(model, edges):
    if model.equality_only:
        return tuple(sorted(Counter(edges).values()))
    return tuple(sorted(edges))


def _pair_key(model, edges1, edges2):
    if model.equality_only:
        c1, c2 = Counter(edges1), Counter(edges2)
        return tuple(sorted((c1.get(e, 0), c2.get(e, 0)) for e in set(c1) | set(c2)))
    return (tuple(sorted(edges1)), tuple(sorted(edges2)))


def _factors_of_single(model, key):
    if model.equality_only:
        return [lab for lab, mult in enumerate(key) for _ in range(mult)]
    return list(key)


def _factors_of_pair(model, key):
    if model.equality_only:
        first = [lab for lab, (m1, _) in enumerate(key) for _ in range(m1)]
        second = [lab for lab, (_, m2) in enumerate(key) for _ in range(m2)]
        return first + second
    return list(key[0]) + list(key[1])


def _factor_cov(model, factors, exact):
    m = len(factors)
    if model.equality_only:
        one, off = (Fraction(1), model.cov_exact((0, 0), (0, 1))) if exact else (1.0, model.cov((0, 0), (0, 1)))
        if model.size == 1:
            off = Fraction(0) if exact else 0.0  # a single entry: every factor coincides
        rows = [[one if factors[i] == factors[j] else off for j in range(m)] for i in range(m)]
    else:
        pick = model.cov_exact if exact else model.cov
        rows = [[pick(factors[i], factors[j]) for j in range(m)] for i in range(m)]
    return rows if exact else np.array(rows, dtype=float)


def _evaluate(model, factors, exact, noncontained_only=False):
    cov = _factor_cov(model, factors, exact)
    if exact:
        return isserlis_expectation_exact(cov, noncontained_only)
    return isserlis_expectation(cov, noncontained_only)


def wick_expectation(model, cp, exact=False):
    """``E X(s, t)`` for one cycle under ``model``."""
    if 2 * cp.k > MAX_FACTORS:
        raise CapacityError(f"2k = {2 * cp.k} factors exceeds the cap {MAX_FACTORS}", 2 * cp.k, MAX_FACTORS)
    cp.check_range(model.p, model.n)
    return _evaluate(model, cycle_edges(cp.s, cp.t), exact)


def _check_k(k):
    if int(k) != k or k < 1:
        raise DomainError(f"moment order must be a positive integer, got {k!r}")
    return int(k)


def expected_moment_cost(p, n, k):
    return p**k * n**k * double_factorial(2 * k - 1)


def moment_covariance_cost(p, n, k):
    return p ** (2 * k) * n ** (2 * k) * double_factorial(4 * k - 1)


def _enforce(cost, what, p, n, k):
    if cost > COST_CAP:
        raise CapacityError(
            f"{what} at (p={p}, n={n}, k={k}) costs {cost} > {COST_CAP}", cost, COST_CAP
        )


def _key_counts(model, k, first_rows):
    counts = Counter()
    for s0 in first_rows:
        for s_rest in itertools.product(range(model.p), repeat=k - 1):
            s = (s0,) + s_rest
            for t in itertools.product(range(model.n), repeat=k):
                counts[_single_key(model, cycle_edges(s, t))] += 1
    return counts


def _cycle_key_counts(model, k, workers=1):
    rows = list(range(model.p))
    if workers <= 1 or model.p == 1:
        return _key_counts(model, k, rows)
    chunks = [rows[i::workers] for i in range(workers)]
    total = Counter()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_key_counts, [model] * len(chunks), [k] * len(chunks), chunks):
            total.update(part)
    return total


def exact_expected_moment(model, k, exact=False, workers=1):
    """``E <mu_n, x^k>``: the unsorted full Wick sum over all cycles.

    Partial sums are merged as exact integer multiplicities per memo key and
    reduced with :func:`math.fsum`, so the result does not depend on
    ``workers``.  With ``exact=True`` returns a :class:`~fractions.Fraction`.
    """
    k = _check_k(k)
    p, n = model.p, model.n
    _enforce(expected_moment_cost(p, n, k), "expected moment", p, n, k)
    if 2 * k > MAX_FACTORS:
        raise CapacityError(f"2k = {2 * k} exceeds the cap {MAX_FACTORS}", 2 * k, MAX_FACTORS)
    counts = _cycle_key_counts(model, k, workers)
    keys = sorted(counts)
    if exact:
        total = sum((counts[key] * _evaluate(model, _factors_of_single(model, key), True) for key in keys), Fraction(0))
        return total / (p * n**k)
    total = math.fsum(counts[key] * _evaluate(model, _factors_of_single(model, key), False) for key in keys)
    return total / (p * n**k)


def _all_cycles(p, n, k):
    return [
        cycle_edges(s, t)
        for s in itertools.product(range(p), repeat=k)
        for t in itertools.product(range(n), repeat=k)
    ]


def _pair_sum(model, k, exact, noncontained_only):
    p, n = model.p, model.n
    cycles = _all_cycles(p, n, k)
    counts = Counter()
    for i, e1 in enumerate(cycles):
        counts[_pair_key(model, e1, e1)] += 1
        for e2 in cycles[i + 1:]:
            # ordered pairs (i, j) and (j, i) give equal Wick sums
            counts[_pair_key(model, e1, e2)] += 2
    keys = sorted(counts)
    norm = p * p * n ** (2 * k)
    if exact:
        total = sum(
            (counts[key] * _evaluate(model, _factors_of_pair(model, key), True, noncontained_only) for key in keys),
            Fraction(0),
        )
        return total / norm
    total = math.fsum(
        counts[key] * _evaluate(model, _factors_of_pair(model, key), False, noncontained_only) for key in keys
    )
    return total / norm


def _check_pair_caps(model, k):
    p, n = model.p, model.n
    if 4 * k > MAX_FACTORS:
        raise CapacityError(f"4k = {4 * k} factors exceeds the cap {MAX_FACTORS}", 4 * k, MAX_FACTORS)
    _enforce(moment_covariance_cost(p, n, k), "moment covariance", p, n, k)


def exact_moment_covariance(model, k, exact=False):
    """``Var <mu_n, x^k>`` summing only non-contained partitions of each cycle pair."""
    k = _check_k(k)
    _check_pair_caps(model, k)
    return _pair_sum(model, k, exact, noncontained_only=True)


def exact_second_moment(model, k, exact=False):
    """``E[<mu_n, x^k>^2]`` from the full Wick expansion over ``4k`` factors."""
    k = _check_k(k)
    _check_pair_caps(model, k)
    return _pair_sum(model, k, exact, noncontained_only=False)


def mc_expected_moment(model, k, replicates, rng, chunk=20000):
    """Monte Carlo mean and standard error of ``<mu_n, x^k>``."""
    from .ensembles import sample

    k = _check_k(k)
    if replicates < 2:
        raise DomainError("need at least two replicates")
    gen = make_rng(rng)
    values = np.empty(int(replicates))
    done = 0
    while done < replicates:
        size = min(chunk, replicates - done)
        X = sample(model, gen, size=size)
        eig = eigenvalues_sym(sample_covariance(X))
        values[done:done + size] = np.mean(eig**k, axis=1)
        done += size
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(replicates))


def wick_record(model, k, value, method):
    """JSON-ready record ``{model, p, n, k, value, method}``."""
    rec = {"model": model.model_id, "p": model.p, "n": model.n, "k": int(k), "method": method}
    if isinstance(value, Fraction):
        rec["value"] = float(value)
        rec["value_exact"] = f"{value.numerator}/{value.denominator}"
    elif isinstance(value, tuple):
        rec["value"], rec["standard_error"] = value
    else:
        rec["value"] = float(value)
    return rec


def write_records(path, records):
    with open(path, "w") as fh:
        json.dump(records, fh, indent=2)
