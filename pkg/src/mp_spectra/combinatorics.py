"""Edge-multiplicity profiles of index cycles and exhaustive counting audits.

A cycle ``(s, t)`` with ``s in [p]^k`` and ``t in [n]^k`` spans a bipartite
multigraph with ``2k`` edges (see :func:`mp_spectra.wick.cycle_edges`).  An
edge is the pair ``(S-node, T-node)``, so S- and T-nodes with equal values
stay distinct.  The profile counts, for each multiplicity ``l``, the
distinct edges occurring exactly ``l`` times.

The audits enumerate every cycle at small ``(p, n, k)`` and test the vertex
and tuple-count bounds that drive the moment method.  Each check records at
most ``MAX_WITNESSES`` failing cycles.
"""
import csv
import itertools
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapacityError, DomainError
from .wick import CyclePair, cycle_edges, double_factorial

ENUM_CAP = 10**7
MAX_WITNESSES = 10


@dataclass(frozen=True, order=True)
class Profile:
    """Sparse profile: sorted ``(multiplicity, count)`` pairs with count > 0."""

    counts: tuple

    @classmethod
    def from_map(cls, mapping):
        return cls(tuple(sorted((int(l), int(c)) for l, c in mapping.items() if c)))

    def __getitem__(self, ell):
        return dict(self.counts).get(ell, 0)

    @property
    def total_edges(self):
        return sum(l * c for l, c in self.counts)

    @property
    def distinct(self):
        return sum(c for _, c in self.counts)

    @property
    def has_odd(self):
        return any(l % 2 for l, _ in self.counts)

    def dense(self, k):
        return tuple(self[l] for l in range(1, 2 * k + 1))

    def encode(self):
        return ";".join(f"{l}:{c}" for l, c in self.counts)


@dataclass(frozen=True)
class CycleStats:
    r: int
    c: int
    ell: int
    singles: int
    doubles: int
    distinct_edges: int


def _as_st(cp):
    return (cp.s, cp.t) if isinstance(cp, CyclePair) else cp


def profile_of(cp):
    s, t = _as_st(cp)
    mult = Counter(cycle_edges(s, t))
    return Profile.from_map(Counter(mult.values()))


def cycle_stats(cp, profile=None):
    s, t = _as_st(cp)
    prof = profile if profile is not None else profile_of((s, t))
    r, c = len(set(s)), len(set(t))
    return CycleStats(r, c, r + c, prof[1], prof[2], prof.distinct)


def _check_enum(p, n, k, cap=ENUM_CAP, pairs=False):
    if int(k) != k or k < 1 or p < 1 or n < 1:
        raise DomainError(f"need p, n, k >= 1, got ({p}, {n}, {k})")
    cost = (p * n) ** (2 * k if pairs else k)
    if cost > cap:
        raise CapacityError(f"enumeration at (p={p}, n={n}, k={k}) needs {cost} > {cap}", cost, cap)


def enumerate_cycles(p, n, k, s_first=None):
    """Yield ``(CyclePair, Profile, CycleStats)`` for every cycle, each exactly once.

    ``s_first`` restricts to cycles with ``s[0]`` in the given values, which
    partitions the stream for parallel consumers.  Indices are 0-based.
    """
    _check_enum(p, n, k)
    firsts = range(p) if s_first is None else s_first
    for s0 in firsts:
        for rest in itertools.product(range(p), repeat=k - 1):
            s = (s0,) + rest
            for t in itertools.product(range(n), repeat=k):
                prof = profile_of((s, t))
                yield CyclePair(s, t), prof, cycle_stats((s, t), prof)


def profile_census(p, n, k):
    """``{Profile: number of cycles}``."""
    return Counter(prof for _, prof, _ in enumerate_cycles(p, n, k))


def write_census_csv(path, census):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["profile", "count"])
        for prof in sorted(census):
            w.writerow([prof.encode(), census[prof]])


@dataclass
class AuditReport:
    p: int
    n: int
    k: int
    checks: dict = field(default_factory=dict)  # name -> True/False
    violations: list = field(default_factory=list)
    extremes: dict = field(default_factory=dict)  # name -> tightest slack seen
    cycles_checked: int = 0

    @property
    def n_violations(self):
        return len(self.violations)

    @property
    def passed(self):
        return all(self.checks.values())

    def record(self, name, ok, witness=None, slack=None):
        if name not in self.checks:
            self.checks[name] = True
        if slack is not None:
            prev = self.extremes.get(name)
            if prev is None or slack < prev:
                self.extremes[name] = slack
        if not ok:
            self.checks[name] = False
            if len(self.violations) < MAX_WITNESSES:
                self.violations.append({"check": name, "witness": witness})

    def merge(self, other):
        for name, ok in other.checks.items():
            self.checks[name] = self.checks.get(name, True) and ok
        for name, slack in other.extremes.items():
            if name not in self.extremes or slack < self.extremes[name]:
                self.extremes[name] = slack
        room = MAX_WITNESSES - len(self.violations)
        self.violations.extend(other.violations[:max(room, 0)])
        self.cycles_checked += other.cycles_checked
        return self

    def to_dict(self):
        return {
            "p": self.p, "n": self.n, "k": self.k,
            "cycles_checked": self.cycles_checked,
            "violations": self.n_violations,
            "checks": dict(self.checks),
            "extremes": {k: float(v) for k, v in self.extremes.items()},
            "witnesses": self.violations,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, default=str)


def _path_checks(report, st, stats, k):
    """The per-cycle statements relating nodes, distinct entries, singles and doubles."""
    ell, z, s, d = stats.ell, stats.distinct_edges, stats.singles, stats.doubles
    w = {"s": st[0], "t": st[1]}
    report.record("distinct_entries_at_least_nodes_minus_one", z >= ell - 1, w, z - (ell - 1))
    report.record("distinct_entries_at_most_min_2k_quarter_nodes_sq", z <= min(2 * k, ell * ell / 4), w,
                  min(2 * k, ell * ell / 4) - z)
    if s == 0:
        report.record("no_singles_nodes_between_2_and_k_plus_1", 2 <= ell <= k + 1, w, min(ell - 2, k + 1 - ell))
        report.record("no_singles_doubles_at_least_3l_minus_2k_minus_3", d >= 3 * ell - 2 * k - 3, w,
                      d - (3 * ell - 2 * k - 3))
    if ell >= k + 2:
        report.record("many_nodes_force_singles", s >= 2 * ell - 2 * k - 2, w, s - (2 * ell - 2 * k - 2))
    if s >= 1:
        report.record("singles_doubles_at_least_3l_minus_2s_minus_2k_minus_3", d >= 3 * ell - 2 * s - 2 * k - 3, w,
                      d - (3 * ell - 2 * s - 2 * k - 3))
        lower = max(4.0, 2.0 * math.sqrt(s))
        report.record("singles_node_range", lower <= ell <= k + s / 2, w, min(ell - lower, k + s / 2 - ell))


def audit_counting_lemmas(p, n, k):
    """Exhaustive audit of the vertex and tuple-count bounds at ``(p, n, k)``."""
    _check_enum(p, n, k)
    report = AuditReport(p, n, k)
    by_ab = Counter()
    by_nodes = Counter()
    by_profile = Counter()
    big = max(p, n)
    for cp, prof, stats in enumerate_cycles(p, n, k):
        report.cycles_checked += 1
        w = {"s": cp.s, "t": cp.t}
        by_ab[(stats.r, stats.c)] += 1
        by_nodes[stats.ell] += 1
        by_profile[prof] += 1
        report.record("profile_sums_to_2k", prof.total_edges == 2 * k, w)
        bound = 1 + prof.distinct
        report.record("nodes_at_most_one_plus_distinct_edges", stats.ell <= bound, w, bound - stats.ell)
        if prof.has_odd:
            report.record("odd_edge_nodes_at_most_distinct_edges", stats.ell <= prof.distinct, w,
                          prof.distinct - stats.ell)
        _path_checks(report, (cp.s, cp.t), stats, k)

    for (a, b), count in sorted(by_ab.items()):
        w = {"a": a, "b": b, "count": count}
        first = (a * b) ** k * p**a * n**b
        report.record("tuples_with_a_rows_b_columns", count <= first, w, first - count)
        report.record("tuples_with_a_rows_b_columns_coarse", first <= k ** (2 * k) * p**a * n**b, w)
    cumulative = 0
    for ell in range(2, 2 * k + 1):
        cumulative += by_nodes.get(ell, 0)
        w = {"ell": ell, "count": cumulative}
        bound = ell ** (2 * k + 2) * big**ell
        report.record("tuples_with_at_most_l_nodes", cumulative <= bound, w, bound - cumulative)
    for prof, count in sorted(by_profile.items()):
        w = {"profile": prof.encode(), "count": count}
        exponent = prof.distinct if prof.has_odd else 1 + prof.distinct
        bound = (2 * k) ** (2 * k + 2) * big**exponent
        report.record("tuples_per_profile", count <= bound, w, bound - count)
    n_profiles = count_profiles(k)
    report.record("profile_count_at_most_16_pow_k", n_profiles <= 16**k, {"profiles": n_profiles},
                  16**k - n_profiles)
    report.record("profile_count_at_most_central_binomial", n_profiles <= math.comb(4 * k, 2 * k),
                  {"profiles": n_profiles})
    report.record("cycle_space_partition", sum(by_profile.values()) == (p * n) ** k,
                  {"total": sum(by_profile.values())})
    report.record("realized_profiles_admissible", len(by_profile) <= n_profiles, {"realized": len(by_profile)})
    return report


def count_profiles(k):
    """Number of admissible profiles: partitions of ``2k`` into parts, i.e. integer partitions."""
    m = 2 * k
    ways = [1] + [0] * m
    for part in range(1, m + 1):
        for total in range(part, m + 1):
            ways[total] += ways[total - part]
    return ways[m]


def _vertices(s, t):
    return {("S", v) for v in s} | {("T", v) for v in t}


def audit_common_edge_lemma(p, n, k):
    """Joint vertex bounds for same-profile cycle pairs sharing ``c >= 1`` distinct edges.

    Also checks the per-``c`` tuple-pair counts against their coarse bounds.
    """
    _check_enum(p, n, k, pairs=True)
    report = AuditReport(p, n, k)
    by_profile = defaultdict(list)
    for cp, prof, _ in enumerate_cycles(p, n, k):
        by_profile[prof].append((cp, set(cycle_edges(cp.s, cp.t)), _vertices(cp.s, cp.t)))
        report.cycles_checked += 1
    big = max(p, n)
    for prof, members in sorted(by_profile.items()):
        sigma = prof.distinct
        at_least = Counter()
        for (cp1, e1, v1), (cp2, e2, v2) in itertools.product(members, repeat=2):
            common = len(e1 & e2)
            if common < 1:
                continue
            at_least[common] += 1
            joint = len(v1 | v2)
            bound = (2 * sigma - common) if prof.has_odd else (1 + 2 * sigma - common)
            name = "odd_edge_joint_vertices" if prof.has_odd else "joint_vertices"
            report.record(name, joint <= bound, {"pair": [cp1.s, cp1.t, cp2.s, cp2.t], "common": common},
                          bound - joint)
        # pairs with at least ``l`` common edges, for every l
        tail = 0
        for common in range(2 * k, 0, -1):
            tail += at_least.get(common, 0)
            if not tail:
                continue
            exponent = (2 * sigma - common) if prof.has_odd else (1 + 2 * sigma - common)
            bound = (2 * k) ** (4 * k + 2) * big**exponent
            report.record("pairs_with_common_edges_count", tail <= bound,
                          {"profile": prof.encode(), "common": common, "count": tail}, bound - tail)
    return report


def falling(x, m):
    return math.prod(range(x - m + 1, x + 1)) if m <= x else 0


def tree_count_closed_form(p, n, k):
    """Normalised count of all-double cycles with ``k + 1`` vertices, as a Fraction."""
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    k = int(k)
    total = sum(
        (Fraction(falling(p, r + 1) * falling(n, k - r), r + 1) * math.comb(k, r) * math.comb(k - 1, r)
         for r in range(k)),
        Fraction(0),
    )
    return total / (p * n**k)


def tree_cycle_count(p, n, k):
    """Enumeration count of cycles whose edges are all doubles and which visit ``k + 1`` vertices."""
    return sum(
        1
        for _, prof, stats in enumerate_cycles(p, n, k)
        if prof.counts == ((2, k),) and stats.ell == k + 1
    )


def divergence_term(p, n, k, eps, c):
    """Contribution of the all-singles, all-distinct-vertex cycles in the divergence model.

    ``((p)_k (n)_k / (p n^k)) * c^k n^(k eps) (2k-1)!! / n^k``.  For ``k >= 2``
    those cycles have ``2k`` single edges and every pair partition
    contributes ``rho^k``; at ``k = 1`` the lone cycle is a double edge and
    the expression is only a lower bound.
    """
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    k = int(k)
    prefactor = falling(p, k) * falling(n, k) / (p * n**k)
    return prefactor * c**k * n ** (k * eps) * double_factorial(2 * k - 1) / n**k
