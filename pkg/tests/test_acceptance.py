"""Acceptance criteria, one test per criterion, each reporting a PASS/FAIL line."""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from mp_spectra import combinatorics as C
from mp_spectra import ensembles as E
from mp_spectra.experiments import ExperimentConfig, run
from mp_spectra.limit_laws import bulk_edge, critical_atom_mass, spike_value
from mp_spectra.mp_law import mp_moment
from mp_spectra.rng import derive_seed, make_rng, standard_normal
from mp_spectra.spectral import eigenvalues_sym
from mp_spectra.wick import exact_expected_moment, exact_moment_covariance, mc_expected_moment


def _sim(experiment, **kw):
    cfg = ExperimentConfig(experiment=experiment, output_dir=None, figures=False, save_eigenvalues=False, **kw)
    return run(cfg)


def test_wick_oracle_matches_closed_form_and_monte_carlo(acceptance):
    start = time.perf_counter()
    closed_ok, worst_z = True, 0.0
    for p in (1, 2, 3):
        for n in (1, 2, 3):
            model = E.identity(p, n)
            closed_ok &= exact_expected_moment(model, 1, exact=True) == 1
            closed_ok &= exact_expected_moment(model, 2, exact=True) == Fraction(p + n + 1, n)
            exact3 = exact_expected_moment(model, 3)
            mean, se = mc_expected_moment(model, 3, 100_000, derive_seed(1, p, n))
            worst_z = max(worst_z, abs(mean - exact3) / se)
    elapsed = time.perf_counter() - start
    ok = closed_ok and worst_z <= 4 and elapsed < 60
    acceptance("wick_oracle_matches_closed_form_and_monte_carlo", ok,
               f"rational k=1,2 exact={closed_ok}; max |z| at k=3 = {worst_z:.2f} (<= 4); {elapsed:.1f}s (< 60s)")
    assert ok


def test_mp_law_moments_under_fast_decay(acceptance):
    start = time.perf_counter()
    report = _sim("esd", y=0.5, n_grid=[512], delta=2.0, replicates=20, master_seed=2, moments=[1, 2, 3, 4])
    elapsed = time.perf_counter() - start
    gaps = {row["k"]: abs(row["mean"] - mp_moment(row["k"], 0.5)) for row in report.summary["moments"]}
    ok = max(gaps.values()) <= 0.05 and elapsed < 300
    detail = ", ".join(f"k={k}: {g:.4f}" for k, g in sorted(gaps.items()))
    acceptance("mp_law_moments_under_fast_decay", ok, f"|mean - MP moment| {detail} (<= 0.05); {elapsed:.1f}s")
    assert ok


def test_supercritical_operator_norm_at_bulk_edge(acceptance):
    report = _sim("opnorm_scan", y=0.5, n_grid=[1024], delta=2.0, replicates=10, master_seed=3)
    mean = report.summary["opnorm"][0]["mean"]
    gap = abs(mean - bulk_edge(0.5))
    ok = gap <= 0.1
    acceptance("supercritical_operator_norm_at_bulk_edge", ok,
               f"mean ||V|| = {mean:.4f}, edge = {bulk_edge(0.5):.4f}, gap {gap:.4f} (<= 0.1)")
    assert ok


def test_subcritical_scaled_norm_law(acceptance):
    start = time.perf_counter()
    report = _sim("limit_law_test", y=0.5, n_grid=[1024], delta=0.5, replicates=500, master_seed=4)
    elapsed = time.perf_counter() - start
    ks = report.summary["ks"][0]["ks"]
    ok = ks <= 0.08 and elapsed < 600
    acceptance("subcritical_scaled_norm_law", ok, f"KS = {ks:.4f} (<= 0.08); {elapsed:.1f}s (< 600s)")
    assert ok


def test_critical_norm_law_with_atom(acceptance):
    report = _sim("limit_law_test", y=1.0, n_grid=[1024], delta=1.0, replicates=500, master_seed=5)
    entry = report.summary["ks"][0]
    target = critical_atom_mass(1.0)
    ok_ks = entry["ks"] <= 0.08
    ok_atom = abs(entry["atom_frequency"] - target) <= 0.05
    acceptance("critical_norm_law_with_atom", ok_ks and ok_atom,
               f"KS = {entry['ks']:.4f} (<= 0.08); atom frequency within 0.15 of y+ = "
               f"{entry['atom_frequency']:.4f} vs {target:.4f} +- 0.05")
    assert ok_ks and ok_atom


def test_combinatorics_audits(acceptance):
    start = time.perf_counter()
    counting = {size: C.audit_counting_lemmas(*size).n_violations for size in [(2, 2, 2), (3, 3, 3), (2, 3, 2)]}
    common = C.audit_common_edge_lemma(2, 2, 2).n_violations
    partition_ok = all(sum(C.profile_census(*size).values()) == (size[0] * size[1]) ** size[2] for size in counting)
    tree_ok = all(C.tree_count_closed_form(p, n, k) * p * n**k == C.tree_cycle_count(p, n, k)
                  for p, n, k in counting)
    elapsed = time.perf_counter() - start
    ok = not any(counting.values()) and common == 0 and partition_ok and tree_ok and elapsed < 60
    acceptance("combinatorics_audits", ok,
               f"counting-bound violations {counting}; common-edge violations {common}; "
               f"cycle-space partition {partition_ok}; tree count match {tree_ok}; {elapsed:.2f}s")
    assert ok


def test_divergence_of_moments(acceptance):
    ns = [2, 3, 4, 5, 6]
    exact = [exact_expected_moment(E.counterexample_model(n, n, 0.5, 0.5), 3) for n in ns]
    term = [C.divergence_term(n, n, 3, 0.5, 0.5) for n in ns]
    increasing = all(b > a for a, b in zip(exact, exact[1:]))
    exceeds = exact[-1] > 2 * mp_moment(3, 1.0)
    dominates = all(e >= t for e, t in zip(exact, term))
    ok = increasing and exceeds and dominates
    values = ", ".join(f"{n}:{e:.4f}" for n, e in zip(ns, exact))
    acceptance("divergence_of_moments", ok,
               f"exact moments {values}; strictly increasing {increasing}; "
               f"n=6 exceeds {2 * mp_moment(3, 1.0):g}: {exceeds}; dominates lower term {dominates}")
    assert ok


def _spiked_top(eta_sq, y, n, seed):
    p = round(y * n)
    M = standard_normal(make_rng(seed), (n + 1, p))
    M[n] *= math.sqrt(eta_sq)  # Q M with Q = diag(1, ..., 1, eta)
    return float(eigenvalues_sym(M.T @ M / n)[-1])


def test_spike_map(acceptance):
    y, n = 0.5, 1000
    above = np.mean([_spiked_top(4.0, y, n, derive_seed(8, 4, r)) for r in range(10)])
    below = np.mean([_spiked_top(1.0, y, n, derive_seed(8, 1, r)) for r in range(10)])
    gap_above = abs(above - spike_value(4.0, y))
    gap_below = abs(below - bulk_edge(y))
    ok = gap_above <= 0.15 and gap_below <= 0.15
    acceptance("spike_map", ok,
               f"eta^2=4: {above:.4f} vs {spike_value(4.0, y):.4f} (gap {gap_above:.4f}); "
               f"eta^2=1: {below:.4f} vs {bulk_edge(y):.4f} (gap {gap_below:.4f}); tol 0.15")
    assert ok


def test_moment_variance_decays(acceptance):
    var = [exact_moment_covariance(E.identity(p, p), 1, exact=True) for p in (1, 2, 3)]
    decreasing = all(b < a for a, b in zip(var, var[1:]))
    closed = all(v == Fraction(2, p * p) for v, p in zip(var, (1, 2, 3)))
    ok = decreasing and closed
    acceptance("moment_variance_decays", ok, f"Var = {[str(v) for v in var]}; decreasing {decreasing}; "
                                             f"equals 2/(pn) {closed}")
    assert ok
