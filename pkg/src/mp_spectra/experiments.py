"""Declarative experiment runner.

An :class:`ExperimentConfig` names one experiment and its parameters;
:func:`run` executes it, writes CSV data plus ``report.json`` (and figures)
into ``output_dir``, and returns an :class:`ExperimentReport`.

Replicate ``r`` at size ``n`` always uses ``derive_seed(master_seed, n, r)``,
and results are gathered in (n, r) order, so output files do not depend on
the number of workers.
"""
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .combinatorics import (
    audit_common_edge_lemma,
    audit_counting_lemmas,
    divergence_term,
    profile_census,
    tree_count_closed_form,
    tree_cycle_count,
    write_census_csv,
)
from .ensembles import DecayBudget, counterexample_model, coupled_equicovariant_path, equicovariant, identity, sample
from .errors import CapacityError, ConfigError
from .limit_laws import CRITICAL, OpNormLimitLaw, bulk_edge, ks_statistic, write_cdf_table
from .mp_law import MPLaw, mp_moment
from .rng import derive_seed
from .spectral import fmt, histogram, sample_covariance, spectrum, write_eigenvalues_csv, write_histogram_csv
from .wick import exact_expected_moment, mc_expected_moment, wick_record

EXPERIMENTS = ("esd", "opnorm_scan", "wick_check", "combinatorics_audit", "limit_law_test", "divergence_demo")
SIMULATIONS = ("esd", "opnorm_scan", "limit_law_test")
WORKERS_ENV = "MP_SPECTRA_WORKERS"
ATOM_WINDOW = 0.15


def _default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class ExperimentConfig:
    experiment: str
    y: float = 0.5
    n_grid: list = field(default_factory=lambda: [64])
    delta: Optional[float] = 2.0  # None: independent entries
    C: float = 1.0  # correlation is min(1, C * n**-delta)
    replicates: int = 1
    master_seed: Optional[int] = None
    output_dir: Optional[str] = "mp_spectra_out"
    workers: int = field(default_factory=_default_workers)
    k: int = 3
    moments: list = field(default_factory=lambda: [1, 2, 3, 4])
    p: Optional[int] = None  # wick_check / combinatorics_audit
    n: Optional[int] = None
    model: str = "identity"  # wick_check: identity | equicovariant | counterexample
    rho: Optional[str] = None  # equicovariant correlation, e.g. "1/4"
    eps: float = 0.5
    c: float = 0.5
    bins: int = 50
    coupling: str = "independent"  # or shared_z (one Z along n_grid per replicate)
    save_eigenvalues: bool = True
    figures: bool = True

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError([f"unknown field {name!r}" for name in unknown])
        if "experiment" not in data:
            raise ConfigError(["missing field 'experiment'"])
        return cls(**data)

    @classmethod
    def load(cls, path, overrides=None):
        """Read a JSON config; non-None ``overrides`` win over file values."""
        with open(path) as fh:
            data = json.load(fh)
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_dict(data)

    def p_of(self, n):
        return int(round(self.y * n))

    def validate(self):
        problems = []
        if self.experiment not in EXPERIMENTS:
            problems.append(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if not (isinstance(self.y, (int, float)) and math.isfinite(self.y) and self.y > 0):
            problems.append(f"y must be a positive number, got {self.y!r}")
        grid = self.n_grid
        if not isinstance(grid, (list, tuple)) or not grid:
            problems.append("n_grid must be a nonempty list")
        elif not all(isinstance(v, int) and v >= 1 for v in grid):
            problems.append(f"n_grid entries must be positive integers, got {grid!r}")
        elif any(b <= a for a, b in zip(grid, grid[1:])):
            problems.append(f"n_grid must be strictly ascending, got {grid!r}")
        elif self.experiment in SIMULATIONS and isinstance(self.y, (int, float)) and self.y > 0:
            bad = [v for v in grid if self.p_of(v) < 1]
            if bad:
                problems.append(f"round(y*n) must be >= 1, fails for n in {bad}")
        if not isinstance(self.replicates, int) or self.replicates < 1:
            problems.append(f"replicates must be an integer >= 1, got {self.replicates!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            problems.append(f"workers must be an integer >= 1, got {self.workers!r}")
        needs_seed = self.experiment in SIMULATIONS or (self.experiment == "wick_check" and self.replicates > 1)
        if needs_seed:
            if self.master_seed is None:
                problems.append("master_seed is required for simulation experiments")
            elif not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
                problems.append(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed!r}")
        if self.delta is not None and not (isinstance(self.delta, (int, float)) and self.delta > 0):
            problems.append(f"delta must be positive or null, got {self.delta!r}")
        if self.experiment == "limit_law_test" and self.delta is None:
            problems.append("limit_law_test needs delta")
        if not (isinstance(self.C, (int, float)) and self.C > 0):
            problems.append(f"C must be positive, got {self.C!r}")
        if not isinstance(self.k, int) or self.k < 1:
            problems.append(f"k must be an integer >= 1, got {self.k!r}")
        if not all(isinstance(m, int) and m >= 1 for m in self.moments):
            problems.append(f"moments must be positive integers, got {self.moments!r}")
        if self.experiment in ("wick_check", "combinatorics_audit"):
            for name in ("p", "n"):
                value = getattr(self, name)
                if value is not None and (not isinstance(value, int) or value < 1):
                    problems.append(f"{name} must be a positive integer, got {value!r}")
        if self.model not in ("identity", "equicovariant", "counterexample"):
            problems.append(f"model must be identity, equicovariant or counterexample, got {self.model!r}")
        if self.experiment == "wick_check" and self.model == "equicovariant":
            try:
                Fraction(str(self.rho))
            except (ValueError, ZeroDivisionError):
                problems.append(f"rho must be a number or fraction string, got {self.rho!r}")
        if self.experiment in ("divergence_demo",) or self.model == "counterexample":
            if not 0 < self.eps < 1:
                problems.append(f"eps must lie in (0, 1), got {self.eps!r}")
            if not 0 < self.c < 1:
                problems.append(f"c must lie in (0, 1), got {self.c!r}")
        if not isinstance(self.bins, int) or self.bins < 1:
            problems.append(f"bins must be a positive integer, got {self.bins!r}")
        if self.coupling not in ("independent", "shared_z"):
            problems.append(f"coupling must be independent or shared_z, got {self.coupling!r}")
        if problems:
            raise ConfigError(problems)
        return self


@dataclass
class ExperimentReport:
    config: dict
    records: list
    summary: dict
    wall_clock: float
    version: str = __version__
    files: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def _mean_se(values):
    arr = np.asarray(values, dtype=float)
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else float("nan")
    return float(arr.mean()), se


# ---- simulation cells (top-level so worker processes can import them) ----

def decay_model(y, n, delta, C=1.0):
    p = int(round(y * n))
    if delta is None:
        return identity(p, n)
    return DecayBudget(C=C, delta=delta).equicovariant(p, n)


def simulate_cell(y, n, delta, C, seed):
    """Ascending eigenvalues of ``V`` for one replicate."""
    model = decay_model(y, n, delta, C)
    return spectrum(sample(model, seed), moments=()).eigenvalues


def simulate_coupled(y, n_grid, delta, seed):
    mats, _ = coupled_equicovariant_path(y, n_grid, delta, seed)
    return [spectrum(X, moments=()).eigenvalues for X in mats]


def _cells(cfg):
    return [(n, r, derive_seed(cfg.master_seed, n, r)) for n in cfg.n_grid for r in range(cfg.replicates)]


def simulate_spectra(cfg):
    """``{(n, r): (seed, eigenvalues)}`` over the grid, deterministic in ``cfg``."""
    if cfg.coupling == "shared_z":
        out = {}
        for r in range(cfg.replicates):
            seed = derive_seed(cfg.master_seed, 0, r)
            for n, eig in zip(cfg.n_grid, simulate_coupled(cfg.y, cfg.n_grid, cfg.delta, seed)):
                out[(n, r)] = (seed, eig)
        return out
    cells = _cells(cfg)
    args = ([cfg.y] * len(cells), [n for n, _, _ in cells], [cfg.delta] * len(cells),
            [cfg.C] * len(cells), [s for _, _, s in cells])
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(simulate_cell, *args, chunksize=max(1, len(cells) // (4 * cfg.workers))))
    else:
        results = [simulate_cell(*a) for a in zip(*args)]
    return {(n, r): (seed, eig) for (n, r, seed), eig in zip(cells, results)}


# ---- experiments ----

def _esd(cfg, out, files):
    spectra = simulate_spectra(cfg)
    law = MPLaw(cfg.y)
    records, moment_rows, summary = [], [], {"moments": []}
    hist_range = (0.0, law.y_plus + 1.0)
    for n in cfg.n_grid:
        p = cfg.p_of(n)
        pooled = []
        per_k = {k: [] for k in cfg.moments}
        for r in range(cfg.replicates):
            seed, eig = spectra[(n, r)]
            pooled.append(eig)
            rec = {"n": n, "p": p, "replicate": r, "seed": seed, "op_norm": float(eig[-1])}
            for k in cfg.moments:
                value = float(np.mean(eig**k))
                per_k[k].append(value)
                rec[f"m{k}"] = value
                moment_rows.append((n, p, r, seed, k, value))
            records.append(rec)
            if out is not None and cfg.save_eigenvalues:
                name = f"eigenvalues_{n}_{r}.csv"
                write_eigenvalues_csv(out / name, eig)
        for k in cfg.moments:
            mean, se = _mean_se(per_k[k])
            summary["moments"].append({"n": n, "p": p, "k": k, "mean": mean, "se": se,
                                       "mp_moment": mp_moment(k, cfg.y)})
        hist = histogram(np.concatenate(pooled), bins=cfg.bins, range=hist_range)
        if out is not None:
            write_histogram_csv(out / f"histogram_{n}.csv", hist)
            files.append(f"histogram_{n}.csv")
            if cfg.figures:
                from .plotting import esd_figure

                esd_figure(out / f"esd_{n}.png", hist, cfg.y, title=f"n={n}, p={p}")
                files.append(f"esd_{n}.png")
    if out is not None:
        _write_rows(out / "moments.csv", ["n", "p", "replicate", "seed", "k", "value"], moment_rows)
        files.append("moments.csv")
    return records, summary


def _opnorm_rows(cfg, spectra):
    rows, records = [], []
    for n in cfg.n_grid:
        p = cfg.p_of(n)
        scale = n ** (cfg.delta - 1.0) if cfg.delta is not None and cfg.delta < 1 else 1.0
        for r in range(cfg.replicates):
            seed, eig = spectra[(n, r)]
            norm = float(eig[-1])
            rows.append((n, p, r, seed, norm, scale * norm))
            records.append({"n": n, "p": p, "replicate": r, "seed": seed, "op_norm": norm, "scaled": scale * norm})
    return rows, records


def _opnorm_scan(cfg, out, files):
    spectra = simulate_spectra(cfg)
    rows, records = _opnorm_rows(cfg, spectra)
    summary = {"opnorm": [], "bulk_edge": bulk_edge(cfg.y)}
    means, ses = [], []
    for n in cfg.n_grid:
        vals = [rec["scaled"] for rec in records if rec["n"] == n]
        mean, se = _mean_se(vals)
        means.append(mean)
        ses.append(0.0 if math.isnan(se) else se)
        summary["opnorm"].append({"n": n, "p": cfg.p_of(n), "mean": mean, "se": se})
    if out is not None:
        _write_rows(out / "opnorm.csv", ["n", "p", "replicate", "seed", "op_norm", "scaled"], rows)
        files.append("opnorm.csv")
        if cfg.figures:
            from .plotting import opnorm_figure

            ref = bulk_edge(cfg.y) if cfg.delta is None or cfg.delta > 1 else None
            opnorm_figure(out / "opnorm.png", cfg.n_grid, means, ses, ref)
            files.append("opnorm.png")
    return records, summary


def _limit_law_test(cfg, out, files):
    spectra = simulate_spectra(cfg)
    rows, records = _opnorm_rows(cfg, spectra)
    law = OpNormLimitLaw.from_delta(cfg.delta, cfg.y)
    summary = {"regime": law.regime, "ks": []}
    for n in cfg.n_grid:
        samples = np.array([rec["scaled"] for rec in records if rec["n"] == n])
        entry = {"n": n, "p": cfg.p_of(n), "ks": ks_statistic(samples, law.cdf, law.atoms)}
        if law.regime == CRITICAL:
            entry["atom_frequency"] = float(np.mean(np.abs(samples - bulk_edge(cfg.y)) <= ATOM_WINDOW))
            entry["atom_mass"] = law.cdf(bulk_edge(cfg.y))
        summary["ks"].append(entry)
        if out is not None and cfg.figures and n == cfg.n_grid[-1]:
            from .plotting import cdf_figure

            cdf_figure(out / f"cdf_{n}.png", samples, law.cdf, label=f"{law.regime} limit")
            files.append(f"cdf_{n}.png")
    if out is not None:
        _write_rows(out / "opnorm.csv", ["n", "p", "replicate", "seed", "op_norm", "scaled"], rows)
        files.append("opnorm.csv")
        hi = max(r[5] for r in rows) * 1.2 + 1.0
        write_cdf_table(out / "limit_cdf.csv", np.linspace(0.0, hi, 201), law.cdf)
        files.append("limit_cdf.csv")
    return records, summary


def _wick_model(cfg, p, n):
    if cfg.model == "identity":
        return identity(p, n)
    if cfg.model == "equicovariant":
        return equicovariant(p, n, Fraction(str(cfg.rho)))
    return counterexample_model(p, n, cfg.eps, cfg.c)


def _wick_check(cfg, out, files):
    records, results = [], []
    for n in cfg.n_grid if cfg.n is None else [cfg.n]:
        p = cfg.p if cfg.p is not None else max(1, cfg.p_of(n))
        model = _wick_model(cfg, p, n)
        rational = model.kind == "identity" or isinstance(model.rho, Fraction)
        value = exact_expected_moment(model, cfg.k, exact=rational, workers=cfg.workers)
        results.append(wick_record(model, cfg.k, value, "exact_rational" if rational else "exact_float"))
        if cfg.replicates > 1:
            seed = derive_seed(cfg.master_seed, n, 0)
            mean, se = mc_expected_moment(model, cfg.k, cfg.replicates, seed)
            rec = wick_record(model, cfg.k, (mean, se), "monte_carlo")
            rec["seed"] = seed
            rec["z_score"] = (mean - float(value)) / se if se > 0 else 0.0
            results.append(rec)
        records.append({"n": n, "p": p, "replicate": 0, "seed": None, "exact": float(value)})
    if out is not None:
        with open(out / "wick.json", "w") as fh:
            json.dump(results, fh, indent=2)
        files.append("wick.json")
    return records, {"wick": results}


def _combinatorics_audit(cfg, out, files):
    n = cfg.n if cfg.n is not None else cfg.n_grid[0]
    p = cfg.p if cfg.p is not None else max(1, cfg.p_of(n))
    k = cfg.k
    counting = audit_counting_lemmas(p, n, k)
    summary = {"counting": counting.to_dict()}
    total = counting.n_violations
    try:
        common = audit_common_edge_lemma(p, n, k)
        summary["common_edges"] = common.to_dict()
        total += common.n_violations
    except CapacityError as err:
        summary["common_edges"] = {"skipped": str(err)}
    closed = tree_count_closed_form(p, n, k)
    enumerated = tree_cycle_count(p, n, k)
    summary["tree_count"] = {"closed_form": closed, "enumerated": enumerated,
                             "match": closed * p * n**k == enumerated}
    summary["violations"] = total
    if out is not None:
        write_census_csv(out / "profiles.csv", profile_census(p, n, k))
        files.append("profiles.csv")
    return [{"n": n, "p": p, "replicate": 0, "seed": None, "violations": total}], summary


def _divergence_demo(cfg, out, files):
    k, rows, records = cfg.k, [], []
    ref = mp_moment(k, 1.0)
    for n in cfg.n_grid:
        model = counterexample_model(n, n, cfg.eps, cfg.c)
        exact = exact_expected_moment(model, k, workers=cfg.workers)
        term = divergence_term(n, n, k, cfg.eps, cfg.c)
        rows.append((n, n, k, float(exact), float(term), ref))
        records.append({"n": n, "p": n, "replicate": 0, "seed": None, "exact": exact, "term": term})
    exacts = [r[3] for r in rows]
    summary = {
        "mp_moment": ref,
        "increasing": all(b > a for a, b in zip(exacts, exacts[1:])),
        "dominates_term": all(r[3] >= r[4] for r in rows),
    }
    if out is not None:
        _write_rows(out / "divergence.csv", ["n", "p", "k", "exact", "term", "mp_moment"], rows)
        files.append("divergence.csv")
        if cfg.figures:
            from .plotting import divergence_figure

            divergence_figure(out / "divergence.png", cfg.n_grid, exacts, [r[4] for r in rows], ref)
            files.append("divergence.png")
    return records, summary


RUNNERS = {
    "esd": _esd,
    "opnorm_scan": _opnorm_scan,
    "limit_law_test": _limit_law_test,
    "wick_check": _wick_check,
    "combinatorics_audit": _combinatorics_audit,
    "divergence_demo": _divergence_demo,
}


def run(config):
    """Execute ``config``; writes outputs when ``output_dir`` is set."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    cfg.validate()
    start = time.perf_counter()
    out = None
    if cfg.output_dir is not None:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
    files = []
    records, summary = RUNNERS[cfg.experiment](cfg, out, files)
    report = ExperimentReport(asdict(cfg), records, summary, time.perf_counter() - start, files=files)
    if out is not None:
        report.files.append("report.json")
        report.write(out / "report.json")
    return report
