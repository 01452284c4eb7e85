"""Command-line interface: ``mp-spectra <subcommand> [flags]``.

Every simulation subcommand requires ``--seed`` (or ``master_seed`` in a
``--config`` file).  Flags override values read from ``--config``.  Errors
are printed to stderr as one JSON object and give exit status 1; usage
errors give exit status 2.
"""
import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .errors import CapacityError, ConfigError, DomainError, InputError, ModelError
from .experiments import ExperimentConfig, run
from .mp_law import mp_moment, mp_moment_exact
from .spectral import fmt

SUBCOMMANDS = {
    "simulate-esd": "esd",
    "opnorm-scan": "opnorm_scan",
    "limit-law-test": "limit_law_test",
    "wick-exact": "wick_check",
    "combinatorics-audit": "combinatorics_audit",
    "divergence-demo": "divergence_demo",
}
NEEDS_SEED = ("simulate-esd", "opnorm-scan", "limit-law-test")


def _common(sub, grid_default):
    sub.add_argument("--config", help="JSON config file; flags given here override it")
    sub.add_argument("--output-dir", dest="output_dir", help="output directory (default: mp_spectra_out)")
    sub.add_argument("--workers", type=int, help="worker processes (default: $MP_SPECTRA_WORKERS or 1)")
    sub.add_argument("--no-figures", dest="figures", action="store_const", const=False,
                     help="skip PNG figures")
    sub.add_argument("--n", dest="n_grid", type=int, nargs="+", help=f"grid of n values (default: {grid_default})")


def _simulation(sub):
    sub.add_argument("--seed", dest="master_seed", type=int, help="master seed (required)")
    sub.add_argument("--y", type=float, help="ratio p/n; p = round(y*n) (default: 0.5)")
    sub.add_argument("--delta", type=float, help="correlation decay exponent, rho = C*n**-delta (default: 2)")
    sub.add_argument("--C", dest="C", type=float, help="correlation prefactor (default: 1)")
    sub.add_argument("--replicates", type=int, help="replicates per n (default: 1)")


def build_parser():
    parser = argparse.ArgumentParser(prog="mp-spectra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    mp = subs.add_parser("mp-moments", help="print Marchenko-Pastur moments 1..k")
    mp.add_argument("--y", type=Fraction, default=Fraction(1, 2), help="ratio index (default: 0.5)")
    mp.add_argument("--k", type=int, default=4, help="highest moment (default: 4)")
    mp.add_argument("--exact", action="store_true", help="print exact fractions")

    esd = subs.add_parser("simulate-esd", help="simulate spectra and ESD moments")
    _common(esd, "[64]")
    _simulation(esd)
    esd.add_argument("--bins", type=int, help="histogram bins over [0, y+ + 1] (default: 50)")
    esd.add_argument("--moments", type=int, nargs="+", help="ESD moment orders (default: 1 2 3 4)")
    esd.add_argument("--no-eigenvalues", dest="save_eigenvalues", action="store_const", const=False,
                     help="do not write per-replicate eigenvalue CSVs")

    for name, text in (("opnorm-scan", "operator norm along the n grid"),
                       ("limit-law-test", "KS test of scaled operator norms against the limit law")):
        sub = subs.add_parser(name, help=text)
        _common(sub, "[64]")
        _simulation(sub)
        sub.add_argument("--coupling", choices=("independent", "shared_z"),
                         help="independent replicates or one Z along the grid (default: independent)")

    wk = subs.add_parser("wick-exact", help="exact expected ESD moment by Wick summation")
    _common(wk, "[64]")
    wk.add_argument("--p", type=int, help="rows (default: round(y*n))")
    wk.add_argument("--k", type=int, help="moment order (default: 3)")
    wk.add_argument("--model", choices=("identity", "equicovariant", "counterexample"),
                    help="correlation model (default: identity)")
    wk.add_argument("--rho", help="equicovariant correlation, e.g. 1/4")
    wk.add_argument("--eps", type=float, help="counterexample exponent (default: 0.5)")
    wk.add_argument("--c", type=float, help="counterexample constant (default: 0.5)")
    wk.add_argument("--mc-replicates", dest="replicates", type=int,
                    help="Monte Carlo replicates for comparison; needs --seed (default: none)")
    wk.add_argument("--seed", dest="master_seed", type=int, help="master seed for the Monte Carlo check")
    wk.add_argument("--y", type=float, help="ratio used when --p is absent (default: 0.5)")

    ca = subs.add_parser("combinatorics-audit", help="exhaustive audit of cycle counting bounds")
    _common(ca, "[64]")
    ca.add_argument("--p", type=int, help="rows (default: 2)")
    ca.add_argument("--k", type=int, help="cycle length (default: 2)")

    dv = subs.add_parser("divergence-demo", help="exact moments of the divergence model along n")
    _common(dv, "[2 3 4 5 6]")
    dv.add_argument("--k", type=int, help="moment order (default: 3)")
    dv.add_argument("--eps", type=float, help="exponent in (0, 1) (default: 0.5)")
    dv.add_argument("--c", type=float, help="constant in (0, 1) (default: 0.5)")
    return parser


def _mp_moments(args):
    for k in range(1, args.k + 1):
        if args.exact:
            print(mp_moment_exact(k, args.y))
        else:
            print(fmt(mp_moment(k, float(args.y))))
    return 0


def _overrides(args, experiment):
    skip = {"command", "config"}
    data = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    data["experiment"] = experiment
    if experiment == "wick_check":
        grid = data.pop("n_grid", None)
        if grid:
            data["n"] = grid[0]
            data["n_grid"] = grid[:1]
    if experiment == "combinatorics_audit":
        grid = data.pop("n_grid", None)
        data["n"] = grid[0] if grid else 2
        data.setdefault("p", 2)
        data.setdefault("k", 2)
    if experiment == "divergence_demo":
        data.setdefault("n_grid", [2, 3, 4, 5, 6])
    return data


def _print_summary(command, report):
    summary = report.summary
    if command == "combinatorics-audit":
        print(f"{summary['violations']} violations")
    print(json.dumps(summary, indent=2, default=str))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "mp-moments":
        return _mp_moments(args)
    experiment = SUBCOMMANDS[args.command]
    data = _overrides(args, experiment)
    try:
        if args.config:
            cfg = ExperimentConfig.load(args.config, data)
        else:
            cfg = ExperimentConfig.from_dict(data)
        if cfg.master_seed is None and (args.command in NEEDS_SEED or cfg.replicates > 1):
            parser.error(f"{args.command} requires --seed")
        report = run(cfg)
    except (ConfigError, DomainError, CapacityError, ModelError, InputError, OSError) as err:
        record = {"error": type(err).__name__, "message": str(err)}
        if isinstance(err, ConfigError):
            record["problems"] = err.problems
        if isinstance(err, CapacityError):
            record["cost"], record["limit"] = err.cost, err.limit
        print(json.dumps(record), file=sys.stderr)
        return 1
    _print_summary(args.command, report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
