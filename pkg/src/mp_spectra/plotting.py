"""Report figures.  Uses the non-interactive Agg backend."""
import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .mp_law import mp_density  # noqa: E402

golden_mean = (np.sqrt(5.0) - 1.0) / 2.0
fig_width = 5.0
params = {
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 120,
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
}


def _new():
    with matplotlib.rc_context(params):
        fig, ax = plt.subplots()
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def esd_figure(path, hist, y, title=""):
    """Histogram density of the pooled eigenvalues against the MP density."""
    fig, ax = _new()
    edges = hist.bin_edges
    ax.stairs(hist.density(), edges, fill=True, alpha=0.4, label="ESD")
    grid = np.linspace(edges[0], edges[-1], 800)
    ax.plot(grid, mp_density(grid, y), "k-", label=f"MP density, y={y:g}")
    ax.set_xlabel("eigenvalue")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def opnorm_figure(path, ns, means, ses, reference=None):
    fig, ax = _new()
    ax.errorbar(ns, means, yerr=2 * np.asarray(ses), fmt="o-", capsize=2, label="mean top eigenvalue")
    if reference is not None:
        ax.axhline(reference, color="k", ls="--", label=f"limit {reference:.4g}")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("n")
    ax.set_ylabel("operator norm")
    ax.legend()
    return _save(fig, path)


def cdf_figure(path, samples, cdf, label="limit law"):
    """Empirical step CDF of ``samples`` with the reference CDF overlaid."""
    fig, ax = _new()
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    ax.step(x, np.arange(1, m + 1) / m, where="post", label=f"empirical (m={m})")
    lo, hi = float(x[0]), float(x[-1])
    pad = 0.1 * max(hi - lo, 1e-3)
    grid = np.linspace(lo - pad, hi + pad, 600)
    ax.plot(grid, [cdf(t) for t in grid], "k-", label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("CDF")
    ax.legend()
    return _save(fig, path)


def divergence_figure(path, ns, exact, term, reference):
    fig, ax = _new()
    ax.plot(ns, exact, "o-", label="exact expected moment")
    ax.plot(ns, term, "s--", label="all-singles lower term")
    ax.axhline(reference, color="k", ls=":", label=f"MP moment {reference:g}")
    ax.set_xlabel("n")
    ax.set_ylabel("value")
    ax.legend()
    return _save(fig, path)
