"""Matplotlib figures written next to the CSV reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 150,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "font.family": "DejaVu Sans",
    # Stable output: no timestamps in saved files.
    "svg.hashsalt": "cpmp_cs",
}


def plot_solution(instance, nest, path=None, title=None, ax=None):
    """Nodes, medians and assignment edges, one color per cluster."""
    with plt.rc_context(STYLE):
        own = ax is None
        if own:
            fig, ax = plt.subplots(figsize=(5.2, 5.0))
        xy = instance.coords
        cmap = plt.get_cmap("tab10" if len(nest.medians) <= 10 else "tab20")
        for k, m in enumerate(nest.medians):
            color = cmap(k % cmap.N)
            members = [i for i, a in enumerate(nest.assignment) if a == m]
            for i in members:
                ax.plot([xy[i, 0], xy[m, 0]], [xy[i, 1], xy[m, 1]], color=color, lw=0.7, alpha=0.6, zorder=1)
            ax.scatter(xy[members, 0], xy[members, 1], s=14, color=color, zorder=2)
            ax.scatter([xy[m, 0]], [xy[m, 1]], s=70, marker="s", color=color, edgecolor="black", lw=0.8, zorder=3)
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(title or f"{instance.name}: cost {nest.cost:.1f}")
        if own:
            fig.tight_layout()
            if path is not None:
                fig.savefig(path)
                plt.close(fig)
            return fig
        return ax


def plot_convergence(history_best, history_mean, path=None, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.2, 3.4))
        gens = range(len(history_best))
        ax.plot(gens, history_mean, color="0.6", lw=1.0, label="population mean")
        ax.plot(gens, history_best, color="C3", lw=1.5, label="best so far")
        ax.set_xlabel("generation")
        ax.set_ylabel("cost")
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        if path is not None:
            fig.savefig(path)
            plt.close(fig)
        return fig


def plot_deviation(reports, path=None):
    """Signed deviation from best-known per instance (negative is better)."""
    rows = [r for r in reports if r.best_cost is not None and r.best_known]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.45 * len(rows) + 1.5), 3.2))
        vals = [100.0 * (r.best_cost - r.best_known) / r.best_cost for r in rows]
        ax.bar(range(len(rows)), vals, color=["C2" if v <= 0 else "C3" for v in vals])
        ax.axhline(0.0, color="black", lw=0.8)
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels([r.instance for r in rows], rotation=60, ha="right")
        ax.set_ylabel("deviation from best-known (%)")
        fig.tight_layout()
        if path is not None:
            fig.savefig(path)
            plt.close(fig)
        return fig


def render_report_figures(reports, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for r in reports:
        if r.best_nest is None or r.problem is None:
            continue
        p = out / f"{r.instance}_solution.png"
        plot_solution(r.problem, r.best_nest, p,
                      title=f"{r.instance} (n={r.n}, p={r.p}): cost {r.best_cost}")
        written.append(p)
        if r.history_best:
            p = out / f"{r.instance}_convergence.png"
            plot_convergence(r.history_best, r.history_mean, p, title=f"{r.instance}, seed {r.seed}")
            written.append(p)
    if any(r.best_known for r in reports if r.best_cost is not None):
        p = out / "deviation.png"
        plot_deviation(reports, p)
        written.append(p)
    return written
