"""The four standard figures rendered from a run output directory.

* ``decay``        semilog max |D gamma|^2 against the exp(-beta_hat t) line
* ``functionals``  monitored functionals normalized by their initial values
* ``profile``      evolution of the graph profile gamma(theta) from snapshots
* ``gaps``         bar chart of inequality-verdict margins

Deterministic given identical inputs; contract-conformant inputs never crash.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import ContractError, read_snapshots, read_summary, read_trace, read_verdicts

FIGURES = ("decay", "functionals", "profile", "gaps")


class PlotJob:
    """Input directory, figure selection and output directory for one render."""

    def __init__(self, in_dir, out_dir, figures=FIGURES):
        self.in_dir = Path(in_dir)
        self.out_dir = Path(out_dir)
        unknown = set(figures) - set(FIGURES)
        if unknown:
            raise ContractError(f"unknown figure selection {sorted(unknown)}")
        self.figures = tuple(figures)


def _fig_decay(job, trace, summary):
    t = trace["t"]
    g = trace["max_grad_sq"]
    fig, ax = plt.subplots(figsize=(6, 4))
    pos = g > 0
    ax.semilogy(t[pos], g[pos], "o-", ms=3, label="max |D gamma|^2")
    beta = summary.get("beta_hat")
    if beta and g[0] > 0:
        ax.semilogy(t, g[0] * np.exp(-beta * t), "k--",
                    label=f"exp(-beta_hat t), beta_hat={beta:.3g}")
    rate = summary.get("measured_decay_rate")
    if rate:
        ax.set_title(f"gradient decay (fitted rate {rate:.3g})")
    ax.set_xlabel("t")
    ax.set_ylabel("max |D gamma|^2")
    ax.legend()
    fig.tight_layout()
    return fig


def _fig_functionals(job, trace, summary):
    fig, ax = plt.subplots(figsize=(6, 4))
    t = trace["t"]
    for name in trace:
        if name in ("t", "dt", "max_grad_sq", "min_smin", "max_speed",
                    "r_min_node", "r_max_node"):
            continue
        col = trace[name]
        ref = col[0] if col[0] != 0 else 1.0
        ax.plot(t, col / ref, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("value / initial value")
    ax.set_title("monitored functionals")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _fig_profile(job, trace, summary):
    snaps = read_snapshots(job.in_dir)
    fig, ax = plt.subplots(figsize=(6, 4))
    if not snaps:
        ax.set_title("no snapshots recorded (flow.snapshot_every = 0)")
        ax.set_axis_off()
        return fig
    cmap = plt.get_cmap("viridis")
    for i, (step, coords, gamma) in enumerate(snaps):
        theta = coords[:, 0]
        order = np.argsort(theta, kind="stable")
        color = cmap(i / max(len(snaps) - 1, 1))
        ax.plot(theta[order], gamma[order], color=color, lw=1,
                label=f"step {step}" if len(snaps) <= 8 else None)
    ax.set_xlabel("polar angle")
    ax.set_ylabel("gamma")
    ax.set_title("graph profile evolution (gamma variable)")
    if len(snaps) <= 8:
        ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _fig_gaps(job, trace, summary):
    verdicts = read_verdicts(job.in_dir / "verdicts.json")
    rows = [v for v in verdicts
            if v["name"].startswith(("A0_vs", "A1_vs", "volume_vs"))
            and v.get("applicable", True)]
    fig, ax = plt.subplots(figsize=(7, 4))
    if not rows:
        ax.set_title("no applicable inequality verdicts")
        ax.set_axis_off()
        return fig
    names = [v["name"] for v in rows]
    margins = [v["worst_violation"] for v in rows]
    colors = ["tab:green" if v["passed"] else "tab:red" for v in rows]
    ax.bar(range(len(rows)), margins, color=colors)
    if rows:
        ax.axhline(rows[0]["tolerance"], color="k", ls="--", lw=1,
                   label="tolerance")
        ax.legend(fontsize=7)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("worst violation")
    ax.set_title("inequality verdict margins")
    fig.tight_layout()
    return fig


_RENDERERS = {
    "decay": _fig_decay,
    "functionals": _fig_functionals,
    "profile": _fig_profile,
    "gaps": _fig_gaps,
}


def render(job):
    """Render the selected figures; returns the list of written image paths."""
    trace = read_trace(job.in_dir / "trace.csv")
    summary = read_summary(job.in_dir / "summary.json")
    job.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in job.figures:
        fig = _RENDERERS[name](job, trace, summary)
        out = job.out_dir / f"{name}.png"
        # fixed metadata keeps the bytes deterministic for identical inputs
        fig.savefig(out, dpi=120, metadata={"Software": "flowplots"})
        plt.close(fig)
        written.append(out)
    return written
