"""Figure rendering for run reports.

Every figure is rendered straight to a file next to the CSV it
pictures; nothing opens a window.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_node_counts(node_rows: list[dict], path: str,
                     benchmark: dict[int, int] | None = None) -> str:
    """Passive nodes per proof index, one line per instance, with optional
    benchmark levels dashed."""
    fig, ax = plt.subplots(figsize=(7, 4))
    sigmas = sorted({r["sigma"] for r in node_rows})
    for sigma in sigmas:
        pts = [(r["proof_index"], r["passive_nodes"])
               for r in node_rows if r["sigma"] == sigma]
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                label=f"sigma={sigma}", linewidth=1.2)
        if benchmark and sigma in benchmark:
            ax.axhline(benchmark[sigma], linestyle="--", linewidth=0.8,
                       color="gray")
    ax.set_xlabel("proof index")
    ax.set_ylabel("passive nodes")
    if len(sigmas) <= 14:
        ax.legend(fontsize=7, ncol=2)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_losses(loss_rows: list[dict], path: str) -> str:
    fig, ax = plt.subplots(figsize=(7, 4))
    for network, color in (("global", "tab:blue"), ("local", "tab:orange")):
        pts = [(r["wall_step"], r["loss"]) for r in loss_rows
               if r["network"] == network]
        if pts:
            ax.plot([p[0] for p in pts], [p[1] for p in pts], color=color,
                    linewidth=0.6, alpha=0.8, label=network)
    ax.set_xlabel("descent step")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_sigma_summary(rows: list[dict], value_key: str, path: str,
                       ylabel: str) -> str:
    """Bar chart of one value per instance (bench totals, nu_min, ...)."""
    fig, ax = plt.subplots(figsize=(7, 3.5))
    rows = sorted(rows, key=lambda r: r["sigma"])
    ax.bar([r["sigma"] for r in rows], [r[value_key] for r in rows],
           color="tab:blue")
    ax.set_xlabel("sigma")
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3, axis="y")
    return _save(fig, path)
