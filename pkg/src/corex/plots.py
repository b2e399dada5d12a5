"""Figure rendering for the CLI report paths.

Every figure is written next to the CSV it visualizes so a run directory
is self-contained. Rendering is headless (Agg).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_objective_figure(histories, path):
    """Objective trace per layer: explained correlation vs iteration."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for li, hist in enumerate(histories):
        ax.plot(range(1, len(hist) + 1), hist, label=f"layer {li}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("explained correlation (nats)")
    ax.set_title("objective history")
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_sweep_figure(rows, path):
    """Cluster recovery vs problem size: one point per (n, seed), mean line."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_n = {}
    for row in rows:
        by_n.setdefault(row["n"], []).append(row["ari"])
    ns = sorted(by_n)
    for n in ns:
        ax.scatter([n] * len(by_n[n]), by_n[n], color="tab:blue", alpha=0.5, s=18)
    ax.plot(ns, [sum(by_n[n]) / len(by_n[n]) for n in ns], "o-",
            color="tab:blue", label="mean ARI")
    ax.set_xscale("log", base=2)
    ax.set_xticks(ns, [str(n) for n in ns])
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("number of variables")
    ax.set_ylabel("adjusted Rand index")
    ax.set_title("cluster recovery vs dimensionality")
    ax.legend(loc="lower left")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
