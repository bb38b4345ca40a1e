"""Figure rendering for sweep and game reports.

Figures are written next to the delimited output; nothing here opens a
display (Agg backend only).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_sweep_figure(rows: list[dict], path: str) -> None:
    """Key length, error rate and abort rate along the sweep grid."""
    varying = "flip_prob"
    if len({row["intercept_prob"] for row in rows}) > len(
        {row["flip_prob"] for row in rows}
    ):
        varying = "intercept_prob"
    xs = [row[varying] for row in rows]

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    axes[0].plot(xs, [row["mean_ell"] for row in rows], "o-")
    axes[0].set_ylabel("mean key length")
    axes[1].plot(xs, [row["mean_eta_hat"] for row in rows], "o-", color="tab:orange")
    axes[1].set_ylabel("mean measured QBER")
    axes[2].plot(xs, [row["abort_rate"] for row in rows], "o-", color="tab:red")
    axes[2].set_ylabel("abort rate")
    axes[2].set_ylim(-0.05, 1.05)
    for ax in axes:
        ax.set_xlabel(varying.replace("_", " "))
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_game_figure(reports: list, path: str) -> None:
    """Bar chart of measured advantages with their 95% intervals."""
    names = [f"{r.game}:{r.distinguisher}" for r in reports]
    adv = [r.advantage for r in reports]
    err = [r.ci95 for r in reports]

    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(names)), 3.5))
    ax.bar(range(len(names)), adv, yerr=err, capsize=4, color="tab:blue")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("measured advantage")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
