"""Static figure rendering for the report commands.

Figures are written next to the text reports as PNG files; nothing here
is interactive.  The Agg backend keeps rendering headless and the PNG
metadata pinned so repeated renders of the same data stay comparable.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .report import FlrTable, height_label
from .simkernel import SimMetrics

_SAVE_KWARGS = {"dpi": 150, "metadata": {"Software": "loraconn"}}


def flr_figure_name(table: FlrTable) -> str:
    gw = "{:g}".format(table.gw_height_m).replace(".", "p")
    return "flr_{}_gw{}.png".format(table.environment, gw)


def render_flr_figure(table: FlrTable, path: str | Path) -> Path:
    """Grouped bar chart of loss percentage by distance and SN height."""
    path = Path(path)
    distances = [d for d, _ in table.rows]
    n_heights = len(table.sn_heights)
    width = 0.8 / max(n_heights, 1)
    fig, ax = plt.subplots(figsize=(6.4, 4.2), layout="constrained")
    for j, h in enumerate(table.sn_heights):
        xs, ys = [], []
        for i, (_, cells) in enumerate(table.rows):
            cell = cells[j]
            if cell.endswith("%"):
                xs.append(i + (j - (n_heights - 1) / 2.0) * width)
                ys.append(float(cell[:-1]))
        ax.bar(xs, ys, width=width, label="SN ({})".format(height_label(h)))
    for i, (_, cells) in enumerate(table.rows):
        if all(cell == "no data" for cell in cells):
            ax.text(i, 0.2, "no data", ha="center", va="bottom", rotation=90, fontsize=8)
    ax.set_xticks(range(len(distances)))
    ax.set_xticklabels(["{:g} m".format(d) for d in distances])
    ax.set_xlabel("distance")
    ax.set_ylabel("frame loss ratio [%]")
    ax.set_title(table.title())
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def render_power_figure(metrics: SimMetrics, path: str | Path) -> Path:
    """Per-node energy bar chart for one run."""
    path = Path(path)
    addrs = sorted(metrics.per_node)
    labels = ["{:02x} ({})".format(a, metrics.per_node[a].role) for a in addrs]
    energies = [metrics.per_node[a].energy_mj for a in addrs]
    fig, ax = plt.subplots(figsize=(6.4, 4.2), layout="constrained")
    ax.bar(range(len(addrs)), energies, color="tab:orange")
    ax.set_xticks(range(len(addrs)))
    ax.set_xticklabels(labels)
    ax.set_xlabel("node")
    ax.set_ylabel("energy [mJ]")
    ax.set_title("energy by node: {}".format(metrics.scenario))
    ax.grid(axis="y", alpha=0.3)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path
