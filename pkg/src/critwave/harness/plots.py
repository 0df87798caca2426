"""SVG plots of probe trajectories with predicted slopes."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..spectral import read_probes_csv  # noqa: E402
from .curve import predicted_exponents  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "critwave"


def probe_plot(path, probes, pair=None, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for unknown, style in (("u", "-"), ("v", "--")):
        rows = [p for p in probes if p.unknown == unknown and p.t > 0 and p.linf > 0]
        if not rows:
            continue
        t = np.array([p.t for p in rows])
        y = np.array([p.linf for p in rows])
        ax.loglog(t, y, style, label=f"{unknown} sup norm")
        if pair is not None and len(t) > 1:
            slope = predicted_exponents(pair, unknown, "linf")
            ref = y[-1] * ((1 + t) / (1 + t[-1])) ** slope
            ax.loglog(t, ref, ":", label=f"{unknown} predicted slope {slope:.3g}")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.set_title(title)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def sweep_plots(out: Path, rows, configs) -> None:
    for row in rows:
        f = out / f"{row['name']}_probes.csv"
        if f.exists():
            cfg = configs[row["name"]]
            probe_plot(out / f"{row['name']}.svg", read_probes_csv(f), cfg.pair,
                       f"{row['name']}: {row.get('status')} / {row.get('classifier')}")
