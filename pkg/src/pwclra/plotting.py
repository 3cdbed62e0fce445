"""NMSE figures rendered from a results CSV."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .runner import read_csv  # noqa: E402

# candidate x axes in order of preference, with axis labels
AXES = (("Z", "training overhead Z"), ("snr_db", "SNR [dB]"),
        ("d_x_rb", "BS distance d_x [m]"), ("M", "RIS elements M"))


def mean_nmse_db(records) -> dict:
    """``{(method, x_key, x): mean NMSE in dB}`` averaged linearly over trials."""
    acc = defaultdict(list)
    for r in records:
        acc[r["method"], r["_x"]].append(r["nmse_linear"])
    return {key: 10 * np.log10(np.mean(v)) if np.mean(v) > 0 else -np.inf
            for key, v in acc.items()}


def sweep_axis(records) -> tuple[str, str]:
    """The first axis that varies across the PW-CLRA rows (``Z`` if none does)."""
    pw = [r for r in records if not r["method"].startswith("CLRA-")] or records
    for key, label in AXES:
        if len({r[key] for r in pw}) > 1:
            return key, label
    return AXES[0]


def plot_results(csv_path, out_path=None) -> Path:
    """Render mean NMSE [dB] per method against the swept axis."""
    records = read_csv(csv_path)
    key, label = sweep_axis(records)
    for r in records:
        r["_x"] = r[key]
    means = mean_nmse_db(records)
    methods = list(dict.fromkeys(r["method"] for r in records))
    scenario = records[0]["scenario"] if records else ""

    fig, ax = plt.subplots(figsize=(6, 4))
    markers = "osd^v<>x"
    for i, m in enumerate(methods):
        xs = sorted({x for (mm, x) in means if mm == m})
        ys = [means[m, x] for x in xs]
        ax.plot(xs, ys, marker=markers[i % len(markers)], label=m)
    ax.set_xlabel(label)
    ax.set_ylabel("NMSE [dB]")
    ax.set_title(scenario)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    csv_path = Path(csv_path)
    out = Path(out_path) if out_path else csv_path.with_name(f"{csv_path.stem}_nmse_vs_{key}.png")
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out
