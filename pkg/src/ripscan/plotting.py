"""Figure rendering for the CLI report paths. All figures go to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .anomaly import AnomalyRecord  # noqa: E402
from .homology import PersistenceDiagram  # noqa: E402
from .io import AlignedSeries  # noqa: E402
from .landscape import Landscape  # noqa: E402


def save_scan_figure(series: AlignedSeries, records: list[AnomalyRecord],
                     path: str, title: str | None = None) -> None:
    """Price of the first instrument over the deviation score, shared time axis."""
    fig, (ax_price, ax_z) = plt.subplots(
        2, 1, sharex=True, figsize=(11, 6),
        gridspec_kw={"height_ratios": [2, 1]})
    ax_price.plot(series.timestamps, series.closes[:, 0],
                  color="tab:blue", lw=0.8)
    ax_price.set_ylabel(f"{series.instruments[0]} close")
    ts = [r.timestamp for r in records if r.z is not None]
    zs = [r.z for r in records if r.z is not None]
    ax_z.plot(ts, zs, color="tab:red", lw=0.8)
    ax_z.set_ylabel("z")
    ax_z.set_xlabel("time")
    if title:
        ax_price.set_title(title)
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_figure(per_alpha: dict[float, list[AnomalyRecord]],
                      path: str) -> None:
    """Deviation scores for each smoothing alpha on one axis."""
    fig, ax = plt.subplots(figsize=(11, 4))
    for alpha, records in sorted(per_alpha.items()):
        ts = [r.timestamp for r in records if r.z is not None]
        zs = [r.z for r in records if r.z is not None]
        ax.plot(ts, zs, lw=0.8, label=f"alpha={alpha:g}")
    ax.set_ylabel("z")
    ax.set_xlabel("time")
    ax.legend(loc="upper left")
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_diagram_figure(diag: PersistenceDiagram, path: str) -> None:
    """Birth/death scatter with the diagonal; essential classes at the top."""
    fig, ax = plt.subplots(figsize=(5, 5))
    finite = [iv for iv in diag if iv.finite]
    top = max((iv.death for iv in finite), default=1.0) * 1.1 or 1.0
    for dim in sorted({iv.dim for iv in diag}):
        xs = [iv.birth for iv in diag if iv.dim == dim]
        ys = [iv.death if iv.finite else top for iv in diag if iv.dim == dim]
        ax.scatter(xs, ys, s=14, label=f"H{dim}")
    ax.plot([0, top], [0, top], color="gray", lw=0.6)
    ax.set_xlabel("birth")
    ax.set_ylabel("death")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_landscape_figure(landscape: Landscape, path: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for k in range(1, landscape.num_levels + 1):
        pts = landscape.breakpoints(k)
        ax.plot([x for x, _ in pts], [y for _, y in pts], lw=0.9,
                label=f"level {k}" if k <= 6 else None)
    if landscape.num_levels:
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("scale")
    ax.set_ylabel("height")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
