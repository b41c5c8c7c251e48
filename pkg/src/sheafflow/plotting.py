"""Figures for kernel reports (matplotlib, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["plot_stalks", "plot_microsupport", "plot_report"]


def _points(assembly, vertices):
    M = assembly.model
    xs, ts = [], []
    for v in vertices:
        x, _ = M.chart(v)
        xs.append(x * M.h)
        ts.append(M.row[v] * M.h)
    return xs, ts


def _slice_vertices(assembly):
    """Vertices of one meridian: both sheets on the circle, sheet 1 plus the axis otherwise."""
    M = assembly.model
    if M.n == 1:
        return list(M.complex.vertices)
    return [v for v in M.complex.vertices if M.sheet[v] in (0, 1)]


def plot_stalks(assembly, path) -> None:
    """Total stalk rank of the kernel at each vertex, in the (angle, time) plane."""
    K = assembly.kernel
    verts = _slice_vertices(assembly)
    xs, ts = _points(assembly, verts)
    ranks = [sum(K.stalk_ranks(v).values()) for v in verts]
    fig, ax = plt.subplots(figsize=(6, 6))
    sc = ax.scatter(xs, ts, c=ranks, s=6, cmap="viridis")
    fig.colorbar(sc, ax=ax, label="total stalk rank")
    ax.set_xlabel("signed angle" if assembly.model.n == 1 else "distance to base point")
    ax.set_ylabel("t")
    ax.set_title(f"stalks of K ({assembly.space}, n={assembly.n}, mesh={assembly.model.m})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_microsupport(assembly, table: dict, path) -> None:
    """Detected direction classes drawn as short arrows at the sampled vertices."""
    M = assembly.model
    fig, ax = plt.subplots(figsize=(6, 6))
    verts = sorted(table)
    xs, ts = _points(assembly, verts)
    ax.scatter(xs, ts, s=3, c="lightgray")
    L = 0.6 * M.h * 2
    for v, x, t in zip(verts, xs, ts):
        for a, b in table[v]:
            ax.annotate("", xy=(x + L * a, t + L * b), xytext=(x, t),
                        arrowprops=dict(arrowstyle="->", color="tab:red", lw=0.8))
    ax.set_xlabel("signed angle" if M.n == 1 else "distance to base point")
    ax.set_ylabel("t")
    ax.set_title("micro_test directions at sampled vertices")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_report(assembly, table: dict | None, stem) -> list[str]:
    """Write the figures next to a report; returns the paths written."""
    out = [f"{stem}_stalks.png"]
    plot_stalks(assembly, out[0])
    if table:
        out.append(f"{stem}_microsupport.png")
        plot_microsupport(assembly, table, out[1])
    return out
