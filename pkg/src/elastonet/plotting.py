"""Figures written to files: frequency sweeps and network drawings."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .model import Network  # noqa: E402


def plot_sweep(omegas, matrices, resonances, path, title: str = "") -> None:
    """Diagonal entries ``|W_ii(w)|`` on a log axis, with dashed lines at resonances.

    ``matrices`` may contain ``None`` for frequencies that could not be evaluated.
    """
    omegas = np.asarray(omegas, dtype=float)
    nd = next((m.shape[0] for m in matrices if m is not None), 0)
    diag = np.full((len(omegas), nd), np.nan)
    for r, m in enumerate(matrices):
        if m is not None:
            diag[r] = np.abs(np.diag(m))
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i in range(nd):
        ax.plot(omegas, diag[:, i], marker=".", lw=1, label=f"|W_{i + 1},{i + 1}|")
    for w2 in np.asarray(resonances, dtype=float):
        w = np.sqrt(w2)
        if omegas.size and omegas.min() <= w <= omegas.max():
            ax.axvline(w, color="0.5", ls="--", lw=0.8)
    if np.nanmax(diag, initial=0.0) > 0:
        ax.set_yscale("log")
    ax.set_xlabel("omega")
    ax.set_ylabel("response magnitude")
    if title:
        ax.set_title(title)
    if nd <= 8:
        ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_network(net: Network, path, title: str = "") -> None:
    """Planar drawing: springs as lines (width ~ log stiffness), terminals as squares,
    interior nodes as circles, massive nodes filled."""
    if net.dimension != 2:
        raise ValueError("only planar networks can be drawn")
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ks = np.array([s.stiffness for s in net.springs]) if net.springs else np.ones(1)
    lo, hi = np.log10(ks.min() + 1e-300), np.log10(ks.max() + 1e-300)
    for s in net.springs:
        a, b = (net.node(lab).x for lab in s.endpoints)
        t = 0.5 if hi == lo else (np.log10(s.stiffness) - lo) / (hi - lo)
        ax.plot([a[0], b[0]], [a[1], b[1]], color="tab:blue", lw=0.4 + 2.0 * t, alpha=0.7)
    for n in net.nodes:
        marker = "s" if n.is_terminal else "o"
        face = "k" if n.mass > 0 else "w"
        ax.plot(*n.x, marker=marker, mfc=face, mec="k", ms=7 if n.is_terminal else 4)
        if n.is_terminal:
            ax.annotate(n.label, n.x, textcoords="offset points", xytext=(4, 4), fontsize="small")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
