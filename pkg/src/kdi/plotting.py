"""Optional PNG rendering of CLI results (``--figures``).

Kept out of the library core; matplotlib is imported lazily with the
non-interactive Agg backend.
"""
from __future__ import annotations

from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_density(density, reports, path: Path) -> Path:
    """Density in units of 1/um versus z in um, predicted beam positions marked."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.plot(density.positions * 1e6, density.density * 1e-6, lw=0.8, color="k")
    top = float(density.density.max()) * 1e-6
    for r in reports:
        ax.axvline(r.predicted_position * 1e6, color="tab:red", lw=0.5, ls=":")
        ax.text(r.predicted_position * 1e6, 1.02 * top, r.label, ha="center", va="bottom", fontsize=8)
    ax.set_xlabel("z (um)")
    ax.set_ylabel("|psi(z)|^2 (1/um)")
    ax.set_ylim(0, 1.12 * top)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_fringe(rows, param_label: str, path: Path) -> Path:
    plt = _pyplot()
    x = [r["param"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(x, [r["pop_I"] for r in rows], "o-", ms=3, label="beam I")
    ax.plot(x, [r["pop_V"] for r in rows], "s-", ms=3, label="beam V")
    ax.plot(x, [r["model_I"] for r in rows], "--", lw=0.8, label="model I")
    ax.set_xlabel(param_label)
    ax.set_ylabel("population")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_splitter(rows, param_label: str, path: Path) -> Path:
    plt = _pyplot()
    x = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(x, [r[1] for r in rows], "o", ms=3, label="ladder solver")
    ax.plot(x, [r[2] for r in rows], "-", lw=0.8, label="two-level model")
    ax.set_xlabel(param_label)
    ax.set_ylabel("transfer probability")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
