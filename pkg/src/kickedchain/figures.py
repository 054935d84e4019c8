"""Matplotlib rendering of run outputs: density maps, series, entropies, Husimi disks.

Figures are a presentation layer over the CSV tables; nothing downstream
depends on them.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .observables import HusimiGridSpec, azimuthal_projection


def render_population_density(path: Path, populations: np.ndarray) -> Path:
    """Heat map of up populations, spins vertical, kicks horizontal."""
    fig, ax = plt.subplots(figsize=(7, 3))
    img = ax.imshow(
        populations.T,
        aspect="auto",
        origin="lower",
        cmap="inferno",
        vmin=0.0,
        vmax=1.0,
        extent=(0, populations.shape[0] - 1, 0.5, populations.shape[1] + 0.5),
    )
    ax.set_xlabel("kick")
    ax.set_ylabel("spin")
    fig.colorbar(img, ax=ax, label="up population")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_series(path: Path, per_spin: np.ndarray, average: np.ndarray, column: int, label: str) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    kicks = np.arange(per_spin.shape[0])
    for k in range(per_spin.shape[1]):
        ax.plot(kicks, per_spin[:, k, column], lw=0.7, alpha=0.45)
    ax.plot(kicks, average[:, column], "k-", lw=1.8, label="average spin")
    ax.set_xlabel("kick")
    ax.set_ylabel(label)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_entropies(
    path: Path,
    quantum: np.ndarray,
    shannon: np.ndarray | None,
    cumulated: np.ndarray | None,
    ks: np.ndarray | None,
    markers: dict[str, float] | None = None,
) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    kicks = np.arange(quantum.shape[0])
    ax.plot(kicks, quantum, "k-", lw=1.6, label="von Neumann (average spin)")
    if shannon is not None:
        ax.plot(kicks, shannon, "C0-", lw=1.2, label="Shannon (bath)")
    if cumulated is not None:
        ax.plot(kicks, cumulated, "C0--", lw=1.0, label="cumulated Shannon")
    if ks is not None:
        ax.plot(kicks, ks, "C3:", lw=1.4, label="Kolmogorov-Sinai model")
    for name, x in (markers or {}).items():
        ax.axvline(x, color="green", lw=0.9, ls="--")
        ax.text(x, ax.get_ylim()[1] * 0.95, name, rotation=90, fontsize=7, va="top")
    ax.set_xlabel("kick")
    ax.set_ylabel("entropy")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_husimi_disk(path: Path, values: np.ndarray, grid: HusimiGridSpec) -> Path:
    """Azimuthal projection: north pole at the center, south pole at the rim."""
    x, y = azimuthal_projection(grid)
    x = np.concatenate([x, x[:, :1]], axis=1)  # close the azimuthal seam
    y = np.concatenate([y, y[:, :1]], axis=1)
    v = np.concatenate([values, values[:, :1]], axis=1)
    fig, ax = plt.subplots(figsize=(4.2, 4))
    mesh = ax.pcolormesh(x, y, v, shading="gouraud", cmap="jet", vmin=0.0, vmax=1.0)
    ax.set_aspect("equal")
    ax.set_axis_off()
    fig.colorbar(mesh, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_bundle(fig_dir: Path, cfg, per_spin, average, bath_entropy, snapshots=None) -> list[Path]:
    """The standard figure set written next to a run's CSV tables."""
    from . import bath as bath_mod
    from . import predictors

    out = []
    out.append(render_population_density(fig_dir / "population_density.png", per_spin[:, :, 0]))
    out.append(render_series(fig_dir / "coherence.png", per_spin, average, 1, "coherence"))
    out.append(render_series(fig_dir / "population.png", per_spin, average, 0, "up population"))

    shannon = cumulated = ks = None
    markers = {}
    if bath_entropy is not None:
        shannon = bath_entropy
        cumulated = bath_mod.cumulated_shannon(bath_entropy)
        if cfg.torus_map.is_chaotic() and cfg.bath.dispersion > 0:
            n_box, n_star = predictors.horizons_for_bath(
                cfg.torus_map, cfg.bath.dispersion, cfg.bath.n_trains, cfg.partition
            )
            theta = (
                1.0 / bath_mod.max_entropy(cfg.bath.n_trains, cfg.partition)
                if cfg.normalize_entropy
                else 1.0
            )
            s_max = bath_mod.max_entropy(cfg.bath.n_trains, cfg.partition)
            ks = theta * bath_mod.ks_prediction(
                np.arange(average.shape[0]), cfg.torus_map, n_box, s_max
            )
            markers = {"n_box": n_box, "n*": n_star}
    out.append(
        render_entropies(
            fig_dir / "entropy.png", average[:, 2], shannon, cumulated, ks, markers
        )
    )
    if snapshots is not None and cfg.husimi_at:
        out += render_husimi_files(fig_dir, snapshots, cfg)
    return out


def render_husimi_files(fig_dir: Path, snapshots, cfg) -> list[Path]:
    from . import observables

    out = []
    spins = cfg.husimi_spins or tuple(range(1, cfg.chain.n_spins + 1))
    for i in cfg.husimi_at:
        rhos = observables.reduce_all(snapshots[i], cfg.chain.n_spins)
        for s in spins:
            vals = observables.husimi(rhos[s - 1], cfg.husimi_grid)
            out.append(
                render_husimi_disk(fig_dir / f"husimi_spin{s}_kick{i}.png", vals, cfg.husimi_grid)
            )
    return out
