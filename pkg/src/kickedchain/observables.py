"""Per-spin observables: reduced densities, populations, coherences, entropies, Husimi."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EIGENVALUE_CLIP = 1e-12  # reduced-density eigenvalues below this are treated as 0


def reduce(psi: np.ndarray, n_spins: int, spin: int) -> np.ndarray:
    """2x2 reduced density of one spin: partial trace over every other factor."""
    if not 1 <= spin <= n_spins:
        raise ValueError(f"spin index {spin} out of range 1..{n_spins}")
    left = 2 ** (spin - 1)
    right = 2 ** (n_spins - spin)
    cube = psi.reshape(left, 2, right)
    return np.einsum("asb,atb->st", cube, cube.conj())


def reduce_all(psi: np.ndarray, n_spins: int) -> np.ndarray:
    """Reduced densities of every spin, shape (n_spins, 2, 2)."""
    return np.stack([reduce(psi, n_spins, k) for k in range(1, n_spins + 1)])


def average_density(rhos: np.ndarray) -> np.ndarray:
    """Density matrix of the average spin, (1/N) sum_n rho_n."""
    return np.mean(rhos, axis=0)


def population_up(rho: np.ndarray) -> float:
    return float(rho[0, 0].real)


def coherence(rho: np.ndarray) -> float:
    return float(abs(rho[0, 1]))


def von_neumann(rho: np.ndarray, gamma_factor: float = 1.0) -> float:
    """Entropy -gamma * tr(rho ln rho); eigenvalues are clipped before the log."""
    vals = np.linalg.eigvalsh(rho)
    vals = vals[vals > EIGENVALUE_CLIP]
    return max(0.0, float(gamma_factor * -np.sum(vals * np.log(vals))))


@dataclass(frozen=True)
class HusimiGridSpec:
    """Mesh over the Bloch sphere: polar theta in [0, pi], azimuth phi in [0, 2pi)."""

    n_theta: int = 64
    n_phi: int = 128

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 1:
            raise ValueError("grid needs at least 2 polar and 1 azimuthal points")

    @property
    def thetas(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.n_theta)

    @property
    def phis(self) -> np.ndarray:
        return np.arange(self.n_phi) * (2 * np.pi / self.n_phi)


def husimi(rho: np.ndarray, grid: HusimiGridSpec = HusimiGridSpec()) -> np.ndarray:
    """Squared coherent-state expectation |<theta,phi|rho|theta,phi>|^2 on the mesh.

    The expectation itself is real non-negative for a valid density matrix;
    squaring it is deliberate (the unsquared variant is husimi_expectation).
    """
    return husimi_expectation(rho, grid) ** 2


def husimi_expectation(rho: np.ndarray, grid: HusimiGridSpec = HusimiGridSpec()) -> np.ndarray:
    """<theta,phi|rho|theta,phi> over the mesh, shape (n_theta, n_phi)."""
    th = grid.thetas[:, None]
    ph = grid.phis[None, :]
    u = np.cos(th / 2) * np.ones_like(ph)
    v = np.exp(1j * ph) * np.sin(th / 2)
    expect = (
        np.abs(u) ** 2 * rho[0, 0].real
        + np.abs(v) ** 2 * rho[1, 1].real
        + 2 * np.real(u.conj() * rho[0, 1] * v)
    )
    return np.maximum(expect, 0.0)


def azimuthal_projection(grid: HusimiGridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Disk coordinates (x, y) = theta * (cos phi, sin phi) for plotting parity."""
    th = grid.thetas[:, None]
    ph = grid.phis[None, :]
    return th * np.cos(ph), th * np.sin(ph)


def series_from_snapshots(snapshots: np.ndarray, n_spins: int, gamma_factor: float = 1.0):
    """Population, coherence and entropy time series for each spin and the average.

    Returns (per_spin, average): per_spin has shape (kicks + 1, n_spins, 3) with
    the last axis (population, coherence, entropy); average is (kicks + 1, 3).
    """
    steps = snapshots.shape[0]
    per_spin = np.empty((steps, n_spins, 3))
    average = np.empty((steps, 3))
    for i in range(steps):
        rhos = reduce_all(snapshots[i], n_spins)
        for k in range(n_spins):
            per_spin[i, k] = (
                population_up(rhos[k]),
                coherence(rhos[k]),
                von_neumann(rhos[k], gamma_factor),
            )
        rho_tot = average_density(rhos)
        average[i] = (
            population_up(rho_tot),
            coherence(rho_tot),
            von_neumann(rho_tot, gamma_factor),
        )
    return per_spin, average
