"""Closed-form two-spin and single-spin solutions used as regression oracles.

These are independent transcriptions of exactly solvable configurations
(Ising-Z free evolution, an uncoupled kicked spin, constant eigenvector-direction
kicks on Ising-Z and Heisenberg pairs).  The simulator must reproduce every one
of them; the test suite enforces that equivalence.

Amplitude naming: a four-component pure state of two spins is written
(amp_uu, amp_ud, amp_du, amp_dd) in the basis |uu>, |ud>, |du>, |dd> to avoid
clashing single-letter symbols across the different derivations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TwoSpinAmplitudes:
    amp_uu: complex
    amp_ud: complex
    amp_du: complex
    amp_dd: complex

    def __post_init__(self):
        total = sum(abs(a) ** 2 for a in self.as_tuple())
        if abs(total - 1.0) > 1e-9:
            raise ValueError("two-spin amplitudes must be normalized")

    def as_tuple(self):
        return (self.amp_uu, self.amp_ud, self.amp_du, self.amp_dd)

    @classmethod
    def product(cls, first: tuple, second: tuple) -> "TwoSpinAmplitudes":
        a, b = complex(first[0]), complex(first[1])
        c, d = complex(second[0]), complex(second[1])
        return cls(a * c, a * d, b * c, b * d)


def isingz_free(
    amps: TwoSpinAmplitudes, j: float, omega0: float, omega1: float, i: int
) -> tuple[float, float]:
    """Population and coherence of spin 1 after i kick-free Ising-Z periods.

    The population never moves; the coherence oscillates through two phase
    rates, each 2pi-periodic in the kick index.
    """
    uu, ud, du, dd = amps.as_tuple()
    population = abs(uu) ** 2 + abs(ud) ** 2
    rate_a = (j / (2 * omega0) + omega1 / (2 * omega0)) * TWO_PI
    rate_b = (j / (2 * omega0) - omega1 / (2 * omega0)) * TWO_PI
    coh = du * np.conj(uu) * np.exp(-1j * i * rate_a) + dd * np.conj(ud) * np.exp(
        1j * i * rate_b
    )
    return population, float(abs(coh))


def uncoupled_kicked(
    amp_up: complex, amp_down: complex, strengths, omega0: float, omega1: float
) -> np.ndarray:
    """Density matrix of a lone spin kicked along |up> once per period.

    Populations are untouched; each kick only adds its strength to the phase of
    the coherence, on top of the Zeeman phase omega1/omega0 * pi per period.
    """
    if abs(abs(amp_up) ** 2 + abs(amp_down) ** 2 - 1.0) > 1e-9:
        raise ValueError("spin amplitudes must be normalized")
    strengths = np.asarray(strengths, dtype=float)
    i = strengths.size
    off = (
        amp_up
        * np.conj(amp_down)
        * np.exp(-1j * strengths.sum())
        * np.exp(1j * i * (omega1 / omega0) * math.pi)
    )
    return np.array(
        [[abs(amp_up) ** 2, off], [np.conj(off), abs(amp_down) ** 2]],
        dtype=np.complex128,
    )


def isingz_kicked_pair(
    first: tuple,
    second: tuple,
    lam1: float,
    lam2: float,
    j: float,
    omega0: float,
    omega1: float,
    i: int,
) -> tuple[float, float]:
    """(coherence of spin 1, coherence of the average spin) for a kicked Ising-Z pair.

    Constant strengths lam1, lam2 along |up>, zero delays, product initial
    state.  The spin-1 coherence is strength-independent; the average-spin
    coherence feels only the strength difference and collapses to the unkicked
    value when lam1 == lam2.
    """
    chi, zeta = complex(first[0]), complex(first[1])
    gam, delta = complex(second[0]), complex(second[1])
    alpha = j / (4 * omega0)
    beta = omega1 / (2 * omega0)
    up_phase = np.exp(1j * i * (2 * alpha + beta) * TWO_PI)
    down_phase = np.exp(-1j * i * (2 * alpha - beta) * TWO_PI)

    coh1 = abs(
        chi * gam * np.conj(zeta) * np.conj(gam) * up_phase
        + chi * delta * np.conj(zeta) * np.conj(delta) * down_phase
    )
    coh_tot = 0.5 * abs(
        chi * gam * np.conj(zeta) * np.conj(gam) * up_phase * np.exp(-1j * i * lam1)
        + chi * delta * np.conj(zeta) * np.conj(delta) * down_phase * np.exp(-1j * i * lam1)
        + chi * gam * np.conj(chi) * np.conj(delta) * up_phase * np.exp(-1j * i * lam2)
        + zeta * gam * np.conj(zeta) * np.conj(delta) * down_phase * np.exp(-1j * i * lam2)
    )
    return float(coh1), float(coh_tot)


def heisenberg_block_entries(
    j: float, omega0: float, omega1: float
) -> tuple[complex, complex, complex, complex]:
    """Entries (u, v, w, x) of the one-period Heisenberg pair propagator.

    The static Hamiltonian of two coupled spins is block diagonal: scalars on
    |uu> and |dd>, and a 2x2 block c*id - (J/2)*sigma_x on (|ud>, |du>), which
    exponentiates in closed form (rotation about x).
    """
    t = TWO_PI / omega0
    u = np.exp(-1j * (-j / 4.0) * t)
    x = np.exp(-1j * (omega1 - j / 4.0) * t)
    c = omega1 / 2.0 + j / 4.0
    half_angle = (j / 2.0) * t
    v = np.exp(-1j * c * t) * math.cos(half_angle)
    w = 1j * np.exp(-1j * c * t) * math.sin(half_angle)
    return u, v, w, x


def heisenberg_kicked_populations(
    lam1: float, lam2: float, block: tuple[complex, complex, complex, complex], i: int
) -> float:
    """Spin-1 up population of a kicked Heisenberg pair at kick i (i <= 3).

    Initial state |up> x (|up> + |down>)/sqrt(2), strengths lam1/lam2 along
    |up>, zero delays.  Transcribed term by term from the order-by-order
    expansion; the strength dependence enters only through lam1 - lam2.
    """
    u, v, w, x = block
    if i == 0:
        return 1.0
    if i == 1:
        return float(0.5 * (u * np.conj(u) + v * np.conj(v)).real)
    d = lam1 - lam2
    u2, v2, w2 = u * u, v * v, w * w
    if i == 2:
        val = (
            u2 * np.conj(u2)
            + v2 * np.conj(v2)
            + w2 * np.conj(w2)
            + v2 * np.conj(w2) * np.exp(-1j * d)
            + w2 * np.conj(v2) * np.exp(1j * d)
        )
        return float(0.5 * val.real)
    if i == 3:
        u3 = u2 * u
        inner = (
            v2 * np.conj(v2)
            + 5.0 * w2 * np.conj(w2)
            + v2 * np.conj(w2) * np.exp(2j * (lam2 - lam1))
            + 2.0 * v2 * np.conj(w2) * np.exp(-1j * d)
            + w2 * np.conj(v2) * np.exp(2j * d)
            + 2.0 * w2 * np.conj(w2) * np.exp(1j * d)
            + 2.0 * w2 * np.conj(v2) * np.exp(1j * d)
            + 2.0 * w2 * np.conj(w2) * np.exp(-1j * d)
        )
        val = u3 * np.conj(u3) + (v * np.conj(v)) * inner
        return float(0.5 * val.real)
    raise ValueError("the expansion is only derived up to kick 3")


def simulator_battery(kicks: int = 200) -> dict[str, float]:
    """Max |simulator - closed form| for every oracle, over `kicks` periods.

    The central regression property: the full monodromy evolution must
    reproduce each exactly solvable configuration.
    """
    from . import chain, observables as obs

    j, w0, w1 = 0.3, 1.0, 0.17
    report: dict[str, float] = {}

    first, second = (0.6, 0.8j), (1 / math.sqrt(3), math.sqrt(2 / 3))
    cfg = chain.ChainConfig(
        2, "ising_z", j, w0, w1, initial_states=(first, second)
    )
    ham = chain.build_static_hamiltonian(cfg)
    amps = TwoSpinAmplitudes.product(first, second)
    traj = chain.evolve_trajectory(cfg, ham, None, kicks)
    dev = 0.0
    for i, psi in enumerate(traj):
        rho = obs.reduce(psi, 2, 1)
        pop, coh = isingz_free(amps, j, w0, w1, i)
        dev = max(dev, abs(obs.population_up(rho) - pop), abs(obs.coherence(rho) - coh))
    report["ising_z free pair (A)"] = dev

    cfg1 = chain.ChainConfig(1, "ising_z", 0.0, w0, w1, initial_states=((0.6, 0.8),))
    ham1 = chain.build_static_hamiltonian(cfg1)
    rng = np.random.default_rng(42)
    lams = rng.uniform(0, TWO_PI, kicks)
    phis = rng.uniform(0, TWO_PI, kicks)
    rounds = [chain.KickRound.build([l], [p], [0.0]) for l, p in zip(lams, phis)]
    traj1 = chain.evolve_trajectory(cfg1, ham1, chain.sequence_kicks(rounds), kicks)
    dev = 0.0
    for i, psi in enumerate(traj1):
        rho = obs.reduce(psi, 1, 1)
        dev = max(dev, float(np.max(np.abs(rho - uncoupled_kicked(0.6, 0.8, lams[:i], w0, w1)))))
    report["uncoupled kicked spin (B)"] = dev

    lam1, lam2 = 1.1, 2.3
    cfgz = chain.ChainConfig(2, "ising_z", j, w0, w1, initial_states=(first, second))
    hamz = chain.build_static_hamiltonian(cfgz)
    round_z = chain.KickRound.build([lam1, lam2], [0.0, 0.0], [0.0, 0.0])
    u = chain.monodromy_matrix(hamz, round_z)
    alpha, beta = j / (4 * w0), w1 / (2 * w0)
    u_ref = np.diag(
        [
            np.exp(1j * alpha * TWO_PI) * np.exp(-1j * (lam1 + lam2)),
            np.exp(-1j * (alpha + beta) * TWO_PI) * np.exp(-1j * lam1),
            np.exp(-1j * (alpha + beta) * TWO_PI) * np.exp(-1j * lam2),
            np.exp(1j * (alpha - 2 * beta) * TWO_PI),
        ]
    )
    report["ising_z kicked monodromy (C.1)"] = float(np.max(np.abs(u - u_ref)))

    trajz = chain.evolve_trajectory(
        cfgz, hamz, chain.sequence_kicks([round_z] * kicks), kicks
    )
    dev = 0.0
    for i, psi in enumerate(trajz):
        rhos = obs.reduce_all(psi, 2)
        coh1, coh_tot = isingz_kicked_pair(first, second, lam1, lam2, j, w0, w1, i)
        dev = max(
            dev,
            abs(obs.coherence(rhos[0]) - coh1),
            abs(obs.coherence(obs.average_density(rhos)) - coh_tot),
        )
    report["ising_z kicked coherences (C.1)"] = dev

    cfgh = chain.ChainConfig(
        2, "heisenberg", j, w0, w1, initial_states=((1.0, 0.0), (1.0, 1.0))
    )
    hamh = chain.build_static_hamiltonian(cfgh)
    block = heisenberg_block_entries(j, w0, w1)
    round_h = chain.KickRound.build([lam1, lam2], [0.0, 0.0], [0.0, 0.0])
    trajh = chain.evolve_trajectory(cfgh, hamh, chain.sequence_kicks([round_h] * 3), 3)
    dev = 0.0
    for i in range(4):
        pop = obs.population_up(obs.reduce(trajh[i], 2, 1))
        dev = max(dev, abs(pop - heisenberg_kicked_populations(lam1, lam2, block, i)))
    report["heisenberg kicked populations (C.2)"] = dev
    return report
