"""Quantum core: static Hamiltonians, kick unitaries, monodromy evolution.

Conventions (hbar = 1 throughout):
  * basis ordering is |s_1> x ... x |s_N> with up = index 0 per factor, so
    spin 1 is the most significant bit of the computational index;
  * one kick period advances the reduced time theta by 2pi; a free stretch of
    angular length dphi applies exp(-i H dphi / omega0);
  * spins are kicked inside a period in increasing order of their delay,
    ties broken by spin index (the kick operators then commute anyway).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bath import TWO_PI, TorusEnsemble, TorusMap

COUPLINGS = ("heisenberg", "ising_z")

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

CAT_STATE = (1 / np.sqrt(2), 1 / np.sqrt(2))
UP = (1.0, 0.0)
DOWN = (0.0, 1.0)


def normalized_amplitudes(pair) -> tuple[complex, complex]:
    a, b = complex(pair[0]), complex(pair[1])
    norm = np.hypot(abs(a), abs(b))
    if norm < 1e-12:
        raise ValueError("spin state amplitudes cannot both vanish")
    return (a / norm, b / norm)


def uniform_states(n_spins: int, amplitudes, overrides: dict | None = None):
    """Per-spin state list: one default pair plus {spin index (1-based): pair}."""
    states = [normalized_amplitudes(amplitudes)] * n_spins
    for spin, pair in (overrides or {}).items():
        if not 1 <= spin <= n_spins:
            raise ValueError(f"spin index {spin} out of range 1..{n_spins}")
        states[spin - 1] = normalized_amplitudes(pair)
    return tuple(states)


@dataclass(frozen=True)
class ChainConfig:
    """Physical description of the kicked chain.

    j_coupling, omega1 and omega0 share frequency units; only the ratios
    J/omega0 and omega1/omega0 enter the dynamics.  kick_direction is the
    angle theta of |w> = cos(theta)|up> + sin(theta)|down>.
    """

    n_spins: int
    coupling: str = "heisenberg"
    j_coupling: float = 0.5
    omega0: float = 1.0
    omega1: float = 0.1
    topology: str = "open"
    kick_direction: float = 0.0
    initial_states: tuple = ()

    def __post_init__(self):
        if self.n_spins < 1:
            raise ValueError("need at least one spin")
        if self.n_spins > 14:
            raise ValueError("chains beyond 14 spins are not supported (dense state vectors)")
        if self.coupling not in COUPLINGS:
            raise ValueError(f"unknown coupling {self.coupling!r}; expected one of {COUPLINGS}")
        if self.topology not in ("open", "closed"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.topology == "closed" and self.n_spins < 3:
            raise ValueError("closed topology needs at least 3 spins")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        states = self.initial_states or uniform_states(self.n_spins, CAT_STATE)
        if len(states) != self.n_spins:
            raise ValueError("need one initial state per spin")
        states = tuple(normalized_amplitudes(p) for p in states)
        object.__setattr__(self, "initial_states", states)

    @property
    def dim(self) -> int:
        return 2**self.n_spins


def _embed_pair(op_left: np.ndarray, op_right: np.ndarray, site: int, n: int) -> np.ndarray:
    """Kron of 2x2 op_left at `site` and op_right at site+1 (1-based, wraps)."""
    ops = [np.eye(2, dtype=np.complex128)] * n
    ops[site - 1] = op_left
    ops[site % n] = op_right
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def _zeeman_diagonal(n: int, omega1: float) -> np.ndarray:
    """Diagonal of sum_n (omega1/2)|down><down|_n: (down count) * omega1 / 2."""
    idx = np.arange(2**n)
    downs = np.zeros(2**n)
    for bit in range(n):
        downs += (idx >> bit) & 1
    return downs * (omega1 / 2.0)


def _down_counts(dim: int) -> np.ndarray:
    idx = np.arange(dim)
    counts = np.zeros(dim, dtype=np.int64)
    bit = 1
    while bit < dim:
        counts += (idx & bit) > 0
        bit <<= 1
    return counts


@dataclass
class StaticHamiltonian:
    """Dense H = H_0 + H_I with its spectral decomposition cached.

    The eigendecomposition makes a free stretch of any angular length two
    matrix-vector products; delays change every kick so a fixed-step
    propagator cannot be precomputed.  Both couplings conserve total S_z, so
    the decomposition and the propagation run per down-count sector (verified
    at construction; a non-conserving matrix falls back to one dense block).
    """

    matrix: np.ndarray
    omega0: float
    eigenvalues: np.ndarray = field(init=False)
    eigenvectors: np.ndarray = field(init=False)

    def __post_init__(self):
        if not np.allclose(self.matrix, self.matrix.conj().T, atol=1e-12):
            raise ValueError("Hamiltonian is not Hermitian")
        self._build_blocks()
        vals = np.concatenate([b[0] for b in self._blocks])
        self.eigenvalues = vals[self._inverse]
        vecs = np.zeros_like(self.matrix)
        for (_, v, _), idx in zip(self._blocks, self._sector_indices):
            vecs[np.ix_(idx, idx)] = v
        self.eigenvectors = vecs

    def _build_blocks(self):
        dim = self.matrix.shape[0]
        counts = _down_counts(dim)
        order = np.argsort(counts, kind="stable")
        sectors = [order[counts[order] == k] for k in range(int(counts.max()) + 1)]
        sectors = [s for s in sectors if s.size]
        off_block = self.matrix.copy()
        for idx in sectors:
            off_block[np.ix_(idx, idx)] = 0.0
        if np.max(np.abs(off_block)) > 1e-12:
            sectors = [np.arange(dim)]  # no conserved sector structure, one dense block
        self._sector_indices = sectors
        self._permutation = np.concatenate(sectors)
        self._inverse = np.argsort(self._permutation)
        self._blocks = []
        for idx in sectors:
            vals, vecs = np.linalg.eigh(self.matrix[np.ix_(idx, idx)])
            self._blocks.append(
                (vals, np.ascontiguousarray(vecs), np.ascontiguousarray(vecs.conj().T))
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def free_segment(self, dphi: float, psi: np.ndarray) -> np.ndarray:
        """exp(-i H dphi / omega0) applied blockwise through the eigenbasis."""
        if dphi == 0.0:
            return psi
        scale = -1j * (dphi / self.omega0)
        out = np.empty_like(psi)
        pos = 0
        permuted = psi[self._permutation]
        for vals, vecs, adj in self._blocks:
            n = vals.size
            seg = permuted[pos : pos + n]
            out[pos : pos + n] = vecs @ (np.exp(scale * vals) * (adj @ seg))
            pos += n
        return out[self._inverse]

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, self.matrix @ psi)))


def build_static_hamiltonian(cfg: ChainConfig) -> StaticHamiltonian:
    """Assemble sum_n H_0n + sum_n H_In (plus the 1..N bond when closed)."""
    n, dim = cfg.n_spins, cfg.dim
    h = np.zeros((dim, dim), dtype=np.complex128)
    h[np.diag_indices(dim)] = _zeeman_diagonal(n, cfg.omega1)

    bonds = list(range(1, n))  # bond at site k couples spins k and k+1
    if cfg.topology == "closed":
        bonds.append(n)  # wraps to couple spins N and 1
    quarter = cfg.j_coupling / 4.0  # S_i = sigma_i / 2 gives J/4 per Pauli pair
    for site in bonds:
        if cfg.coupling == "heisenberg":
            for s in (SIGMA_X, SIGMA_Y, SIGMA_Z):
                h -= quarter * _embed_pair(s, s, site, n)
        else:
            h -= quarter * _embed_pair(SIGMA_Z, SIGMA_Z, site, n)
    return StaticHamiltonian(h, cfg.omega0)


def kick_unitary(strength: float, direction: float) -> np.ndarray:
    """Single-spin kick id + (e^{-i lambda} - 1)|w><w|."""
    w = np.array([np.cos(direction), np.sin(direction)], dtype=np.complex128)
    return np.eye(2, dtype=np.complex128) + (np.exp(-1j * strength) - 1.0) * np.outer(
        w, w.conj()
    )


def apply_local(psi: np.ndarray, n_spins: int, spin: int, op: np.ndarray) -> np.ndarray:
    """Apply a 2x2 operator to one tensor factor without forming Kronecker products."""
    if not 1 <= spin <= n_spins:
        raise ValueError(f"spin index {spin} out of range 1..{n_spins}")
    left = 2 ** (spin - 1)
    right = 2 ** (n_spins - spin)
    cube = psi.reshape(left, 2, right)
    return np.einsum("st,atb->asb", op, cube).reshape(psi.size)


@dataclass(frozen=True)
class KickRound:
    """Per-spin kick parameters for one period (delays reduced mod 2pi)."""

    strengths: np.ndarray
    delays: np.ndarray
    directions: np.ndarray

    @classmethod
    def build(cls, strengths, delays, directions) -> "KickRound":
        lam = np.atleast_1d(np.asarray(strengths, dtype=float))
        phi = np.mod(np.atleast_1d(np.asarray(delays, dtype=float)), TWO_PI)
        theta = np.broadcast_to(np.asarray(directions, dtype=float), lam.shape).copy()
        if not (lam.shape == phi.shape == theta.shape):
            raise ValueError("strengths, delays and directions must have matching length")
        return cls(lam, phi, theta)

    @property
    def n_spins(self) -> int:
        return self.strengths.shape[0]


def monodromy_apply(ham: StaticHamiltonian, kicks: KickRound, psi: np.ndarray) -> np.ndarray:
    """One period: free stretches interleaved with kicks in increasing-delay order."""
    n = kicks.n_spins
    if ham.dim != 2**n:
        raise ValueError("kick round size does not match the Hamiltonian dimension")
    order = np.lexsort((np.arange(n), kicks.delays))
    phi_prev = 0.0
    for k in order:
        psi = ham.free_segment(kicks.delays[k] - phi_prev, psi)
        phi_prev = kicks.delays[k]
        if kicks.strengths[k] != 0.0:
            psi = apply_local(
                psi, n, k + 1, kick_unitary(kicks.strengths[k], kicks.directions[k])
            )
    return ham.free_segment(TWO_PI - phi_prev, psi)


def initial_state(cfg: ChainConfig) -> np.ndarray:
    psi = np.array([1.0 + 0.0j])
    for pair in cfg.initial_states:
        psi = np.kron(psi, np.asarray(pair, dtype=np.complex128))
    return psi


KickSource = Callable[[int], KickRound]


def no_kicks(n_spins: int) -> KickSource:
    round_ = KickRound.build(np.zeros(n_spins), np.zeros(n_spins), np.zeros(n_spins))
    return lambda i: round_


def bath_kicks(cfg: ChainConfig, ensemble: TorusEnsemble, torus_map: TorusMap) -> KickSource:
    """Kick rounds read off a bath trajectory, one train per spin, in order.

    Round i uses the ensemble at iteration i (the initial distribution supplies
    the first kicks).
    """
    if ensemble.n_trains != cfg.n_spins:
        raise ValueError(
            f"bath has {ensemble.n_trains} trains but the chain has {cfg.n_spins} spins"
        )
    state = {"ens": ensemble}

    def source(i: int) -> KickRound:
        ens = state["ens"]
        if i != ens.iteration:
            raise ValueError("bath kick source must be consumed sequentially")
        state["ens"] = ens.stepped(torus_map)
        return KickRound.build(
            ens.points[:, 0], ens.points[:, 1], np.full(cfg.n_spins, cfg.kick_direction)
        )

    return source


def sequence_kicks(rounds: Sequence[KickRound] | Iterable[KickRound]) -> KickSource:
    rounds = list(rounds)
    return lambda i: rounds[i]


def evolve_trajectory(
    cfg: ChainConfig,
    ham: StaticHamiltonian,
    kicks: KickSource | None,
    i_max: int,
    norm_tolerance: float | None = None,
) -> np.ndarray:
    """Stroboscopic snapshots psi^(0) .. psi^(i_max), shape (i_max + 1, 2^N).

    If norm_tolerance is given, any norm drift beyond it aborts with an error
    (unitarity watchdog for long runs).
    """
    if kicks is None:
        kicks = no_kicks(cfg.n_spins)
    out = np.empty((i_max + 1, cfg.dim), dtype=np.complex128)
    psi = initial_state(cfg)
    out[0] = psi
    for i in range(i_max):
        psi = monodromy_apply(ham, kicks(i), psi)
        if norm_tolerance is not None:
            drift = abs(np.linalg.norm(psi) - 1.0)
            if drift > norm_tolerance:
                raise FloatingPointError(
                    f"norm drift {drift:.3e} beyond {norm_tolerance:.1e} at kick {i + 1}"
                )
        out[i + 1] = psi
    return out


def monodromy_matrix(ham: StaticHamiltonian, kicks: KickRound) -> np.ndarray:
    """Dense monodromy operator, column by column (for tests and small chains)."""
    dim = ham.dim
    u = np.empty((dim, dim), dtype=np.complex128)
    for j in range(dim):
        e = np.zeros(dim, dtype=np.complex128)
        e[j] = 1.0
        u[:, j] = monodromy_apply(ham, kicks, e)
    return u
