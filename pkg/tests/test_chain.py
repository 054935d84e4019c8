import numpy as np
import pytest

from kickedchain import chain
from kickedchain.chain import (
    ChainConfig,
    KickRound,
    StaticHamiltonian,
    apply_local,
    build_static_hamiltonian,
    kick_unitary,
    monodromy_apply,
    monodromy_matrix,
    uniform_states,
)
from kickedchain.observables import coherence, population_up, reduce_all

W0, W1, J = 1.0, 0.17, 0.3


def random_round(rng, n, directions=None):
    theta = rng.uniform(0, np.pi, n) if directions is None else np.full(n, directions)
    return KickRound.build(rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n), theta)


class TestStaticHamiltonian:
    def test_isingz_pair_matrix(self):
        cfg = ChainConfig(2, "ising_z", J, W0, W1)
        h = build_static_hamiltonian(cfg).matrix
        expected = np.diag([-J / 4, J / 4 + W1 / 2, J / 4 + W1 / 2, -J / 4 + W1])
        assert np.max(np.abs(h - expected)) < 1e-14

    def test_heisenberg_pair_block_gap(self):
        cfg = ChainConfig(2, "heisenberg", J, W0, W1)
        h = build_static_hamiltonian(cfg).matrix
        block = h[1:3, 1:3]
        gap = np.ptp(np.linalg.eigvalsh(block))
        assert gap / W0 == pytest.approx(J / W0, rel=1e-12)
        assert block[0, 1] == pytest.approx(-J / 2)

    def test_zeeman_only_diagonal(self):
        cfg = ChainConfig(3, "heisenberg", 0.0, W0, W1)
        h = build_static_hamiltonian(cfg).matrix
        downs = np.array([bin(i).count("1") for i in range(8)])
        assert np.max(np.abs(h - np.diag(downs * W1 / 2))) < 1e-14

    def test_closed_adds_wrap_bond(self):
        open_h = build_static_hamiltonian(ChainConfig(3, "heisenberg", J, W0, W1)).matrix
        closed_h = build_static_hamiltonian(
            ChainConfig(3, "heisenberg", J, W0, W1, topology="closed")
        ).matrix
        wrap = closed_h - open_h
        # |up down down> <-> |down down up> exchange comes only from the 3-1 bond
        assert abs(wrap[0b011, 0b110] + J / 2) < 1e-14
        assert abs(open_h[0b011, 0b110]) < 1e-14

    def test_closed_needs_three_spins(self):
        with pytest.raises(ValueError):
            ChainConfig(2, "heisenberg", J, W0, W1, topology="closed")

    def test_spectral_cache_consistent(self):
        ham = build_static_hamiltonian(ChainConfig(4, "heisenberg", J, W0, W1))
        v, lam = ham.eigenvectors, ham.eigenvalues
        assert np.max(np.abs(v @ v.conj().T - np.eye(16))) < 1e-9
        assert np.max(np.abs((v * lam) @ v.conj().T - ham.matrix)) < 1e-8

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            StaticHamiltonian(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)

    def test_free_segment_against_direct_exponential(self):
        # matrix without conserved sectors exercises the dense fallback
        m = np.array([[0.3, 0.2 + 0.1j], [0.2 - 0.1j, -0.5]])
        ham = StaticHamiltonian(m, 1.0)
        vals, vecs = np.linalg.eigh(m)
        u = vecs @ np.diag(np.exp(-1j * vals * 0.7)) @ vecs.conj().T
        psi = np.array([0.6, 0.8], dtype=complex)
        assert np.max(np.abs(ham.free_segment(0.7, psi) - u @ psi)) < 1e-12


class TestKickUnitary:
    def test_zero_strength_identity(self):
        assert np.allclose(kick_unitary(0.0, 1.2), np.eye(2))

    def test_pi_up_direction(self):
        assert np.allclose(kick_unitary(np.pi, 0.0), np.diag([-1.0, 1.0]))

    def test_unitary_and_spectrum(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            lam, theta = rng.uniform(0, 2 * np.pi), rng.uniform(0, np.pi)
            u = kick_unitary(lam, theta)
            assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-12
            w = np.array([np.cos(theta), np.sin(theta)])
            assert np.allclose(u @ w, np.exp(-1j * lam) * w, atol=1e-12)

    def test_apply_local_matches_kron(self):
        rng = np.random.default_rng(2)
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        op = kick_unitary(1.1, 0.7)
        full = np.kron(np.eye(2), np.kron(op, np.eye(2)))
        assert np.max(np.abs(apply_local(psi, 3, 2, op) - full @ psi)) < 1e-12


class TestMonodromy:
    def test_zero_strengths_reduce_to_free_evolution(self):
        cfg = ChainConfig(3, "heisenberg", J, W0, W1)
        ham = build_static_hamiltonian(cfg)
        rng = np.random.default_rng(3)
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        psi /= np.linalg.norm(psi)
        free = ham.free_segment(2 * np.pi, psi)
        kicked = monodromy_apply(
            ham, KickRound.build([0, 0, 0], [0.3, 4.0, 2.2], [0.1, 0.5, 0.9]), psi
        )
        assert np.max(np.abs(free - kicked)) < 1e-12

    def test_single_spin_dephasing(self):
        # populations untouched, coherence phase shifted by the strength
        cfg = ChainConfig(1, "ising_z", 0.0, W0, W1, initial_states=((0.6, 0.8),))
        ham = build_static_hamiltonian(cfg)
        psi = chain.initial_state(cfg)
        rho0 = reduce_all(psi, 1)[0]
        psi = monodromy_apply(ham, KickRound.build([1.3], [2.1], [0.0]), psi)
        rho = reduce_all(psi, 1)[0]
        assert population_up(rho) == pytest.approx(population_up(rho0), abs=1e-12)
        phase = np.angle(rho[0, 1] / rho0[0, 1])
        expected = -1.3 + (W1 / W0) * np.pi
        assert (phase - expected) % (2 * np.pi) == pytest.approx(0.0, abs=1e-10)

    def test_isingz_monodromy_is_appendix_diagonal(self):
        lam1, lam2 = 1.1, 2.3
        cfg = ChainConfig(2, "ising_z", J, W0, W1)
        ham = build_static_hamiltonian(cfg)
        u = monodromy_matrix(ham, KickRound.build([lam1, lam2], [0, 0], [0, 0]))
        alpha, beta = J / (4 * W0), W1 / (2 * W0)
        ref = np.diag(
            [
                np.exp(2j * np.pi * alpha) * np.exp(-1j * (lam1 + lam2)),
                np.exp(-2j * np.pi * (alpha + beta)) * np.exp(-1j * lam1),
                np.exp(-2j * np.pi * (alpha + beta)) * np.exp(-1j * lam2),
                np.exp(2j * np.pi * (alpha - 2 * beta)),
            ]
        )
        assert np.max(np.abs(u - ref)) < 1e-10

    def test_unitarity_random_rounds(self):
        rng = np.random.default_rng(4)
        for coupling in ("heisenberg", "ising_z"):
            ham = build_static_hamiltonian(ChainConfig(3, coupling, J, W0, W1))
            for _ in range(20):
                u = monodromy_matrix(ham, random_round(rng, 3))
                assert np.max(np.abs(u.conj().T @ u - np.eye(8))) < 1e-10

    def test_mismatched_round_rejected(self):
        ham = build_static_hamiltonian(ChainConfig(3, "heisenberg", J, W0, W1))
        with pytest.raises(ValueError):
            monodromy_apply(ham, KickRound.build([0, 0], [0, 0], [0, 0]), np.zeros(8))


class TestTrajectories:
    def test_zero_kicks_initial_only(self):
        cfg = ChainConfig(2, "heisenberg", J, W0, W1)
        ham = build_static_hamiltonian(cfg)
        traj = chain.evolve_trajectory(cfg, ham, None, 0)
        assert traj.shape == (1, 4)
        assert np.allclose(traj[0], chain.initial_state(cfg))

    def test_uncoupled_populations_constant(self):
        cfg = ChainConfig(3, "heisenberg", 0.0, W0, W1, initial_states=uniform_states(3, (1, 2)))
        ham = build_static_hamiltonian(cfg)
        traj = chain.evolve_trajectory(cfg, ham, None, 30)
        for psi in traj:
            for rho in reduce_all(psi, 3):
                assert population_up(rho) == pytest.approx(0.2, abs=1e-12)

    def test_uniform_eigenvector_kicks_do_not_move_observables(self):
        # same strength and delay on every spin, kick along an eigenvector:
        # populations and coherence magnitudes match the kick-free run
        rng = np.random.default_rng(5)
        for coupling in ("heisenberg", "ising_z"):
            for theta in (0.0, np.pi / 2):
                cfg = ChainConfig(
                    5, coupling, 0.4, W0, W1, initial_states=uniform_states(5, (1, 2))
                )
                ham = build_static_hamiltonian(cfg)
                free = chain.evolve_trajectory(cfg, ham, None, 40)
                rounds = [
                    KickRound.build(
                        np.full(5, rng.uniform(0, 2 * np.pi)),
                        np.full(5, rng.uniform(0, 2 * np.pi)),
                        np.full(5, theta),
                    )
                    for _ in range(40)
                ]
                kicked = chain.evolve_trajectory(cfg, ham, chain.sequence_kicks(rounds), 40)
                for pf, pk in zip(free, kicked):
                    rf, rk = reduce_all(pf, 5), reduce_all(pk, 5)
                    for a, b in zip(rf, rk):
                        assert abs(population_up(a) - population_up(b)) < 1e-9
                        assert abs(coherence(a) - coherence(b)) < 1e-9

    def test_isingz_delay_invariance(self):
        # with diagonal kicks the delays never enter the Ising-Z evolution
        rng = np.random.default_rng(6)
        cfg = ChainConfig(4, "ising_z", J, W0, W1, initial_states=uniform_states(4, (2, 1)))
        ham = build_static_hamiltonian(cfg)
        lams = rng.uniform(0, 2 * np.pi, (25, 4))
        r1 = [KickRound.build(l, rng.uniform(0, 2 * np.pi, 4), np.zeros(4)) for l in lams]
        r2 = [KickRound.build(l, rng.uniform(0, 2 * np.pi, 4), np.zeros(4)) for l in lams]
        t1 = chain.evolve_trajectory(cfg, ham, chain.sequence_kicks(r1), 25)
        t2 = chain.evolve_trajectory(cfg, ham, chain.sequence_kicks(r2), 25)
        for a, b in zip(t1, t2):
            assert np.max(np.abs(reduce_all(a, 4) - reduce_all(b, 4))) < 1e-9

    def test_energy_conserved_without_kicks(self):
        cfg = ChainConfig(4, "heisenberg", J, W0, W1, initial_states=uniform_states(4, (1, 3)))
        ham = build_static_hamiltonian(cfg)
        traj = chain.evolve_trajectory(cfg, ham, None, 50)
        e0 = ham.expectation(traj[0])
        for psi in traj:
            assert ham.expectation(psi) == pytest.approx(e0, abs=1e-9)

    def test_norm_preserved(self):
        rng = np.random.default_rng(7)
        cfg = ChainConfig(4, "heisenberg", J, W0, W1)
        ham = build_static_hamiltonian(cfg)
        rounds = [random_round(rng, 4) for _ in range(200)]
        traj = chain.evolve_trajectory(cfg, ham, chain.sequence_kicks(rounds), 200)
        norms = np.linalg.norm(traj, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-8

    def test_norm_watchdog_raises(self):
        cfg = ChainConfig(2, "heisenberg", J, W0, W1)
        ham = build_static_hamiltonian(cfg)
        rng = np.random.default_rng(8)
        rounds = [random_round(rng, 2) for _ in range(5)]
        with pytest.raises(FloatingPointError):
            chain.evolve_trajectory(
                cfg, ham, chain.sequence_kicks(rounds), 5, norm_tolerance=1e-17
            )

    def test_bath_source_requires_matching_trains(self):
        from kickedchain.bath import BathConfig, TorusMap, TorusPoint, sample_initial

        cfg = ChainConfig(3, "heisenberg", J, W0, W1)
        ens = sample_initial(BathConfig(5, TorusPoint(0, 0), 0.1, 0))
        with pytest.raises(ValueError):
            chain.bath_kicks(cfg, ens, TorusMap())

    def test_single_excitation_matches_magnon_reference(self):
        # |up> on site 1 of an all-down closed ring lives in the one-excitation
        # sector; an independent 9x9 hopping model gives the exact populations
        j, n = 0.05, 9
        hop = np.zeros((n, n))
        for k in range(n):
            hop[k, (k + 1) % n] = hop[(k + 1) % n, k] = -j / 2
        vals, vecs = np.linalg.eigh(hop)
        reference = []
        for i in range(21):
            u = vecs @ np.diag(np.exp(-1j * vals * 2 * np.pi * i / W0)) @ vecs.conj().T
            reference.append(abs(u[0, 0]) ** 2)
        states = uniform_states(n, (0.0, 1.0), {1: (1.0, 0.0)})
        cfg = ChainConfig(n, "heisenberg", j, W0, W1, topology="closed", initial_states=states)
        ham = build_static_hamiltonian(cfg)
        traj = chain.evolve_trajectory(cfg, ham, None, 20)
        pops = [population_up(reduce_all(psi, n)[0]) for psi in traj]
        assert np.max(np.abs(np.array(pops) - reference)) < 1e-12

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ChainConfig(2, "ising_x", J, W0, W1)
        with pytest.raises(ValueError):
            ChainConfig(0)
        with pytest.raises(ValueError):
            ChainConfig(15)
        with pytest.raises(ValueError):
            ChainConfig(2, initial_states=((1, 0),))
        with pytest.raises(ValueError):
            uniform_states(3, (0.0, 0.0))
