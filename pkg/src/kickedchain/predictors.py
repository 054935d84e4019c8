"""Closed-form predictions: coherence horizon and information-transmission timing.

All periods are expressed in kick counts (units of one kick period T = 2pi/omega0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import PartitionSpec, TorusMap, horizon_predictability, lyapunov, max_entropy


@dataclass(frozen=True)
class HorizonInputs:
    s_max: float
    log_lyapunov: float
    n_box: float

    def __post_init__(self):
        if self.s_max <= 0:
            raise ValueError("s_max must be positive")
        if self.log_lyapunov <= 0:
            raise ValueError("Lyapunov exponent must be positive (chaotic map)")


def horizon_coherence(h: HorizonInputs) -> float:
    """Kick count until which coherence persists.

    n* = n_box + (1/2) sqrt(1 + 8 s_max / ln|lambda_+|) - 1/2; equivalently the
    point where the cumulated Kolmogorov-Sinai entropy reaches s_max.
    """
    return h.n_box + 0.5 * math.sqrt(1.0 + 8.0 * h.s_max / h.log_lyapunov) - 0.5


def horizons_for_bath(
    torus_map: TorusMap,
    dispersion: float,
    n_trains: int,
    partition: PartitionSpec = PartitionSpec(),
) -> tuple[float, float]:
    """(n_box, n_star) for a bath configuration, with the default entropy ceiling."""
    n_box = horizon_predictability(torus_map, dispersion, partition)
    if math.isinf(n_box):
        return n_box, math.inf
    s_max = max_entropy(n_trains, partition)
    return n_box, horizon_coherence(HorizonInputs(s_max, lyapunov(torus_map), n_box))


def detect_entropy_rise(series, fraction: float = 0.05) -> int:
    """First kick index where the series exceeds `fraction` of its maximum; -1 if never."""
    s = np.asarray(series, dtype=float)
    if s.size == 0 or s.max() <= 0:
        return -1
    above = np.nonzero(s > fraction * s.max())[0]
    return int(above[0]) if above.size else -1


def first_population_minimum(series, tolerance: float = 0.005) -> int:
    """First kick where a stroboscopic population series bottoms out; -1 if never.

    A sample counts as the minimum when it is below its predecessor and not
    above its successor by more than the tolerance; the slack treats the
    damped plateaus of a draining spin as minima despite a residual slope.
    """
    s = np.asarray(series, dtype=float)
    for i in range(1, s.size - 1):
        if s[i] < s[i - 1] and s[i] <= s[i + 1] + tolerance:
            return i
    return -1


@dataclass(frozen=True)
class TransmissionModel:
    """Oscillation-period bookkeeping for a Heisenberg chain (hbar = 1)."""

    n_spins: int
    j_coupling: float
    omega0: float = 1.0

    def __post_init__(self):
        if self.j_coupling <= 0:
            raise ValueError("transmission timing needs J > 0")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")

    @property
    def edge_period(self) -> float:
        """Rabi period of a spin with a single neighbour, in kicks."""
        return self.omega0 / self.j_coupling

    @property
    def mid_period(self) -> float:
        """A spin with two neighbours oscillates twice as fast."""
        return self.omega0 / (2.0 * self.j_coupling)

    @property
    def half_edge_period(self) -> float:
        """Kicks from maximal to minimal population of an edge spin (T^1)."""
        return self.omega0 / (2.0 * self.j_coupling)


def edge_period(j_coupling: float, omega0: float = 1.0) -> float:
    return TransmissionModel(2, j_coupling, omega0).edge_period


def averaged_periods(model: TransmissionModel) -> np.ndarray:
    """Effective periods of spins 2..N.

    T_eff(2) averages the edge and middle periods; each next spin averages its
    predecessor with its own bare period (middle for interior spins, edge for
    the last one).
    """
    if model.n_spins < 3:
        raise ValueError("averaged periods need at least 3 spins")
    edge, mid = model.edge_period, model.mid_period
    periods = [0.5 * (edge + mid)]
    for n in range(3, model.n_spins + 1):
        bare = edge if n == model.n_spins else mid
        periods.append(0.5 * (periods[-1] + bare))
    return np.array(periods)


def one_way_period(model: TransmissionModel) -> float:
    """Kicks for one complete pass of the information from spin 1 to spin N.

    P = (3/4) T_eff(2) + sum_{n=3..N-2} (1/4) T_eff(n) + 2 * (1/4) T_eff(last),
    where the chain of averages runs over spins 2..N-2 and the last spin pairs
    the final averaged period directly with the edge period.
    """
    edge, mid = model.edge_period, model.mid_period
    n = model.n_spins
    if n < 3:
        raise ValueError("one-way transmission needs at least 3 spins")
    t_avg = 0.5 * (edge + mid)
    total = 0.75 * t_avg
    for _ in range(3, n - 1):  # interior spins 3..N-2
        t_avg = 0.5 * (t_avg + mid)
        total += 0.25 * t_avg
    t_last = 0.5 * (t_avg + edge)
    return total + 0.5 * t_last


def spins_reached(n_star: float, model: TransmissionModel, n_turn: int) -> float:
    """Number of spins the information reaches before the coherence horizon.

    nsp = (n_star / P) * N - NTurn, real-valued; NTurn removes the chain ends
    counted twice by completed one-way passes.
    """
    if n_turn < 0:
        raise ValueError("NTurn must be >= 0")
    period = one_way_period(model)
    return (n_star / period) * model.n_spins - n_turn


def completed_turns(n_star: float, period: float) -> int:
    """One-way passes completed strictly within n_star kicks.

    A horizon landing exactly on a multiple of the period counts as the end of
    the pass in progress, not the start of a new one.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    return max(0, math.ceil(n_star / period) - 1)


def max_info_times(model: TransmissionModel) -> np.ndarray:
    """Predicted kick of maximal up-population for spins 2..N during the first pass.

    Spin 2 peaks half its effective period after the start; each transfer to
    the next spin takes a quarter of the transmitting spin's period.
    """
    periods = averaged_periods(model)
    times = [0.5 * periods[0]]
    for k in range(1, periods.size):
        times.append(times[-1] + 0.25 * periods[k - 1])
    return np.array(times)


def arrival_times(model: TransmissionModel) -> np.ndarray:
    """Predicted kick at which the information wave starts exciting spins 2..N."""
    return max_info_times(model) - 0.5 * averaged_periods(model)
