"""Classical kick bath: torus automorphisms, train ensembles, partition entropies.

The kick trains driving the chain are points (strength, delay) on the torus
[0, 2pi)^2, iterated by an integer automorphism matrix (Arnold's cat map by
default).  Everything here is classical and cheap; ensembles are plain
(n_trains, 2) float arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi

CAT_MAP = ((2, 1), (1, 1))


@dataclass(frozen=True)
class TorusPoint:
    """A (strength, delay) pair, both reduced mod 2pi into [0, 2pi)."""

    strength: float
    delay: float

    def __post_init__(self):
        object.__setattr__(self, "strength", float(np.mod(self.strength, TWO_PI)))
        object.__setattr__(self, "delay", float(np.mod(self.delay, TWO_PI)))

    def as_array(self) -> np.ndarray:
        return np.array([self.strength, self.delay])


@dataclass(frozen=True)
class TorusMap:
    """Integer 2x2 torus automorphism acting on (strength, delay) columns.

    Requires |det| = 1 so the map preserves area (an automorphism of the
    torus).  Spectral quantities are derived once and cached.
    """

    matrix: tuple[tuple[int, int], tuple[int, int]] = CAT_MAP

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (2, 2):
            raise ValueError("torus map must be a 2x2 matrix")
        if not np.all(m == np.round(m)):
            raise ValueError("torus map entries must be integers")
        if abs(round(float(np.linalg.det(m)))) != 1:
            raise ValueError("torus map must have |det| = 1")
        object.__setattr__(
            self, "matrix", tuple(tuple(int(x) for x in row) for row in m)
        )

    @cached_property
    def _array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    @cached_property
    def dominant_eigenvalue(self) -> float:
        vals = np.linalg.eigvals(self._array)
        if np.any(np.abs(vals.imag) > 1e-12):
            raise ValueError("torus map has complex eigenvalues (elliptic, not chaotic)")
        return float(vals.real[np.argmax(np.abs(vals.real))])

    @cached_property
    def unstable_direction(self) -> np.ndarray:
        """Unit eigenvector (strength, delay components) of the dominant eigenvalue."""
        vals, vecs = np.linalg.eig(self._array)
        k = int(np.argmax(np.abs(vals.real)))
        v = vecs[:, k].real
        v = v / np.linalg.norm(v)
        if v[0] < 0:
            v = -v
        return v

    @cached_property
    def unstable_angle(self) -> float:
        """Angle between the unstable direction and the strength axis."""
        e = self.unstable_direction
        return float(np.arctan2(e[1], e[0]))

    def is_chaotic(self) -> bool:
        return abs(self.dominant_eigenvalue) > 1.0


def lyapunov(torus_map: TorusMap) -> float:
    """Lyapunov exponent ln|lambda_+| of the automorphism in the unstable direction."""
    lam = abs(torus_map.dominant_eigenvalue)
    if lam <= 1.0:
        raise ValueError(
            f"map with |lambda_+| = {lam:.6g} <= 1 is not chaotic; horizon analysis undefined"
        )
    return math.log(lam)


def step(torus_map: TorusMap, points: np.ndarray) -> np.ndarray:
    """One iteration of the automorphism on an (n, 2) array of torus points."""
    return np.mod(points @ torus_map._array.T, TWO_PI)


def step_point(torus_map: TorusMap, point: TorusPoint) -> TorusPoint:
    s, d = step(torus_map, point.as_array()[None, :])[0]
    return TorusPoint(s, d)


@dataclass(frozen=True)
class BathConfig:
    """Initial distribution of the kick trains.

    The first kicks are i.i.d. uniform on the square
    [anchor_strength, +dispersion] x [anchor_delay, +dispersion]; dispersion 0
    puts every train exactly at the anchor.
    """

    n_trains: int
    anchor: TorusPoint = TorusPoint(0.0, 0.0)
    dispersion: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_trains < 1:
            raise ValueError("need at least one kick train")
        if self.dispersion < 0:
            raise ValueError("dispersion must be >= 0")


@dataclass(frozen=True)
class TorusEnsemble:
    """Per-train torus points at one iteration of the bath dynamics."""

    points: np.ndarray  # (n_trains, 2), columns (strength, delay)
    iteration: int = 0

    @property
    def n_trains(self) -> int:
        return self.points.shape[0]

    def stepped(self, torus_map: TorusMap) -> "TorusEnsemble":
        return TorusEnsemble(step(torus_map, self.points), self.iteration + 1)


def sample_initial(cfg: BathConfig) -> TorusEnsemble:
    rng = np.random.default_rng(cfg.seed)
    base = np.array([cfg.anchor.strength, cfg.anchor.delay])
    pts = base + cfg.dispersion * rng.random((cfg.n_trains, 2))
    return TorusEnsemble(np.mod(pts, TWO_PI), 0)


def trajectory(cfg: BathConfig, torus_map: TorusMap, iterations: int) -> np.ndarray:
    """All ensemble snapshots, shape (iterations + 1, n_trains, 2)."""
    out = np.empty((iterations + 1, cfg.n_trains, 2))
    ens = sample_initial(cfg)
    out[0] = ens.points
    for i in range(1, iterations + 1):
        ens = ens.stepped(torus_map)
        out[i] = ens.points
    return out


@dataclass(frozen=True)
class PartitionSpec:
    """Equipartition of [0, 2pi)^2 into square cells of side cell_size.

    The default pi/64 gives the 128 x 128 microstate grid.
    """

    cell_size: float = np.pi / 64

    def __post_init__(self):
        ratio = TWO_PI / self.cell_size
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("2pi must be an integer multiple of the cell size")

    @property
    def cells_per_side(self) -> int:
        return round(TWO_PI / self.cell_size)

    @property
    def n_cells(self) -> int:
        return self.cells_per_side**2


def cell_occupancy(points: np.ndarray, partition: PartitionSpec) -> np.ndarray:
    """Fraction of trains per occupied cell (only nonzero entries returned)."""
    n = partition.cells_per_side
    idx = np.clip((points / partition.cell_size).astype(np.int64), 0, n - 1)
    flat = idx[:, 0] * n + idx[:, 1]
    counts = np.bincount(flat)
    counts = counts[counts > 0]
    return counts / points.shape[0]


def shannon_entropy(
    ensemble: TorusEnsemble | np.ndarray,
    partition: PartitionSpec,
    theta_factor: float = 1.0,
) -> float:
    """Partition entropy theta * sum(-p_ij ln p_ij) of the train distribution."""
    points = ensemble.points if isinstance(ensemble, TorusEnsemble) else ensemble
    if points.shape[0] == 0:
        raise ValueError("ensemble is empty")
    p = cell_occupancy(points, partition)
    return float(theta_factor * -np.sum(p * np.log(p)))


def entropy_series(
    snapshots: np.ndarray, partition: PartitionSpec, theta_factor: float = 1.0
) -> np.ndarray:
    """Shannon entropy at each iteration of a (iters, n_trains, 2) trajectory."""
    return np.array([shannon_entropy(s, partition, theta_factor) for s in snapshots])


def cumulated_shannon(series) -> np.ndarray:
    """Running prefix sums of an entropy series."""
    return np.cumsum(np.asarray(series, dtype=float))


def max_entropy(n_trains: int, partition: PartitionSpec) -> float:
    """Saturation ceiling of the ensemble's Shannon entropy (the S_max default)."""
    return math.log(min(n_trains, partition.n_cells))


def horizon_predictability(
    torus_map: TorusMap, dispersion: float, partition: PartitionSpec
) -> float:
    """Iteration count for the initial dispersion to stretch to the microstate size.

    Returns (ln d_cell - ln(d0 / sin gamma)) / ln|lambda_+|, real-valued and
    possibly negative; a zero dispersion never reaches the microstate scale,
    signalled as +inf.
    """
    if dispersion < 0:
        raise ValueError("dispersion must be >= 0")
    if dispersion == 0.0:
        return math.inf
    log_lam = lyapunov(torus_map)
    sin_gamma = math.sin(torus_map.unstable_angle)
    if abs(sin_gamma) < 1e-15:
        raise ValueError("unstable direction is along the strength axis; projection undefined")
    return (math.log(partition.cell_size) - math.log(dispersion / sin_gamma)) / log_lam


def ks_prediction(n, torus_map: TorusMap, horizon: float, s_max: float):
    """Kolmogorov-Sinai model of the bath entropy.

    Linear growth at rate ln|lambda_+| starting from the horizon of
    predictability, saturating at s_max.  Accepts scalar or array kick counts.
    """
    if s_max <= 0:
        raise ValueError("s_max must be positive")
    rate = lyapunov(torus_map)
    vals = np.minimum(s_max, np.maximum(0.0, (np.asarray(n, dtype=float) - horizon) * rate))
    return float(vals) if np.isscalar(n) else vals


def onset_index(series) -> int:
    """First iteration with a nonzero entropy; -1 if the series never rises."""
    s = np.asarray(series)
    nz = np.nonzero(s > 0)[0]
    return int(nz[0]) if nz.size else -1


def linear_rise_slope(series, low_fraction: float = 0.3, high_fraction: float = 0.7) -> float:
    """Least-squares slope of the central rise of an entropy series.

    Fits between the first crossings of low_fraction and high_fraction of the
    maximum, which skips both the ragged few-cell onset and the finite-sample
    saturation shoulder.
    """
    s = np.asarray(series, dtype=float)
    if s.max() <= 0:
        raise ValueError("series never rises")
    start = int(np.nonzero(s >= low_fraction * s.max())[0][0])
    stop = int(np.nonzero(s >= high_fraction * s.max())[0][0])
    if stop - start < 1:
        raise ValueError("rising regime too short for a fit")
    n = np.arange(start, stop + 1)
    return float(np.polyfit(n, s[start : stop + 1], 1)[0])
