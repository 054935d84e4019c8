"""Stationary-kick control of a closed chain: one-way transmission, freezing, disturbance.

Control kicks are strong kicks along |down> (direction pi/2) repeated once per
period.  A pinned spin's transfer amplitude alternates sign between periods
(spin-echo cancellation), so the information flow through it stays bounded:
that is what blocks or freezes the transmission.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import TWO_PI, BathConfig, TorusMap, sample_initial, step
from .chain import ChainConfig, KickRound, KickSource
from .predictors import TransmissionModel, averaged_periods, max_info_times

DOWN_DIRECTION = math.pi / 2
FREEZE_STRENGTH = math.pi  # "large strength": the maximal rotation of the projector kick


@dataclass(frozen=True)
class KickEvent:
    """Stationary kicks on one spin for kick indices start <= i < stop."""

    spin: int
    start: int
    stop: int
    strength: float = FREEZE_STRENGTH
    delay: float = 0.0
    direction: float = DOWN_DIRECTION

    def __post_init__(self):
        if self.start < 0 or self.stop < self.start:
            raise ValueError("event window must satisfy 0 <= start <= stop")

    def active(self, i: int) -> bool:
        return self.start <= i < self.stop


@dataclass(frozen=True)
class KickSchedule:
    """Per-spin stationary kick events; spins without an active event get no kick.

    default_direction is the kick direction reported for silent slots; it only
    matters once a disturbance adds strength to them.
    """

    n_spins: int
    events: tuple[KickEvent, ...] = ()
    default_direction: float = DOWN_DIRECTION

    def __post_init__(self):
        by_spin: dict[int, list[KickEvent]] = {}
        for ev in self.events:
            if not 1 <= ev.spin <= self.n_spins:
                raise ValueError(f"event spin {ev.spin} out of range 1..{self.n_spins}")
            by_spin.setdefault(ev.spin, []).append(ev)
        for spin, evs in by_spin.items():
            evs = sorted(evs, key=lambda e: e.start)
            for a, b in zip(evs, evs[1:]):
                if b.start < a.stop:
                    raise ValueError(f"overlapping kick windows on spin {spin}")

    def round_for(self, i: int) -> KickRound:
        lam = np.zeros(self.n_spins)
        phi = np.zeros(self.n_spins)
        theta = np.full(self.n_spins, self.default_direction)
        for ev in self.events:
            if ev.active(i):
                lam[ev.spin - 1] = ev.strength
                phi[ev.spin - 1] = ev.delay
                theta[ev.spin - 1] = ev.direction
        return KickRound.build(lam, phi, theta)

    def source(self) -> KickSource:
        return self.round_for

    def horizon(self) -> int:
        """First kick index beyond every event window."""
        return max((ev.stop for ev in self.events), default=0)


def serialize_schedule(schedule: KickSchedule) -> str:
    lines = [
        "# kick schedule: stationary kicks applied while start <= kick_index < stop",
        f"# spins {schedule.n_spins} default_direction {schedule.default_direction!r}",
        "# spin start stop strength delay direction",
    ]
    for ev in sorted(schedule.events, key=lambda e: (e.spin, e.start)):
        lines.append(
            f"{ev.spin} {ev.start} {ev.stop} {ev.strength!r} {ev.delay!r} {ev.direction!r}"
        )
    return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> KickSchedule:
    n_spins = None
    default_direction = DOWN_DIRECTION
    events = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = line[1:].split()
            if len(fields) >= 2 and fields[0] == "spins":
                n_spins = int(fields[1])
                if len(fields) >= 4 and fields[2] == "default_direction":
                    default_direction = float(fields[3])
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"malformed schedule line: {raw!r}")
        events.append(
            KickEvent(
                spin=int(parts[0]),
                start=int(parts[1]),
                stop=int(parts[2]),
                strength=float(parts[3]),
                delay=float(parts[4]),
                direction=float(parts[5]),
            )
        )
    if n_spins is None:
        raise ValueError("schedule text is missing the '# spins N' header")
    return KickSchedule(n_spins, tuple(events), default_direction)


def _model(cfg: ChainConfig) -> TransmissionModel:
    return TransmissionModel(cfg.n_spins, cfg.j_coupling, cfg.omega0)


def block_duration(cfg: ChainConfig) -> int:
    """Kicks needed to hold the blocking spin while the first spin half-oscillates."""
    return round(_model(cfg).half_edge_period)


def schedule_one_way(
    cfg: ChainConfig, blocked_spin: int | None = None, duration: int | None = None
) -> KickSchedule:
    """Pin one neighbour of the first spin so the information leaves one way only.

    The blocked spin (the last one by default) is kicked down every period for
    the first half-oscillation of the first spin.
    """
    if cfg.topology != "closed":
        raise ValueError("one-way control assumes a closed chain")
    if blocked_spin is None:
        blocked_spin = cfg.n_spins
    if not 1 <= blocked_spin <= cfg.n_spins:
        raise ValueError(f"blocked spin {blocked_spin} out of range 1..{cfg.n_spins}")
    if duration is None:
        duration = block_duration(cfg)
    if duration < 0:
        raise ValueError("duration must be >= 0")
    events = () if duration == 0 else (KickEvent(blocked_spin, 0, duration),)
    return KickSchedule(cfg.n_spins, events)


def freeze_start_times(cfg: ChainConfig, target_spin: int) -> dict[int, int]:
    """Predicted kick at which each non-target spin should start being pinned.

    The one-way wave passes every spin once on the way out and, after wrapping
    through the closed bond, passes spins 1..target-1 a second time.  A spin is
    pinned half an effective period after the relevant pass peaks, when its
    information is lowest: spins beyond the target after their first (and only)
    oscillation, spins before it after their second.
    """
    n = cfg.n_spins
    model = _model(cfg)
    periods = averaged_periods(model)  # spins 2..N
    edge = model.edge_period

    def period(spin: int) -> float:
        return edge if spin == 1 else float(periods[spin - 2])

    peaks = max_info_times(model)  # outbound peaks, spins 2..N
    outbound = {spin: float(peaks[spin - 2]) for spin in range(2, n + 1)}
    starts: dict[int, int] = {}
    for spin in range(target_spin + 1, n + 1):
        starts[spin] = round(outbound[spin] + 0.5 * period(spin))
    # wrapped pass: quarter-period handoffs continue through the closed bond
    t = outbound[n] + 0.25 * period(n)
    return_peak = {1: t}
    for spin in range(2, target_spin):
        t += 0.25 * period(spin - 1)
        return_peak[spin] = t
    for spin in range(1, target_spin):
        starts[spin] = round(return_peak[spin] + 0.5 * period(spin))
    return starts


def _grouped_peaks(series: np.ndarray, floor: float) -> list[int]:
    """Prominent local maxima, with plateaus collapsed and a virtual 0 prepended
    so a maximum at the first kick is seen."""
    ext = np.concatenate([[0.0], series])
    raw = [
        i
        for i in range(1, len(ext) - 1)
        if ext[i] >= ext[i - 1] and ext[i] >= ext[i + 1] and ext[i] > floor
    ]
    groups: list[list[int]] = []
    for p in raw:
        if groups and p - groups[-1][-1] <= 3:
            groups[-1].append(p)
        else:
            groups.append([p])
    return [g[len(g) // 2] - 1 for g in groups]


def _minimum_after_pass(series: np.ndarray, n_pass: int, floor: float = 0.15) -> int:
    peaks = _grouped_peaks(series, floor)
    if len(peaks) < n_pass:
        raise ValueError(f"found only {len(peaks)} information passes, need {n_pass}")
    for i in range(peaks[n_pass - 1] + 1, len(series) - 1):
        if series[i] <= series[i - 1] and series[i] <= series[i + 1]:
            return i
    raise ValueError("no population minimum after the requested pass")


def simulated_freeze_start_times(
    cfg: ChainConfig, target_spin: int, horizon: int = 130
) -> dict[int, int]:
    """Freeze start times read off simulated population minima.

    Spins are pinned one at a time in chronological order; each next start is
    the relevant population minimum in a simulation that already contains the
    previously scheduled pins (pinning reshapes the later dynamics, so the
    minima must be detected self-consistently).
    """
    from .chain import build_static_hamiltonian, evolve_trajectory
    from .observables import population_up, reduce

    if cfg.topology != "closed":
        raise ValueError("the freeze protocol assumes a closed chain")
    n = cfg.n_spins
    ham = build_static_hamiltonian(cfg)
    block = block_duration(cfg)
    events = [KickEvent(n, 0, block)]
    starts: dict[int, int] = {}
    ordered = [(s, 1) for s in range(target_spin + 1, n + 1)] + [
        (s, 2) for s in range(1, target_spin)
    ]
    for spin, n_pass in ordered:
        sched = KickSchedule(n, tuple(events))
        traj = evolve_trajectory(cfg, ham, sched.source(), horizon)
        series = np.array([population_up(reduce(psi, n, spin)) for psi in traj])
        start = _minimum_after_pass(series, n_pass)
        starts[spin] = start
        events.append(KickEvent(spin, start, horizon))
    return starts


def schedule_freeze(
    cfg: ChainConfig,
    target_spin: int,
    hold_until: int | None = None,
    include_one_way_block: bool = True,
    start_times: dict[int, int] | None = None,
    timing: str = "simulated",
) -> KickSchedule:
    """Concentrate the travelling information on one spin of a closed chain.

    Every spin except the target is kicked down once per period from its
    information minimum onward; the target keeps what the second pass of the
    wave delivered.  Start times come from self-consistently simulated minima
    by default; timing="predicted" uses the period-algebra estimate instead
    (cheaper, but it mistimes the pins once wall reflections matter), and an
    explicit start_times mapping overrides both.
    """
    if cfg.topology != "closed":
        raise ValueError("the freeze protocol assumes a closed chain")
    n = cfg.n_spins
    if not 1 < target_spin < n:
        raise ValueError("target spin must be strictly inside the two frozen groups")
    if start_times is not None:
        starts = dict(start_times)
    elif timing == "simulated":
        starts = simulated_freeze_start_times(cfg, target_spin)
    elif timing == "predicted":
        starts = freeze_start_times(cfg, target_spin)
    else:
        raise ValueError(f"unknown timing {timing!r}; expected 'simulated' or 'predicted'")
    missing = set(range(1, n + 1)) - {target_spin} - set(starts)
    if missing:
        raise ValueError(f"no start time for spins {sorted(missing)}")
    if target_spin in starts:
        raise ValueError("the target spin must not be kicked")
    if hold_until is None:
        hold_until = max(starts.values()) + 200
    if hold_until <= max(starts.values()):
        raise ValueError(
            f"hold_until={hold_until} ends before the last freeze start "
            f"({max(starts.values())}); run more kicks"
        )
    events = []
    if include_one_way_block:
        block = block_duration(cfg)
        starts[n] = max(starts[n], block)
        events.append(KickEvent(n, 0, block))
    for spin, start in sorted(starts.items()):
        events.append(KickEvent(spin, int(start), int(hold_until)))
    return KickSchedule(n, tuple(events))


def schedule_simultaneous(
    cfg: ChainConfig, target_spin: int, start: int | None = None, hold_until: int | None = None
) -> KickSchedule:
    """Anti-pattern preset: pin every non-target spin at one common instant.

    Spins caught far from the kick direction keep oscillating, so the
    concentration on the target degrades; kept as a named preset to
    demonstrate exactly that.
    """
    if cfg.topology != "closed":
        raise ValueError("the freeze protocol assumes a closed chain")
    n = cfg.n_spins
    if not 1 < target_spin < n:
        raise ValueError("target spin must be strictly inside the chain")
    if start is None:
        predicted = freeze_start_times(cfg, target_spin)
        start = round(np.mean(list(predicted.values())))
    if hold_until is None:
        hold_until = start + 200
    events = [
        KickEvent(spin, int(start), int(hold_until))
        for spin in range(1, n + 1)
        if spin != target_spin
    ]
    return KickSchedule(n, tuple(events))


@dataclass(frozen=True)
class DisturbanceConfig:
    """Chaotic disturbance riding on top of a schedule.

    One torus trajectory per spin, started near the origin (a fixed point of
    the linear map) with a small dispersion, composed additively mod 2pi with
    the scheduled kicks.
    """

    torus_map: TorusMap
    n_spins: int
    dispersion: float = 1e-8
    seed: int = 0
    anchor_strength: float = 0.0
    anchor_delay: float = 0.0

    def initial_points(self) -> np.ndarray:
        from .bath import TorusPoint

        cfg = BathConfig(
            self.n_spins,
            TorusPoint(self.anchor_strength, self.anchor_delay),
            self.dispersion,
            self.seed,
        )
        return sample_initial(cfg).points


def disturb(schedule: KickSchedule, dist: DisturbanceConfig) -> KickSource:
    """Effective kick stream: scheduled kicks plus the per-spin chaotic offsets.

    Silent schedule slots are disturbed too (strength 0 + offset, in the
    schedule's default direction).
    """
    if dist.n_spins != schedule.n_spins:
        raise ValueError("disturbance must carry one trajectory per spin")
    state = {"pts": dist.initial_points(), "i": 0}

    def source(i: int) -> KickRound:
        if i != state["i"]:
            raise ValueError("disturbed kick source must be consumed sequentially")
        base = schedule.round_for(i)
        pts = state["pts"]
        round_ = KickRound.build(
            np.mod(base.strengths + pts[:, 0], TWO_PI),
            np.mod(base.delays + pts[:, 1], TWO_PI),
            base.directions,
        )
        state["pts"] = step(dist.torus_map, pts)
        state["i"] += 1
        return round_

    return source
