"""Experiment runner: config files, deterministic output bundles, run manifests.

One TOML file describes one experiment.  Every produced table is CSV with
floats printed to 12 significant digits, so reruns of the same config and seed
are byte-identical and regression diffs stay meaningful.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__, bath, control, observables, predictors
from .bath import BathConfig, PartitionSpec, TorusMap, TorusPoint
from .chain import (
    ChainConfig,
    KickSource,
    bath_kicks,
    build_static_hamiltonian,
    evolve_trajectory,
    uniform_states,
)
from .control import DisturbanceConfig, KickSchedule, disturb, parse_schedule
from .observables import HusimiGridSpec

NORM_ABORT = 1e-6  # nonzero exit when the state norm drifts beyond this

STATE_PRESETS = {
    "cat": (1.0, 1.0),
    "up": (1.0, 0.0),
    "down": (0.0, 1.0),
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


def _check_keys(section: dict, allowed: set[str], where: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key: {where}.{key}")


def _amplitude_pair(value, where: str):
    if isinstance(value, str):
        if value not in STATE_PRESETS:
            raise ConfigError(f"{where}: unknown state preset {value!r}")
        return STATE_PRESETS[value]
    if isinstance(value, list) and len(value) == 2:
        return (float(value[0]), float(value[1]))
    if isinstance(value, list) and len(value) == 4:
        return (complex(value[0], value[1]), complex(value[2], value[3]))
    raise ConfigError(
        f"{where}: expected a preset name, [up, down] or [re_up, im_up, re_down, im_down]"
    )


def _parse_initial_state(raw, n_spins: int):
    if raw is None:
        raw = "cat"
    if isinstance(raw, (str, list)) and not (
        isinstance(raw, list) and raw and isinstance(raw[0], list)
    ):
        return uniform_states(n_spins, _amplitude_pair(raw, "chain.initial_state"))
    if isinstance(raw, list):
        if len(raw) != n_spins:
            raise ConfigError("chain.initial_state: need one amplitude pair per spin")
        return tuple(_amplitude_pair(p, "chain.initial_state") for p in raw)
    if isinstance(raw, dict):
        _check_keys(raw, {"default", "overrides"}, "chain.initial_state")
        default = _amplitude_pair(raw.get("default", "cat"), "chain.initial_state.default")
        overrides = {}
        for key, pair in raw.get("overrides", {}).items():
            try:
                spin = int(key)
            except ValueError:
                raise ConfigError(f"chain.initial_state.overrides: bad spin index {key!r}")
            overrides[spin] = _amplitude_pair(pair, f"chain.initial_state.overrides.{key}")
        return uniform_states(n_spins, default, overrides)
    raise ConfigError("chain.initial_state: unrecognized form")


def _parse_map(raw, where: str) -> TorusMap:
    if raw is None:
        return TorusMap()
    if isinstance(raw, list) and len(raw) == 4:
        return TorusMap(((int(raw[0]), int(raw[1])), (int(raw[2]), int(raw[3]))))
    if isinstance(raw, list) and len(raw) == 2:
        return TorusMap(tuple(tuple(int(x) for x in row) for row in raw))
    raise ConfigError(f"{where}: expected four integers [a, b, c, d] or two rows")


@dataclass
class ExperimentConfig:
    """Fully validated description of one run."""

    chain: ChainConfig
    kicks: int
    output: Path
    torus_map: TorusMap = TorusMap()
    bath: BathConfig | None = None
    schedule: KickSchedule | None = None
    disturbance: DisturbanceConfig | None = None
    observables: tuple[str, ...] = ("population", "coherence", "entropy")
    husimi_at: tuple[int, ...] = ()
    husimi_spins: tuple[int, ...] = ()
    husimi_grid: HusimiGridSpec = HusimiGridSpec()
    overwrite: bool = False
    normalize_entropy: bool = True
    partition: PartitionSpec = field(default_factory=PartitionSpec)

    def kick_source(self) -> KickSource | None:
        if self.schedule is not None:
            if self.disturbance is not None:
                return disturb(self.schedule, self.disturbance)
            return self.schedule.source()
        if self.disturbance is not None:
            raise ConfigError("disturbance: requires a schedule to disturb")
        if self.bath is not None:
            return bath_kicks(self.chain, bath.sample_initial(self.bath), self.torus_map)
        return None


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if overrides:
        for dotted, value in overrides.items():
            section, _, key = dotted.partition(".")
            if not key:
                raise ConfigError(f"override {dotted!r} must look like section.key")
            raw.setdefault(section, {})[key] = value
    return config_from_dict(raw, base_dir=path.parent)


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    _check_keys(raw, {"chain", "bath", "schedule", "disturbance", "run"}, "top level")
    if "chain" not in raw:
        raise ConfigError("missing required section: chain")
    if "run" not in raw:
        raise ConfigError("missing required section: run")

    c = raw["chain"]
    _check_keys(
        c,
        {
            "spins",
            "coupling",
            "j_coupling",
            "omega0",
            "omega1",
            "topology",
            "kick_direction",
            "initial_state",
        },
        "chain",
    )
    if "spins" not in c:
        raise ConfigError("missing required key: chain.spins")
    n_spins = int(c["spins"])
    try:
        chain_cfg = ChainConfig(
            n_spins=n_spins,
            coupling=str(c.get("coupling", "heisenberg")),
            j_coupling=float(c.get("j_coupling", 0.5)),
            omega0=float(c.get("omega0", 1.0)),
            omega1=float(c.get("omega1", 0.1)),
            topology=str(c.get("topology", "open")),
            kick_direction=float(c.get("kick_direction", 0.0)),
            initial_states=_parse_initial_state(c.get("initial_state"), n_spins),
        )
    except ValueError as exc:
        raise ConfigError(f"chain: {exc}") from exc

    torus_map = TorusMap()
    bath_cfg = None
    if "bath" in raw:
        b = raw["bath"]
        _check_keys(b, {"map", "anchor", "dispersion", "seed", "trains"}, "bath")
        torus_map = _parse_map(b.get("map"), "bath.map")
        anchor = b.get("anchor", [0.0, 0.0])
        if not (isinstance(anchor, list) and len(anchor) == 2):
            raise ConfigError("bath.anchor: expected [strength, delay]")
        try:
            bath_cfg = BathConfig(
                n_trains=int(b.get("trains", n_spins)),
                anchor=TorusPoint(float(anchor[0]), float(anchor[1])),
                dispersion=float(b.get("dispersion", 0.0)),
                seed=int(b.get("seed", 0)),
            )
        except ValueError as exc:
            raise ConfigError(f"bath: {exc}") from exc

    schedule = None
    if "schedule" in raw:
        s = raw["schedule"]
        _check_keys(s, {"file", "events", "default_direction"}, "schedule")
        if "file" in s:
            sched_path = base_dir / s["file"]
            if not sched_path.exists():
                raise ConfigError(f"schedule.file: {sched_path} does not exist")
            schedule = parse_schedule(sched_path.read_text())
        elif "events" in s:
            events = []
            for i, ev in enumerate(s["events"]):
                if not (isinstance(ev, list) and len(ev) in (3, 6)):
                    raise ConfigError(
                        f"schedule.events[{i}]: expected [spin, start, stop] or "
                        "[spin, start, stop, strength, delay, direction]"
                    )
                spin, start, stop = int(ev[0]), int(ev[1]), int(ev[2])
                extra = (
                    dict(strength=float(ev[3]), delay=float(ev[4]), direction=float(ev[5]))
                    if len(ev) == 6
                    else {}
                )
                events.append(control.KickEvent(spin, start, stop, **extra))
            try:
                schedule = KickSchedule(
                    n_spins,
                    tuple(events),
                    float(s.get("default_direction", control.DOWN_DIRECTION)),
                )
            except ValueError as exc:
                raise ConfigError(f"schedule: {exc}") from exc
        else:
            raise ConfigError("schedule: need either 'file' or 'events'")
        if schedule.n_spins != n_spins:
            raise ConfigError("schedule: spin count does not match chain.spins")
        if bath_cfg is not None:
            raise ConfigError("bath: give either a bath or a schedule, not both")

    disturbance = None
    if "disturbance" in raw:
        d = raw["disturbance"]
        _check_keys(d, {"map", "dispersion", "seed", "anchor"}, "disturbance")
        if bath_cfg is not None:
            raise ConfigError("disturbance: only applies on top of a schedule, not a bath")
        anchor = d.get("anchor", [0.0, 0.0])
        dist_map = _parse_map(d.get("map"), "disturbance.map")
        disturbance = DisturbanceConfig(
            torus_map=dist_map,
            n_spins=n_spins,
            dispersion=float(d.get("dispersion", 1e-8)),
            seed=int(d.get("seed", 0)),
            anchor_strength=float(anchor[0]),
            anchor_delay=float(anchor[1]),
        )

    r = raw["run"]
    _check_keys(
        r,
        {
            "kicks",
            "output",
            "overwrite",
            "observables",
            "husimi_at",
            "husimi_spins",
            "husimi_grid",
            "normalize_entropy",
        },
        "run",
    )
    if "kicks" not in r:
        raise ConfigError("missing required key: run.kicks")
    if "output" not in r:
        raise ConfigError("missing required key: run.output")
    kicks = int(r["kicks"])
    if kicks < 0:
        raise ConfigError("run.kicks: must be >= 0")
    obs_sel = tuple(r.get("observables", ["population", "coherence", "entropy"]))
    for name in obs_sel:
        if name not in ("population", "coherence", "entropy"):
            raise ConfigError(f"run.observables: unknown observable {name!r}")
    husimi_at = tuple(int(i) for i in r.get("husimi_at", []))
    for i in husimi_at:
        if not 0 <= i <= kicks:
            raise ConfigError(f"run.husimi_at: kick index {i} outside 0..{kicks}")
    husimi_spins = tuple(int(s) for s in r.get("husimi_spins", []))
    for s_ in husimi_spins:
        if not 1 <= s_ <= n_spins:
            raise ConfigError(f"run.husimi_spins: spin {s_} outside 1..{n_spins}")
    grid = r.get("husimi_grid", [64, 128])
    if not (isinstance(grid, list) and len(grid) == 2):
        raise ConfigError("run.husimi_grid: expected [n_theta, n_phi]")

    output = base_dir / str(r["output"])
    return ExperimentConfig(
        chain=chain_cfg,
        kicks=kicks,
        output=output,
        torus_map=torus_map,
        bath=bath_cfg,
        schedule=schedule,
        disturbance=disturbance,
        observables=obs_sel,
        husimi_at=husimi_at,
        husimi_spins=husimi_spins,
        husimi_grid=HusimiGridSpec(int(grid[0]), int(grid[1])),
        overwrite=bool(r.get("overwrite", False)),
        normalize_entropy=bool(r.get("normalize_entropy", True)),
    )


def fmt(x: float) -> str:
    return f"{x:.12g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(x if isinstance(x, str) else fmt(x) for x in row) + "\n")


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


@dataclass
class RunResult:
    config: ExperimentConfig
    snapshots: np.ndarray
    per_spin: np.ndarray
    average: np.ndarray
    bath_snapshots: np.ndarray | None
    bath_entropy: np.ndarray | None
    files: list[Path]


def _prediction_lines(cfg: ExperimentConfig, detected_rise: int | None = None) -> list[str]:
    """Report body shared by the simulate bundle and the predict subcommand."""
    lines = []
    m = cfg.torus_map
    lines.append(f"torus map rows: {m.matrix[0]} {m.matrix[1]}")
    chaotic = m.is_chaotic()
    if chaotic:
        lam = bath.lyapunov(m)
        gamma = m.unstable_angle
        lines.append(f"lyapunov exponent ln|lambda+|: {fmt(lam)}")
        lines.append(f"unstable angle gamma: {fmt(gamma)} (sin gamma = {fmt(math.sin(gamma))})")
    else:
        lines.append("map is not chaotic; horizon analysis unavailable")
    part = cfg.partition
    lines.append(f"partition cell size: {fmt(part.cell_size)} ({part.cells_per_side}x{part.cells_per_side} cells)")
    n_star = None
    if cfg.bath is not None and chaotic:
        n_box, n_star = predictors.horizons_for_bath(
            m, cfg.bath.dispersion, cfg.bath.n_trains, part
        )
        s_max = bath.max_entropy(cfg.bath.n_trains, part)
        lines.append(f"initial dispersion d0: {fmt(cfg.bath.dispersion)}")
        lines.append(f"entropy ceiling S_max: {fmt(s_max)}")
        if math.isinf(n_box):
            lines.append("horizon of predictability: infinite (zero dispersion)")
        else:
            lines.append(
                f"horizon of predictability n_box: {fmt(n_box)} (next kick: {math.ceil(n_box)})"
            )
            lines.append(
                f"horizon of coherence n*: {fmt(n_star)} (next kick: {math.ceil(n_star)})"
            )
    if detected_rise is not None:
        lines.append(f"detected entropy rise (5% of maximum): kick {detected_rise}")
    ch = cfg.chain
    if ch.j_coupling > ch.omega0:
        lines.append(
            "WARNING: J > omega0 -- the coherence horizon formula is out of its validated regime"
        )
    if ch.coupling == "heisenberg" and ch.j_coupling > 0 and ch.n_spins >= 3:
        model = predictors.TransmissionModel(ch.n_spins, ch.j_coupling, ch.omega0)
        lines.append(f"edge period T_edge: {fmt(model.edge_period)} kicks")
        lines.append(f"middle period T_mid: {fmt(model.mid_period)} kicks")
        periods = predictors.averaged_periods(model)
        for n, t in enumerate(periods, start=2):
            lines.append(f"averaged period spin {n}: {fmt(t)} kicks")
        p = predictors.one_way_period(model)
        lines.append(f"one-way transmission period P: {fmt(p)} kicks")
        if n_star is not None and not math.isinf(n_star):
            turns = predictors.completed_turns(n_star, p)
            nsp = predictors.spins_reached(n_star, model, turns)
            lines.append(f"completed one-way passes before n*: {turns}")
            lines.append(f"spins reached before n* (nsp): {fmt(nsp)}")
        if ch.n_spins < 5:
            lines.append("note: fewer than 5 spins; empty-interior transmission sum")
    return lines


def run(cfg: ExperimentConfig, figures: bool = True) -> RunResult:
    """Execute one experiment and write the full output bundle."""
    t_start = time.time()
    out = cfg.output
    if out.exists() and any(out.iterdir()) and not cfg.overwrite:
        raise ConfigError(
            f"output directory {out} is not empty; pass overwrite to replace it"
        )
    out.mkdir(parents=True, exist_ok=True)

    ham = build_static_hamiltonian(cfg.chain)
    source = cfg.kick_source()
    snapshots = evolve_trajectory(cfg.chain, ham, source, cfg.kicks, norm_tolerance=NORM_ABORT)
    gamma_factor = 1.0 / math.log(2.0) if cfg.normalize_entropy else 1.0
    per_spin, average = observables.series_from_snapshots(
        snapshots, cfg.chain.n_spins, gamma_factor
    )

    files: list[Path] = []
    n = cfg.chain.n_spins
    cols = {"population": 0, "coherence": 1, "entropy": 2}
    selected = [(name, cols[name]) for name in ("population", "coherence", "entropy") if name in cfg.observables]

    spin_rows = []
    for i in range(cfg.kicks + 1):
        for k in range(n):
            spin_rows.append([float(i), float(k + 1)] + [per_spin[i, k, j] for _, j in selected])
    path = out / "spin_series.csv"
    write_csv(path, ["kick", "spin"] + [name for name, _ in selected], spin_rows)
    files.append(path)

    avg_rows = [[float(i)] + [average[i, j] for _, j in selected] for i in range(cfg.kicks + 1)]
    path = out / "average_series.csv"
    write_csv(path, ["kick"] + [name for name, _ in selected], avg_rows)
    files.append(path)

    bath_snaps = None
    bath_entropy = None
    if cfg.bath is not None:
        bath_snaps = bath.trajectory(cfg.bath, cfg.torus_map, cfg.kicks)
        theta_factor = (
            1.0 / bath.max_entropy(cfg.bath.n_trains, cfg.partition)
            if cfg.normalize_entropy
            else 1.0
        )
        bath_entropy = bath.entropy_series(bath_snaps, cfg.partition, theta_factor)
        cumulated = bath.cumulated_shannon(bath_entropy)
        if cfg.torus_map.is_chaotic():
            n_box = bath.horizon_predictability(cfg.torus_map, cfg.bath.dispersion, cfg.partition)
            s_max = bath.max_entropy(cfg.bath.n_trains, cfg.partition)
            ks = (
                bath.ks_prediction(np.arange(cfg.kicks + 1), cfg.torus_map, n_box, s_max)
                * theta_factor
                if not math.isinf(n_box)
                else np.zeros(cfg.kicks + 1)
            )
        else:
            ks = np.zeros(cfg.kicks + 1)
        path = out / "bath_series.csv"
        write_csv(
            path,
            ["kick", "shannon", "shannon_cumulated", "ks_prediction"],
            ([float(i), bath_entropy[i], cumulated[i], ks[i]] for i in range(cfg.kicks + 1)),
        )
        files.append(path)
        path = out / "bath_trajectories.csv"
        write_csv(
            path,
            ["iteration", "train", "lambda", "phi"],
            (
                [float(i), float(t + 1), bath_snaps[i, t, 0], bath_snaps[i, t, 1]]
                for i in range(cfg.kicks + 1)
                for t in range(cfg.bath.n_trains)
            ),
        )
        files.append(path)

    if cfg.schedule is not None:
        path = out / "schedule.txt"
        path.write_text(control.serialize_schedule(cfg.schedule))
        files.append(path)

    husimi_spins = cfg.husimi_spins or tuple(range(1, n + 1))
    for i in cfg.husimi_at:
        rhos = observables.reduce_all(snapshots[i], n)
        for s_ in husimi_spins:
            grid_vals = observables.husimi(rhos[s_ - 1], cfg.husimi_grid)
            proj_x, proj_y = observables.azimuthal_projection(cfg.husimi_grid)
            path = out / f"husimi_spin{s_}_kick{i}.csv"
            expect = observables.husimi_expectation(rhos[s_ - 1], cfg.husimi_grid)
            with open(path, "w", newline="\n") as fh:
                fh.write(f"# husimi grid: {cfg.husimi_grid.n_theta} polar x {cfg.husimi_grid.n_phi} azimuthal points\n")
                fh.write("# theta in [0, pi], phi in [0, 2pi); proj = azimuthal disk coordinates\n")
                fh.write("# value = squared coherent-state expectation; expectation = unsquared\n")
                fh.write("theta,phi,proj_x,proj_y,value,expectation\n")
                th, ph = cfg.husimi_grid.thetas, cfg.husimi_grid.phis
                for a in range(cfg.husimi_grid.n_theta):
                    for b in range(cfg.husimi_grid.n_phi):
                        fh.write(
                            ",".join(
                                fmt(x)
                                for x in (
                                    th[a], ph[b], proj_x[a, b], proj_y[a, b],
                                    grid_vals[a, b], expect[a, b],
                                )
                            )
                            + "\n"
                        )
            files.append(path)

    detected = None
    if n >= 2:
        rise = predictors.detect_entropy_rise(average[:, 2], 0.05)
        detected = rise if rise >= 0 else None
    report_lines = _prediction_lines(cfg, detected)
    path = out / "prediction_report.txt"
    path.write_text("\n".join(report_lines) + "\n")
    files.append(path)
    path = out / "predictions.csv"
    write_csv(
        path,
        ["quantity", "value"],
        ([k, v] for k, v in _prediction_pairs(cfg, detected)),
    )
    files.append(path)

    if figures:
        from . import figures as fig

        fig_dir = out / "figures"
        fig_dir.mkdir(exist_ok=True)
        files += fig.render_bundle(fig_dir, cfg, per_spin, average, bath_entropy, snapshots)

    manifest = {
        "package_version": __version__,
        "wall_clock_seconds": time.time() - t_start,
        "config": _manifest_config(cfg),
        "files": {p.name: sha256_file(p) for p in files if p.suffix == ".csv" or p.suffix == ".txt"},
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    files.append(manifest_path)
    return RunResult(cfg, snapshots, per_spin, average, bath_snaps, bath_entropy, files)


def _prediction_pairs(cfg: ExperimentConfig, detected_rise: int | None):
    pairs = []
    m = cfg.torus_map
    if m.is_chaotic():
        pairs.append(("lyapunov", bath.lyapunov(m)))
        pairs.append(("unstable_angle", m.unstable_angle))
        if cfg.bath is not None:
            n_box, n_star = predictors.horizons_for_bath(
                m, cfg.bath.dispersion, cfg.bath.n_trains, cfg.partition
            )
            if not math.isinf(n_box):
                pairs.append(("horizon_predictability", n_box))
                pairs.append(("horizon_coherence", n_star))
            pairs.append(("s_max", bath.max_entropy(cfg.bath.n_trains, cfg.partition)))
    if detected_rise is not None:
        pairs.append(("detected_entropy_rise", float(detected_rise)))
    ch = cfg.chain
    if ch.coupling == "heisenberg" and ch.j_coupling > 0 and ch.n_spins >= 3:
        model = predictors.TransmissionModel(ch.n_spins, ch.j_coupling, ch.omega0)
        pairs.append(("edge_period", model.edge_period))
        pairs.append(("mid_period", model.mid_period))
        for n, t in enumerate(predictors.averaged_periods(model), start=2):
            pairs.append((f"averaged_period_{n}", float(t)))
        period = predictors.one_way_period(model)
        pairs.append(("one_way_period", period))
        if cfg.bath is not None and cfg.torus_map.is_chaotic():
            n_box, n_star = predictors.horizons_for_bath(
                cfg.torus_map, cfg.bath.dispersion, cfg.bath.n_trains, cfg.partition
            )
            if not math.isinf(n_star):
                turns = predictors.completed_turns(n_star, period)
                pairs.append(("completed_turns", float(turns)))
                pairs.append(("spins_reached", predictors.spins_reached(n_star, model, turns)))
    return pairs


def _manifest_config(cfg: ExperimentConfig) -> dict:
    ch = cfg.chain
    out = {
        "chain": {
            "spins": ch.n_spins,
            "coupling": ch.coupling,
            "j_coupling": ch.j_coupling,
            "omega0": ch.omega0,
            "omega1": ch.omega1,
            "topology": ch.topology,
            "kick_direction": ch.kick_direction,
            "initial_states": [[repr(a), repr(b)] for a, b in ch.initial_states],
        },
        "map": list(cfg.torus_map.matrix),
        "run": {
            "kicks": cfg.kicks,
            "observables": list(cfg.observables),
            "husimi_at": list(cfg.husimi_at),
            "normalize_entropy": cfg.normalize_entropy,
        },
    }
    if cfg.bath is not None:
        out["bath"] = {
            "trains": cfg.bath.n_trains,
            "anchor": [cfg.bath.anchor.strength, cfg.bath.anchor.delay],
            "dispersion": cfg.bath.dispersion,
            "seed": cfg.bath.seed,
        }
    if cfg.schedule is not None:
        out["schedule"] = control.serialize_schedule(cfg.schedule).splitlines()
    if cfg.disturbance is not None:
        d = cfg.disturbance
        out["disturbance"] = {
            "map": list(d.torus_map.matrix),
            "dispersion": d.dispersion,
            "seed": d.seed,
            "anchor": [d.anchor_strength, d.anchor_delay],
        }
    return out
