"""Scenario configuration and the full simulation loop (the MVC "M").

A scenario JSON names the arena, robot count, seed, duration, controller
selector, parameter overrides, and output paths:

    {
      "arena": {"w_cm": 250, "h_cm": 250},
      "robots": 20,
      "seed": 1,
      "duration_s": 300,
      "controller": "aggregation",          // "taxis" | {"ir": "x.smir.json"}
      "beacon": {"x_cm": 400, "y_cm": 200}, // required for taxis
      "params": {"coherence_range_cm": 100.0},
      "outputs": {"metrics": "m.csv", "trace": null}
    }

Metrics CSV: one row per simulated second with columns t_s,
cluster_fraction, centroid_beacon_dist_cm, max_spread_cm (beacon columns
empty when there is no beacon); the header records tool version, RNG
algorithm, and seed. Identical configs (including seed) produce
byte-identical CSVs and identical final poses.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .. import __version__
from ..analyzer import analyze
from ..compiler import CompiledMachine, compile_machine
from ..ir import load_ir
from ..parser import parse
from ..runtime import RuntimeConfig, TraceRecord, create_context, step
from .adapters import AdapterError, AggregationFamily, TaxisFamily
from .metrics import cluster_fraction, taxis_metrics
from .rng import RNG_ALGORITHM, placement_stream
from .world import World


class ConfigError(Exception):
    pass


class SimulationFault(Exception):
    def __init__(self, robot: int, reason: str):
        super().__init__(f"robot {robot} faulted: {reason}")
        self.robot = robot
        self.reason = reason


@dataclass(frozen=True)
class SimParams:
    control_dt_s: float = 0.1
    physics_dt_s: float = 0.01
    time_unit_s: float = 0.1
    body_radius_cm: float = 3.7
    wheel_base_cm: float = 5.1
    max_wheel_speed_cmps: float = 12.8
    coherence_range_cm: float = 100.0
    forward_speed_cmps: float = 6.4
    turn_speed_radps: float = 2.0
    avoidance_radius_scale: float = 1.0
    cluster_threshold_cm: float = 10.0
    placement_margin_cm: float = 0.5
    taxis_init_x_frac: float = 1.0 / 3.0
    taxis_init_y_half_frac: float = 0.5


@dataclass(frozen=True)
class ScenarioConfig:
    arena_w_cm: float
    arena_h_cm: float
    robots: int
    seed: int
    duration_s: float
    controller: str | dict
    beacon: tuple[float, float] | None = None
    params: SimParams = SimParams()
    metrics_path: str | None = None
    trace_path: str | None = None

    @staticmethod
    def from_json(text: str, base_dir: Path | None = None) -> "ScenarioConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("scenario must be a JSON object")
        try:
            arena = raw["arena"]
            cfg_args = {
                "arena_w_cm": float(arena["w_cm"]),
                "arena_h_cm": float(arena["h_cm"]),
                "robots": int(raw["robots"]),
                "seed": int(raw["seed"]),
                "duration_s": float(raw["duration_s"]),
                "controller": raw["controller"],
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scenario config: {exc!r}") from exc
        if "beacon" in raw and raw["beacon"] is not None:
            try:
                cfg_args["beacon"] = (
                    float(raw["beacon"]["x_cm"]),
                    float(raw["beacon"]["y_cm"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad beacon: {exc!r}") from exc
        param_fields = {f.name for f in dataclasses.fields(SimParams)}
        overrides = raw.get("params") or {}
        if not isinstance(overrides, dict):
            raise ConfigError("params must be an object")
        unknown = set(overrides) - param_fields
        if unknown:
            raise ConfigError(f"unknown params: {sorted(unknown)}")
        cfg_args["params"] = SimParams(
            **{k: float(v) for k, v in overrides.items()}
        )
        outputs = raw.get("outputs") or {}
        for key, attr in (("metrics", "metrics_path"), ("trace", "trace_path")):
            value = outputs.get(key)
            if value is not None:
                path = Path(value)
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                cfg_args[attr] = str(path)
        cfg = ScenarioConfig(**cfg_args)
        cfg.validate()
        return cfg

    @staticmethod
    def from_file(path: str | Path) -> "ScenarioConfig":
        p = Path(path)
        return ScenarioConfig.from_json(p.read_text("utf-8"), base_dir=p.parent)

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be > 0")
        if self.robots < 1:
            raise ConfigError("robots must be >= 1")
        if isinstance(self.controller, str):
            if self.controller not in ("aggregation", "taxis"):
                raise ConfigError(f"unknown controller {self.controller!r}")
            if self.controller == "taxis" and self.beacon is None:
                raise ConfigError("beacon required for the taxis controller")
        elif not (isinstance(self.controller, dict) and "ir" in self.controller):
            raise ConfigError("controller must be 'aggregation', 'taxis', or {'ir': path}")


# --- controller wiring --------------------------------------------------------

def _compile_bundled(name: str, machine: str) -> CompiledMachine:
    from .. import corpus_model_text

    unit = parse(corpus_model_text(name), f"{name}.rcm")
    if isinstance(unit, list):
        raise AssertionError(f"bundled model {name} failed to parse: {unit}")
    model = analyze(unit)
    if isinstance(model, list):
        raise AssertionError(f"bundled model {name} failed analysis: {model}")
    return compile_machine(model, machine)


def load_controller(cfg: ScenarioConfig) -> tuple[CompiledMachine, str]:
    """Compiled machine plus the adapter family name it needs."""
    if cfg.controller == "aggregation":
        return _compile_bundled("aggregation", "AggregationFSM"), "aggregation"
    if cfg.controller == "taxis":
        return _compile_bundled("taxis", "SwarmTaxisFSM"), "taxis"
    ir_path = cfg.controller["ir"]
    try:
        cm = load_ir(Path(ir_path).read_bytes())
    except OSError as exc:
        raise ConfigError(f"cannot read IR file {ir_path!r}: {exc}") from exc
    ops = {op.name for op in cm.external_ops} | {op.name for op in cm.defined_ops}
    if TaxisFamily.REQUIRED_OPS <= ops:
        if cfg.beacon is None:
            raise ConfigError("beacon required for a taxis-style controller")
        return cm, "taxis"
    if AggregationFamily.REQUIRED_OPS <= ops:
        return cm, "aggregation"
    raise ConfigError(
        f"cannot infer a platform for machine {cm.name!r}: its operations match"
        " neither the aggregation nor the taxis adapter"
    )


def build_world(cfg: ScenarioConfig) -> World:
    p = cfg.params
    return World(
        cfg.arena_w_cm,
        cfg.arena_h_cm,
        cfg.robots,
        physics_dt=p.physics_dt_s,
        control_dt=p.control_dt_s,
        beacon=cfg.beacon,
        body_radius=p.body_radius_cm,
        wheel_base=p.wheel_base_cm,
        max_wheel_speed=p.max_wheel_speed_cmps,
        seed=cfg.seed,
    )


def place_robots(world: World, cfg: ScenarioConfig, family_name: str, seed: int) -> None:
    """Random non-overlapping poses; taxis spawns in the left region."""
    gen = placement_stream(seed)
    r = world.body_radius
    margin = cfg.params.placement_margin_cm
    if family_name == "taxis":
        x_hi = max(world.arena_w * cfg.params.taxis_init_x_frac, 2 * r + margin)
        half = world.arena_h * cfg.params.taxis_init_y_half_frac
        y_lo = max(world.arena_h / 2 - half, r)
        y_hi = min(world.arena_h / 2 + half, world.arena_h - r)
    else:
        x_hi = world.arena_w - r
        y_lo, y_hi = r, world.arena_h - r
    placed_x: list[float] = []
    placed_y: list[float] = []
    for i in range(world.n_robots):
        for _ in range(20_000):
            x = float(gen.uniform(r, x_hi))
            y = float(gen.uniform(y_lo, y_hi))
            if all(
                math.hypot(x - px, y - py) >= 2 * r + margin
                for px, py in zip(placed_x, placed_y)
            ):
                break
        else:
            raise ConfigError("could not place robots without overlap")
        theta = float(gen.uniform(-math.pi, math.pi))
        world.place(i, x, y, theta)
        placed_x.append(x)
        placed_y.append(y)


class SwarmSimulation:
    """One world plus one execution context per robot, stepped in lockstep."""

    def __init__(self, world: World, cm: CompiledMachine, family, runtime_config: RuntimeConfig):
        self.world = world
        self.machine = cm
        self.family = family
        self.adapters = [family.make_adapter(i) for i in range(world.n_robots)]
        self.contexts = [create_context(cm, a, runtime_config) for a in self.adapters]

    def control_cycle(self) -> list[TraceRecord]:
        self.family.begin_cycle()
        events = [a.sample_events() for a in self.adapters]
        records = []
        for i, ctx in enumerate(self.contexts):
            rec = step(ctx, events=events[i])
            records.append(rec)
            if rec.fault is not None:
                raise SimulationFault(i, rec.fault)
        for i, a in enumerate(self.adapters):
            self.world.set_wheels(i, *a.pending_wheels)
        for _ in range(self.world.substeps):
            self.world.physics_substep()
        self.world.clock_s += self.world.control_dt
        return records


def make_simulation(cfg: ScenarioConfig, seed: int) -> SwarmSimulation:
    cm, family_name = load_controller(cfg)
    world = build_world(cfg)
    world.seed = seed
    place_robots(world, cfg, family_name, seed)
    p = cfg.params
    try:
        if family_name == "taxis":
            TaxisFamily.check_machine(cm)
            family = TaxisFamily(
                world,
                coherence_range_cm=p.coherence_range_cm,
                forward_speed_cmps=p.forward_speed_cmps,
                turn_speed_radps=p.turn_speed_radps,
                avoidance_radius_scale=p.avoidance_radius_scale,
            )
        else:
            AggregationFamily.check_machine(cm)
            family = AggregationFamily(world)
    except AdapterError as exc:
        raise ConfigError(str(exc)) from exc
    runtime_config = RuntimeConfig(
        control_dt_s=p.control_dt_s, time_unit_s=p.time_unit_s
    )
    return SwarmSimulation(world, cm, family, runtime_config)


def _metrics_row(world: World, t_s: float, threshold: float) -> str:
    frac = cluster_fraction(world, threshold)
    if world.beacon is not None:
        dist, spread = taxis_metrics(world)
        return f"{t_s!r},{frac!r},{dist!r},{spread!r}"
    return f"{t_s!r},{frac!r},,"


@dataclass
class ScenarioResult:
    seed: int
    rows: list[str]  # metrics rows, one per simulated second
    final_cluster_fraction: float
    final_beacon_distance: float | None
    final_max_spread: float | None
    world: World

    @property
    def final_row(self) -> str:
        return self.rows[-1]


def run_scenario(
    cfg: ScenarioConfig, seed_override: int | None = None
) -> ScenarioResult:
    """Run the scenario to completion, writing configured outputs."""
    seed = cfg.seed if seed_override is None else seed_override
    sim = make_simulation(cfg, seed)
    world = sim.world
    p = cfg.params
    cycles_per_second = int(round(1.0 / p.control_dt_s))
    total_cycles = int(round(cfg.duration_s / p.control_dt_s))

    rows: list[str] = []
    trace_lines: list[str] = [] if cfg.trace_path is not None else None
    for cycle in range(total_cycles):
        records = sim.control_cycle()
        if trace_lines is not None:
            for i, rec in enumerate(records):
                obj = {"robot": i}
                obj.update(rec.to_json_obj())
                trace_lines.append(json.dumps(obj, separators=(",", ":")))
        if (cycle + 1) % cycles_per_second == 0:
            t_s = float((cycle + 1) // cycles_per_second)
            rows.append(_metrics_row(world, t_s, p.cluster_threshold_cm))

    header = f"# smforge {__version__} rng={RNG_ALGORITHM} seed={seed}"
    columns = "t_s,cluster_fraction,centroid_beacon_dist_cm,max_spread_cm"
    csv_text = "\n".join([header, columns, *rows]) + "\n"
    if cfg.metrics_path is not None:
        atomic_write_text(cfg.metrics_path, csv_text)
    if trace_lines is not None:
        atomic_write_text(cfg.trace_path, "\n".join(trace_lines) + "\n")

    final_frac = cluster_fraction(world, p.cluster_threshold_cm)
    final_dist = final_spread = None
    if world.beacon is not None:
        final_dist, final_spread = taxis_metrics(world)
    return ScenarioResult(seed, rows, final_frac, final_dist, final_spread, world)


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via temp file + rename so failures never leave partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
