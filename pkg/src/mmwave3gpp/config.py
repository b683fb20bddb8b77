"""Simulation configuration: dataclasses, INI-style parsing, validation.

File layout::

    [simulation]
    scenario = UMi
    fc = 28e9
    ...
    [grid]
    spacing = 1e6
    count = 100
    [node bs1]
    role = BS
    waypoints = 0: 0, 0, 10
    [building b1]
    lo = 10, 10, 0
    hi = 30, 30, 20
    type = office

Waypoints are ``t: x, y, z`` entries separated by ``;``.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .antenna import ELEMENT_3GPP, ISOTROPIC, AntennaPanel
from .dynamics import Orientation
from .engine import AttachPolicy, BeamMethod, BeamUpdate, EngineOptions, Node, SubcarrierGrid, World
from .propagation import LosMode
from .scenario import Building, BuildingType, Role, Scenario, Trajectory, Waypoint, building_at, scenario_params


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class NodeConfig:
    name: str
    role: Role
    waypoints: tuple
    rows: int
    cols: int
    bearing_deg: float = 0.0
    indoor: bool = False

    def panel(self, pattern: str) -> AntennaPanel:
        return AntennaPanel(rows=self.rows, cols=self.cols, bearing=float(np.deg2rad(self.bearing_deg)), pattern=pattern)


@dataclass(frozen=True)
class BuildingConfig:
    name: str
    lo: tuple
    hi: tuple
    building_type: BuildingType = BuildingType.residential


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario = Scenario.UMi
    fc: float = 28e9
    los_mode: LosMode = LosMode.statistical
    shadowing: bool = True
    optional_nlos: bool = False
    spatial_consistency: bool = True
    blockage: bool = False
    n_blockers: int = 4
    orientation: Orientation = Orientation.portrait
    pattern: str = ISOTROPIC
    bf_method: BeamMethod = BeamMethod.power
    bf_update: BeamUpdate = BeamUpdate.on_change
    t_per: float = 0.1
    duration: float = 1.0
    tick: float = 0.1
    seed: int = 1
    output: str = "out"
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0
    attach: AttachPolicy = AttachPolicy.nearest
    sweep_scenarios: tuple = ()
    sweep_points: int = 100
    sweep_fc: tuple = ()  # (scenario, fc) overrides
    grid_spacing: float = 1e6
    grid_count: int = 100
    nodes: tuple = ()
    buildings: tuple = ()


_SIM_FIELDS = [f for f in dataclasses.fields(SimConfig) if f.name not in
               ("nodes", "buildings", "grid_spacing", "grid_count", "sweep_scenarios", "sweep_fc")]


# ---------------------------------------------------------------------------
# value codecs


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "value"):
        return str(v.value)
    return str(v)


def _vec(s: str) -> tuple:
    parts = [p for p in s.replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ValueError(f"expected three coordinates, got {s!r}")
    return tuple(float(p) for p in parts)


def _fmt_vec(v) -> str:
    return ", ".join(repr(float(x)) for x in v)


def _waypoints(s: str) -> tuple:
    out = []
    for item in s.split(";"):
        item = item.strip()
        if not item:
            continue
        t, _, pos = item.partition(":")
        if not pos:
            raise ValueError(f"waypoint {item!r} is not 't: x, y, z'")
        out.append(Waypoint(float(t), _vec(pos)))
    if not out:
        raise ValueError("empty mobility trace")
    return tuple(out)


def _fmt_waypoints(wps) -> str:
    return "; ".join(f"{w.t!r}: {_fmt_vec(w.position)}" for w in wps)


def _convert(f: dataclasses.Field, raw: str):
    kind = {f.name: f for f in dataclasses.fields(SimConfig)}[f.name].default
    if isinstance(kind, bool):
        return _bool(raw)
    if isinstance(kind, int) and not hasattr(kind, "value"):
        return int(raw)
    if isinstance(kind, float):
        return float(raw)
    if hasattr(kind, "value"):
        return type(kind)(raw.strip())
    return raw.strip()


# ---------------------------------------------------------------------------
# parse / serialise


def parse_config(text: str) -> SimConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc)) from None
    if not cp.has_section("simulation"):
        raise ConfigError("simulation", "missing [simulation] section")
    kw = {}
    sim = cp["simulation"]
    known = {f.name: f for f in _SIM_FIELDS}
    for key, raw in sim.items():
        if key in ("sweep_scenarios", "sweep_fc"):
            continue
        if key not in known:
            raise ConfigError(f"simulation.{key}", "unknown key")
        try:
            kw[key] = _convert(known[key], raw)
        except ValueError as exc:
            raise ConfigError(f"simulation.{key}", str(exc)) from None
    try:
        kw["sweep_scenarios"] = tuple(Scenario(s) for s in sim.get("sweep_scenarios", "").split())
    except ValueError as exc:
        raise ConfigError("simulation.sweep_scenarios", str(exc)) from None
    overrides = []
    for item in sim.get("sweep_fc", "").split():
        name, _, val = item.partition(":")
        try:
            overrides.append((Scenario(name), float(val)))
        except ValueError as exc:
            raise ConfigError("simulation.sweep_fc", str(exc)) from None
    kw["sweep_fc"] = tuple(overrides)
    if cp.has_section("grid"):
        g = cp["grid"]
        try:
            kw["grid_spacing"] = float(g.get("spacing", SimConfig.grid_spacing))
            kw["grid_count"] = int(g.get("count", SimConfig.grid_count))
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None

    nodes, buildings = [], []
    for sec in cp.sections():
        kind, _, name = sec.partition(" ")
        s = cp[sec]
        if kind == "node":
            try:
                role = Role(s.get("role", "UT").strip())
                default = (8, 8) if role is Role.BS else (4, 4)
                nodes.append(NodeConfig(
                    name=name.strip(),
                    role=role,
                    waypoints=_waypoints(s["waypoints"]),
                    rows=int(s.get("rows", default[0])),
                    cols=int(s.get("cols", default[1])),
                    bearing_deg=float(s.get("bearing", 0.0)),
                    indoor=_bool(s.get("indoor", "false")),
                ))
            except (KeyError, ValueError) as exc:
                raise ConfigError(sec, str(exc)) from None
        elif kind == "building":
            try:
                buildings.append(BuildingConfig(name.strip(), _vec(s["lo"]), _vec(s["hi"]),
                                                BuildingType(s.get("type", "residential").strip())))
            except (KeyError, ValueError) as exc:
                raise ConfigError(sec, str(exc)) from None
        elif sec not in ("simulation", "grid"):
            raise ConfigError(sec, "unknown section")
    kw["nodes"] = tuple(nodes)
    kw["buildings"] = tuple(buildings)
    return SimConfig(**kw)


def load_config(path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("path", str(exc)) from None
    return parse_config(text)


def serialize_config(cfg: SimConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp["simulation"] = {f.name: _fmt(getattr(cfg, f.name)) for f in _SIM_FIELDS}
    if cfg.sweep_scenarios:
        cp["simulation"]["sweep_scenarios"] = " ".join(s.value for s in cfg.sweep_scenarios)
    if cfg.sweep_fc:
        cp["simulation"]["sweep_fc"] = " ".join(f"{s.value}:{fc!r}" for s, fc in cfg.sweep_fc)
    cp["grid"] = {"spacing": _fmt(cfg.grid_spacing), "count": _fmt(cfg.grid_count)}
    for n in cfg.nodes:
        cp[f"node {n.name}"] = {
            "role": n.role.value,
            "waypoints": _fmt_waypoints(n.waypoints),
            "rows": str(n.rows),
            "cols": str(n.cols),
            "bearing": repr(float(n.bearing_deg)),
            "indoor": _fmt(n.indoor),
        }
    for b in cfg.buildings:
        cp[f"building {b.name}"] = {"lo": _fmt_vec(b.lo), "hi": _fmt_vec(b.hi), "type": b.building_type.value}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# validation and world construction


def sweep_frequency(cfg: SimConfig, scenario: Scenario) -> float:
    return dict(cfg.sweep_fc).get(Scenario(scenario), cfg.fc)


def validate(cfg: SimConfig, need_nodes: bool = True) -> None:
    """Raise ConfigError naming the first violated constraint."""
    sp = scenario_params(cfg.scenario)
    lo, hi = sp.fc_range
    if not lo <= cfg.fc <= hi:
        raise ConfigError("simulation.fc", f"{cfg.fc:g} Hz outside [{lo:g}, {hi:g}] for {cfg.scenario.value}")
    for s in cfg.sweep_scenarios:
        f = sweep_frequency(cfg, s)
        a, b = scenario_params(s).fc_range
        if not a <= f <= b:
            raise ConfigError("simulation.sweep_fc", f"{f:g} Hz outside [{a:g}, {b:g}] for {s.value}")
    if cfg.pattern not in (ISOTROPIC, ELEMENT_3GPP):
        raise ConfigError("simulation.pattern", f"unknown pattern {cfg.pattern!r}")
    for name in ("t_per", "tick"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"simulation.{name}", "must be positive")
    if cfg.duration < 0:
        raise ConfigError("simulation.duration", "must be non-negative")
    if cfg.n_blockers < 0:
        raise ConfigError("simulation.n_blockers", "must be non-negative")
    if cfg.seed < 0:
        raise ConfigError("simulation.seed", "must be non-negative")
    if cfg.sweep_points < 2:
        raise ConfigError("simulation.sweep_points", "need at least two points")
    try:
        SubcarrierGrid(cfg.fc, cfg.grid_spacing, cfg.grid_count)
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None
    buildings = []
    for b in cfg.buildings:
        try:
            buildings.append(Building(b.lo, b.hi, b.building_type))
        except ValueError as exc:
            raise ConfigError(f"building {b.name}", str(exc)) from None
    if cfg.los_mode is LosMode.geometric and not buildings:
        raise ConfigError("simulation.los_mode", "geometric LOS needs at least one building")
    names = [n.name for n in cfg.nodes]
    if len(set(names)) != len(names):
        raise ConfigError("node", "duplicate node names")
    if need_nodes:
        if not any(n.role is Role.BS for n in cfg.nodes):
            raise ConfigError("node", "need at least one BS")
        if not any(n.role is Role.UT for n in cfg.nodes):
            raise ConfigError("node", "need at least one UT")
    h_lo, h_hi = sp.h_ut_range
    for n in cfg.nodes:
        sec = f"node {n.name}"
        if n.rows < 1 or n.cols < 1:
            raise ConfigError(f"{sec}.rows", "panel needs at least one row and column")
        try:
            traj = Trajectory(n.waypoints)
        except ValueError as exc:
            raise ConfigError(f"{sec}.waypoints", str(exc)) from None
        if len(n.waypoints) > 1:
            t0, t1 = traj.span
            if t0 > 0 or t1 < cfg.duration:
                raise ConfigError(f"{sec}.waypoints", f"trace span [{t0:g}, {t1:g}] does not cover the run")
        for w in n.waypoints:
            if n.role is Role.UT and not h_lo <= w.position[2] <= h_hi:
                raise ConfigError(f"{sec}.waypoints", f"UT height {w.position[2]:g} m outside [{h_lo:g}, {h_hi:g}]")
            if n.role is Role.BS and building_at(w.position, buildings):
                raise ConfigError(f"{sec}.waypoints", "BS inside a building")


def engine_options(cfg: SimConfig) -> EngineOptions:
    return EngineOptions(
        scenario=cfg.scenario,
        los_mode=cfg.los_mode,
        shadowing=cfg.shadowing,
        optional_nlos=cfg.optional_nlos,
        spatial_consistency=cfg.spatial_consistency,
        blockage=cfg.blockage,
        n_blockers=cfg.n_blockers,
        orientation=cfg.orientation.value,
        bf_method=cfg.bf_method,
        bf_update=cfg.bf_update,
        t_per=cfg.t_per,
        tx_power_dbm=cfg.tx_power_dbm,
        noise_figure_db=cfg.noise_figure_db,
        attach_policy=cfg.attach,
        seed=cfg.seed,
    )


def build_world(cfg: SimConfig) -> World:
    validate(cfg)
    nodes = [Node(n.name, n.role, Trajectory(n.waypoints), n.panel(cfg.pattern), n.indoor) for n in cfg.nodes]
    buildings = [Building(b.lo, b.hi, b.building_type) for b in cfg.buildings]
    grid = SubcarrierGrid(cfg.fc, cfg.grid_spacing, cfg.grid_count)
    return World(nodes, engine_options(cfg), grid, buildings)
