"""Deployment scenarios, node/building models, link geometry and mobility."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 299792458.0


class Scenario(str, enum.Enum):
    UMi = "UMi"
    UMa = "UMa"
    RMa = "RMa"
    InMO = "InMO"
    InOO = "InOO"

    @property
    def indoor(self) -> bool:
        return self in (Scenario.InMO, Scenario.InOO)

    @property
    def table_key(self) -> str:
        """Key into the fading parameter tables (both indoor kinds share one)."""
        return "InH" if self.indoor else self.value


@dataclass(frozen=True)
class ScenarioParams:
    isd: tuple[float, float]
    h_bs_default: float
    h_ut_range: tuple[float, float]
    # minimum 2D distance listed for UT drops, and the smallest distance the
    # pathloss formulas accept
    d2d_min_drop: float
    d2d_min: float
    d2d_max: float
    fc_range: tuple[float, float]
    indoor_fraction: Optional[float]


SCENARIO_PARAMS: dict[Scenario, ScenarioParams] = {
    Scenario.UMi: ScenarioParams((200.0, 200.0), 10.0, (1.5, 22.5), 10.0, 10.0, 5000.0, (6e9, 100e9), 0.8),
    Scenario.UMa: ScenarioParams((500.0, 500.0), 25.0, (1.5, 22.5), 35.0, 10.0, 5000.0, (6e9, 100e9), 0.8),
    Scenario.RMa: ScenarioParams((1732.0, 5000.0), 35.0, (1.0, 10.0), 35.0, 10.0, 10000.0, (6e9, 7e9), None),
    # Indoor formulas are bounded on the 3D distance (1 m .. 150 m).
    Scenario.InMO: ScenarioParams((20.0, 20.0), 3.0, (0.5, 3.0), 0.0, 0.0, 150.0, (6e9, 100e9), 1.0),
    Scenario.InOO: ScenarioParams((20.0, 20.0), 3.0, (0.5, 3.0), 0.0, 0.0, 150.0, (6e9, 100e9), 1.0),
}


def scenario_params(scenario: Scenario) -> ScenarioParams:
    return SCENARIO_PARAMS[Scenario(scenario)]


class BuildingType(str, enum.Enum):
    residential = "residential"
    commercial = "commercial"
    office = "office"


@dataclass(frozen=True)
class Building:
    """Axis-aligned box; treated as a closed set."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    building_type: BuildingType = BuildingType.residential

    def __post_init__(self):
        if not all(a < b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"building corners must satisfy lo < hi on every axis: {self.lo} {self.hi}")

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))


class Role(str, enum.Enum):
    BS = "BS"
    UT = "UT"


@dataclass(frozen=True)
class Waypoint:
    t: float
    position: tuple[float, float, float]


@dataclass(frozen=True)
class NodeState:
    """A BS or UT: position/velocity at one instant, plus its antenna panel."""

    name: str
    role: Role
    position: tuple[float, float, float]
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    indoor: bool = False
    panel: object = None
    building: Optional[Building] = None


@dataclass(frozen=True)
class LinkGeometry:
    d2d: float
    d3d: float
    azimuth: float
    elevation: float

    @property
    def zenith(self) -> float:
        return np.pi / 2 - self.elevation


def link_geometry(a, b) -> LinkGeometry:
    """Distances and line-of-sight direction from ``a`` to ``b``.

    ``a`` and ``b`` are NodeStates or plain 3D points.  The azimuth is in
    (-pi, pi] measured from +x towards +y; elevation is positive upwards.
    """
    pa = np.asarray(getattr(a, "position", a), dtype=float)
    pb = np.asarray(getattr(b, "position", b), dtype=float)
    if not (np.all(np.isfinite(pa)) and np.all(np.isfinite(pb))):
        raise ValueError("non-finite node position")
    d = pb - pa
    d2 = float(np.hypot(d[0], d[1]))
    d3 = float(np.sqrt(d2 * d2 + d[2] * d[2]))
    if d3 == 0.0:
        raise ValueError("degenerate link: coincident node positions")
    return LinkGeometry(d2, d3, float(np.arctan2(d[1], d[0])), float(np.arctan2(d[2], d2)))


def segment_intersects_box(p1, p2, box: Building) -> bool:
    """Slab test of the segment p1-p2 against a closed box."""
    p1 = np.asarray(p1, dtype=float)
    d = np.asarray(p2, dtype=float) - p1
    t0, t1 = 0.0, 1.0
    for ax in range(3):
        lo, hi = box.lo[ax], box.hi[ax]
        if d[ax] == 0.0:
            if p1[ax] < lo or p1[ax] > hi:
                return False
            continue
        ta = (lo - p1[ax]) / d[ax]
        tb = (hi - p1[ax]) / d[ax]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True


def segment_intersects_buildings(p1, p2, buildings: Sequence[Building]) -> bool:
    return any(segment_intersects_box(p1, p2, b) for b in buildings)


def building_at(point, buildings: Sequence[Building]) -> Optional[Building]:
    for b in buildings:
        if b.contains(point):
            return b
    return None


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear mobility trace through time-stamped waypoints."""

    waypoints: tuple[Waypoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("empty mobility trace")
        ts = [w.t for w in self.waypoints]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("waypoint times must be strictly increasing")

    @classmethod
    def static(cls, position) -> "Trajectory":
        return cls((Waypoint(0.0, tuple(float(x) for x in position)),))

    @property
    def span(self) -> tuple[float, float]:
        return self.waypoints[0].t, self.waypoints[-1].t

    def _segment(self, t: float) -> int:
        ts = [w.t for w in self.waypoints]
        return max(0, min(int(np.searchsorted(ts, t, side="right")) - 1, len(ts) - 2))

    def position_at(self, t: float) -> np.ndarray:
        return position_at(self, t)

    def velocity_at(self, t: float) -> np.ndarray:
        wps = self.waypoints
        if len(wps) == 1:
            return np.zeros(3)
        i = self._segment(t)
        a, b = wps[i], wps[i + 1]
        return (np.asarray(b.position) - np.asarray(a.position)) / (b.t - a.t)


def position_at(trajectory: Trajectory, t: float) -> np.ndarray:
    """Position on the trace at time ``t`` (must lie in the trace span;
    a single-waypoint trace is valid at any time)."""
    wps = trajectory.waypoints
    if not wps:
        raise ValueError("empty mobility trace")
    if len(wps) == 1:
        return np.asarray(wps[0].position, dtype=float)
    t0, t1 = trajectory.span
    eps = 1e-9 * max(1.0, abs(t1))
    if t < t0 - eps or t > t1 + eps:
        raise ValueError(f"t={t} outside trace span [{t0}, {t1}]")
    i = trajectory._segment(t)
    a, b = wps[i], wps[i + 1]
    frac = (t - a.t) / (b.t - a.t)
    pa = np.asarray(a.position, dtype=float)
    return pa + frac * (np.asarray(b.position, dtype=float) - pa)
