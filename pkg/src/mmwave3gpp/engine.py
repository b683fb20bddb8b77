"""Time-stepped link evaluation: geometry, LOS, loss, fading, beams, PSD and SINR.

Each (BS, UT) pair owns a ``LinkState`` with its own RNG streams, derived
from the master seed and the pair's indices, so results do not depend on
evaluation order.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .antenna import AntennaPanel
from .beamforming import cell_scan, collapse_channel, long_term, power_method, psd_apply, with_beams
from .dynamics import BlockageState, apply_blockage, generate_blockers, update_channel, with_blockage
from .propagation import (
    LinkContext,
    LosCondition,
    LosMode,
    ShadowingState,
    assign_los,
    draw_indoor_distance,
    init_shadowing,
    o2i_penetration,
    pathloss,
    select_o2i_model,
    shadow_corr_distance,
    shadow_sigma,
    shadowing_update,
)
from .scenario import Building, Role, Scenario, Trajectory, building_at, link_geometry
from .small_scale import ChannelRealization, generate_channel

log = logging.getLogger(__name__)

BOLTZMANN = 1.380649e-23
T0 = 290.0

# feature ids for per-link RNG streams
RNG_LOS, RNG_FADING, RNG_SHADOW, RNG_O2I, RNG_BLOCK, RNG_BEAM = range(6)


@dataclass(frozen=True)
class SubcarrierGrid:
    fc: float
    spacing: float
    count: int

    def __post_init__(self):
        if self.count < 1 or self.spacing <= 0:
            raise ValueError("grid needs a positive spacing and at least one subcarrier")
        if self.bandwidth > min(0.1 * self.fc, 2e9):
            raise ValueError(f"bandwidth {self.bandwidth:g} Hz exceeds min(10% of fc, 2 GHz)")

    @property
    def bandwidth(self) -> float:
        return self.spacing * self.count

    def offsets(self) -> np.ndarray:
        """Subcarrier offsets from the carrier, Hz."""
        return (np.arange(self.count) - (self.count - 1) / 2.0) * self.spacing


@dataclass(frozen=True)
class SinrSample:
    t: float
    ut: str
    serving: str
    sinr_db: np.ndarray
    wideband_db: float
    signal: np.ndarray  # W/Hz per subcarrier
    interference: np.ndarray
    noise_psd: float


class BeamMethod(str, enum.Enum):
    power = "power"
    cell_scan = "cell_scan"


class BeamUpdate(str, enum.Enum):
    on_change = "on_change"
    frozen = "frozen"


class AttachPolicy(str, enum.Enum):
    nearest = "nearest"
    max_rsrp = "max_rsrp"


@dataclass(frozen=True)
class EngineOptions:
    scenario: Scenario
    los_mode: LosMode = LosMode.statistical
    shadowing: bool = True
    optional_nlos: bool = False
    spatial_consistency: bool = True
    blockage: bool = False
    n_blockers: int = 4
    orientation: str = "portrait"
    bf_method: BeamMethod = BeamMethod.power
    bf_update: BeamUpdate = BeamUpdate.on_change
    t_per: float = 0.1
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0
    attach_policy: AttachPolicy = AttachPolicy.nearest
    redraw_phases: bool = False
    seed: int = 0


@dataclass(frozen=True)
class Node:
    name: str
    role: Role
    trajectory: Trajectory
    panel: AntennaPanel
    indoor: bool = False

    def position(self, t: float) -> np.ndarray:
        return self.trajectory.position_at(t)

    def velocity(self, t: float) -> np.ndarray:
        return self.trajectory.velocity_at(t)

    @property
    def moving(self) -> bool:
        return len(self.trajectory.waypoints) > 1


@dataclass
class LinkState:
    bs: int
    ut: int
    los: LosCondition
    ut_indoor: bool
    o2i_db: float
    rngs: dict
    shadowing: Optional[ShadowingState] = None
    realization: Optional[ChannelRealization] = None
    blockage: Optional[BlockageState] = None
    last_update: float = 0.0
    loss_db: float = 0.0
    changed: bool = False
    beams: Optional[tuple] = None  # last computed (w_tx, w_rx)


def noise_psd(noise_figure_db: float) -> float:
    """Thermal noise PSD in W/Hz."""
    return BOLTZMANN * T0 * 10.0 ** (noise_figure_db / 10.0)


class World:
    """All nodes, buildings and per-link state of one simulation."""

    def __init__(self, nodes: Sequence[Node], options: EngineOptions, grid: SubcarrierGrid,
                 buildings: Sequence[Building] = ()):
        self.options = options
        self.grid = grid
        self.buildings = tuple(buildings)
        self.bs = [n for n in nodes if Role(n.role) is Role.BS]
        self.ut = [n for n in nodes if Role(n.role) is Role.UT]
        if not self.bs:
            raise ValueError("simulation needs at least one BS")
        for b in self.bs:
            if self.buildings and building_at(b.position(b.trajectory.span[0]), self.buildings):
                raise ValueError(f"BS {b.name} is inside a building")
        self.links: dict[tuple[int, int], LinkState] = {}
        self.serving: dict[int, int] = {}
        self.trace: list[tuple[float, str, str]] = []
        self.time: Optional[float] = None
        t0 = 0.0
        for j in range(len(self.ut)):
            for i in range(len(self.bs)):
                self.links[(i, j)] = self._new_link(i, j, t0)
            self.serving[j] = attach(self, j, options.attach_policy, t0)

    # -- construction ------------------------------------------------------

    def _rng(self, i: int, j: int, feature: int) -> np.random.Generator:
        return np.random.default_rng([self.options.seed, i, j, feature])

    def _ut_indoor(self, ut: Node, t: float):
        if self.buildings:
            b = building_at(ut.position(t), self.buildings)
            return b is not None, (b.building_type if b is not None else None)
        return bool(ut.indoor), None

    def _new_link(self, i: int, j: int, t: float) -> LinkState:
        opt = self.options
        bs, ut = self.bs[i], self.ut[j]
        rngs = {f: self._rng(i, j, f) for f in (RNG_LOS, RNG_FADING, RNG_SHADOW, RNG_O2I, RNG_BLOCK, RNG_BEAM)}
        p_bs, p_ut = bs.position(t), ut.position(t)
        geo = link_geometry(p_bs, p_ut)
        los = assign_los(opt.los_mode, opt.scenario, geo.d2d, float(p_ut[2]), rngs[RNG_LOS], p_bs, p_ut,
                         self.buildings)
        indoor, btype = self._ut_indoor(ut, t)
        o2i = 0.0
        if indoor and not Scenario(opt.scenario).indoor:
            model = select_o2i_model(opt.scenario, btype or "residential")
            rng = rngs[RNG_O2I]
            o2i = o2i_penetration(model, self.grid.fc, draw_indoor_distance(opt.scenario, rng), rng)
        return LinkState(i, j, los, indoor, o2i, rngs, last_update=t)

    def context(self, link: LinkState, t: float) -> LinkContext:
        return LinkContext(self.options.scenario, self.grid.fc, tuple(self.bs[link.bs].position(t)),
                           tuple(self.ut[link.ut].position(t)), link.los, link.ut_indoor)

    # -- per-link pipeline -------------------------------------------------

    def _event(self, t: float, link: LinkState, what: str) -> None:
        self.trace.append((t, f"{self.bs[link.bs].name}-{self.ut[link.ut].name}", what))

    def _loss(self, link: LinkState, t: float) -> float:
        opt = self.options
        p_bs, p_ut = self.bs[link.bs].position(t), self.ut[link.ut].position(t)
        geo = link_geometry(p_bs, p_ut)
        pl = pathloss(opt.scenario, link.los, self.grid.fc, geo.d2d, geo.d3d, float(p_bs[2]), float(p_ut[2]),
                      opt.optional_nlos)
        sf = 0.0
        if opt.shadowing:
            if link.shadowing is None:
                sigma = shadow_sigma(opt.scenario, link.los, self.grid.fc, geo.d2d, float(p_bs[2]), float(p_ut[2]),
                                     link.ut_indoor, opt.optional_nlos)
                d_cor = shadow_corr_distance(opt.scenario, link.los, self.grid.fc, link.ut_indoor)
                # the correlated SF normal of the link's large-scale draw seeds the filter
                z = link.realization.lsps.normals[0]
                link.shadowing = init_shadowing(sigma, d_cor, p_ut, value=sigma * z)
            else:
                link.shadowing = shadowing_update(link.shadowing, p_ut, link.rngs[RNG_SHADOW])
            sf = link.shadowing.value
        return pl + sf + link.o2i_db

    def _refresh_los(self, link: LinkState, t: float) -> None:
        if LosMode(self.options.los_mode) is not LosMode.geometric:
            return
        p_bs, p_ut = self.bs[link.bs].position(t), self.ut[link.ut].position(t)
        geo = link_geometry(p_bs, p_ut)
        new = assign_los(LosMode.geometric, self.options.scenario, geo.d2d, float(p_ut[2]), None, p_bs, p_ut,
                         self.buildings)
        if new.state is not link.los.state:
            # no soft transition: a state flip forces a fresh channel
            link.los = new
            link.realization = None
            link.shadowing = None

    def _generate(self, link: LinkState, t: float) -> None:
        ut = self.ut[link.ut]
        link.realization = generate_channel(self.context(link, t), self.bs[link.bs].panel, ut.panel,
                                            link.rngs[RNG_FADING], t)
        self._event(t, link, "generate")
        if self.options.blockage:
            link.blockage = generate_blockers(link.ut_indoor or Scenario(self.options.scenario).indoor,
                                              self.options.orientation, self.options.n_blockers,
                                              link.rngs[RNG_BLOCK], ut.position(t))
            self._block(link, t, 0.0, np.zeros(3))
            link.realization = link.realization.rebuild()
            self._event(t, link, "rebuild")
        link.last_update = t
        link.changed = True

    def _block(self, link: LinkState, t: float, dt: float, v) -> None:
        res = apply_blockage(link.realization, link.blockage, dt, v, link.rngs[RNG_BLOCK])
        link.blockage = res.state
        link.realization = with_blockage(link.realization, res.attenuation_db, rebuild=False)
        self._event(t, link, "blockage")

    def _advance(self, link: LinkState, t: float) -> None:
        """Bring the link's channel up to time ``t`` on the update cadence."""
        link.changed = False
        if link.realization is None:
            self._generate(link, t)
            return
        ut = self.ut[link.ut]
        if not ut.moving or t - link.last_update < self.options.t_per - 1e-9:
            return
        dt = t - link.last_update
        v = ut.velocity(link.last_update)
        if not np.any(v):
            link.last_update = t
            return
        if not self.options.spatial_consistency:
            self._generate(link, t)
            return
        link.realization = update_channel(link.realization, dt, v, link.rngs[RNG_FADING], rebuild=False,
                                          redraw_phases=self.options.redraw_phases)
        self._event(t, link, "drift")
        if self.options.blockage:
            self._block(link, t, dt, v)
        link.realization = link.realization.rebuild()
        self._event(t, link, "rebuild")
        link.last_update = t
        link.changed = True

    def _beams(self, link: LinkState, t: float) -> None:
        r = link.realization
        frozen = BeamUpdate(self.options.bf_update) is BeamUpdate.frozen
        if r.w_tx is not None and r.long_term is not None:
            return
        if frozen and link.beams is not None:
            w_tx, w_rx = link.beams
        else:
            h = collapse_channel(r.channel)
            if BeamMethod(self.options.bf_method) is BeamMethod.power:
                w_tx, w_rx = power_method(h, rng=link.rngs[RNG_BEAM])
            else:
                res = cell_scan(h, r.tx_panel, r.rx_panel)
                w_tx, w_rx = res.w_tx, res.w_rx
            link.beams = (w_tx, w_rx)
            self._event(t, link, "beam")
        link.realization = with_beams(r, w_tx, w_rx)

    # -- public ------------------------------------------------------------

    def active_bs(self) -> set:
        return set(self.serving.values())

    def serving_link(self, j: int) -> LinkState:
        return self.links[(self.serving[j], j)]

    def tick(self, t: float) -> list[SinrSample]:
        return tick(self, t)


def attach(world: World, j: int, policy=AttachPolicy.nearest, t: float = 0.0) -> int:
    """Index of the serving BS for UT ``j`` (ties go to the lowest BS index)."""
    if not world.bs:
        raise ValueError("no BS to attach to")
    policy = AttachPolicy(policy)
    ut = world.ut[j]
    scores = []
    for i, bs in enumerate(world.bs):
        geo = link_geometry(bs.position(t), ut.position(t))
        if policy is AttachPolicy.nearest:
            scores.append(geo.d3d)
        else:
            link = world.links[(i, j)]
            pl = pathloss(world.options.scenario, link.los, world.grid.fc, geo.d2d, geo.d3d,
                          float(bs.position(t)[2]), float(ut.position(t)[2]), world.options.optional_nlos)
            scores.append(pl + link.o2i_db)
    return int(np.argmin(scores))


def tick(world: World, t: float) -> list[SinrSample]:
    """Evaluate every UT at time ``t`` (must not go backwards)."""
    if world.time is not None and t < world.time:
        raise ValueError("simulation time must advance monotonically")
    world.time = t
    opt = world.options
    active = world.active_bs()
    offsets = world.grid.offsets()
    tx_psd = np.full(world.grid.count, 10.0 ** ((opt.tx_power_dbm - 30.0) / 10.0) / world.grid.bandwidth)
    n0 = noise_psd(opt.noise_figure_db)

    # channels first (serving and interfering), in a fixed order
    for key in sorted(world.links):
        link = world.links[key]
        if key[0] not in active:
            continue
        world._refresh_los(link, t)
        world._advance(link, t)
        link.loss_db = world._loss(link, t)
    # serving beams
    for j in sorted(world.serving):
        world._beams(world.serving_link(j), t)
    # interference links reuse the interferer's transmit beam and the victim's receive beam
    for (i, j), link in sorted(world.links.items()):
        if i not in active or world.serving[j] == i:
            continue
        owner = min(jj for jj, ii in world.serving.items() if ii == i)
        w_tx = world.serving_link(owner).realization.w_tx
        w_rx = world.serving_link(j).realization.w_rx
        r = link.realization
        if r.long_term is None or r.w_tx is not w_tx or r.w_rx is not w_rx:
            link.realization = dataclasses.replace(r, w_tx=w_tx, w_rx=w_rx, long_term=long_term(r.channel, w_tx, w_rx))

    samples = []
    for j, ut in enumerate(world.ut):
        v = ut.velocity(t)
        serving = world.serving_link(j)
        s = psd_apply(tx_psd, serving.realization, serving.loss_db, t, offsets, v)
        world._event(t, serving, "psd")
        interference = np.zeros_like(s)
        for i in sorted(active):
            if i == world.serving[j]:
                continue
            link = world.links[(i, j)]
            interference += psd_apply(tx_psd, link.realization, link.loss_db, t, offsets, v)
        sinr = s / (n0 + interference)
        wide = s.sum() / (n0 * s.size + interference.sum())
        samples.append(SinrSample(t, ut.name, world.bs[world.serving[j]].name, 10.0 * np.log10(sinr),
                                  float(10.0 * np.log10(wide)), s, interference, n0))
    return samples
