"""LOS condition, pathloss, outdoor-to-indoor penetration and correlated shadowing.

Pathloss and LOS-probability formulas follow TR 38.900/38.901 Tables 7.4.1-1
and 7.4.2-1; O2I formulas follow Section 7.4.3.  Frequencies passed in are Hz;
the formulas themselves use GHz.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .scenario import SPEED_OF_LIGHT, Building, Scenario, scenario_params, segment_intersects_buildings
from .tables import lsp_table

log = logging.getLogger(__name__)

# RMa environment defaults: average building height and street width
RMA_H = 5.0
RMA_W = 20.0


class LosState(str, enum.Enum):
    LOS = "LOS"
    NLOS = "NLOS"


class LosMode(str, enum.Enum):
    los = "los"
    nlos = "nlos"
    statistical = "statistical"
    geometric = "geometric"


@dataclass(frozen=True)
class LosCondition:
    state: LosState
    source: str

    @property
    def is_los(self) -> bool:
        return self.state is LosState.LOS


class ValidityError(ValueError):
    """A distance, height or frequency outside a formula's validity range."""

    def __init__(self, what: str, value: float, bound: tuple[float, float]):
        super().__init__(f"{what}={value:g} outside validity range [{bound[0]:g}, {bound[1]:g}]")
        self.what = what
        self.value = value
        self.bound = bound


def _check(what, value, lo, hi, strict):
    if lo <= value <= hi:
        return value
    if strict:
        raise ValidityError(what, value, (lo, hi))
    clamped = min(max(value, lo), hi)
    log.warning("%s=%g outside [%g, %g]; clamped to %g", what, value, lo, hi, clamped)
    return clamped


# ---------------------------------------------------------------------------
# LOS probability and assignment


def los_probability(scenario: Scenario, d2d: float, h_ut: float = 1.5) -> float:
    scenario = Scenario(scenario)
    if d2d < 0:
        raise ValueError("negative 2D distance")
    if scenario is Scenario.UMi:
        if d2d <= 18.0:
            return 1.0
        return 18.0 / d2d + np.exp(-d2d / 36.0) * (1.0 - 18.0 / d2d)
    if scenario is Scenario.UMa:
        if d2d <= 18.0:
            return 1.0
        c = 0.0 if h_ut <= 13.0 else ((h_ut - 13.0) / 10.0) ** 1.5
        base = 18.0 / d2d + np.exp(-d2d / 63.0) * (1.0 - 18.0 / d2d)
        return float(min(1.0, base * (1.0 + c * 1.25 * (d2d / 100.0) ** 3 * np.exp(-d2d / 150.0))))
    if scenario is Scenario.RMa:
        if d2d <= 10.0:
            return 1.0
        return float(np.exp(-(d2d - 10.0) / 1000.0))
    if scenario is Scenario.InMO:
        if d2d <= 1.2:
            return 1.0
        if d2d < 6.5:
            return float(np.exp(-(d2d - 1.2) / 4.7))
        return float(np.exp(-(d2d - 6.5) / 32.6) * 0.32)
    if scenario is Scenario.InOO:
        if d2d <= 5.0:
            return 1.0
        if d2d <= 49.0:
            return float(np.exp(-(d2d - 5.0) / 70.8))
        return float(np.exp(-(d2d - 49.0) / 211.7) * 0.54)
    raise ValueError(f"unsupported scenario {scenario}")


def assign_los(
    mode: LosMode,
    scenario: Scenario,
    d2d: float,
    h_ut: float,
    rng: Optional[np.random.Generator] = None,
    p1=None,
    p2=None,
    buildings: Optional[Sequence[Building]] = None,
) -> LosCondition:
    mode = LosMode(mode)
    if mode is LosMode.los:
        return LosCondition(LosState.LOS, "deterministic")
    if mode is LosMode.nlos:
        return LosCondition(LosState.NLOS, "deterministic")
    if mode is LosMode.statistical:
        p_ref = rng.uniform(0.0, 1.0)
        state = LosState.LOS if p_ref < los_probability(scenario, d2d, h_ut) else LosState.NLOS
        return LosCondition(state, "statistical")
    if buildings is None or p1 is None or p2 is None:
        raise ValueError("geometric LOS needs building data and both end points")
    blocked = segment_intersects_buildings(p1, p2, buildings)
    return LosCondition(LosState.NLOS if blocked else LosState.LOS, "geometric")


# ---------------------------------------------------------------------------
# Pathloss


def breakpoint_distance(scenario: Scenario, fc: float, h_bs: float, h_ut: float) -> float:
    """Breakpoint distance in metres (effective heights with h_E = 1 m for UMi/UMa)."""
    scenario = Scenario(scenario)
    if scenario is Scenario.RMa:
        return 2.0 * np.pi * h_bs * h_ut * fc / SPEED_OF_LIGHT
    if scenario in (Scenario.UMi, Scenario.UMa):
        return 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc / SPEED_OF_LIGHT
    return np.inf


def _rma_pl1(d3d, fc_ghz):
    h = RMA_H
    return (
        20.0 * np.log10(40.0 * np.pi * d3d * fc_ghz / 3.0)
        + min(0.03 * h**1.72, 10.0) * np.log10(d3d)
        - min(0.044 * h**1.72, 14.77)
        + 0.002 * np.log10(h) * d3d
    )


def _los_pathloss(scenario, fc, d2d, d3d, h_bs, h_ut, strict):
    f = fc / 1e9
    if scenario.indoor:
        d3d = _check("d3D", d3d, 1.0, 150.0, strict)
        return 32.4 + 17.3 * np.log10(d3d) + 20.0 * np.log10(f)
    d_bp = breakpoint_distance(scenario, fc, h_bs, h_ut)
    d2d = _check("d2D", d2d, 10.0, scenario_params(scenario).d2d_max, strict)
    if scenario is Scenario.RMa:
        if d2d <= d_bp:
            return _rma_pl1(d3d, f)
        return _rma_pl1(d_bp, f) + 40.0 * np.log10(d3d / d_bp)
    if scenario is Scenario.UMa:
        if d2d <= d_bp:
            return 28.0 + 22.0 * np.log10(d3d) + 20.0 * np.log10(f)
        return 28.0 + 40.0 * np.log10(d3d) + 20.0 * np.log10(f) - 9.0 * np.log10(d_bp**2 + (h_bs - h_ut) ** 2)
    if d2d <= d_bp:
        return 32.4 + 21.0 * np.log10(d3d) + 20.0 * np.log10(f)
    return 32.4 + 40.0 * np.log10(d3d) + 20.0 * np.log10(f) - 9.5 * np.log10(d_bp**2 + (h_bs - h_ut) ** 2)


def _nlos_pathloss(scenario, fc, d2d, d3d, h_bs, h_ut, optional_nlos, strict):
    f = fc / 1e9
    if scenario.indoor:
        d3d = _check("d3D", d3d, 1.0, 150.0, strict)
        if optional_nlos:
            return 32.4 + 20.0 * np.log10(f) + 31.9 * np.log10(d3d)
        return 17.30 + 38.3 * np.log10(d3d) + 24.9 * np.log10(f)
    if scenario is Scenario.RMa:
        d2d = _check("d2D", d2d, 10.0, 5000.0, strict)
        h, w = RMA_H, RMA_W
        return (
            161.04
            - 7.1 * np.log10(w)
            + 7.5 * np.log10(h)
            - (24.37 - 3.7 * (h / h_bs) ** 2) * np.log10(h_bs)
            + (43.42 - 3.1 * np.log10(h_bs)) * (np.log10(d3d) - 3.0)
            + 20.0 * np.log10(f)
            - (3.2 * np.log10(11.75 * h_ut) ** 2 - 4.97)
        )
    d2d = _check("d2D", d2d, 10.0, 5000.0, strict)
    if scenario is Scenario.UMa:
        if optional_nlos:
            return 32.4 + 20.0 * np.log10(f) + 30.0 * np.log10(d3d)
        return 13.54 + 39.08 * np.log10(d3d) + 20.0 * np.log10(f) - 0.6 * (h_ut - 1.5)
    if optional_nlos:
        return 32.4 + 20.0 * np.log10(f) + 31.9 * np.log10(d3d)
    return 35.3 * np.log10(d3d) + 22.4 + 21.3 * np.log10(f) - 0.3 * (h_ut - 1.5)


def pathloss(
    scenario: Scenario,
    los,
    fc: float,
    d2d: float,
    d3d: float,
    h_bs: float,
    h_ut: float,
    optional_nlos: bool = False,
    strict: bool = True,
) -> float:
    """Deterministic pathloss in dB.

    NLOS (default or optional model) is clamped from below by the LOS value
    at the same geometry.
    """
    scenario = Scenario(scenario)
    lo, hi = scenario_params(scenario).fc_range
    _check("fc", fc, lo, hi, strict)
    state = los.state if isinstance(los, LosCondition) else LosState(los)
    pl_los = _los_pathloss(scenario, fc, d2d, d3d, h_bs, h_ut, strict)
    if state is LosState.LOS:
        return float(pl_los)
    optional = optional_nlos and scenario is not Scenario.RMa
    return float(max(pl_los, _nlos_pathloss(scenario, fc, d2d, d3d, h_bs, h_ut, optional, strict)))


def shadow_sigma(scenario: Scenario, los, fc: float, d2d: float, h_bs: float, h_ut: float,
                 indoor: bool = False, optional_nlos: bool = False) -> float:
    """Shadow-fading standard deviation in dB for the pathloss model in use."""
    scenario = Scenario(scenario)
    state = los.state if isinstance(los, LosCondition) else LosState(los)
    if indoor and not scenario.indoor:
        return lsp_table(scenario, "O2I", fc).sf_sigma
    if state is LosState.LOS:
        if scenario is Scenario.RMa:
            return 4.0 if d2d <= breakpoint_distance(scenario, fc, h_bs, h_ut) else 6.0
        return {Scenario.UMi: 4.0, Scenario.UMa: 4.0}.get(scenario, 3.0)
    if optional_nlos:
        return {Scenario.UMi: 8.2, Scenario.UMa: 7.8, Scenario.RMa: 8.0}.get(scenario, 8.29)
    return {Scenario.UMi: 7.82, Scenario.UMa: 6.0, Scenario.RMa: 8.0}.get(scenario, 8.03)


def shadow_corr_distance(scenario: Scenario, los, fc: float, indoor: bool = False) -> float:
    state = los.state if isinstance(los, LosCondition) else LosState(los)
    cond = "O2I" if (indoor and not Scenario(scenario).indoor) else state.value
    return float(lsp_table(scenario, cond, fc).corr_dist["SF"])


# ---------------------------------------------------------------------------
# O2I penetration


class O2IModel(str, enum.Enum):
    low_loss = "low_loss"
    high_loss = "high_loss"


def select_o2i_model(scenario: Scenario, building_type: str = "residential") -> O2IModel:
    scenario = Scenario(scenario)
    if scenario.indoor:
        raise ValueError("O2I penetration does not apply to indoor scenarios")
    if scenario is Scenario.RMa:
        return O2IModel.low_loss
    if str(getattr(building_type, "value", building_type)) in ("commercial", "office"):
        return O2IModel.high_loss
    return O2IModel.low_loss


def o2i_material_loss(model: O2IModel, fc: float) -> float:
    """Through-wall loss PL_tw in dB."""
    f = fc / 1e9
    l_glass = 2.0 + 0.2 * f
    l_iirglass = 23.0 + 0.3 * f
    l_concrete = 5.0 + 4.0 * f
    if O2IModel(model) is O2IModel.low_loss:
        mix = 0.3 * 10 ** (-l_glass / 10) + 0.7 * 10 ** (-l_concrete / 10)
    else:
        mix = 0.7 * 10 ** (-l_iirglass / 10) + 0.3 * 10 ** (-l_concrete / 10)
    return 5.0 - 10.0 * np.log10(mix)


O2I_SIGMA = {O2IModel.low_loss: 4.4, O2IModel.high_loss: 6.5}


def o2i_penetration(model: O2IModel, fc: float, d2d_in: float,
                    rng: Optional[np.random.Generator] = None, ut_indoor: bool = True) -> float:
    """Penetration loss in dB; the random term is omitted when ``rng`` is None."""
    if not ut_indoor:
        raise ValueError("O2I penetration requested for an outdoor UT")
    model = O2IModel(model)
    loss = o2i_material_loss(model, fc) + 0.5 * d2d_in
    if rng is not None:
        loss += rng.normal(0.0, O2I_SIGMA[model])
    return float(max(loss, 0.0))


def draw_indoor_distance(scenario: Scenario, rng: np.random.Generator) -> float:
    if Scenario(scenario) is Scenario.RMa:
        return float(rng.uniform(0.0, 10.0))
    return float(min(rng.uniform(0.0, 25.0), rng.uniform(0.0, 25.0)))


# ---------------------------------------------------------------------------
# Shadowing


@dataclass(frozen=True)
class ShadowingState:
    value: float
    last_position: tuple[float, float, float]
    sigma: float
    d_cor: float


@dataclass(frozen=True)
class PathlossResult:
    pathloss: float
    shadowing: float = 0.0
    o2i_penetration: float = 0.0

    @property
    def total(self) -> float:
        return self.pathloss + self.shadowing + self.o2i_penetration


def shadow_correlation(delta_d: float, d_cor: float) -> float:
    return float(np.exp(-delta_d / d_cor))


def init_shadowing(sigma: float, d_cor: float, position, rng: Optional[np.random.Generator] = None,
                   value: Optional[float] = None) -> ShadowingState:
    if value is None:
        value = sigma * rng.standard_normal() if rng is not None else 0.0
    return ShadowingState(float(value), tuple(float(x) for x in position), float(sigma), float(d_cor))


def shadowing_update(state: ShadowingState, new_position, rng: np.random.Generator) -> ShadowingState:
    """First-order filter in horizontal distance travelled since the last update."""
    p = np.asarray(new_position, dtype=float)
    dd = float(np.hypot(p[0] - state.last_position[0], p[1] - state.last_position[1]))
    if dd == 0.0:
        return state
    r = shadow_correlation(dd, state.d_cor)
    value = r * state.value + np.sqrt(1.0 - r * r) * state.sigma * rng.standard_normal()
    return replace(state, value=float(value), last_position=tuple(float(x) for x in p))


# ---------------------------------------------------------------------------
# Link context


@dataclass(frozen=True)
class LinkContext:
    """A BS (transmitter) to UT (receiver) link with its resolved LOS state."""

    scenario: Scenario
    fc: float
    tx_position: tuple
    rx_position: tuple
    los: LosCondition
    ut_indoor: bool = False

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.fc

    @property
    def geometry(self):
        from .scenario import link_geometry

        return link_geometry(self.tx_position, self.rx_position)

    @property
    def h_bs(self) -> float:
        return float(self.tx_position[2])

    @property
    def h_ut(self) -> float:
        return float(self.rx_position[2])

    @property
    def fading_condition(self) -> str:
        if self.ut_indoor and not Scenario(self.scenario).indoor:
            return "O2I"
        return self.los.state.value

    def los_angles(self) -> np.ndarray:
        """Geometric (AoA, ZoA, AoD, ZoD) in radians."""
        g = self.geometry
        aod, zod = g.azimuth, g.zenith
        return np.array([np.mod(aod + np.pi, 2 * np.pi), np.pi - zod, np.mod(aod, 2 * np.pi), zod])
