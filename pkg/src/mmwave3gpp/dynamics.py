"""Channel evolution: spatially consistent cluster drift and cluster blockage.

Drift follows procedure A of 3GPP TR 38.901 (section 7.6.3.2) with a static
BS.  Blockage follows blockage model A (section 7.6.4.1): one self-blocking
region in the UT frame plus K non-self regions whose centres wander with UT
displacement.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .antenna import unit_vector
from .scenario import SPEED_OF_LIGHT
from .small_scale import AOA, AOD, ZOA, ZOD, AngleSet, ChannelRealization, diffuse_profile, wrap_angles

SELF_BLOCK_DB = 30.0
DEFAULT_BLOCKERS = 4


@dataclass(frozen=True)
class UpdateConfig:
    t_per: float = 0.1
    spatial_consistency: bool = True
    blockage: bool = False
    redraw_phases: bool = False

    def __post_init__(self):
        if self.spatial_consistency and not self.t_per > 0:
            raise ValueError("update period must be positive when spatial consistency is on")


# ---------------------------------------------------------------------------
# Procedure A


def _theta_hat(az, zen):
    return np.stack([np.cos(zen) * np.cos(az), np.cos(zen) * np.sin(az), -np.sin(zen)], axis=-1)


def _phi_hat(az):
    return np.stack([-np.sin(az), np.cos(az), np.zeros_like(az)], axis=-1)


def drift_parameters(abs_delays, centres, reflect_sign, v, dt: float, specular: bool):
    """One drift step of absolute delays and central angles (radians).

    Returns the new (abs_delays, centres) without wrapping.
    """
    tau = np.asarray(abs_delays, dtype=float)
    c = np.asarray(centres, dtype=float)
    v = np.asarray(v, dtype=float)
    aoa, zoa, aod, zod = c
    r_rx = unit_vector(aoa, zoa)
    r_tx = unit_vector(aod, zod)
    th_rx, ph_rx = _theta_hat(aoa, zoa), _phi_hat(aoa)
    th_tx, ph_tx = _theta_hat(aod, zod), _phi_hat(aod)

    # v' = R_n v with R_n = [th_tx ph_tx r_tx] diag(1, X_n, -1) [th_rx ph_rx r_rx]^T
    v_tx = (th_tx * (th_rx @ v)[:, None] + ph_tx * (reflect_sign * (ph_rx @ v))[:, None]
            - r_tx * (r_rx @ v)[:, None])
    if specular:
        v_tx[0] = v
    ctau = SPEED_OF_LIGHT * tau

    new_tau = tau - (r_rx @ v) / SPEED_OF_LIGHT * dt
    new = np.empty_like(c)
    new[AOD] = aod + np.sum(v_tx * ph_tx, axis=1) / (ctau * np.maximum(np.sin(zod), 1e-9)) * dt
    new[ZOD] = zod + np.sum(v_tx * th_tx, axis=1) / ctau * dt
    new[AOA] = aoa - (ph_rx @ v) / (ctau * np.maximum(np.sin(zoa), 1e-9)) * dt
    new[ZOA] = zoa - (th_rx @ v) / ctau * dt
    return new_tau, new


def update_channel(r: ChannelRealization, dt: float, v, rng: Optional[np.random.Generator] = None,
                   rebuild: bool = True, redraw_phases: bool = False) -> ChannelRealization:
    """Advance a realization by ``dt`` seconds of UT motion at velocity ``v``.

    Delays and the four angle sets drift, diffuse powers are recomputed from
    the new delays with the original per-cluster shadowing, and ray phases
    advance by the Doppler rotation accrued over the step so the channel stays
    continuous across updates.  The cluster set itself is kept.
    """
    v = np.asarray(v, dtype=float)
    if dt == 0.0 or not np.any(v):
        return r
    specular = r.los
    new_tau, centres = drift_parameters(r.abs_delays, r.angles.centres, r.reflect_sign, v, dt, specular)
    rel = new_tau - new_tau.min()

    powers = r.powers.copy()
    first = 1 if specular else 0
    diffuse = diffuse_profile(rel[first:], r.lsps.ds, r.table.r_tau, r.shadow_db[first:]) / r.power_norm
    powers[first:] = diffuse / (r.k_r + 1.0) if specular else diffuse

    rhat = unit_vector(r.angles.centres[AOA], r.angles.centres[ZOA])
    if redraw_phases and rng is not None:
        phases = rng.uniform(-np.pi, np.pi, size=r.phases.shape)
    else:
        shift = 2 * np.pi * (rhat @ v) * dt / r.meta["wavelength"]
        phases = np.angle(np.exp(1j * (r.phases + shift[:, None])))

    out = dataclasses.replace(
        r,
        delays=rel,
        abs_delays=new_tau,
        powers=powers,
        angles=AngleSet(wrap_angles(centres), r.angles.offsets),
        phases=phases,
        generated_at=r.generated_at + dt,
        long_term=None,
    )
    return out.rebuild() if rebuild else out


# ---------------------------------------------------------------------------
# Blockage


class Orientation(str, enum.Enum):
    portrait = "portrait"
    landscape = "landscape"


# (azimuth centre, azimuth width, zenith centre, zenith width), degrees
SELF_REGIONS = {
    Orientation.portrait: (260.0, 120.0, 100.0, 80.0),
    Orientation.landscape: (40.0, 160.0, 110.0, 75.0),
}


@dataclass(frozen=True)
class Region:
    """Angular box in degrees; zenith extent is centre +- zen_width/2."""

    az: float
    az_width: float
    zen: float
    zen_width: float

    def contains(self, az_deg, zen_deg) -> np.ndarray:
        d_az = np.abs((np.asarray(az_deg) - self.az + 180.0) % 360.0 - 180.0)
        d_zen = np.abs(np.asarray(zen_deg) - self.zen)
        return (d_az < self.az_width / 2) & (d_zen < self.zen_width / 2)


@dataclass(frozen=True)
class BlockageState:
    self_region: Region
    regions: tuple  # non-self Regions
    latent: np.ndarray  # Gaussian latents behind the region centres
    orientation: Orientation
    indoor: bool
    distance: float  # blocker distance, m
    last_position: Optional[tuple] = None

    @property
    def k(self) -> int:
        return len(self.regions)


def generate_blockers(indoor: bool, orientation=Orientation.portrait, k: int = DEFAULT_BLOCKERS,
                      rng: Optional[np.random.Generator] = None, position=None) -> BlockageState:
    """Self-blocking region plus ``k`` non-self regions.

    Centre azimuths are 360 * Phi(g) for standard normal latents g, so they
    are uniform and can later be moved with a Gaussian AR(1).
    """
    if k < 0:
        raise ValueError("number of blockers must be non-negative")
    orientation = Orientation(orientation)
    rng = np.random.default_rng() if rng is None else rng
    sr = Region(*SELF_REGIONS[orientation])
    latent = rng.standard_normal(k)
    if indoor:
        widths = rng.uniform(15.0, 45.0, k)
        zen_w = 2.0 * rng.uniform(5.0, 15.0, k)
        dist = 2.0
    else:
        widths = rng.uniform(5.0, 15.0, k)
        zen_w = np.full(k, 10.0)
        dist = 10.0
    regions = tuple(Region(float(360.0 * ndtr(g)), float(w), 90.0, float(z)) for g, w, z in zip(latent, widths, zen_w))
    pos = None if position is None else tuple(float(x) for x in position)
    return BlockageState(sr, regions, latent, orientation, bool(indoor), dist, pos)


def move_blockers(state: BlockageState, displacement: float, rng: np.random.Generator) -> BlockageState:
    """AR(1) step of the latent centre variables over a UT displacement (m)."""
    if displacement <= 0.0 or state.k == 0:
        return state
    rho = np.exp(-displacement / state.distance)
    latent = rho * state.latent + np.sqrt(1.0 - rho * rho) * rng.standard_normal(state.k)
    regions = tuple(dataclasses.replace(reg, az=float(360.0 * ndtr(g))) for reg, g in zip(state.regions, latent))
    return dataclasses.replace(state, regions=regions, latent=latent)


def _edge_term(angle_deg, sign, distance, wavelength):
    # only in-region values are used, where |angle| stays well under 90 degrees
    a = np.deg2rad(np.clip(np.asarray(angle_deg, dtype=float), -89.0, 89.0))
    return np.arctan(sign * (np.pi / 2) * np.sqrt(np.pi / wavelength * distance * (1.0 / np.cos(a) - 1.0))) / np.pi


def nonself_loss(region: Region, az_deg, zen_deg, distance: float, wavelength: float) -> np.ndarray:
    """Knife-edge style attenuation (dB) of clusters inside ``region``; 0 outside."""
    az = np.asarray(az_deg, dtype=float)
    zen = np.asarray(zen_deg, dtype=float)
    d_az = (az - region.az + 180.0) % 360.0 - 180.0
    a1 = d_az - region.az_width / 2
    a2 = d_az + region.az_width / 2
    z1 = zen - (region.zen + region.zen_width / 2)
    z2 = zen - (region.zen - region.zen_width / 2)
    fa = _edge_term(a1, -np.sign(a1), distance, wavelength) + _edge_term(a2, np.sign(a2), distance, wavelength)
    fz = _edge_term(z1, -np.sign(z1), distance, wavelength) + _edge_term(z2, np.sign(z2), distance, wavelength)
    inside = region.contains(az, zen)
    loss = -20.0 * np.log10(np.clip(1.0 - fa * fz, 1e-12, None))
    return np.where(inside, np.maximum(loss, 0.0), 0.0)


@dataclass(frozen=True)
class BlockageResult:
    attenuation_db: np.ndarray  # per cluster
    self_blocked: np.ndarray  # bool per cluster
    nonself_blocked: np.ndarray  # bool per cluster
    state: BlockageState


def blockage_attenuation(state: BlockageState, aoa, zoa, wavelength: float, bearing: float = 0.0) -> BlockageResult:
    """Attenuation for clusters arriving from (aoa, zoa) in radians."""
    az = np.rad2deg(np.asarray(aoa, dtype=float) - bearing) % 360.0
    zen = np.rad2deg(np.asarray(zoa, dtype=float))
    self_hit = state.self_region.contains(az, zen)
    att = np.where(self_hit, SELF_BLOCK_DB, 0.0)
    other = np.zeros(az.shape, dtype=bool)
    for reg in state.regions:
        loss = nonself_loss(reg, az, zen, state.distance, wavelength)
        other |= reg.contains(az, zen)
        att = att + loss
    return BlockageResult(att, self_hit, other, state)


def apply_blockage(r: ChannelRealization, state: BlockageState, dt: float, v,
                   rng: np.random.Generator) -> BlockageResult:
    """Move the non-self blockers by the UT displacement, then attenuate clusters.

    The attenuation is relative to the unblocked cluster powers, so it never
    compounds across ticks.  The returned state carries the moved blockers.
    """
    disp = float(np.linalg.norm(np.asarray(v, dtype=float)) * dt)
    state = move_blockers(state, disp, rng)
    c = r.angles.centres
    return blockage_attenuation(state, c[AOA], c[ZOA], r.meta["wavelength"], r.rx_panel.bearing)


def with_blockage(r: ChannelRealization, attenuation_db, rebuild: bool = True) -> ChannelRealization:
    out = dataclasses.replace(r, blockage_db=np.asarray(attenuation_db, dtype=float), long_term=None)
    return out.rebuild() if rebuild else out
