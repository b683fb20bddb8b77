"""Small-scale fading: cluster delays, powers, angles, phases and the
cluster-level channel tensor.

In LOS the specular ray is stored as its own leading cluster (index 0, delay
0, a single ray carrying K/(K+1) of the power).  The diffuse clusters follow.
The two strongest diffuse clusters are split into three sub-clusters each,
so the coefficient tensor is indexed by *expanded* clusters; ``parent`` maps
each expanded entry back to its cluster.
"""

from __future__ import annotations

import dataclasses
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .antenna import AntennaPanel, array_response, element_gain
from .large_scale import LspSet, correlation_sqrt, generate_lsps
from .propagation import LinkContext
from .tables import LspTable, c_phi_nlos, c_theta_nlos, lsp_table, ray_offsets, subcluster_layout

PRUNE_DB = 25.0
AOA, ZOA, AOD, ZOD = range(4)


# ---------------------------------------------------------------------------
# helpers


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Azimuth rows (0, 2) wrapped to [0, 2pi); zenith rows (1, 3) reflected into [0, pi]."""
    out = np.array(a, dtype=float, copy=True)
    out[[AOA, AOD]] = np.mod(out[[AOA, AOD]], 2 * np.pi)
    z = np.mod(out[[ZOA, ZOD]], 2 * np.pi)
    out[[ZOA, ZOD]] = np.where(z > np.pi, 2 * np.pi - z, z)
    # mod can round up to exactly 2pi for tiny negative inputs
    out[[AOA, AOD]] = np.where(out[[AOA, AOD]] >= 2 * np.pi, 0.0, out[[AOA, AOD]])
    return out


def los_delay_scaling(k_db: float) -> float:
    """K-dependent factor used to compensate the delay spread in LOS."""
    k = k_db
    return 0.7705 - 0.0433 * k + 0.0002 * k**2 + 0.000017 * k**3


def rms_delay_spread(delays, powers) -> float:
    p = np.asarray(powers, dtype=float)
    d = np.asarray(delays, dtype=float)
    p = p / p.sum()
    mean = np.dot(p, d)
    return float(np.sqrt(max(np.dot(p, d * d) - mean * mean, 0.0)))


# ---------------------------------------------------------------------------
# step 5: delays


def cluster_delays(ds: float, r_tau: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sorted, min-subtracted exponential delays (seconds)."""
    if ds <= 0 or r_tau <= 1:
        raise ValueError("need DS > 0 and r_tau > 1")
    tau = -r_tau * ds * np.log(rng.uniform(size=n))
    return np.sort(tau - tau.min())


# ---------------------------------------------------------------------------
# step 6: powers


@dataclass(frozen=True)
class ClusterPowers:
    powers: np.ndarray  # all clusters, specular first in LOS
    mask: np.ndarray  # retained after pruning
    shadow_db: np.ndarray  # per-cluster Z_n (0 for the specular ray)
    norm: float  # sum of unnormalised diffuse powers
    k_r: float


def diffuse_profile(delays, ds: float, r_tau: float, shadow_db) -> np.ndarray:
    """Unnormalised exponential power-delay profile."""
    return np.exp(-np.asarray(delays) * (r_tau - 1.0) / (r_tau * ds)) * 10.0 ** (-np.asarray(shadow_db) / 10.0)


def prune_mask(powers, threshold_db: float = PRUNE_DB) -> np.ndarray:
    p = np.asarray(powers, dtype=float)
    return p >= p.max() * 10.0 ** (-threshold_db / 10.0)


def cluster_powers(delays, ds: float, r_tau: float, zeta: float, k_r: float, los: bool,
                   rng: np.random.Generator, threshold_db: float = PRUNE_DB,
                   shadow_db: Optional[np.ndarray] = None) -> ClusterPowers:
    """Normalised cluster powers with Ricean re-weighting and pruning.

    ``shadow_db`` overrides the per-cluster lognormal draw (used by tests
    and by the time-evolution code, which keeps the original draw).
    """
    delays = np.asarray(delays, dtype=float)
    z = rng.normal(0.0, zeta, size=delays.size) if shadow_db is None else np.asarray(shadow_db, dtype=float)
    raw = diffuse_profile(delays, ds, r_tau, z)
    norm = float(raw.sum())
    p = raw / norm
    if los:
        p = np.concatenate([[k_r / (k_r + 1.0)], p / (k_r + 1.0)])
        z = np.concatenate([[0.0], z])
    mask = prune_mask(p, threshold_db)
    assert mask.any()
    return ClusterPowers(p, mask, z, norm, float(k_r if los else 0.0))


# ---------------------------------------------------------------------------
# sub-clusters


@dataclass(frozen=True)
class SubclusterExpansion:
    parent: np.ndarray  # (Ne,) cluster index
    weights: np.ndarray  # (Ne, M) power share of each ray
    delay_offset: np.ndarray  # (Ne,) seconds
    strongest: tuple  # clusters that were split

    @property
    def size(self) -> int:
        return self.parent.size


def expand_subclusters(powers, n_rays: int, c_ds: float, specular: bool) -> SubclusterExpansion:
    """Split the two strongest diffuse clusters into three sub-clusters."""
    powers = np.asarray(powers, dtype=float)
    first = 1 if specular else 0
    diffuse = np.arange(first, powers.size)
    groups, factors = subcluster_layout()
    split = n_rays == sum(len(g) for g in groups)
    strongest = ()
    if split and diffuse.size:
        order = diffuse[np.argsort(-powers[diffuse], kind="stable")]
        strongest = tuple(int(i) for i in order[:2])
    parent, weights, offs = [], [], []
    for n in range(powers.size):
        if specular and n == 0:
            w = np.zeros(n_rays)
            w[0] = 1.0
            parent.append(0), weights.append(w), offs.append(0.0)
        elif n in strongest:
            for rays, f in zip(groups, factors):
                w = np.zeros(n_rays)
                w[rays] = 1.0 / n_rays
                parent.append(n), weights.append(w), offs.append(f * c_ds)
        else:
            parent.append(n), weights.append(np.full(n_rays, 1.0 / n_rays)), offs.append(0.0)
    return SubclusterExpansion(np.array(parent, dtype=int), np.array(weights), np.array(offs), strongest)


def trivial_expansion(n_clusters: int, n_rays: int) -> SubclusterExpansion:
    return SubclusterExpansion(np.arange(n_clusters), np.full((n_clusters, n_rays), 1.0 / n_rays),
                               np.zeros(n_clusters), ())


# ---------------------------------------------------------------------------
# steps 7-8: angles


@dataclass(frozen=True)
class AngleSet:
    """Per-cluster central angles (4, Nc) and per-ray offsets (4, Nc, M), radians."""

    centres: np.ndarray
    offsets: np.ndarray

    def rays(self) -> np.ndarray:
        return wrap_angles(self.centres[:, :, None] + self.offsets)


def _c_phi(n: int, los: bool, k_db: float) -> float:
    c = c_phi_nlos(n)
    if los:
        c *= 1.1035 - 0.028 * k_db - 0.002 * k_db**2 + 0.0001 * k_db**3
    return c


def _c_theta(n: int, los: bool, k_db: float) -> float:
    c = c_theta_nlos(n)
    if los:
        c *= 1.3086 + 0.0339 * k_db - 0.0077 * k_db**2 + 0.0002 * k_db**3
    return c


def _coupled_offsets(alpha: np.ndarray, n_clusters: int, strongest, rng) -> np.ndarray:
    """Randomly permuted ray offsets per cluster (within sub-cluster groups when split)."""
    groups, _ = subcluster_layout()
    out = np.empty((n_clusters, alpha.size))
    for n in range(n_clusters):
        if n in strongest:
            row = np.empty(alpha.size)
            for g in groups:
                row[g] = alpha[rng.permutation(g)]
            out[n] = row
        else:
            out[n] = alpha[rng.permutation(alpha.size)]
    return out


def ray_angles(lsps: LspSet, powers, k_db: float, los: bool, table: LspTable, rng: np.random.Generator,
               los_angles, ut_indoor: bool = False, strongest=()) -> AngleSet:
    """Central cluster angles and coupled ray offsets.

    ``powers`` are the retained cluster powers (specular first in LOS).
    ``los_angles`` is the geometric (AoA, ZoA, AoD, ZoD) in radians.
    """
    powers = np.asarray(powers, dtype=float)
    los_deg = np.rad2deg(np.asarray(los_angles, dtype=float))
    first = 1 if los else 0
    p = powers[first:].copy()
    nd = p.size
    if los and nd:
        p[0] += powers[0]
    m = table.n_rays
    alpha = ray_offsets()
    if alpha.size != m:
        raise ValueError(f"ray offset table has {alpha.size} entries, table asks for {m} rays")
    n_tab = table.n_clusters
    ratio = p / p.max() if nd else p

    cphi = _c_phi(n_tab, los, k_db)
    cth = _c_theta(n_tab, los, k_db)

    def azimuths(spread, los_dir):
        x = rng.choice([-1.0, 1.0], size=nd)
        y = rng.normal(0.0, spread / 7.0, size=nd)
        prime = 2.0 * (spread / 1.4) * np.sqrt(-np.log(ratio)) / cphi
        a = x * prime + y
        return a - a[0] + los_dir if los and nd else a + los_dir

    def zeniths(spread, mean, los_dir):
        x = rng.choice([-1.0, 1.0], size=nd)
        y = rng.normal(0.0, spread / 7.0, size=nd)
        prime = -spread * np.log(ratio) / cth
        a = x * prime + y
        return a - a[0] + los_dir if los and nd else a + mean

    aoa = azimuths(lsps.asa, los_deg[AOA])
    aod = azimuths(lsps.asd, los_deg[AOD])
    zoa_mean = 90.0 if ut_indoor else los_deg[ZOA]
    zoa = zeniths(lsps.zsa, zoa_mean, los_deg[ZOA])
    zod = zeniths(lsps.zsd, los_deg[ZOD] + table.zod_offset, los_deg[ZOD])

    centres = np.stack([aoa, zoa, aod, zod])
    zsd_ray = 0.375 * 10.0 ** table.mu["ZSD"]
    scale = (table.c_asa, table.c_zsa, table.c_asd, zsd_ray)
    diffuse_strong = tuple(s - first for s in strongest)
    offsets = np.empty((4, nd, m))
    offsets[AOA] = table.c_asa * np.broadcast_to(alpha, (nd, m))
    for row in (ZOA, AOD, ZOD):
        offsets[row] = scale[row] * _coupled_offsets(alpha, nd, diffuse_strong, rng)
    if los:
        centres = np.concatenate([los_deg[:, None], centres], axis=1)
        offsets = np.concatenate([np.zeros((4, 1, m)), offsets], axis=1)
    return AngleSet(wrap_angles(np.deg2rad(centres)), np.deg2rad(offsets))


# ---------------------------------------------------------------------------
# step 10: phases


def initial_phases(n_clusters: int, n_rays: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Per-ray U(-pi, pi) phases (n_clusters, n_rays) and one LOS phase."""
    phases = rng.uniform(-np.pi, np.pi, size=(n_clusters, n_rays))
    return phases, float(rng.uniform(-np.pi, np.pi))


# ---------------------------------------------------------------------------
# step 11: coefficients


def channel_coefficients(rx_panel: AntennaPanel, tx_panel: AntennaPanel, powers, rays, phases,
                         expansion: Optional[SubclusterExpansion] = None) -> np.ndarray:
    """Cluster-level channel tensor of shape (U, S, Ne).

    ``rays`` is (4, Nc, M) in radians, ``phases`` is (Nc, M).  Each expanded
    entry sums its rays with amplitude sqrt(P_parent * weight).
    """
    powers = np.asarray(powers, dtype=float)
    rays = np.asarray(rays, dtype=float)
    phases = np.asarray(phases, dtype=float)
    nc, m = phases.shape
    if rays.shape != (4, nc, m) or powers.shape != (nc,):
        raise ValueError(f"shape mismatch: rays {rays.shape}, phases {phases.shape}, powers {powers.shape}")
    if expansion is None:
        expansion = trivial_expansion(nc, m)
    if expansion.weights.shape[1] != m:
        raise ValueError("expansion ray count does not match the angle tensor")
    a_rx = array_response(rx_panel, rays[AOA], rays[ZOA])  # (Nc, M, U)
    a_tx = array_response(tx_panel, rays[AOD], rays[ZOD])  # (Nc, M, S)
    amp = element_gain(rx_panel, rays[AOA], rays[ZOA]) * element_gain(tx_panel, rays[AOD], rays[ZOD])
    amp = amp * np.exp(1j * phases)
    par = expansion.parent
    coef = np.sqrt(powers[par, None] * expansion.weights) * amp[par]  # (Ne, M)
    return np.einsum("em,emu,ems->use", coef, a_rx[par], a_tx[par], optimize=True)


# ---------------------------------------------------------------------------
# full realization


@dataclass(frozen=True)
class ChannelRealization:
    """Everything produced by one run of the fading procedure for a link.

    Cluster-level arrays (length Nc) and expanded arrays (length Ne, matching
    the third axis of ``channel``) are kept side by side.
    """

    table: LspTable
    lsps: LspSet
    los: bool
    k_r: float
    delays: np.ndarray  # (Nc,) seconds, relative
    powers: np.ndarray  # (Nc,) unblocked
    shadow_db: np.ndarray  # (Nc,)
    power_norm: float
    angles: AngleSet
    phases: np.ndarray  # (Nc, M)
    reflect_sign: np.ndarray  # (Nc,) +-1 used by the drift model
    expansion: SubclusterExpansion
    channel: np.ndarray  # (U, S, Ne)
    tx_panel: AntennaPanel
    rx_panel: AntennaPanel
    generated_at: float = 0.0
    abs_delays: Optional[np.ndarray] = None  # (Nc,) including propagation delay
    blockage_db: Optional[np.ndarray] = None  # (Nc,)
    c_tau: float = 1.0
    w_tx: Optional[np.ndarray] = None
    w_rx: Optional[np.ndarray] = None
    long_term: Optional[np.ndarray] = None  # (Ne,)
    meta: dict = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return self.delays.size

    @property
    def n_expanded(self) -> int:
        return self.expansion.size

    @property
    def effective_powers(self) -> np.ndarray:
        if self.blockage_db is None:
            return self.powers
        return self.powers * 10.0 ** (-self.blockage_db / 10.0)

    @property
    def expanded_delays(self) -> np.ndarray:
        return self.delays[self.expansion.parent] + self.expansion.delay_offset

    @property
    def expanded_angles(self) -> np.ndarray:
        """Central angles per expanded cluster (the Doppler anchors), (4, Ne)."""
        return self.angles.centres[:, self.expansion.parent]

    @property
    def expanded_powers(self) -> np.ndarray:
        return self.effective_powers[self.expansion.parent] * self.expansion.weights.sum(axis=1)

    def delay_spread(self) -> float:
        """Power-weighted rms delay spread, LOS-compensated by the scaling factor."""
        return rms_delay_spread(self.delays, self.powers) / self.c_tau

    def rebuild(self) -> "ChannelRealization":
        """Recompute the coefficient tensor from the current parameters."""
        h = channel_coefficients(self.rx_panel, self.tx_panel, self.effective_powers, self.angles.rays(),
                                 self.phases, self.expansion)
        return dataclasses.replace(self, channel=h, long_term=None)


def generate_channel(link: LinkContext, tx_panel: AntennaPanel, rx_panel: AntennaPanel,
                     rng: np.random.Generator, t: float = 0.0, lsps: Optional[LspSet] = None,
                     threshold_db: float = PRUNE_DB) -> ChannelRealization:
    """Run steps 5-11 for one link (tx = BS, rx = UT)."""
    geo = link.geometry
    cond = link.fading_condition
    table = lsp_table(link.scenario, cond, link.fc, geo.d2d, link.h_bs, link.h_ut)
    if lsps is None:
        lsps = generate_lsps(table, correlation_sqrt(link.scenario, cond), rng)
    los = cond == "LOS"
    k_r = lsps.k_r if los else 0.0

    delays = cluster_delays(lsps.ds, table.r_tau, table.n_clusters, rng)
    cp = cluster_powers(delays, lsps.ds, table.r_tau, table.zeta, k_r, los, rng, threshold_db)
    if los:
        delays = np.concatenate([[0.0], delays])
    keep = cp.mask
    delays, powers, shadow = delays[keep], cp.powers[keep], cp.shadow_db[keep]

    expansion = expand_subclusters(powers, table.n_rays, table.c_ds, los)
    angles = ray_angles(lsps, powers, lsps.k_db, los, table, rng, link.los_angles(), cond == "O2I",
                        expansion.strongest)
    phases, los_phase = initial_phases(powers.size, table.n_rays, rng)
    if los:
        phases[0, :] = 0.0
        phases[0, 0] = los_phase
    reflect = rng.choice([-1.0, 1.0], size=powers.size)

    h = channel_coefficients(rx_panel, tx_panel, powers, angles.rays(), phases, expansion)
    from .scenario import SPEED_OF_LIGHT

    return ChannelRealization(
        table=table,
        lsps=lsps,
        los=los,
        k_r=float(k_r),
        delays=delays,
        powers=powers,
        shadow_db=shadow,
        power_norm=cp.norm,
        angles=angles,
        phases=phases,
        reflect_sign=reflect,
        expansion=expansion,
        channel=h,
        tx_panel=tx_panel,
        rx_panel=rx_panel,
        generated_at=float(t),
        abs_delays=delays + geo.d3d / SPEED_OF_LIGHT,
        blockage_db=np.zeros(powers.size),
        c_tau=los_delay_scaling(lsps.k_db) if los else 1.0,
        meta={"condition": cond, "d3d": geo.d3d, "wavelength": link.wavelength},
    )


def dump_realization(r: ChannelRealization) -> str:
    """Plain-text dump: dimensions, then each array flattened (complex as re/im pairs)."""
    buf = io.StringIO()
    u, s, ne = r.channel.shape
    buf.write(f"dims U={u} S={s} Ne={ne} Nc={r.n_clusters} M={r.phases.shape[1]}\n")

    def emit(name, arr):
        arr = np.asarray(arr)
        buf.write(f"{name} {' '.join(str(d) for d in arr.shape)}\n")
        flat = arr.ravel()
        if np.iscomplexobj(flat):
            buf.write(" ".join(f"{x.real:.17g} {x.imag:.17g}" for x in flat))
        else:
            buf.write(" ".join(f"{x:.17g}" for x in flat))
        buf.write("\n")

    emit("delays", r.expanded_delays)
    emit("powers", r.expanded_powers)
    emit("angles", r.expanded_angles)
    emit("phases", r.phases)
    emit("channel", r.channel)
    return buf.getvalue()
