"""Analog beamforming (power method, sector scan) and the time/frequency gain.

Link gain convention: ``L_n = w_rx^H H_n w_tx``.  Because the transmit
array response enters H unconjugated, a transmit beam matched to a
direction is the *conjugate* of the steering vector.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .antenna import AntennaPanel, codebook, unit_vector
from .small_scale import AOA, ZOA, ChannelRealization

POWER_THRESHOLD = 1e-10
POWER_MAX_ITER = 1000


def collapse_channel(h: np.ndarray) -> np.ndarray:
    """Sum the cluster tensor (U, S, N) over clusters."""
    return np.asarray(h).sum(axis=2)


@dataclass(frozen=True)
class SpatialCorrelation:
    q_tx: np.ndarray  # S x S
    q_rx: np.ndarray  # U x U


def spatial_correlation(h: np.ndarray) -> SpatialCorrelation:
    h = np.asarray(h)
    return SpatialCorrelation(h.conj().T @ h, h @ h.conj().T)


def fix_phase(w: np.ndarray) -> np.ndarray:
    """Rotate so the first non-negligible entry is real and positive."""
    idx = np.flatnonzero(np.abs(w) > 1e-12 * np.abs(w).max())
    if idx.size == 0:
        return w
    a = w[idx[0]]
    return w * (np.conj(a) / abs(a))


def dominant_eigenvector(q: np.ndarray, threshold: float = POWER_THRESHOLD, max_iter: int = POWER_MAX_ITER,
                         rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, int]:
    """Power iteration on a Hermitian PSD matrix; returns (vector, iterations)."""
    n = q.shape[0]
    rng = np.random.default_rng(0) if rng is None else rng
    w = fix_phase(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    w /= np.linalg.norm(w)
    for it in range(1, max_iter + 1):
        nxt = q @ w
        norm = np.linalg.norm(nxt)
        if norm == 0.0:
            raise ValueError("start vector in the null space of the correlation matrix")
        nxt = fix_phase(nxt / norm)
        done = np.linalg.norm(nxt - w) < threshold
        w = nxt
        if done:
            break
    return w, it


def power_method(h: np.ndarray, threshold: float = POWER_THRESHOLD, max_iter: int = POWER_MAX_ITER,
                 rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, np.ndarray]:
    """Dominant eigenvectors of H^H H (transmit) and H H^H (receive)."""
    h = np.asarray(h, dtype=complex)
    if not np.any(h):
        raise ValueError("power method on a zero channel matrix")
    q = spatial_correlation(h)
    w_tx, _ = dominant_eigenvector(q.q_tx, threshold, max_iter, rng)
    w_rx, _ = dominant_eigenvector(q.q_rx, threshold, max_iter, rng)
    return w_tx, w_rx


@dataclass(frozen=True)
class ScanResult:
    xi_tx: int
    xi_rx: int
    w_tx: np.ndarray
    w_rx: np.ndarray
    gains: np.ndarray  # |w_rx^H H w_tx|^2 indexed [xi_tx - 1, xi_rx - 1]


def cell_scan(h, tx_panel: AntennaPanel, rx_panel: AntennaPanel, rtol: float = 1e-9) -> ScanResult:
    """Exhaustive search over the sector codebooks.

    ``h`` is a collapsed U x S matrix or a ChannelRealization.  Pairs whose
    gain is within ``rtol`` of the best count as ties; the lowest
    (xi_tx, xi_rx) wins.
    """
    if isinstance(h, ChannelRealization):
        h = collapse_channel(h.channel)
    tx_book = np.conj(codebook(tx_panel))  # (n_tx, S)
    rx_book = codebook(rx_panel)  # (n_rx, U)
    amp = np.einsum("ju,us,is->ij", rx_book.conj(), h, tx_book)
    gains = np.abs(amp) ** 2
    best = gains.max()
    i, j = np.argwhere(gains >= best * (1.0 - rtol))[0]
    return ScanResult(int(i) + 1, int(j) + 1, tx_book[i], rx_book[j], gains)


def long_term(h: np.ndarray, w_tx: np.ndarray, w_rx: np.ndarray) -> np.ndarray:
    """L_n = w_rx^H H_n w_tx for every (expanded) cluster."""
    h = np.asarray(h)
    if h.shape[0] != np.size(w_rx) or h.shape[1] != np.size(w_tx):
        raise ValueError(f"beam sizes ({np.size(w_rx)}, {np.size(w_tx)}) do not match channel {h.shape[:2]}")
    return np.einsum("u,use,s->e", np.conj(w_rx), h, w_tx)


def with_beams(r: ChannelRealization, w_tx: np.ndarray, w_rx: np.ndarray) -> ChannelRealization:
    """Attach beamforming vectors and cache the long-term terms."""
    return dataclasses.replace(r, w_tx=w_tx, w_rx=w_rx, long_term=long_term(r.channel, w_tx, w_rx))


def _wavelength(r: ChannelRealization, wavelength: Optional[float]) -> float:
    return r.meta["wavelength"] if wavelength is None else wavelength


def doppler_phasors(r: ChannelRealization, t: float, v, wavelength: Optional[float] = None) -> np.ndarray:
    """exp(j 2pi r_rx,n . v (t - t_gen) / lambda) per expanded cluster."""
    anchors = r.expanded_angles
    rhat = unit_vector(anchors[AOA], anchors[ZOA])
    return np.exp(2j * np.pi * (rhat @ np.asarray(v, dtype=float)) * (t - r.generated_at) / _wavelength(r, wavelength))


def gain(r: ChannelRealization, t: float, f_s, v=(0.0, 0.0, 0.0), wavelength: Optional[float] = None):
    """Beamformed gain G(t, f_s) from the cached long-term terms.

    ``f_s`` is the subcarrier offset from the carrier (scalar or array).
    """
    if r.long_term is None:
        raise ValueError("long-term terms not cached; attach beams first")
    f = np.asarray(f_s, dtype=float)
    weights = r.long_term * doppler_phasors(r, t, v, wavelength)
    return np.exp(2j * np.pi * np.multiply.outer(f, r.expanded_delays)) @ weights


def gain_direct(r: ChannelRealization, t: float, f_s, v=(0.0, 0.0, 0.0), wavelength: Optional[float] = None,
                w_tx: Optional[np.ndarray] = None, w_rx: Optional[np.ndarray] = None):
    """The same gain evaluated as the full sum over elements and clusters."""
    w_tx = r.w_tx if w_tx is None else w_tx
    w_rx = r.w_rx if w_rx is None else w_rx
    f = np.asarray(f_s, dtype=float)
    phase = doppler_phasors(r, t, v, wavelength) * np.exp(2j * np.pi * np.multiply.outer(f, r.expanded_delays))
    return np.einsum("u,use,s,...e->...", np.conj(w_rx), r.channel, w_tx, phase)


def psd_apply(tx_psd, r: ChannelRealization, total_loss_db: float, t: float, f_offsets,
              v=(0.0, 0.0, 0.0), wavelength: Optional[float] = None) -> np.ndarray:
    """Received PSD per subcarrier: tx_psd |G|^2 10^(-loss/10)."""
    tx_psd = np.asarray(tx_psd, dtype=float)
    f_offsets = np.asarray(f_offsets, dtype=float)
    if tx_psd.shape != f_offsets.shape:
        raise ValueError(f"PSD has {tx_psd.shape} entries, grid has {f_offsets.shape}")
    g = gain(r, t, f_offsets, v, wavelength)
    return tx_psd * np.abs(g) ** 2 * 10.0 ** (-total_loss_db / 10.0)
