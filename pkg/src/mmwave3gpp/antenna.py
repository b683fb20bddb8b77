"""Uniform planar array: element placement, element pattern, steering and sector codebook.

The panel lies in its local y-z plane with boresight along local +x.  A
panel's ``bearing`` rotates it about the global z axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ISOTROPIC = "isotropic"
ELEMENT_3GPP = "element_3gpp"

THETA_3DB = np.deg2rad(65.0)
PHI_3DB = np.deg2rad(65.0)
A_MAX_DB = 30.0


@dataclass(frozen=True)
class AntennaPanel:
    rows: int = 8
    cols: int = 8
    d_h: float = 0.5
    d_v: float = 0.5
    bearing: float = 0.0
    pattern: str = ISOTROPIC
    fov: float = np.pi

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("panel needs at least one row and one column")
        if self.pattern not in (ISOTROPIC, ELEMENT_3GPP):
            raise ValueError(f"unknown radiation pattern mode {self.pattern!r}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def n_sectors(self) -> int:
        return self.cols

    def local_positions(self) -> np.ndarray:
        """Element offsets in wavelengths, panel frame, shape (size, 3)."""
        i = np.arange(self.size)
        return np.stack([np.zeros(self.size), self.d_h * (i % self.cols), self.d_v * (i // self.cols)], axis=1)

    def positions(self) -> np.ndarray:
        """Element offsets in wavelengths, global frame, shape (size, 3)."""
        c, s = np.cos(self.bearing), np.sin(self.bearing)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return self.local_positions() @ rot.T


def bs_panel(**kw) -> AntennaPanel:
    return AntennaPanel(rows=8, cols=8, **kw)


def ut_panel(**kw) -> AntennaPanel:
    return AntennaPanel(rows=4, cols=4, **kw)


def element_location(i: int, panel: AntennaPanel, wavelength: float) -> np.ndarray:
    """Offset of element ``i`` from the panel's bottom-left corner, in metres."""
    if not 0 <= i < panel.size:
        raise IndexError(f"element index {i} out of range for a {panel.rows}x{panel.cols} panel")
    return np.array([0.0, panel.d_h * (i % panel.cols), panel.d_v * (i // panel.cols)]) * wavelength


def radiation_pattern(theta, phi, mode: str = ISOTROPIC):
    """Linear field gain at local zenith ``theta`` and azimuth ``phi`` (radians)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if mode == ISOTROPIC:
        return np.ones(np.broadcast(theta, phi).shape)[()]
    if mode != ELEMENT_3GPP:
        raise ValueError(f"unknown radiation pattern mode {mode!r}")
    phi = np.angle(np.exp(1j * phi))
    att_db = np.minimum(12.0 * ((theta - np.pi / 2) / THETA_3DB) ** 2 + 12.0 * (phi / PHI_3DB) ** 2, A_MAX_DB)
    return 10.0 ** (-att_db / 20.0)


def unit_vector(azimuth, zenith) -> np.ndarray:
    """Spherical unit vector(s), last axis = (x, y, z)."""
    azimuth = np.asarray(azimuth, dtype=float)
    zenith = np.asarray(zenith, dtype=float)
    st = np.sin(zenith)
    return np.stack([st * np.cos(azimuth), st * np.sin(azimuth), np.cos(zenith)], axis=-1)


def array_response(panel: AntennaPanel, azimuth, zenith) -> np.ndarray:
    """Per-element phase terms exp(j 2pi <r, d>/lambda), shape (..., size)."""
    r = unit_vector(azimuth, zenith)
    return np.exp(2j * np.pi * (r @ panel.positions().T))


def element_gain(panel: AntennaPanel, azimuth, zenith):
    """Element field pattern for global directions (bearing removed)."""
    return radiation_pattern(zenith, np.asarray(azimuth) - panel.bearing, panel.pattern)


def steering_vector(azimuth: float, zenith: float, panel: AntennaPanel) -> np.ndarray:
    """Unit-norm progressive-phase weights matched to a global direction."""
    return array_response(panel, azimuth, zenith) / np.sqrt(panel.size)


def sector_azimuth(xi: int, panel: AntennaPanel) -> float:
    """Global boresight azimuth of sector ``xi`` (1-based).

    Sector 1 is the counter-clockwise-most slice of the panel field of view
    (north-east for an east-facing panel); sectors proceed clockwise.
    """
    n = panel.n_sectors
    if not 1 <= xi <= n:
        raise IndexError(f"sector {xi} out of range 1..{n}")
    width = panel.fov / n
    return panel.bearing + panel.fov / 2 - (xi - 0.5) * width


def sector_vector(xi: int, panel: AntennaPanel) -> np.ndarray:
    """Codebook entry for sector ``xi``; elevation pinned to the horizon."""
    return steering_vector(sector_azimuth(xi, panel), np.pi / 2, panel)


def codebook(panel: AntennaPanel) -> np.ndarray:
    """All sector vectors stacked, shape (n_sectors, size)."""
    return np.stack([sector_vector(xi, panel) for xi in range(1, panel.n_sectors + 1)])
