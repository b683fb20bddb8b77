"""Geometry-based stochastic channel model for 6-100 GHz links with analog
beamforming, spatially consistent updates and cluster blockage."""

from .antenna import AntennaPanel, bs_panel, ut_panel
from .scenario import Scenario

__all__ = ["AntennaPanel", "Scenario", "bs_panel", "ut_panel"]
