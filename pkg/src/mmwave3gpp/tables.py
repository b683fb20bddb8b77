"""Loader for the embedded fading-parameter tables (``data/lsp_tables.json``)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional

import numpy as np

# Order of the large-scale parameter vector used by the correlation factors.
LSP_ORDER = ("SF", "K", "DS", "ASD", "ASA", "ZSD", "ZSA")


@lru_cache(maxsize=None)
def raw_tables() -> dict:
    with resources.files("mmwave3gpp").joinpath("data/lsp_tables.json").open() as fh:
        return json.load(fh)


def _scenario_key(scenario) -> str:
    from .scenario import Scenario

    return Scenario(scenario).table_key


def conditions(scenario) -> tuple[str, ...]:
    return tuple(raw_tables()["tables"][_scenario_key(scenario)])


@dataclass(frozen=True)
class LspTable:
    scenario: str
    condition: str
    # log10 means / stds: DS in log10(s), angular spreads in log10(deg)
    mu: dict
    sigma: dict
    zod_offset: float  # degrees
    sf_sigma: float
    k_mu: Optional[float]
    k_sigma: Optional[float]
    r_tau: float
    n_clusters: int
    n_rays: int
    c_ds: float  # seconds
    c_asd: float
    c_asa: float
    c_zsa: float
    zeta: float
    corr: np.ndarray
    corr_dist: dict

    @property
    def has_k(self) -> bool:
        return self.k_mu is not None


def _freq_term(scenario_key: str, fc: float) -> float:
    spec = raw_tables()["freq_term"][scenario_key]
    f = max(fc / 1e9, spec["fc_min_ghz"])
    if spec["form"] == "log10_1p":
        return float(np.log10(1.0 + f))
    if spec["form"] == "log10":
        return float(np.log10(f))
    return 0.0


def _zsd(model: str, entry: dict, fc: float, d2d: float, h_bs: float, h_ut: float, fterm: float):
    """lgZSD mean and ZoD offset (degrees) for the geometry-dependent models."""
    d = d2d / 1000.0
    if model == "table":
        a, b = entry["lgZSD"]["mu"]
        return a * fterm + b, 0.0
    if model == "umi_los":
        return max(-0.21, -14.8 * d + 0.01 * abs(h_ut - h_bs) + 0.83), 0.0
    if model == "umi_nlos":
        mu = max(-0.5, -3.1 * d + 0.01 * max(h_ut - h_bs, 0.0) + 0.2)
        return mu, -(10.0 ** (-1.5 * np.log10(max(10.0, d2d)) + 3.3))
    if model == "uma_los":
        return max(-0.5, -2.1 * d - 0.01 * (h_ut - 1.5) + 0.75), 0.0
    if model == "uma_nlos":
        lf = np.log10(max(fc / 1e9, 6.0))
        mu = max(-0.5, -2.1 * d - 0.01 * (h_ut - 1.5) + 0.9)
        expo = (0.208 * lf - 0.782) * np.log10(max(25.0, d2d)) - 0.13 * lf + 2.03 - 0.07 * (h_ut - 1.5)
        return mu, (7.66 * lf - 5.96) - 10.0**expo
    if model == "rma_los":
        return max(-1.0, -0.17 * d - 0.01 * (h_ut - 1.5) + 0.22), 0.0
    if model == "rma_nlos":
        mu = max(-1.0, -0.19 * d - 0.01 * (h_ut - 1.5) + 0.28)
        off = np.arctan((35.0 - 3.5) / max(d2d, 1e-9)) - np.arctan((35.0 - 1.5) / max(d2d, 1e-9))
        return mu, float(np.rad2deg(off))
    raise KeyError(model)


def correlation_matrix(scenario, condition: str) -> np.ndarray:
    """Raw 7x7 LSP cross-correlation matrix in ``LSP_ORDER``."""
    entry = raw_tables()["tables"][_scenario_key(scenario)][condition]
    idx = {name: i for i, name in enumerate(LSP_ORDER)}
    c = np.eye(len(LSP_ORDER))
    for key, val in entry["corr"].items():
        a, b = key.split("_")
        c[idx[a], idx[b]] = c[idx[b], idx[a]] = val
    return c


def lsp_table(scenario, condition: str, fc: float, d2d: float = 100.0, h_bs: float = 10.0,
              h_ut: float = 1.5) -> LspTable:
    """Evaluate the table for one link (frequency in Hz, distances/heights in m)."""
    key = _scenario_key(scenario)
    raw = raw_tables()
    try:
        entry = raw["tables"][key][condition]
    except KeyError:
        raise KeyError(f"no parameter table for ({key}, {condition})") from None
    ft = _freq_term(key, fc)
    mu, sigma = {}, {}
    for name in ("DS", "ASD", "ASA", "ZSA", "ZSD"):
        e = entry["lg" + name]
        if "mu" in e:
            mu[name] = e["mu"][0] * ft + e["mu"][1]
        sigma[name] = e["sigma"][0] * ft + e["sigma"][1]
    mu["ZSD"], zod_offset = _zsd(entry["zsd_model"], entry, fc, d2d, h_bs, h_ut, ft)
    c_ds = entry["c_ds_ns"]
    if c_ds is None:
        c_ds = raw["c_ds_default_ns"]
    elif c_ds == "uma":
        c_ds = max(0.25, 6.5622 - 3.4084 * np.log10(max(fc / 1e9, 6.0)))
    return LspTable(
        scenario=key,
        condition=condition,
        mu=mu,
        sigma=sigma,
        zod_offset=float(zod_offset),
        sf_sigma=entry["sf_sigma"],
        k_mu=entry["k_mu"],
        k_sigma=entry["k_sigma"],
        r_tau=entry["r_tau"],
        n_clusters=entry["n_clusters"],
        n_rays=entry["n_rays"],
        c_ds=float(c_ds) * 1e-9,
        c_asd=entry["c_asd"],
        c_asa=entry["c_asa"],
        c_zsa=entry["c_zsa"],
        zeta=entry["zeta"],
        corr=correlation_matrix(scenario, condition),
        corr_dist=dict(entry["corr_dist"]),
    )


def ray_offsets() -> np.ndarray:
    return np.asarray(raw_tables()["ray_offsets"], dtype=float)


def c_phi_nlos(n: int) -> float:
    return raw_tables()["c_phi_nlos"][str(n)]


def c_theta_nlos(n: int) -> float:
    return raw_tables()["c_theta_nlos"][str(n)]


def subcluster_layout() -> tuple[list[list[int]], list[float]]:
    s = raw_tables()["subclusters"]
    return s["rays"], s["delay_factor"]
