"""Cross-correlated large-scale parameters (delay/angular spreads, K-factor, SF)."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .tables import LSP_ORDER, LspTable, correlation_matrix, raw_tables

log = logging.getLogger(__name__)

ASA_CAP = 104.0
ASD_CAP = 104.0
ZSA_CAP = 52.0
ZSD_CAP = 52.0

EIG_FLOOR = 1e-6
SQRT_FILE = "data/corr_sqrt.json"


def repair_correlation(c: np.ndarray) -> np.ndarray:
    """Clip eigenvalues at EIG_FLOOR and renormalise the diagonal to one."""
    w, v = np.linalg.eigh(c)
    if w.min() >= EIG_FLOOR:
        return c
    log.info("correlation table not positive definite (min eig %.3g); clipping", w.min())
    fixed = (v * np.maximum(w, EIG_FLOOR)) @ v.T
    d = np.sqrt(np.diag(fixed))
    fixed = fixed / np.outer(d, d)
    return (fixed + fixed.T) / 2


def compute_correlation_sqrt(c: np.ndarray) -> np.ndarray:
    """Lower-triangular M with M @ M.T equal to the (repaired) correlation matrix."""
    return np.linalg.cholesky(repair_correlation(np.asarray(c, dtype=float)))


def build_all_sqrt() -> dict:
    out = {}
    for scen, conds in raw_tables()["tables"].items():
        for cond in conds:
            m = compute_correlation_sqrt(correlation_matrix_by_key(scen, cond))
            out[f"{scen}/{cond}"] = m.tolist()
    return out


def correlation_matrix_by_key(scen_key: str, cond: str) -> np.ndarray:
    scen = {"InH": "InOO"}.get(scen_key, scen_key)
    return correlation_matrix(scen, cond)


def write_sqrt_file(path: Path) -> None:
    data = {"version": raw_tables()["version"], "order": list(LSP_ORDER), "factors": build_all_sqrt()}
    path.write_text(json.dumps(data, indent=1) + "\n")


@lru_cache(maxsize=None)
def _embedded() -> dict:
    try:
        with resources.files("mmwave3gpp").joinpath(SQRT_FILE).open() as fh:
            return json.load(fh)["factors"]
    except FileNotFoundError:
        return {}


def correlation_sqrt(scenario, condition: str) -> np.ndarray:
    """Precomputed square-root factor of the LSP cross-correlation matrix."""
    from .scenario import Scenario

    key = f"{Scenario(scenario).table_key}/{condition}"
    factors = _embedded()
    if key in factors:
        return np.asarray(factors[key])
    if condition not in raw_tables()["tables"][Scenario(scenario).table_key]:
        raise KeyError(f"no correlation table for {key}")
    return compute_correlation_sqrt(correlation_matrix(scenario, condition))


@dataclass(frozen=True)
class LspSet:
    ds: float  # s
    asa: float  # deg
    asd: float
    zsa: float
    zsd: float
    k_db: float  # -inf when the link has no Ricean component
    sf: float  # dB
    normals: tuple  # correlated standard normals in LSP_ORDER

    @property
    def k_r(self) -> float:
        return 0.0 if np.isneginf(self.k_db) else float(10.0 ** (self.k_db / 10.0))


def generate_lsps(table: LspTable, factor: np.ndarray, rng: np.random.Generator) -> LspSet:
    z = factor @ rng.standard_normal(len(LSP_ORDER))
    g = dict(zip(LSP_ORDER, z))

    def lognormal(name):
        return 10.0 ** (table.mu[name] + table.sigma[name] * g[name])

    k_db = table.k_mu + table.k_sigma * g["K"] if table.has_k else -np.inf
    return LspSet(
        ds=float(lognormal("DS")),
        asa=float(min(lognormal("ASA"), ASA_CAP)),
        asd=float(min(lognormal("ASD"), ASD_CAP)),
        zsa=float(min(lognormal("ZSA"), ZSA_CAP)),
        zsd=float(min(lognormal("ZSD"), ZSD_CAP)),
        k_db=float(k_db),
        sf=float(table.sf_sigma * g["SF"]),
        normals=tuple(float(x) for x in z),
    )
