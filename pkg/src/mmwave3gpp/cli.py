"""Command-line driver: pathloss sweeps, time-stepped runs and their artifacts."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import platform
import sys
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from .config import ConfigError, SimConfig, build_world, load_config, serialize_config, sweep_frequency, validate
from .propagation import (
    LosState,
    init_shadowing,
    o2i_material_loss,
    pathloss,
    select_o2i_model,
    shadow_corr_distance,
    shadow_sigma,
    shadowing_update,
)
from .scenario import Scenario, scenario_params
from .tables import raw_tables

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

SWEEP_CSV = "pathloss_sweep.csv"
SINR_CSV = "sinr.csv"
WIDEBAND_CSV = "sinr_wideband.csv"
CLUSTER_CSV = "cluster_power.csv"
MANIFEST = "manifest.json"

# outdoor UT height and mean indoor distance used for the sweep's O2I column
SWEEP_H_UT = 1.5
SWEEP_H_UT_INDOOR = 1.0


def _num(x: float) -> str:
    return format(float(x), ".10g")


# ---------------------------------------------------------------------------
# pathloss sweep


def sweep_bounds(scenario: Scenario, h_bs: float, h_ut: float) -> tuple[float, float]:
    """3D distance range of the sweep: scenario minimum up to 1 km (100 m indoors)."""
    sp = scenario_params(scenario)
    if Scenario(scenario).indoor:
        return 1.0, 100.0
    return float(np.hypot(sp.d2d_min_drop, h_bs - h_ut)), 1000.0


def mean_indoor_distance(scenario: Scenario) -> float:
    # RMa draws U(0, 10); UMi/UMa the minimum of two U(0, 25)
    return 5.0 if Scenario(scenario) is Scenario.RMa else 25.0 / 3.0


def sweep_rows(cfg: SimConfig) -> list[dict]:
    scenarios = cfg.sweep_scenarios or (cfg.scenario,)
    rows = []
    for k, scen in enumerate(scenarios):
        scen = Scenario(scen)
        sp = scenario_params(scen)
        fc = sweep_frequency(cfg, scen)
        h_bs = sp.h_bs_default
        h_ut = SWEEP_H_UT_INDOOR if scen.indoor else SWEEP_H_UT
        lo, hi = sweep_bounds(scen, h_bs, h_ut)
        d3 = np.logspace(np.log10(lo), np.log10(hi), cfg.sweep_points)
        d2 = np.sqrt(np.maximum(d3**2 - (h_bs - h_ut) ** 2, 0.0))
        rng = np.random.default_rng([cfg.seed, 1000 + k])
        states = {}
        for los in (LosState.LOS, LosState.NLOS):
            sigma = shadow_sigma(scen, los, fc, float(d2[0]), h_bs, h_ut, False, cfg.optional_nlos)
            states[los] = init_shadowing(sigma, shadow_corr_distance(scen, los, fc), (d2[0], 0.0, h_ut), rng)
        for a, b in zip(d2, d3):
            a = min(float(a), float(b))
            pl = {los: pathloss(scen, los, fc, a, float(b), h_bs, h_ut, cfg.optional_nlos) for los in states}
            sf = {los: 0.0 for los in states}
            if cfg.shadowing:
                for los in states:
                    states[los] = shadowing_update(states[los], (a, 0.0, h_ut), rng)
                    sf[los] = states[los].value
            o2i = ""
            if not scen.indoor:
                pen = o2i_material_loss(select_o2i_model(scen, "residential"), fc) + 0.5 * mean_indoor_distance(scen)
                o2i = _num(pl[LosState.NLOS] + pen)
            rows.append({
                "scenario": scen.value,
                "fc_hz": _num(fc),
                "d3d_m": _num(b),
                "d2d_m": _num(a),
                "los_db": _num(pl[LosState.LOS]),
                "nlos_db": _num(pl[LosState.NLOS]),
                "nlos_o2i_db": o2i,
                "los_shadowed_db": _num(pl[LosState.LOS] + sf[LosState.LOS]),
                "nlos_shadowed_db": _num(pl[LosState.NLOS] + sf[LosState.NLOS]),
            })
    return rows


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)


def sweep_pathloss(cfg: SimConfig, out: Path) -> Path:
    validate(cfg, need_nodes=False)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep_rows(cfg)
    header = list(rows[0].keys())
    path = out / SWEEP_CSV
    _write_csv(path, header, ([r[h] for h in header] for r in rows))
    return path


# ---------------------------------------------------------------------------
# time-stepped run


def tick_times(cfg: SimConfig) -> np.ndarray:
    n = int(np.floor(cfg.duration / cfg.tick + 1e-9))
    return np.round(np.arange(n + 1) * cfg.tick, 12)


def simulate(cfg: SimConfig):
    """Run the world over the configured duration.

    Yields (t, samples, world) after every tick.
    """
    world = build_world(cfg)
    for t in tick_times(cfg):
        yield float(t), world.tick(float(t)), world


def run(cfg: SimConfig, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    sweep_pathloss(cfg, out)
    sinr_rows, wide_rows, cluster_rows = [], [], []
    for t, samples, world in simulate(cfg):
        freqs = world.grid.fc + world.grid.offsets()
        for j, s in enumerate(samples):
            wide_rows.append((_num(t), s.ut, s.serving, _num(s.wideband_db)))
            for f, v in zip(freqs, s.sinr_db):
                sinr_rows.append((_num(t), s.ut, _num(f), _num(v)))
            r = world.serving_link(j).realization
            total = r.powers.sum()
            eff = r.effective_powers
            for n in range(r.n_clusters):
                cluster_rows.append((_num(t), s.ut, n, _num(r.delays[n] * 1e9), _num(eff[n] / total),
                                     _num(r.blockage_db[n])))
    _write_csv(out / SINR_CSV, ["t_s", "ut", "f_hz", "sinr_db"], sinr_rows)
    _write_csv(out / WIDEBAND_CSV, ["t_s", "ut", "serving_bs", "sinr_db"], wide_rows)
    _write_csv(out / CLUSTER_CSV, ["t_s", "ut", "cluster", "delay_ns", "power_fraction", "blockage_db"],
               cluster_rows)
    write_plot_scripts(out)
    return write_manifest(cfg, out)


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: SimConfig, out: Path) -> dict:
    text = serialize_config(cfg)
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "unknown"
    manifest = {
        "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "seed": cfg.seed,
        "versions": {
            "package": version,
            "tables": raw_tables()["version"],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "artifacts": {p.name: _sha(p) for p in sorted(out.iterdir()) if p.suffix in (".csv", ".py")},
        "config": text,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


_PLOTS = {
    "plot_pathloss.py": '''import csv, sys
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "{csv}")))
fig, ax = plt.subplots()
for scen in dict.fromkeys(r["scenario"] for r in rows):
    sub = [r for r in rows if r["scenario"] == scen]
    d = [float(r["d3d_m"]) for r in sub]
    for col, style in (("los_db", "-"), ("nlos_db", "--"), ("nlos_o2i_db", ":")):
        if sub[0][col]:
            ax.semilogx(d, [float(r[col]) for r in sub], style, label=f"{{scen}} {{col[:-3]}}")
ax.set_xlabel("3D distance [m]")
ax.set_ylabel("pathloss [dB]")
ax.legend(fontsize="small")
fig.savefig("pathloss.png", dpi=150)
''',
    "plot_sinr.py": '''import csv, sys
import matplotlib.pyplot as plt
import numpy as np

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "{csv}")))
ut = rows[0]["ut"]
rows = [r for r in rows if r["ut"] == ut]
ts = sorted({{float(r["t_s"]) for r in rows}})
fs = sorted({{float(r["f_hz"]) for r in rows}})
grid = np.array([float(r["sinr_db"]) for r in rows]).reshape(len(ts), len(fs))
fig, ax = plt.subplots()
mesh = ax.pcolormesh(np.array(fs) / 1e9, ts, grid, shading="auto")
fig.colorbar(mesh, label="SINR [dB]")
ax.set_xlabel("frequency [GHz]")
ax.set_ylabel("time [s]")
fig.savefig("sinr.png", dpi=150)
''',
    "plot_cluster_power.py": '''import csv, sys
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "{csv}")))
ut = rows[0]["ut"]
rows = [r for r in rows if r["ut"] == ut]
fig, ax = plt.subplots()
for c in sorted({{int(r["cluster"]) for r in rows}}):
    sub = [r for r in rows if int(r["cluster"]) == c]
    ax.plot([float(r["t_s"]) for r in sub], [float(r["power_fraction"]) for r in sub], label=f"cluster {{c}}")
ax.set_xlabel("time [s]")
ax.set_ylabel("power fraction")
ax.set_yscale("log")
ax.legend(fontsize="small", ncol=2)
fig.savefig("cluster_power.png", dpi=150)
''',
}


def write_plot_scripts(out: Path) -> None:
    targets = {"plot_pathloss.py": SWEEP_CSV, "plot_sinr.py": SINR_CSV, "plot_cluster_power.py": CLUSTER_CSV}
    for name, body in _PLOTS.items():
        (out / name).write_text(body.format(csv=targets[name]))


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmwave3gpp", description="mmWave GSCM link simulator")
    p.add_argument("mode", choices=("run", "sweep-pathloss", "validate-config"))
    p.add_argument("--config", required=True, help="scenario file")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, output=args.out)
        validate(cfg, need_nodes=args.mode == "run")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.output)
    try:
        if args.mode == "validate-config":
            print("ok")
        elif args.mode == "sweep-pathloss":
            path = sweep_pathloss(cfg, out)
            write_plot_scripts(out)
            print(path)
        else:
            run(cfg, out)
            print(out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("run failed", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK
