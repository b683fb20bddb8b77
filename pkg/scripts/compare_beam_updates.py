"""Wideband SINR of the walking rural UT with tracked and with frozen beams.

    python3 scripts/compare_beam_updates.py [--config scripts/configs/fig5.cfg] [--out out/beams.csv]

Writes one row per tick with both traces and prints the gap at the end.
"""

import argparse
import csv
import dataclasses
from pathlib import Path

import numpy as np

from mmwave3gpp.cli import simulate
from mmwave3gpp.config import load_config, validate
from mmwave3gpp.engine import BeamUpdate


def wideband(cfg):
    return [(t, samples[0].wideband_db) for t, samples, _ in simulate(cfg)]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="scripts/configs/fig5.cfg")
    p.add_argument("--out", default="out/beams.csv")
    p.add_argument("--seed", type=int)
    args = p.parse_args()

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    validate(cfg)
    tracked = wideband(dataclasses.replace(cfg, bf_update=BeamUpdate.on_change))
    frozen = wideband(dataclasses.replace(cfg, bf_update=BeamUpdate.frozen))

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_s", "tracked_sinr_db", "frozen_sinr_db"])
        for (t, a), (_, b) in zip(tracked, frozen):
            w.writerow([f"{t:.10g}", f"{a:.10g}", f"{b:.10g}"])

    a = np.array([x for _, x in tracked])
    b = np.array([x for _, x in frozen])
    print(f"tracked: start {a[0]:.1f} dB, end {a[-1]:.1f} dB, largest step {np.max(np.abs(np.diff(a))):.2f} dB")
    print(f"frozen:  start {b[0]:.1f} dB, end {b[-1]:.1f} dB")
    print(f"gap at t = {tracked[-1][0]:g} s: {a[-1] - b[-1]:.1f} dB -> {out}")


if __name__ == "__main__":
    main()
