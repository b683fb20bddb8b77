"""Blocked-cluster statistics for several non-self blocker counts.

    python3 scripts/blockage_counts.py [--config scripts/configs/fig6.cfg] [--k 4 10 20 40] [--seeds 20]

For each K the shipped blockage example is rerun over a range of seeds and
the mean number of self-blocked (>= 30 dB) and partially blocked clusters
per tick is reported.
"""

import argparse
import dataclasses

import numpy as np

from mmwave3gpp.cli import simulate
from mmwave3gpp.config import load_config, validate
from mmwave3gpp.dynamics import SELF_BLOCK_DB


def counts(cfg):
    full, partial, ticks = 0, 0, 0
    for _, _, world in simulate(cfg):
        att = world.serving_link(0).realization.blockage_db
        full += int(np.sum(att >= SELF_BLOCK_DB))
        partial += int(np.sum((att > 0) & (att < SELF_BLOCK_DB)))
        ticks += 1
    return full / ticks, partial / ticks


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default="scripts/configs/fig6.cfg")
    p.add_argument("--k", type=int, nargs="+", default=[4, 10, 20, 40])
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--duration", type=float, default=10.0)
    args = p.parse_args()

    base = load_config(args.config)
    print("K   >=30 dB per tick   partial per tick")
    for k in args.k:
        rows = []
        for seed in range(args.seeds):
            cfg = dataclasses.replace(base, n_blockers=k, seed=seed, duration=min(args.duration, base.duration))
            validate(cfg)
            rows.append(counts(cfg))
        full, partial = np.mean(rows, axis=0)
        print(f"{k:<3d} {full:18.2f} {partial:18.2f}")


if __name__ == "__main__":
    main()
