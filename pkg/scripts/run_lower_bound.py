"""Norm growth of the unrearranged balanced family against the log lower bound."""
import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from uttoeplitz.experiments import growth_slope, lowerbound_growth, rearrangement_gap


@dataclass
class GrowthConfig:
    sizes: list = field(default_factory=lambda: [2**k for k in range(1, 11)])
    slope_from: int = 64
    out: str = "results/lower_bound.csv"


def main(argv=None):
    cfg = GrowthConfig()
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=lambda s: [int(v) for v in s.split(",")], default=cfg.sizes)
    ap.add_argument("--slope-from", type=int, default=cfg.slope_from)
    ap.add_argument("--out", default=cfg.out)
    cfg = GrowthConfig(**vars(ap.parse_args(argv)))

    g = lowerbound_growth(cfg.sizes)
    Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
    rows = list(g.rows())
    with open(cfg.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print(f"n={r['n']:5d}  ||T|| = {r['norm']:.6f}  bound {r['lower_bound']:.6f}")

    # slope over every window starting at slope_from or later
    tail = [(n, v) for n, v in zip(g.sizes, g.norms) if n >= cfg.slope_from]
    for i in range(len(tail) - 1):
        ns, vs = zip(*tail[i:])
        print(f"slope over n={ns[0]}..{ns[-1]}: {growth_slope(ns, vs):.5f}  (1/pi = {1 / math.pi:.5f})")
    raw, greedy = rearrangement_gap(max(cfg.sizes))
    print(f"n={max(cfg.sizes)}: unrearranged {raw:.6f}, greedy {greedy:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
