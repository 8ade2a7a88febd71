"""Assemble the stage-doubling realization of a measure and print its norm budget and power profile."""
import argparse
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from uttoeplitz.indlimit import MeasureSpec, power_norm_profile, realize_measure, uniform_measure
from uttoeplitz.toeplitz import operator_norm


@dataclass
class IndlimitConfig:
    measure: Optional[str] = None
    J: int = 6
    n1: Optional[int] = None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--measure", help="measure JSON; uniform on [-1/2, 1/2] if omitted")
    ap.add_argument("--J", type=int, default=IndlimitConfig.J)
    ap.add_argument("--n1", type=int)
    cfg = IndlimitConfig(**vars(ap.parse_args(argv)))

    measure = MeasureSpec.load(cfg.measure) if cfg.measure else uniform_measure()
    approx, asm = realize_measure(measure, cfg.J, cfg.n1)
    z = asm.matrix()
    print(f"n1={approx.n1} J={cfg.J} N={asm.N}")
    for j, (size, sup, nrm, b) in enumerate(zip(asm.plan.sizes, asm.increment_sups, asm.stage_norms, asm.stage_bounds()), 1):
        print(f"stage {j}: size {size:5d}  ||a_j|| {sup:.6f}  ||T_j|| {nrm:.6f}  bound {b:.6f}")
    print(f"||z|| = {operator_norm(z):.6f}  budget {asm.norm_budget:.6f}")
    prof = power_norm_profile(z, asm.N)
    marks = sorted({1, 2, 4, asm.N // 4, asm.N // 2, asm.N - 1, asm.N} - {0})
    print("profile " + "  ".join(f"m={m}: {prof[m - 1]:.4g}" for m in marks))
    print(f"z^N == 0: {not np.linalg.matrix_power(z, asm.N).any()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
