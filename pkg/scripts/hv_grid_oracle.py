"""Brute-force grid search for adequate hidden-variable models.

Every adequate grid point is attributed to the solution families found by the
case split; anything left over is printed.

    python3 scripts/hv_grid_oracle.py --phi 1.0471975511965976 --alpha 0.7853981633974483 --step 0.015625
"""
import argparse
import math
import time
from dataclasses import dataclass

import numpy as np

from qcontrol import hv_models as hv


@dataclass
class OracleConfig:
    phi: float = math.pi / 3
    alpha: float = math.pi / 4
    step: float = 1 / 64
    classical: bool = False
    workers: int = 1


def run(cfg: OracleConfig) -> int:
    families = hv.enumerate_solution_families(cfg.phi, cfg.alpha, classical=cfg.classical, allow_degenerate=True)
    t0 = time.perf_counter()
    pts = hv.grid_oracle(cfg.phi, cfg.alpha, step=cfg.step, classical=cfg.classical, workers=cfg.workers)
    dt = time.perf_counter() - t0
    print(f"{len(pts)} adequate grid points in {dt:.2f}s (step {cfg.step:g})")
    for fam in families:
        n = int(fam.contains(pts).sum()) if len(pts) else 0
        print(f"  {fam.label:<28} {fam.interpretation:<18} free={','.join(fam.free) or '-':<6} points={n}")
    outside = pts[~hv.in_any_family(pts, families)] if len(pts) else pts
    print(f"outside every family: {len(outside)}")
    for p in outside[:10]:
        print("   ", dict(zip(hv.VARS, np.round(p, 6))))
    return len(outside)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--phi", type=float, default=math.pi / 3)
    ap.add_argument("--alpha", type=float, default=math.pi / 4)
    ap.add_argument("--step", type=float, default=1 / 64)
    ap.add_argument("--classical", action="store_true")
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    raise SystemExit(1 if run(OracleConfig(a.phi, a.alpha, a.step, a.classical, a.workers)) else 0)


if __name__ == "__main__":
    main()
