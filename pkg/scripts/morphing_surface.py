"""Photon click surface over (phi, alpha), exact and Monte Carlo.

    python3 scripts/morphing_surface.py --shots 1000000 --out morphing.csv
"""
import argparse
import math
from dataclasses import dataclass

import numpy as np

from qcontrol import delayed_choice as dc
from qcontrol.cli import cell_rng, write_csv
from qcontrol.core import sample_counts


@dataclass
class SurfaceConfig:
    n_phi: int = 128
    alpha_step: float = math.pi / 8
    shots: int = 0
    seed: int = 0
    out: str = "morphing_surface.csv"


def run(cfg: SurfaceConfig):
    phis = np.arange(cfg.n_phi) * 2 * math.pi / cfg.n_phi
    alphas = np.arange(-4, 5) * cfg.alpha_step
    rows, worst_sigma = [], 0.0
    for ia, alpha in enumerate(alphas):
        for ip, phi in enumerate(phis):
            p = float(dc.intensity(phi, alpha))
            row = [phi, alpha, p]
            if cfg.shots:
                k = sample_counts(dc.qdc_state(phi, alpha), [dc.PHOTON], cfg.shots, cell_rng(cfg.seed, ia, ip))[1]
                emp = k / cfg.shots
                sd = math.sqrt(p * (1 - p) / cfg.shots)
                if sd > 0:
                    worst_sigma = max(worst_sigma, abs(emp - p) / sd)
                row.append(emp)
            rows.append(row)
    header = ["phi", "alpha", "intensity"] + (["empirical"] if cfg.shots else [])
    with open(cfg.out, "w") as fh:
        fh.write(write_csv(header, rows))
    return len(rows), worst_sigma


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n-phi", type=int, default=128)
    ap.add_argument("--shots", type=int, default=0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="morphing_surface.csv")
    a = ap.parse_args()
    cfg = SurfaceConfig(n_phi=a.n_phi, shots=a.shots, seed=a.seed, out=a.out)
    n, worst = run(cfg)
    print(f"wrote {n} rows to {cfg.out}")
    if cfg.shots:
        print(f"largest Monte Carlo deviation: {worst:.2f} sigma")
    for alpha in (math.pi / 8, math.pi / 4, 3 * math.pi / 8):
        v = dc.visibility_summary(alpha)
        print(f"alpha={alpha:.4f}  V={v['unconditioned']:.6f}  sin^2(alpha)={math.sin(alpha) ** 2:.6f}")


if __name__ == "__main__":
    main()
