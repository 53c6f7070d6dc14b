"""CHSH value of the quantum-controlled experiment while the ancilla biases vary.

The conditioned correlators do not depend on the bias as long as every branch
occurs; only the branch weights change.
"""
import argparse
import math
from dataclasses import dataclass

import numpy as np

from qcontrol import chsh


@dataclass
class ScanConfig:
    n_bias: int = 5
    settings: tuple = chsh.OPTIMAL_SETTINGS


def run(cfg: ScanConfig):
    biases = np.linspace(0, math.pi / 2, cfg.n_bias)
    for ba in biases:
        for bb in biases:
            r = chsh.quantum_controlled_chsh(*cfg.settings, bias_a=ba, bias_b=bb)
            w = min(r.branch_probabilities.values())
            s = "undefined" if r.S is None else f"{r.S:.10f}"
            print(f"bias_a={ba:.4f} bias_b={bb:.4f}  min branch weight={w:.4f}  S={s}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n-bias", type=int, default=5)
    run(ScanConfig(n_bias=ap.parse_args().n_bias))


if __name__ == "__main__":
    main()
