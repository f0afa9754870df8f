"""Distance of the linearized associator operator's symbol from the identity.

For random quaternion fields of shrinking amplitude (and optionally a scaled
perturbation 4-form) prints max|df|, the symbol distance and their ratio
distance / max|df|^2.
"""

import argparse
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from g2kit import associator_pde as A


@dataclass
class SymbolConfig:
    grid: int = 7
    seed: int = 0
    samples: int = 32
    beta_scale: float = 0.0
    amplitudes: list = field(default_factory=lambda: [0.2, 0.1, 0.05, 0.02, 0.01, 0.005])


def run(cfg: SymbolConfig):
    rng = np.random.default_rng(cfg.seed)
    pert = A.closed_perturbation(cfg.beta_scale) if cfg.beta_scale else None
    rows = []
    for amp in cfg.amplitudes:
        f = amp * rng.standard_normal((cfg.grid,) * 3 + (4,))
        _, rep = A.linearized_L(A.GraphState(f), pert, cfg.samples, cfg.seed)
        rows.append({
            "amplitude": amp,
            "max_df": rep.max_df,
            "distance": rep.max_distance,
            "ratio_quadratic": rep.max_distance / rep.max_df ** 2,
            "min_sym_eig": rep.min_sym_eig,
        })
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--grid", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta-scale", type=float, default=0.0)
    a = p.parse_args()
    cfg = SymbolConfig(grid=a.grid, seed=a.seed, beta_scale=a.beta_scale)
    for row in run(cfg):
        print(json.dumps(row, sort_keys=True))


if __name__ == "__main__":
    main()
