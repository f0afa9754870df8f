"""Convergence of damped Newton on the associator equation.

Runs the linear-boundary fixture and the perturbed flat-boundary fixture on
a list of grids and prints the residual trace, wall time and the
frame-associator check for each run.
"""

import argparse
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from g2kit import associator_pde as A


@dataclass
class StudyConfig:
    grids: list = field(default_factory=lambda: [9, 12, 16, 17])
    seed: int = 0
    beta_scale: float = 0.01
    tol: float = 1e-10


def one(state, pert, tol):
    t0 = time.perf_counter()
    res = A.newton_solve(state, pert, tol=tol)
    dt = time.perf_counter() - t0
    oracle = float(np.abs(A.frame_associator(res.state, pert)[..., 3:]).max())
    return {
        "converged": res.converged,
        "message": res.message,
        "trace": [r for _, r, _ in res.trace],
        "seconds": round(dt, 2),
        "frame_associator": oracle,
    }


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--grids", type=int, nargs="+", default=StudyConfig().grids)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta-scale", type=float, default=0.01)
    a = p.parse_args()
    cfg = StudyConfig(a.grids, a.seed, a.beta_scale)
    M = A.associative_linear_map(np.random.default_rng(cfg.seed))
    for m in cfg.grids:
        lin = A.GraphState.from_function(m, lambda X: X @ M.T, interior=0.0)
        print(json.dumps({"fixture": "linear", "m": m, **one(lin, None, cfg.tol)}))
        flat = A.GraphState(np.zeros((m, m, m, 4)))
        pert = A.closed_perturbation(cfg.beta_scale)
        print(json.dumps({"fixture": "perturbed", "m": m, **one(flat, pert, cfg.tol)}))


if __name__ == "__main__":
    main()
