"""Dense-sampling oracle for the taming ratio of phi0 + eps dx123 against psi0.

Samples associative frames in chunks (frames are drawn per index, so chunking
does not change the set) and prints the minimum ratio with its plane.
"""

import argparse
import json
from dataclasses import asdict, dataclass

import numpy as np

from g2kit import g2, models
from g2kit.exterior import parse_form


@dataclass
class OracleConfig:
    samples: int = 1_000_000
    seed: int = 0
    eps: float = 0.01
    chunk: int = 50_000


def run(cfg: OracleConfig) -> dict:
    st = g2.metric_from_psi(models.psi0())
    phi_p = models.phi0() + cfg.eps * parse_form("dx123", dim=7)
    T = phi_p.tensor()
    best, best_idx = np.inf, -1
    g = st.g
    for start in range(0, cfg.samples, cfg.chunk):
        stop = min(start + cfg.chunk, cfg.samples)
        frames = np.empty((stop - start, 3, 7))
        for k, n in enumerate(range(start, stop)):
            attempt = 0
            while True:
                pair = g2._g_orthonormal_pair(np.random.default_rng([cfg.seed, n, attempt]), g)
                if pair is not None:
                    break
                attempt += 1
            frames[k, 0], frames[k, 1] = pair
        frames[:, 2] = st.cross(frames[:, 0], frames[:, 1])
        r = np.einsum("abc,na,nb,nc->n", T, frames[:, 0], frames[:, 1], frames[:, 2])
        k = int(np.argmin(r))
        if r[k] < best:
            best, best_idx = float(r[k]), start + k
    return {"config": asdict(cfg), "min_ratio": best, "argmin_index": best_idx}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    for name, val in asdict(OracleConfig()).items():
        p.add_argument(f"--{name}", type=type(val), default=val)
    cfg = OracleConfig(**vars(p.parse_args()))
    print(json.dumps(run(cfg), sort_keys=True))


if __name__ == "__main__":
    main()
