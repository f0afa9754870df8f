"""Sweep the first-order symbol of the perturbed SL system over unit covectors.

Reports the smallest singular value on the flat Calabi-Yau model and the
largest entrywise gap between the R^6 and R x R^6 readings of the symbol.
"""

import argparse
import json
from dataclasses import asdict, dataclass

from g2kit.cli import symbol_sweep


@dataclass
class SweepConfig:
    count: int = 5000
    seed: int = 0


def main():
    p = argparse.ArgumentParser(description=__doc__)
    for name, val in asdict(SweepConfig()).items():
        p.add_argument(f"--{name}", type=type(val), default=val)
    cfg = SweepConfig(**vars(p.parse_args()))
    smin, gap = symbol_sweep(cfg.count, cfg.seed)
    print(json.dumps({"config": asdict(cfg), "min_singular_value": smin, "dim6_dim7_max_diff": gap}, sort_keys=True))


if __name__ == "__main__":
    main()
