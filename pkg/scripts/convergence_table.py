#!/usr/bin/env python3
"""Print the EM-vs-VoC discrepancy table over a dyadic ladder of step sizes.

    python scripts/convergence_table.py configs/canonical.yaml
    python scripts/convergence_table.py configs/canonical.yaml --paths 64 --t-max 10
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from nicholson import convergence_study, load_config, validate_model


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--paths", type=int, default=32)
    ap.add_argument("--t-max", type=float, default=10.0, dest="t_max")
    ap.add_argument("--dts", type=float, nargs="+", default=[1e-2, 5e-3, 2.5e-3])
    args = ap.parse_args(argv)

    cfg = load_config(args.config)
    model = validate_model(cfg.model)
    sim = replace(cfg.simulation, n_paths=args.paths, horizon=args.t_max, dt=args.dts[0])
    rows = convergence_study(model, sim, args.dts)

    print(f"{'dt':>12} {'mean max |em - voc|':>22} {'ratio':>8}")
    prev = None
    for r in rows:
        ratio = "" if prev is None else f"{prev / r.mean_max_diff:8.3f}"
        print(f"{r.dt:>12g} {r.mean_max_diff:>22.6g} {ratio}")
        prev = r.mean_max_diff
    return 0


if __name__ == "__main__":
    sys.exit(run())
