#!/usr/bin/env python3
"""End-to-end reproduction run for one configuration.

Computes the analytic bounds, runs the Monte Carlo ensemble, verifies every
bound, and emits the figure-data CSVs, all into the config's output
directory. Ensemble size and horizon can be trimmed for a quick look.

    python scripts/reproduce_report.py configs/canonical.yaml
    python scripts/reproduce_report.py configs/decay.yaml --paths 64 --t-max 50
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from nicholson.cli import main as cli


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--paths", type=int)
    ap.add_argument("--t-max", type=float, dest="t_max")
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    passthrough = ["--config", args.config]
    if args.paths is not None:
        passthrough += ["--paths", str(args.paths)]
    if args.out is not None:
        passthrough += ["--out", args.out]

    with tempfile.TemporaryDirectory() as td:
        if args.t_max is not None:
            # t_max has no CLI flag; rewrite the config into a temp copy.
            import yaml

            from nicholson import dump_config, load_config

            cfg = load_config(args.config)
            cfg = replace(cfg, simulation=replace(cfg.simulation, horizon=args.t_max))
            rewritten = Path(td) / "config.yaml"
            rewritten.write_text(yaml.safe_dump(dump_config(cfg)))
            passthrough[1] = str(rewritten)

        for command in ("bounds", "stationary", "verify", "figures"):
            code = cli([command] + passthrough)
            if code != 0:
                return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
