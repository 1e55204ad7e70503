"""Fixtures that produce real figure-data CSVs through the simulator CLI.

The plotting package consumes the simulator only through its public CSV
interface, so these fixtures shell out to ``python -m nicholson.cli``.
"""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

CANONICAL_FIGURES_CONFIG = """\
model:
  regimes:
    - {{delta: 2.0, p: 4.0, tau: 1.0, a: 0.4, sigma: 1.5}}
    - {{delta: 1.0, p: 2.0, tau: 1.0, a: 0.2, sigma: 2.0}}
    - {{delta: 4.0, p: 8.0, tau: 1.0, a: 0.3, sigma: 3.0}}
  q_matrix:
    - [-10.0, 4.0, 6.0]
    - [2.0, -3.0, 1.0]
    - [3.0, 5.0, -8.0]
  history: {{constant: 1.0}}
  initial_regime: 3
simulation:
  dt: 1.0e-2
  t_max: {t_max}
  n_paths: 1
  seed: 7
  scheme: voc
output:
  directory: {out_dir}
"""

DECAY_FIGURES_CONFIG = """\
model:
  regimes:
    - {{delta: 2.0, p: 0.2, tau: 1.0, a: 0.4, sigma: 1.5}}
    - {{delta: 1.0, p: 0.2, tau: 1.0, a: 0.4, sigma: 1.0}}
    - {{delta: 4.0, p: 0.4, tau: 1.0, a: 0.4, sigma: 2.5}}
  q_matrix:
    - [-10.0, 4.0, 6.0]
    - [2.0, -3.0, 1.0]
    - [3.0, 5.0, -8.0]
  history: {{constant: 1.0}}
  initial_regime: 3
simulation:
  dt: 1.0e-3
  t_max: 100.0
  n_paths: 1
  seed: 7
  scheme: voc
  vartheta: 0.42
output:
  directory: {out_dir}
"""


def run_simulator_figures(config_text: str, workdir: Path) -> Path:
    out_dir = workdir / "data"
    cfg = workdir / "config.yaml"
    cfg.write_text(config_text.format(out_dir=out_dir, t_max=1000.0))
    proc = subprocess.run(
        [sys.executable, "-m", "nicholson.cli", "figures", "--config", str(cfg)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, f"simulator CLI failed: {proc.stderr}"
    return out_dir


@pytest.fixture(scope="session")
def canonical_csvs(tmp_path_factory) -> Path:
    return run_simulator_figures(CANONICAL_FIGURES_CONFIG, tmp_path_factory.mktemp("canonical"))


@pytest.fixture(scope="session")
def decay_csvs(tmp_path_factory) -> Path:
    return run_simulator_figures(DECAY_FIGURES_CONFIG, tmp_path_factory.mktemp("decay"))
