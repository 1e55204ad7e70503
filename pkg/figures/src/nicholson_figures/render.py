"""Render simulation CSVs to raster images.

The plotting layer consumes CSV files only and never recomputes simulation
quantities. Three plot kinds, all at a fixed 1200x800 geometry so identical
inputs give identical image bytes:

* ``trajectory``: population over time with the active regime drawn as
  background color bands (input header ``t,x,regime``).
* ``lyapunov``: log X(t)/t with a zero reference line (``t,log_x_over_t``).
* ``decay``: plain population path (``t,x``).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

WIDTH_PX = 1200
HEIGHT_PX = 800
DPI = 100

EXPECTED_HEADERS = {
    "trajectory": "t,x,regime",
    "lyapunov": "t,log_x_over_t",
    "decay": "t,x",
}


class FigureDataError(Exception):
    """Missing or malformed input CSV; the message names the file and line."""


@dataclass(frozen=True)
class FigureJob:
    kind: str
    inputs: tuple[str, ...]
    output: str
    xlim: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.kind not in EXPECTED_HEADERS:
            raise ValueError(f"unknown plot kind {self.kind!r}; expected one of {sorted(EXPECTED_HEADERS)}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


def load_columns(path: str, expected_header: str) -> np.ndarray:
    """Read a CSV with the exact expected header; returns a (rows, cols) array."""
    p = Path(path)
    if not p.exists():
        raise FigureDataError(f"{path}: file not found")
    with open(p, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != expected_header:
            raise FigureDataError(
                f"{path}:1: expected header {expected_header!r}, found {header!r}"
            )
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(expected_header.split(",")):
                raise FigureDataError(f"{path}:{lineno}: expected {expected_header}, found {line!r}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise FigureDataError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
    if not rows:
        raise FigureDataError(f"{path}: no data rows after the header")
    return np.array(rows)


def _new_figure():
    fig, ax = plt.subplots(figsize=(WIDTH_PX / DPI, HEIGHT_PX / DPI), dpi=DPI)
    return fig, ax


def _regime_bands(ax, t: np.ndarray, regime: np.ndarray) -> None:
    """Shade constant-regime runs; regimes are small positive integers."""
    change = np.nonzero(np.diff(regime) != 0)[0]
    starts = np.concatenate(([0], change + 1))
    ends = np.concatenate((change + 1, [t.size - 1]))
    for s, e in zip(starts, ends):
        color = f"C{int(regime[s]) % 10}"
        ax.axvspan(t[s], t[min(e, t.size - 1)], color=color, alpha=0.12, linewidth=0)


def render(job: FigureJob):
    """Validate inputs, draw, and write the image; returns the figure.

    Nothing is written if any input fails validation.
    """
    data = load_columns(job.inputs[0], EXPECTED_HEADERS[job.kind])

    fig, ax = _new_figure()
    try:
        if job.kind == "trajectory":
            _regime_bands(ax, data[:, 0], data[:, 2])
            ax.plot(data[:, 0], data[:, 1], color="black", linewidth=0.7)
            ax.set_ylabel("X(t)")
        elif job.kind == "lyapunov":
            ax.plot(data[:, 0], data[:, 1], color="C0", linewidth=0.8)
            ax.axhline(0.0, color="red", linewidth=0.8)
            ax.set_ylabel("log X(t) / t")
        else:
            ax.plot(data[:, 0], data[:, 1], color="C0", linewidth=0.8)
            ax.set_ylabel("X(t)")
        ax.set_xlabel("t")
        if job.xlim is not None:
            ax.set_xlim(job.xlim[0], job.xlim[1])
        out = Path(job.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, format="png")
    except BaseException:
        plt.close(fig)
        raise
    return fig
