"""Plot regeneration from simulation CSV outputs."""

from .render import EXPECTED_HEADERS, FigureDataError, FigureJob, load_columns, render

__all__ = ["EXPECTED_HEADERS", "FigureDataError", "FigureJob", "load_columns", "render"]
