"""Batch figure rendering for cooccur report CSVs."""

from .render import render
from .spec import KINDS, FigureError, FigureSpec, load_spec

__version__ = "0.1.0"

__all__ = ["FigureError", "FigureSpec", "KINDS", "load_spec", "render"]
