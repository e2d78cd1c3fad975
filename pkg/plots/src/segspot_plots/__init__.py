"""Figure rendering for segspot report files."""

from .render import FIGURE_KINDS, PlotJob, render
from .schema import SchemaError

__version__ = "0.1.0"
