"""Standalone figure rendering for arctomo output files."""

from .readers import read_field, read_measurement, read_section
from .render import plot_heatmap, plot_measurement_rose, plot_section, rose_curves

__version__ = "0.1.0"
