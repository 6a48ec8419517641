"""Heatmap panel rendering for lightcone-scan CSV grids."""

from .render import Grid, PanelSpec, build_figure, load_grid, render_heatmap

__version__ = "0.1.0"
