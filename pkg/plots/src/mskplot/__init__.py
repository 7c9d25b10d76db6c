"""Figure generation from sweep CSV files.

Pure file-in/file-out: all numbers come from the CSV (plus the optional
bisection-bracket sidecar JSON written next to it); nothing is recomputed.
"""

from .render import PlotJob, SchemaError, render

__all__ = ["PlotJob", "SchemaError", "render"]

__version__ = "0.1.0"
