"""Publication-style figures rendered from experiment CSV logs.

The renderer is a pure function of its input files: it never touches the
simulation code, and the only statistics it computes are the displayed
TV/slope annotations, recomputed from the CSV columns themselves.
"""

from .figures import (
    KINDS,
    ConfigError,
    EmptyInput,
    FigureSpec,
    MissingColumn,
    PlotError,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "ConfigError",
    "EmptyInput",
    "FigureSpec",
    "MissingColumn",
    "PlotError",
    "render",
]
