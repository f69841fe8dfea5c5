"""Exact simulator and verification harness for D4 topological order
on a kagome torus."""

from .lattice import (
    Color,
    ColoringImpossible,
    KagomeTorus,
    NoPath,
    Path,
    SizeTooSmall,
    build_torus,
)

__version__ = "0.1.0"

__all__ = [
    "Color",
    "ColoringImpossible",
    "KagomeTorus",
    "NoPath",
    "Path",
    "SizeTooSmall",
    "build_torus",
    "__version__",
]
