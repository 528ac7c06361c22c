"""Numerical verification of locally conformal almost Kähler geometry on coordinate charts."""

from __future__ import annotations

__version__ = "0.1.0"

from .chart import ChartManifold, load_manifold, parse_manifold, sample_points
from .errors import LcakError

__all__ = ["ChartManifold", "LcakError", "__version__", "load_manifold", "parse_manifold", "sample_points"]
