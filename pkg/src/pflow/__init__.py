"""Regularised p-harmonic map heat flow on periodic grids into embedded targets,
with regular-ball certification, run monitors and a scenario harness."""

__version__ = "0.1.0"

from . import diagnostics, flow, geometry, target  # noqa: E402

__all__ = ["geometry", "target", "flow", "diagnostics", "__version__"]
