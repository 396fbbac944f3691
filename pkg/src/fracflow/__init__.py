"""Solver library for the space-time fractional Allen-Cahn equation in 1D.

Caputo derivative of order alpha in time (convolution quadrature), integral
fractional Laplacian of order s in space (piecewise-linear finite elements),
with spectral Mittag-Leffler references, energy diagnostics and an experiment
harness.  CLI entry point: ``fracflow``.
"""

__version__ = "0.1.0"
