"""Mixture density of the current state, evaluated on a regular 2-D grid."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedExport
from .model import covariance
from .state import GeneratorState


def mixture_density(state: GeneratorState, points: np.ndarray) -> np.ndarray:
    """Weight-normalized sum of component Gaussian densities at ``points`` (n, d)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = state.weights / state.weights.sum()
    total = np.zeros(len(points))
    d = state.d
    for w, dgc in zip(weights, state.dgcs):
        cov = covariance(dgc)
        inv = np.linalg.inv(cov)
        norm = 1.0 / math.sqrt((2.0 * math.pi) ** d * np.linalg.det(cov))
        diff = points - dgc.center
        total += w * norm * np.exp(-0.5 * np.einsum("ij,jk,ik->i", diff, inv, diff))
    return total


@dataclass(frozen=True)
class DensityGrid:
    x: np.ndarray
    y: np.ndarray
    density: np.ndarray  # shape (len(y), len(x))

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.y[1] - self.y[0]))

    def rows(self):
        """``(x1, x2, density)`` triples in row-major order (y outer)."""
        for iy, yv in enumerate(self.y):
            for ix, xv in enumerate(self.x):
                yield float(xv), float(yv), float(self.density[iy, ix])


def emit_density_grid(state: GeneratorState, resolution: int = 101,
                      lo: np.ndarray | None = None, hi: np.ndarray | None = None) -> DensityGrid:
    """Density on a ``resolution x resolution`` grid spanning ``[lo, hi]``.

    Defaults to the current data bounds. Only defined for two variables.
    """
    if state.d != 2:
        raise UnsupportedExport(f"density grids need d = 2, the state has d = {state.d}")
    if resolution < 2:
        raise UnsupportedExport("resolution must be >= 2")
    lo = state.lb if lo is None else np.asarray(lo, dtype=float)
    hi = state.ub if hi is None else np.asarray(hi, dtype=float)
    x = np.linspace(lo[0], hi[0], resolution)
    y = np.linspace(lo[1], hi[1], resolution)
    gx, gy = np.meshgrid(x, y)
    dens = mixture_density(state, np.column_stack([gx.ravel(), gy.ravel()]))
    return DensityGrid(x, y, dens.reshape(gy.shape))
