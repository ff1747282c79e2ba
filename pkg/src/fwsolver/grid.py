"""Uniform-grid sampled functions on a truncated line, with the norms,
quadrature, differentiation and interpolation the solver is built on.

Functions are sampled on ``x_i = -X + i*h`` and treated as zero outside
``[-X, X]``.  That truncation is only meaningful for data that decays at
the ends; constructors of *initial data* enforce it (see
:func:`fwsolver.lagrangian.initial_state`), ordinary grid functions do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import PchipInterpolator

__all__ = [
    "Grid",
    "GridFunction",
    "NormReport",
    "sup_norm",
    "derivative",
    "c1_norm",
    "holder_seminorm",
    "quadrature",
    "interpolate",
    "interpolate_many",
    "norm_report",
    "write_csv",
    "read_csv",
]

#: pairs examined exhaustively by holder_seminorm before it subsamples
PAIR_BUDGET = 4_000_000


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n_points`` nodes spanning ``[-half_width, half_width]``."""

    half_width: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError(f"need at least 3 grid points, got {self.n_points}")
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ValueError(f"half_width must be positive and finite, got {self.half_width}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @property
    def x(self) -> NDArray[np.float64]:
        return np.linspace(-self.half_width, self.half_width, self.n_points)


class GridFunction:
    """Real-valued function sampled on a :class:`Grid`.

    Thin wrapper around a float64 array; all values must be finite.
    Supports ``+``, ``-`` and scalar multiplication for convenience.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.n_points,):
            raise ValueError(
                f"values shape {values.shape} does not match grid with {grid.n_points} points"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid: Grid, f) -> "GridFunction":
        return cls(grid, np.asarray(f(grid.x), dtype=np.float64))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def __repr__(self):
        return (f"GridFunction(n={self.grid.n_points}, X={self.grid.half_width}, "
                f"sup={np.max(np.abs(self.values)):.3g})")


def _check_same_grid(f: GridFunction, g: GridFunction):
    if f.grid != g.grid:
        raise ValueError("grid functions live on different grids")


@dataclass(frozen=True)
class NormReport:
    """Bundle of the norms used by the well-posedness diagnostics."""

    c0: float
    c1: float
    holder_alpha: float
    holder_seminorm: float


def sup_norm(f: GridFunction) -> float:
    """max over the grid of ``|f|``."""
    return float(np.max(np.abs(f.values)))


def derivative(f: GridFunction) -> GridFunction:
    """Second-order finite-difference derivative on the same grid.

    Central differences at interior nodes, second-order one-sided
    stencils at the two endpoints.  Exact for affine data everywhere.
    """
    return GridFunction(f.grid, derivative_values(f.values, f.grid.h))


def derivative_values(v: NDArray[np.float64], h: float) -> NDArray[np.float64]:
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return d


def c1_norm(f: GridFunction) -> float:
    """``sup|f| + sup|f'|`` with the discrete derivative."""
    return sup_norm(f) + sup_norm(derivative(f))


def holder_seminorm(f: GridFunction, alpha: float, pair_budget: int = PAIR_BUDGET) -> float:
    """max over node pairs of ``|f_i - f_j| / |x_i - x_j|^alpha``.

    Exhaustive over all pairs while ``n(n-1)/2 <= pair_budget``; beyond
    that, all adjacent pairs are kept (they dominate for smooth data and
    ``alpha < 1``) plus a geometric ladder of wider separations.
    """
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    v = f.values
    n = v.size
    h = f.grid.h
    if n * (n - 1) // 2 <= pair_budget:
        offsets = range(1, n)
    else:
        # adjacent pairs plus separations 2, 4, 8, ... cover all scales
        offsets = sorted({1} | {2 ** k for k in range(1, int(math.log2(n - 1)) + 1)}
                         | {n - 1})
    best = 0.0
    for d in offsets:
        num = float(np.max(np.abs(v[d:] - v[:-d])))
        best = max(best, num / (d * h) ** alpha)
    return best


def quadrature(f: GridFunction) -> float:
    """Composite trapezoid over ``[-X, X]``."""
    v = f.values
    return float(f.grid.h * (np.sum(v) - 0.5 * (v[0] + v[-1])))


def _monotone_spline(f: GridFunction) -> PchipInterpolator:
    return PchipInterpolator(f.grid.x, f.values, extrapolate=False)


def interpolate(f: GridFunction, x: float) -> float:
    """Evaluate ``f`` off the grid by shape-preserving cubic interpolation.

    Exact at nodes, reproduces affine data, and never leaves the range
    of the two bracketing samples (no overshoot), which the flow-map
    composition relies on.  Points outside ``[-X, X]`` evaluate to 0 by
    the decay convention; use :func:`interpolate_many` to also count them.
    """
    values, _ = interpolate_many(f, np.asarray([x], dtype=np.float64))
    return float(values[0])


def interpolate_many(f: GridFunction, xs: NDArray[np.float64]):
    """Vectorized :func:`interpolate`; returns ``(values, n_outside)``."""
    xs = np.asarray(xs, dtype=np.float64)
    X = f.grid.half_width
    inside = (xs >= -X) & (xs <= X)
    out = np.zeros_like(xs)
    if np.any(inside):
        out[inside] = _monotone_spline(f)(xs[inside])
    return out, int(np.sum(~inside))


def norm_report(f: GridFunction, alpha: float = 0.5) -> NormReport:
    return NormReport(
        c0=sup_norm(f),
        c1=c1_norm(f),
        holder_alpha=alpha,
        holder_seminorm=holder_seminorm(f, alpha),
    )


def write_csv(f: GridFunction, path) -> None:
    """Serialize as ``x,value`` rows at full double precision."""
    with open(path, "w") as fh:
        fh.write("x,value\n")
        for xi, vi in zip(f.grid.x, f.values):
            fh.write(f"{xi:.17g},{vi:.17g}\n")


def read_csv(path) -> GridFunction:
    """Read a grid function written by :func:`write_csv`.

    The node set must be a uniform grid symmetric about 0.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 3:
        raise ValueError(f"{path}: expected at least 3 rows of x,value")
    x, v = data[:, 0], data[:, 1]
    steps = np.diff(x)
    if not np.allclose(steps, steps[0], rtol=1e-10, atol=0.0):
        raise ValueError(f"{path}: nodes are not uniformly spaced")
    if abs(x[0] + x[-1]) > 1e-10 * max(1.0, abs(x[-1])):
        raise ValueError(f"{path}: grid is not symmetric about 0")
    grid = Grid(half_width=float(x[-1]), n_points=x.size)
    return GridFunction(grid, v)
