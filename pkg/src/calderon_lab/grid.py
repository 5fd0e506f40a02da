"""Uniform-grid scalar functions on [0, 1] and quadrature over them.

Everything x-dependent in the laboratory (potentials, eigenfunctions,
conformal profiles, warping data) lives on the same kind of uniform grid,
so this module is deliberately small and strict about validation.
"""
from __future__ import annotations

from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CalderonLabError

DEFAULT_GRID_SIZE = 2049
MIN_GRID_SIZE = 33


class GridFunction:
    """Real values on the uniform grid x_i = i/(n-1), i = 0..n-1.

    Values are stored read-only; arithmetic returns new instances.
    """

    __slots__ = ("values", "_spline")

    def __init__(self, values):
        arr = np.ascontiguousarray(values, dtype=float)
        if arr.ndim != 1:
            raise CalderonLabError("GridFunction values must be one-dimensional")
        if arr.size < MIN_GRID_SIZE:
            raise CalderonLabError(
                f"grid too coarse: {arr.size} points (need >= {MIN_GRID_SIZE})"
            )
        if not np.all(np.isfinite(arr)):
            raise CalderonLabError("GridFunction values must all be finite")
        arr.flags.writeable = False
        self.values = arr
        self._spline = None

    # -- basic geometry -------------------------------------------------
    @property
    def n_points(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return 1.0 / (self.values.size - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.values.size)

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_callable(cls, fn: Callable, n_points: int = DEFAULT_GRID_SIZE) -> "GridFunction":
        x = np.linspace(0.0, 1.0, n_points)
        return cls(np.asarray(fn(x), dtype=float) * np.ones_like(x))

    @classmethod
    def constant(cls, value: float, n_points: int = DEFAULT_GRID_SIZE) -> "GridFunction":
        return cls(np.full(n_points, float(value)))

    # -- interpolation --------------------------------------------------
    def spline(self) -> CubicSpline:
        """Cubic interpolant of the nodal values (cached)."""
        if self._spline is None:
            self._spline = CubicSpline(self.x, self.values)
        return self._spline

    def __call__(self, x):
        return self.spline()(x)

    # -- arithmetic (same grid required) --------------------------------
    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, GridFunction):
            if other.n_points != self.n_points:
                raise CalderonLabError("grid size mismatch in arithmetic")
            return other.values
        return np.asarray(other, dtype=float)

    def __add__(self, other):
        return GridFunction(self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.values - self._coerce(other))

    def __rsub__(self, other):
        return GridFunction(self._coerce(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.values / self._coerce(other))

    def __neg__(self):
        return GridFunction(-self.values)

    def __repr__(self):
        return f"GridFunction(n={self.n_points}, range=[{self.values.min():.4g}, {self.values.max():.4g}])"


def integrate_grid(g: Union[GridFunction, np.ndarray]) -> float:
    """Integral over [0,1] by composite Simpson.

    Odd point counts use pure Simpson; for even counts the last panel is
    closed with a trapezoid.
    """
    values = g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)
    n = values.size
    h = 1.0 / (n - 1)
    if n % 2 == 1:
        return _simpson(values, h)
    return _simpson(values[:-1], h) + 0.5 * h * (values[-2] + values[-1])


def _simpson(values: np.ndarray, h: float) -> float:
    # values has odd length here
    return (h / 3.0) * (
        values[0]
        + values[-1]
        + 4.0 * values[1:-1:2].sum()
        + 2.0 * values[2:-2:2].sum()
    )


def integral_to_right(g: GridFunction) -> GridFunction:
    """I(x_i) = integral of g from x_i to 1, via the cubic-spline
    antiderivative (fourth-order accurate for smooth integrands)."""
    anti = g.spline().antiderivative()
    vals = anti(1.0) - anti(g.x)
    return GridFunction(vals)
