"""Warped-product cylinder model data.

The cylinder [0,1] x K carries the metric f^4(x) (dx^2 + g_K).  On
x-dependent functions the Laplacian factors through the 1D operator

    Delta h = f^-(n+2) [ (f^(n-2) h)'' - q_f f^(n-2) h ],
    q_f = (f^(n-2))'' / f^(n-2),

so after separation of variables every harmonic of -Delta + V - lambda
is governed by the effective potential Q = q_f + (V - lambda) f^4.
This module holds the warping profiles, transverse spectra (eigenvalues
of -Delta_K with multiplicities), conformal factors c(x), and the map
from a conformal factor to the Schroedinger potential it generates:

    V_{g,c,lambda} = q_{g,c} + lambda (1 - c^4),
    q_{g,c} = c^-(n-2) Delta (c^(n-2)) = (q_{cf} - q_f) / f^4.

The last equality is the algebraic identity that makes rescaling by c
and shifting the potential by V_{g,c,lambda} produce the same effective
potential; computing q_{g,c} through it keeps that identity exact up to
rounding.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CalderonLabError, PositivityError
from .grid import DEFAULT_GRID_SIZE, GridFunction

SPLINE_CONSISTENCY_TOL = 1e-6
MAX_TRANSVERSE_COUNT = 10_000


def _as_grid(values, n_points: int) -> GridFunction:
    if isinstance(values, GridFunction):
        return values
    if np.isscalar(values):
        return GridFunction.constant(float(values), n_points)
    return GridFunction(values)


@dataclass(frozen=True)
class WarpingProfile:
    """Warping function f with its first two derivatives on the grid."""

    f: GridFunction
    df: GridFunction
    d2f: GridFunction
    n_dim: int = 3

    def __post_init__(self):
        if int(self.n_dim) != self.n_dim or self.n_dim < 2:
            raise CalderonLabError("n_dim must be an integer >= 2")
        if self.f.n_points != self.df.n_points or self.f.n_points != self.d2f.n_points:
            raise CalderonLabError("profile triple must share one grid")
        if np.any(self.f.values <= 0.0):
            raise PositivityError("warping profile must be strictly positive")
        spline_df = self.f.spline().derivative()(self.f.x)
        scale = max(1.0, float(np.abs(self.df.values).max()))
        if np.abs(spline_df - self.df.values).max() > SPLINE_CONSISTENCY_TOL * scale:
            raise CalderonLabError(
                "profile derivative is inconsistent with the spline of f"
            )

    @property
    def n_points(self) -> int:
        return self.f.n_points

    @property
    def x(self) -> np.ndarray:
        return self.f.x

    @classmethod
    def from_callables(
        cls,
        f: Callable,
        df: Callable,
        d2f: Callable,
        n_dim: int = 3,
        n_points: int = DEFAULT_GRID_SIZE,
    ) -> "WarpingProfile":
        return cls(
            GridFunction.from_callable(f, n_points),
            GridFunction.from_callable(df, n_points),
            GridFunction.from_callable(d2f, n_points),
            n_dim,
        )

    @classmethod
    def from_values(cls, values, n_dim: int = 3) -> "WarpingProfile":
        """Cubic-spline triple built from nodal values of f alone."""
        g = GridFunction(values)
        s = g.spline()
        return cls(
            g,
            GridFunction(s.derivative()(g.x)),
            GridFunction(s.derivative(2)(g.x)),
            n_dim,
        )

    @classmethod
    def constant(
        cls, value: float = 1.0, n_dim: int = 3, n_points: int = DEFAULT_GRID_SIZE
    ) -> "WarpingProfile":
        zero = GridFunction.constant(0.0, n_points)
        return cls(GridFunction.constant(value, n_points), zero, zero, n_dim)

    def q_potential(self) -> GridFunction:
        """q_f = (f^(n-2))''/f^(n-2) = (n-2)[f''/f + (n-3)(f'/f)^2]."""
        n = self.n_dim
        if n == 2:
            return GridFunction.constant(0.0, self.n_points)
        ratio1 = self.df.values / self.f.values
        ratio2 = self.d2f.values / self.f.values
        return GridFunction((n - 2) * (ratio2 + (n - 3) * ratio1 * ratio1))

    def power(self, exponent: float) -> np.ndarray:
        return self.f.values ** exponent


@dataclass(frozen=True)
class ConformalFactor:
    """Strictly positive conformal profile c(x) with derivatives."""

    c: GridFunction
    dc: GridFunction
    d2c: GridFunction

    def __post_init__(self):
        if self.c.n_points != self.dc.n_points or self.c.n_points != self.d2c.n_points:
            raise CalderonLabError("conformal factor triple must share one grid")
        if np.any(self.c.values <= 0.0):
            raise PositivityError("conformal factor must be strictly positive")

    @property
    def n_points(self) -> int:
        return self.c.n_points

    @classmethod
    def from_callables(
        cls, c: Callable, dc: Callable, d2c: Callable, n_points: int = DEFAULT_GRID_SIZE
    ) -> "ConformalFactor":
        return cls(
            GridFunction.from_callable(c, n_points),
            GridFunction.from_callable(dc, n_points),
            GridFunction.from_callable(d2c, n_points),
        )

    @classmethod
    def from_values(cls, values) -> "ConformalFactor":
        """Spline-differentiated factor from nodal values."""
        g = GridFunction(values)
        s = g.spline()
        return cls(g, GridFunction(s.derivative()(g.x)), GridFunction(s.derivative(2)(g.x)))

    @classmethod
    def identity(cls, n_points: int = DEFAULT_GRID_SIZE) -> "ConformalFactor":
        zero = GridFunction.constant(0.0, n_points)
        return cls(GridFunction.constant(1.0, n_points), zero, zero)


def effective_potential(
    profile: WarpingProfile, V, lam: float
) -> GridFunction:
    """Q = q_f + (V - lambda) f^4."""
    v = _as_grid(V, profile.n_points)
    f4 = profile.power(4.0)
    return GridFunction(profile.q_potential().values + (v.values - lam) * f4)


def conformal_rescale(profile: WarpingProfile, factor: ConformalFactor) -> WarpingProfile:
    """Profile of the metric c^4 g: warping c*f with product-rule derivatives."""
    if factor.n_points != profile.n_points:
        raise CalderonLabError("conformal factor grid does not match the profile")
    c, dc, d2c = factor.c.values, factor.dc.values, factor.d2c.values
    f, df, d2f = profile.f.values, profile.df.values, profile.d2f.values
    return WarpingProfile(
        GridFunction(c * f),
        GridFunction(dc * f + c * df),
        GridFunction(d2c * f + 2.0 * dc * df + c * d2f),
        profile.n_dim,
    )


def potential_of_conformal_factor(
    profile: WarpingProfile, factor: ConformalFactor, lam: float
) -> GridFunction:
    """V_{g,c,lambda} = q_{g,c} + lambda (1 - c^4) with
    q_{g,c} = (q_{cf} - q_f) / f^4."""
    rescaled = conformal_rescale(profile, factor)
    f4 = profile.power(4.0)
    q_gc = (rescaled.q_potential().values - profile.q_potential().values) / f4
    c4 = factor.c.values ** 4
    return GridFunction(q_gc + lam * (1.0 - c4))


# ---------------------------------------------------------------------------
# Transverse spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransverseSpectrum:
    """Eigenvalues of -Delta_K with multiplicities, sorted increasing."""

    entries: Tuple[Tuple[float, int], ...]
    label: str = "custom"

    def __post_init__(self):
        if not self.entries:
            raise CalderonLabError("transverse spectrum must be nonempty")
        mus = [e[0] for e in self.entries]
        if mus[0] != 0.0 or self.entries[0][1] != 1:
            raise CalderonLabError(
                "transverse spectrum must start with eigenvalue 0 of multiplicity 1"
            )
        if any(b <= a for a, b in zip(mus, mus[1:])):
            raise CalderonLabError("transverse eigenvalues must be strictly increasing")
        if any(m < 1 or int(m) != m for _, m in self.entries):
            raise CalderonLabError("multiplicities must be positive integers")
        if any(mu < 0 for mu in mus):
            raise CalderonLabError("transverse eigenvalues must be nonnegative")

    @property
    def mus(self) -> np.ndarray:
        return np.array([e[0] for e in self.entries])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([e[1] for e in self.entries], dtype=int)

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_json(cls, source) -> "TransverseSpectrum":
        """Load a custom spectrum from a JSON array of {mu, multiplicity}."""
        if isinstance(source, (str,)):
            with open(source) as fh:
                data = json.load(fh)
        else:
            data = source
        entries = tuple((float(d["mu"]), int(d["multiplicity"])) for d in data)
        return cls(entries, label="custom")


def transverse_spectrum(label: str, count: int, entries=None) -> TransverseSpectrum:
    """First `count` distinct transverse eigenvalues for a built-in factor.

    circle: mu = j^2 with multiplicity 2 for j >= 1; torus2: mu = j^2+l^2
    over the integer lattice with aggregated multiplicities; custom:
    caller-supplied entries, validated.
    """
    if not 1 <= count <= MAX_TRANSVERSE_COUNT:
        raise CalderonLabError(f"count must be in 1..{MAX_TRANSVERSE_COUNT}")
    if label == "circle":
        ents = [(0.0, 1)] + [(float(j * j), 2) for j in range(1, count)]
        return TransverseSpectrum(tuple(ents), label="circle")
    if label == "torus2":
        # Enough lattice shells to cover `count` distinct norms: distinct
        # values of j^2+l^2 up to R^2 number at least R^2/4 for R >= 2.
        radius = int(math.isqrt(4 * count) + 2)
        counts = {}
        for j in range(-radius, radius + 1):
            for l in range(-radius, radius + 1):
                m = j * j + l * l
                if m <= radius * radius:
                    counts[m] = counts.get(m, 0) + 1
        mus = sorted(counts)[:count]
        if len(mus) < count:
            raise CalderonLabError("lattice radius too small for requested count")
        return TransverseSpectrum(
            tuple((float(m), counts[m]) for m in mus), label="torus2"
        )
    if label == "custom":
        if entries is None:
            raise CalderonLabError("custom spectrum requires explicit entries")
        ents = tuple((float(mu), int(mult)) for mu, mult in entries)[:count]
        return TransverseSpectrum(ents, label="custom")
    raise CalderonLabError(f"unknown transverse factor label: {label!r}")
