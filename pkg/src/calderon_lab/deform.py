"""Explicit isospectral flows of 1D Dirichlet potentials.

For a normalized eigenfunction phi_k of -v'' + Q v the one-parameter
family

    theta_{k,t}(x) = 1 + (e^t - 1) * integral_x^1 phi_k^2,
    Q_{k,t} = Q - 2 (log theta_{k,t})''

has the same Dirichlet spectrum as Q for every real t.  On the warped
cylinder the same flow acts on the physical potential through

    V_{k,t} = V - (2 / f^4) (log theta_{k,t})''.

All theta derivatives are evaluated analytically from phi_k and phi_k'
(theta' = -(e^t - 1) phi_k^2, theta'' = -2 (e^t - 1) phi_k phi_k'), so
no numerical differentiation of computed quantities happens anywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CalderonLabError, PositivityError
from .geometry import WarpingProfile, effective_potential
from .grid import GridFunction, integral_to_right
from .sturm import DirichletSpectrum, dirichlet_spectrum

T_MAX = 5.0  # flow parameter guard; theta stays well-conditioned inside


@dataclass(frozen=True)
class IsospectralDeformation:
    """theta_{k,t} together with the eigenfunction data it was built from."""

    k: int
    t: float
    theta: GridFunction
    phi: GridFunction
    dphi: GridFunction

    def log_theta_second(self) -> GridFunction:
        """(log theta)'' = theta''/theta - (theta'/theta)^2, analytic."""
        s = math.expm1(self.t)  # e^t - 1
        th = self.theta.values
        d_th = -s * self.phi.values ** 2
        dd_th = -2.0 * s * self.phi.values * self.dphi.values
        return GridFunction(dd_th / th - (d_th / th) ** 2)


def make_theta(spectrum: DirichletSpectrum, k: int, t: float) -> IsospectralDeformation:
    """Build theta_{k,t} by quadrature of the k-th normalized eigenfunction."""
    if not 1 <= k <= spectrum.count:
        raise CalderonLabError(
            f"eigenfunction index {k} exceeds the stored spectrum ({spectrum.count})"
        )
    if abs(t) > T_MAX:
        raise CalderonLabError(f"flow parameter |t| <= {T_MAX} required, got {t}")
    phi, dphi = spectrum.eigenfunction_pair(k)
    tail = integral_to_right(GridFunction(phi.values ** 2))
    theta_vals = 1.0 + math.expm1(t) * tail.values
    if np.any(theta_vals <= 0.0):
        raise PositivityError(
            "theta is not positive; eigenfunction normalization is suspect"
        )
    return IsospectralDeformation(k=k, t=float(t), theta=GridFunction(theta_vals),
                                  phi=phi, dphi=dphi)


def pt_transform(Q: GridFunction, deformation: IsospectralDeformation) -> GridFunction:
    """Q_{k,t} = Q - 2 (log theta)''."""
    if Q.n_points != deformation.theta.n_points:
        raise CalderonLabError("potential and deformation grids differ")
    return GridFunction(Q.values - 2.0 * deformation.log_theta_second().values)


def deform_cylinder_potential(
    V,
    f: WarpingProfile,
    lam: float,
    k: int,
    t: float,
    n_dim: int = None,
    spectrum: DirichletSpectrum = None,
) -> GridFunction:
    """V_{k,t} = V - (2/f^4) (log theta)'' with theta built from the
    spectrum of the effective potential Q = q_f + (V - lambda) f^4.

    A precomputed DirichletSpectrum of that Q may be passed to avoid
    recomputing it."""
    if n_dim is not None and n_dim != f.n_dim:
        raise CalderonLabError(
            f"n_dim={n_dim} conflicts with the profile dimension {f.n_dim}"
        )
    v = V if isinstance(V, GridFunction) else GridFunction.constant(float(V), f.n_points)
    if spectrum is None:
        Q = effective_potential(f, v, lam)
        spectrum = dirichlet_spectrum(Q, k)
    deformation = make_theta(spectrum, k, t)
    f4 = f.power(4.0)
    return GridFunction(
        v.values - (2.0 / f4) * deformation.log_theta_second().values
    )
