"""Independent reference computations used by the test suite.

Everything here deliberately avoids the code paths under test: finite
difference matrices instead of shooting, dense eigensolvers instead of
root bracketing, damped Newton instead of monotone iteration.
"""
import math

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded


def delta_exact(mu):
    """sinh(sqrt(mu))/sqrt(mu) for the zero potential, continued through 0."""
    if mu == 0.0:
        return 1.0
    if mu > 0:
        r = math.sqrt(mu)
        return math.sinh(r) / r
    r = math.sqrt(-mu)
    return math.sin(r) / r


def weyl_exact(mu):
    """-sqrt(mu) coth(sqrt(mu)) for the zero potential."""
    if mu == 0.0:
        return -1.0
    if mu > 0:
        r = math.sqrt(mu)
        return -r / math.tanh(r)
    r = math.sqrt(-mu)
    return -r / math.tan(r)


def fd_dirichlet_alphas(q_vals, count):
    """alpha_k = -nu_k from the 3-point FD matrix on the grid of q_vals."""
    n = q_vals.size
    h = 1.0 / (n - 1)
    diag = 2.0 / h**2 + q_vals[1:-1]
    off = np.full(n - 3, -1.0 / h**2)
    nus = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))[0]
    return -nus


def fd_dirichlet_alphas_extrapolated(q_fn, count, n_coarse=4097):
    """Richardson-extrapolated FD eigenvalues (h^2 error term removed)."""
    n_fine = 2 * (n_coarse - 1) + 1
    a_c = fd_dirichlet_alphas(q_fn(np.linspace(0, 1, n_coarse)), count)
    a_f = fd_dirichlet_alphas(q_fn(np.linspace(0, 1, n_fine)), count)
    return (4.0 * a_f - a_c) / 3.0


def _newton_once(f_vals, df_vals, n_dim, lam, v_vals, eta0, eta1, w_init=None):
    """Damped Newton for w'' + 2(n-2)(f'/f) w' + f^4 F(x,w) = 0 on the
    grid of f_vals (the warped-cylinder equation written directly in w,
    independent of the u-substitution used by the package)."""
    n = f_vals.size
    h = 1.0 / (n - 1)
    p = (n_dim + 2) / (n_dim - 2)
    b = 2.0 * (n_dim - 2) * (df_vals / f_vals)  # first-order coefficient
    f4 = f_vals**4

    def F(w):
        return (lam - v_vals) * w - lam * np.abs(w) ** p * np.sign(w)

    def dF(w):
        return (lam - v_vals) - lam * p * np.abs(w) ** (p - 1)

    def residual(w):
        r = np.zeros(n)
        r[1:-1] = (
            (w[:-2] - 2 * w[1:-1] + w[2:]) / h**2
            + b[1:-1] * (w[2:] - w[:-2]) / (2 * h)
            + f4[1:-1] * F(w)[1:-1]
        )
        return r

    w = np.linspace(eta0, eta1, n) if w_init is None else w_init.copy()
    w[0], w[-1] = eta0, eta1
    for _ in range(60):
        r = residual(w)
        rn = np.abs(r).max()
        if rn < 1e-11 * max(1.0, np.abs(f4).max()):
            break
        sub = 1.0 / h**2 - b[1:-1] / (2 * h)
        sup = 1.0 / h**2 + b[1:-1] / (2 * h)
        diag = -2.0 / h**2 + f4[1:-1] * dF(w)[1:-1]
        ab = np.zeros((3, n - 2))
        ab[0, 1:] = sup[:-1]
        ab[1, :] = diag
        ab[2, :-1] = sub[1:]
        step = solve_banded((1, 1), ab, -r[1:-1])
        # backtracking on the residual norm
        t = 1.0
        for _ in range(30):
            w_try = w.copy()
            w_try[1:-1] += t * step
            if np.all(w_try > 0) and np.abs(residual(w_try)).max() < rn:
                break
            t *= 0.5
        w = w_try
    return w


def newton_yamabe(f_fn, df_fn, n_dim, lam, v_fn, eta0, eta1, n_points=2049,
                  extrapolate=False):
    """Damped-Newton collocation solution on the requested grid.

    Without extrapolation this approximates the same second-order
    discrete problem the package solves (by an entirely different
    route), so agreement should be near rounding level.  With
    extrapolate=True a second solve at h/2 removes the h^2 term and the
    result approximates the continuum solution instead -- useful as a
    discretization-error estimate, not as an iteration check.
    """
    def solve_at(n):
        x = np.linspace(0.0, 1.0, n)
        return _newton_once(
            f_fn(x) * np.ones_like(x),
            df_fn(x) * np.ones_like(x),
            n_dim, lam, v_fn(x) * np.ones_like(x), eta0, eta1,
        )

    coarse = solve_at(n_points)
    if not extrapolate:
        return coarse
    fine = solve_at(2 * (n_points - 1) + 1)[::2]
    return (4.0 * fine - coarse) / 3.0
