"""Banded Dirichlet solves and bracketed root finding."""
from __future__ import annotations

from typing import Callable, Tuple

import numpy as np
from scipy.linalg import solve_banded

from .errors import BracketError, SingularSystemError
from .grid import GridFunction


def solve_banded_bvp(
    diagonals: Tuple[np.ndarray, np.ndarray, np.ndarray],
    rhs,
    left_value: float,
    right_value: float,
) -> GridFunction:
    """Solve a tridiagonal Dirichlet system on the interior of the grid.

    diagonals = (sub, diag, sup) describe the interior equations

        sub[i] u_{i-1} + diag[i] u_i + sup[i] u_{i+1} = rhs_i,  i = 1..n-2,

    with all three arrays of length n-2 (sub[0] and sup[-1] multiply the
    prescribed boundary values and are folded into the right-hand side).
    Returns the full grid function including the boundary values.
    """
    rhs_vals = rhs.values if isinstance(rhs, GridFunction) else np.asarray(rhs, float)
    sub, diag, sup = (np.asarray(d, dtype=float) for d in diagonals)
    n_int = diag.size
    if rhs_vals.size == n_int + 2:
        b = rhs_vals[1:-1].copy()
    elif rhs_vals.size == n_int:
        b = rhs_vals.copy()
    else:
        raise SingularSystemError("rhs length does not match the diagonals")

    b[0] -= sub[0] * left_value
    b[-1] -= sup[-1] * right_value

    ab = np.zeros((3, n_int))
    ab[0, 1:] = sup[:-1]
    ab[1, :] = diag
    ab[2, :-1] = sub[1:]
    try:
        interior = solve_banded((1, 1), ab, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises rarely
        raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(interior)):
        raise SingularSystemError("banded factorization produced non-finite values")

    # One step of iterative refinement with an extended-precision residual:
    # stiff second-difference rows (~1/h^2) otherwise leave a backward error
    # near 1e-9 in the continuum scaling, which downstream certificates see.
    subl, diagl, supl = (d.astype(np.longdouble) for d in (sub, diag, sup))
    ul = interior.astype(np.longdouble)
    bl = b.astype(np.longdouble)
    rl = bl - diagl * ul
    rl[1:] -= subl[1:] * ul[:-1]
    rl[:-1] -= supl[:-1] * ul[1:]
    delta = solve_banded((1, 1), ab, rl.astype(float))
    if np.all(np.isfinite(delta)):
        interior = interior + delta

    # Residual certificate for the discrete system.
    full = np.empty(n_int + 2)
    full[0], full[-1] = left_value, right_value
    full[1:-1] = interior
    res = sub * full[:-2] + diag * full[1:-1] + sup * full[2:]
    if rhs_vals.size == n_int + 2:
        res -= rhs_vals[1:-1]
    else:
        res -= rhs_vals
    scale = max(
        1e-300,
        float(np.abs(np.vstack([sub, diag, sup])).max() * np.abs(full).max()),
        float(np.abs(rhs_vals).max()),
    )
    if np.abs(res).max() > 1e-12 * scale:
        raise SingularSystemError(
            f"discrete residual {np.abs(res).max():.3e} exceeds 1e-12 relative"
        )
    return GridFunction(full)


def second_difference_dirichlet(n_points: int):
    """Sub/diag/sup arrays (length n-2) of the 3-point second-difference
    operator D2 u_i = (u_{i-1} - 2 u_i + u_{i+1}) / h^2 on interior nodes."""
    h = 1.0 / (n_points - 1)
    inv_h2 = 1.0 / (h * h)
    sub = np.full(n_points - 2, inv_h2)
    sup = np.full(n_points - 2, inv_h2)
    diag = np.full(n_points - 2, -2.0 * inv_h2)
    return sub, diag, sup


_BISECT_WIDTH = 1e-6


def find_root(fn: Callable[[float], float], bracket, tol: float = 1e-12) -> float:
    """Root of fn in the bracket [a, b], requiring a sign change.

    Bisection narrows the bracket to 1e-6, then secant iterations polish
    to `tol`; any secant iterate leaving the bracket falls back to a
    bisection step.  A zero exactly at a bracket edge is returned as is.
    """
    a, b = float(bracket[0]), float(bracket[1])
    fa, fb = fn(a), fn(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise BracketError(f"no sign change on [{a:.6g}, {b:.6g}]")

    while b - a > max(_BISECT_WIDTH, tol):
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0:
            return m
        if fa * fm < 0.0:
            b, fb = m, fm
        else:
            a, fa = m, fm

    # Secant polish inside the final bracket.
    x0, f0 = a, fa
    x1, f1 = b, fb
    for _ in range(60):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (a <= x2 <= b):
            x2 = 0.5 * (a + b)
        f2 = fn(x2)
        if f2 == 0.0 or abs(x2 - x1) < tol:
            return x2
        if fa * f2 < 0.0:
            b = x2
        else:
            a, fa = x2, f2
        x0, f0, x1, f1 = x1, f1, x2, f2
    return 0.5 * (a + b)
