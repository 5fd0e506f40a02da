"""Nonlinear Dirichlet solves producing conformal factors.

The gauge-producing conformal factors c satisfy, with w = c^(n-2) and
p = (n+2)/(n-2),

    Delta_g w + (lambda - V) w - lambda w^p = 0,   w = eta on the ends,

on the warped cylinder (V = 0 for the pure gauge equation).  Solutions
are built by the classical monotone iteration between a lower and an
upper solution: pick mu with |d/dw F(x,w)| <= mu on the sandwiched
range, then iterate linear solves

    Delta_g phi - mu phi = -mu w - F(x,w),   phi = eta on the ends.

Everything reduces to tridiagonal solves in u = f^(n-2) w through
Delta_g w = f^-(n+2) (u'' - q_f u).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import (
    AdmissibilityError,
    ConvergenceError,
    PositivityError,
    RoundTripError,
)
from .geometry import ConformalFactor, WarpingProfile, potential_of_conformal_factor
from .grid import GridFunction
from .solvers import second_difference_dirichlet, solve_banded_bvp

MAX_ITERS = 500
INCREMENT_TOL = 1e-12
RESIDUAL_TOL = 1e-9
MONOTONE_SLACK = 1e-12
POLISH_SLACK = 1e-9  # how far the Newton finish may sit below the last sweep
INEQUALITY_SLACK = 1e-9
ROUND_TRIP_TOL = 1e-7
EPSILON_LADDER = tuple(10.0 ** -j for j in range(1, 9))


@dataclass(frozen=True)
class YamabeProblem:
    """Data of one reduced nonlinear Dirichlet problem."""

    f: WarpingProfile
    lam: float
    V: GridFunction
    eta0: float
    eta1: float

    def __post_init__(self):
        if self.n_dim < 3:
            raise AdmissibilityError(
                "nonlinear problem requires dimension >= 3 (exponent p undefined)"
            )
        if self.eta0 <= 0 or self.eta1 <= 0:
            raise AdmissibilityError("boundary values must be positive")
        if self.V.n_points != self.f.n_points:
            raise AdmissibilityError("potential grid does not match the profile")

    @property
    def n_dim(self) -> int:
        return self.f.n_dim

    @property
    def p(self) -> float:
        return (self.n_dim + 2) / (self.n_dim - 2)

    @property
    def n_points(self) -> int:
        return self.f.n_points

    def nonlinearity(self, w: np.ndarray) -> np.ndarray:
        """F(x, w) = (lambda - V) w - lambda w^p."""
        return (self.lam - self.V.values) * w - self.lam * np.abs(w) ** self.p * np.sign(w)

    def damping(self, lower: GridFunction, upper: GridFunction) -> float:
        """mu >= sup |dF/dw| over the sandwiched range."""
        top = float(np.abs(upper.values).max())
        return float(
            np.abs(self.lam - self.V.values).max()
            + abs(self.lam) * self.p * top ** (self.p - 1.0)
        )


@dataclass
class IterationReport:
    iterates: List[GridFunction]
    residuals: List[float]
    monotone: bool
    sandwich: bool
    converged: bool
    mu: float = 0.0
    case_tag: str = ""
    # Newton-polished solution; within POLISH_SLACK of the last sweep
    # iterate, with the certified residual in residuals[-1]
    polished: Optional[GridFunction] = None


class _ReducedOperator:
    """Tridiagonal form of Delta_g (+ zeroth-order terms) in u = f^(n-2) w."""

    def __init__(self, profile: WarpingProfile):
        self.profile = profile
        n = profile.n_points
        self.h = 1.0 / (n - 1)
        self.sub, self.diag, self.sup = second_difference_dirichlet(n)
        self.q_f = profile.q_potential().values
        nd = profile.n_dim
        self.f_pow_nm2 = profile.power(nd - 2.0)
        self.f_pow_np2 = profile.power(nd + 2.0)
        self.f4 = profile.power(4.0)

    def to_u(self, w: np.ndarray) -> np.ndarray:
        return self.f_pow_nm2 * w

    def to_w(self, u: np.ndarray) -> np.ndarray:
        return u / self.f_pow_nm2

    def apply_delta(self, w: np.ndarray) -> np.ndarray:
        """Discrete Delta_g w at interior nodes (second difference taken
        in extended precision so the result reflects the float64 vector
        itself, not evaluation noise of order 1/h^2 * eps)."""
        u = self.to_u(w).astype(np.longdouble)
        d2u = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / np.longdouble(self.h) ** 2
        out = (d2u - self.q_f[1:-1] * u[1:-1]) / self.f_pow_np2[1:-1]
        return out.astype(float)

    def solve(self, zeroth: np.ndarray, rhs: np.ndarray, w0: float, w1: float) -> np.ndarray:
        """Solve Delta_g w + zeroth*w = rhs with w(0)=w0, w(1)=w1.

        zeroth and rhs are grid arrays (interior values used)."""
        # Delta_g w + zeroth w = rhs  <=>  u'' + (zeroth f^4 - q_f) u = f^(n+2) rhs
        diag = self.diag + zeroth[1:-1] * self.f4[1:-1] - self.q_f[1:-1]
        u = solve_banded_bvp(
            (self.sub, diag, self.sup),
            self.f_pow_np2[1:-1] * rhs[1:-1],
            self.f_pow_nm2[0] * w0,
            self.f_pow_nm2[-1] * w1,
        )
        return self.to_w(u.values)


def _interior_residual(op: _ReducedOperator, problem: YamabeProblem, w: np.ndarray) -> float:
    r = op.apply_delta(w) + problem.nonlinearity(w)[1:-1]
    return float(np.abs(r).max())


def _polish(op: _ReducedOperator, problem: YamabeProblem, w: np.ndarray):
    """Finish the damped iteration with Newton steps in extended precision.

    Two separate reasons for this phase: the fixed-point sweep contracts
    only like mu/(mu + pi^2), which is hopeless once the damping constant
    is large, and a float64 nodal vector cannot satisfy the stiff discrete
    equation below roughly |D2| * eps ~ 1e-9 (rounding of the vector
    itself).  Newton steps on a long-double copy of u solve both: the
    correction solves the Jacobian system

        (D2 - q_f + f^4 F'(w)) delta = r(u),   u <- u - delta,

    with r the exact nonlinear residual.  Returns (w64, u_long, residual)
    with the residual evaluated on the extended-precision iterate in the
    Delta_g scaling; callers must safeguard the result (sandwich and
    monotonicity checks) before adopting it.
    """
    from scipy.linalg import solve_banded

    n = problem.n_points
    h2 = np.longdouble(op.h) ** 2
    lam, p = problem.lam, problem.p
    lam_minus_v = lam - problem.V.values

    u = op.to_u(w).astype(np.longdouble)
    best = None
    for _ in range(12):
        w_ld = u / op.f_pow_nm2
        d2u = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / h2
        r = d2u - op.q_f[1:-1] * u[1:-1] + (
            op.f_pow_np2[1:-1] * problem.nonlinearity(w_ld)[1:-1]
        )
        residual = float(np.abs(r / op.f_pow_np2[1:-1]).max())
        if best is None or residual < best[2]:
            best = (w_ld.astype(float), u.copy(), residual)
        if residual < 1e-11:
            break
        w64 = w_ld.astype(float)
        fprime = lam_minus_v - lam * p * np.abs(w64) ** (p - 1.0)
        diag = op.diag + fprime[1:-1] * op.f4[1:-1] - op.q_f[1:-1]
        ab = np.zeros((3, n - 2))
        ab[0, 1:] = op.sup[:-1]
        ab[1, :] = diag
        ab[2, :-1] = op.sub[1:]
        try:
            delta = solve_banded((1, 1), ab, r.astype(float))
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(delta)):
            break
        u = u.copy()
        u[1:-1] -= delta
    return best


def _check_inequality(op, problem, w_vals, kind: str):
    """Verify the defining differential inequality of a lower ('>=') or
    upper ('<=') solution at interior grid nodes."""
    r = op.apply_delta(w_vals) + problem.nonlinearity(w_vals)[1:-1]
    scale = max(1.0, float(np.abs(r).max()))
    if kind == "lower":
        bad = r < -INEQUALITY_SLACK * scale
    else:
        bad = r > INEQUALITY_SLACK * scale
    if bad.any():
        i = int(np.argmax(bad)) + 1
        raise AdmissibilityError(
            f"{kind}-solution inequality fails near x={i / (len(w_vals) - 1):.4f}"
        )


def lower_upper_solutions(
    problem: YamabeProblem,
) -> Tuple[GridFunction, GridFunction, str]:
    """Lower/upper solutions for the admissible parameter regimes.

    (i)   V = 0, lambda >= 0, any positive boundary data: constants.
    (ii)  V = 0, lambda < 0, eta <= 1: two linear Dirichlet solves.
    (iii) lambda > 0, 0 < V < lambda, max eta >= 1: (epsilon, max eta).
    (iv)  lambda <= 0, V >= 0, eta <= 1: two linear Dirichlet solves.
    """
    n = problem.n_points
    op = _ReducedOperator(problem.f)
    v = problem.V.values
    lam = problem.lam
    v_zero = bool(np.all(v == 0.0))
    eta_min = min(problem.eta0, problem.eta1)
    eta_max = max(problem.eta0, problem.eta1)
    p = problem.p

    if v_zero and lam >= 0:
        lower = GridFunction.constant(min(eta_min, 1.0), n)
        upper = GridFunction.constant(max(eta_max, 1.0), n)
        tag = "i"
    elif v_zero and lam < 0 and eta_max <= 1.0:
        zero = np.zeros(n)
        lam_arr = np.full(n, lam)
        lower_vals = op.solve(lam_arr, zero, problem.eta0, problem.eta1)
        upper_vals = op.solve(
            lam_arr, np.full(n, lam * eta_max ** p), problem.eta0, problem.eta1
        )
        lower, upper = GridFunction(lower_vals), GridFunction(upper_vals)
        tag = "ii"
    elif lam > 0 and np.all(v > 0.0) and np.all(v < lam) and eta_max >= 1.0:
        upper = GridFunction.constant(eta_max, n)
        lower = None
        for eps in EPSILON_LADDER:
            cand = np.full(n, eps)
            ineq = op.apply_delta(cand) + problem.nonlinearity(cand)[1:-1]
            if np.all(ineq > 0.0):
                lower = GridFunction.constant(eps, n)
                break
        if lower is None:
            raise AdmissibilityError(
                "no constant lower solution found on the epsilon ladder"
            )
        tag = "iii"
    elif lam <= 0 and np.all(v >= 0.0) and eta_max <= 1.0:
        zeroth = lam - v
        zero = np.zeros(n)
        lower_vals = op.solve(zeroth, zero, problem.eta0, problem.eta1)
        upper_vals = op.solve(
            zeroth, zeroth * eta_max ** p, problem.eta0, problem.eta1
        )
        lower, upper = GridFunction(lower_vals), GridFunction(upper_vals)
        tag = "iv"
    else:
        raise AdmissibilityError(
            "no admissible lower/upper construction for these parameters "
            f"(lambda={lam}, V range [{v.min():.4g}, {v.max():.4g}], "
            f"eta=({problem.eta0}, {problem.eta1}))"
        )

    if np.any(lower.values > upper.values + MONOTONE_SLACK):
        raise AdmissibilityError("lower solution exceeds the upper solution")
    if np.any(lower.values <= 0.0):
        raise PositivityError("lower solution is not strictly positive")
    _check_inequality(op, problem, lower.values, "lower")
    _check_inequality(op, problem, upper.values, "upper")
    return lower, upper, tag


def monotone_iterate(
    problem: YamabeProblem,
    lower: GridFunction,
    upper: GridFunction,
    max_iters: int = MAX_ITERS,
) -> Tuple[GridFunction, IterationReport]:
    """Monotone sequence from the lower solution; converges when the
    sup-norm increment stays below 1e-12 three times in a row and the
    interior residual is below 1e-9."""
    if np.any(lower.values > upper.values + MONOTONE_SLACK):
        raise AdmissibilityError("lower solution exceeds the upper solution")
    op = _ReducedOperator(problem.f)
    mu = problem.damping(lower, upper)
    zeroth = np.full(problem.n_points, -mu)

    w = lower.values.copy()
    report = IterationReport(
        iterates=[GridFunction(w)], residuals=[], monotone=True, sandwich=True,
        converged=False, mu=mu,
    )
    small_steps = 0
    for it in range(max_iters):
        rhs = -mu * w - problem.nonlinearity(w)
        w_new = op.solve(zeroth, rhs, problem.eta0, problem.eta1)

        if np.any(w_new < w - MONOTONE_SLACK):
            report.monotone = False
            raise ConvergenceError("monotone iteration lost monotonicity")
        if np.any(w_new < lower.values - MONOTONE_SLACK) or np.any(
            w_new > upper.values + MONOTONE_SLACK
        ):
            report.sandwich = False
            raise ConvergenceError("iterate escaped the lower/upper sandwich")

        increment = float(np.abs(w_new - w).max())
        w = w_new
        residual = _interior_residual(op, problem, w)
        report.iterates.append(GridFunction(w))
        report.residuals.append(residual)

        # The Newton finish is attempted once the sweep has stalled, and
        # also periodically: with a large damping constant the sweep
        # contracts like mu/(mu + pi^2) and would otherwise need
        # thousands of passes.  The polished solution is kept separate
        # from the sweep iterates (whose monotone/sandwich certificate
        # it must not dilute) and adopted only when it stays inside the
        # sandwich and within rounding noise of the last iterate.
        small_steps = small_steps + 1 if increment < INCREMENT_TOL else 0
        if small_steps >= 3 or (it > 0 and it % 40 == 0):
            w_pol, _u_long, residual_pol = _polish(op, problem, w)
            if (
                residual_pol < RESIDUAL_TOL
                and np.all(w_pol >= lower.values - MONOTONE_SLACK)
                and np.all(w_pol <= upper.values + MONOTONE_SLACK)
                and np.all(w_pol >= w - POLISH_SLACK)
            ):
                w = w_pol
                report.polished = GridFunction(w_pol)
                report.residuals.append(residual_pol)
                report.converged = True
                break
    if not report.converged:
        raise ConvergenceError(
            f"no convergence in {max_iters} iterations "
            f"(last residual {report.residuals[-1]:.3e})"
        )
    return GridFunction(w), report


def _conformal_factor_from_w(
    problem: YamabeProblem, w: GridFunction
) -> ConformalFactor:
    """c = w^(1/(n-2)) with derivatives consistent with the solved
    equation: w' from the spline of w, w'' from the equation itself
    (w'' = -f^4 F(x,w) - 2(n-2)(f'/f) w')."""
    nd = problem.n_dim
    m = 1.0 / (nd - 2)
    wv = w.values
    dw = w.spline().derivative()(w.x)
    f = problem.f
    d2w = (
        -f.power(4.0) * problem.nonlinearity(wv)
        - 2.0 * (nd - 2) * (f.df.values / f.f.values) * dw
    )
    c = wv ** m
    dc = m * wv ** (m - 1.0) * dw
    d2c = m * wv ** (m - 1.0) * d2w + m * (m - 1.0) * wv ** (m - 2.0) * dw ** 2
    return ConformalFactor(GridFunction(c), GridFunction(dc), GridFunction(d2c))


def solve_gauge_factor(
    f: WarpingProfile,
    n_dim: int,
    lam: float,
    eta0: float,
    eta1: float,
) -> ConformalFactor:
    """Conformal factor of the pure gauge equation (V = 0).

    In dimension 2 the equation degenerates to lambda (1 - c^4) = 0:
    rejected for lambda != 0, and c = 1 is the only representative for
    lambda = 0 with unit boundary data."""
    if n_dim != f.n_dim:
        raise AdmissibilityError(
            f"n_dim={n_dim} conflicts with the profile dimension {f.n_dim}"
        )
    if n_dim == 2:
        if lam != 0.0:
            raise AdmissibilityError(
                "dimension 2 with nonzero frequency admits only the trivial factor"
            )
        if eta0 != 1.0 or eta1 != 1.0:
            raise AdmissibilityError(
                "dimension 2 boundary data must be 1 (w = c^0 is identically 1)"
            )
        return ConformalFactor.identity(f.n_points)

    if eta0 == 1.0 and eta1 == 1.0:
        return ConformalFactor.identity(f.n_points)

    problem = YamabeProblem(
        f=f, lam=lam, V=GridFunction.constant(0.0, f.n_points),
        eta0=eta0, eta1=eta1,
    )
    lower, upper, _tag = lower_upper_solutions(problem)
    w, _report = monotone_iterate(problem, lower, upper)
    factor = _conformal_factor_from_w(problem, w)
    if float(np.abs(factor.c.values - 1.0).max()) <= 1e-6:
        raise RoundTripError(
            "gauge factor is numerically trivial despite nontrivial boundary data"
        )
    return factor


def solve_conformal_for_potential(
    f: WarpingProfile,
    n_dim: int,
    lam: float,
    V: GridFunction,
    eta0: float,
    eta1: float,
) -> ConformalFactor:
    """Conformal factor whose generated potential equals V.

    The zero-frequency problem is linear and solved directly; otherwise
    the monotone iteration runs between the constructed lower/upper
    solutions.  The generated potential is recomputed and compared with
    V before returning."""
    if n_dim != f.n_dim:
        raise AdmissibilityError(
            f"n_dim={n_dim} conflicts with the profile dimension {f.n_dim}"
        )
    problem = YamabeProblem(f=f, lam=lam, V=V, eta0=eta0, eta1=eta1)

    if lam == 0.0:
        if np.any(V.values < 0.0):
            raise AdmissibilityError("zero frequency requires V >= 0")
        op = _ReducedOperator(f)
        w_vals = op.solve(-V.values, np.zeros(f.n_points), eta0, eta1)
        if np.any(w_vals <= 0.0):
            raise PositivityError("linear solve produced a nonpositive profile")
        w = GridFunction(w_vals)
    else:
        lower, upper, _tag = lower_upper_solutions(problem)
        w, _report = monotone_iterate(problem, lower, upper)

    factor = _conformal_factor_from_w(problem, w)
    recovered = potential_of_conformal_factor(f, factor, lam)
    defect = float(np.abs(recovered.values - V.values).max())
    if defect > ROUND_TRIP_TOL:
        raise RoundTripError(
            f"generated potential misses the target by {defect:.3e} sup-norm"
        )
    return factor
