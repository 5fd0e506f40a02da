"""1D spectral engine for the reduced cylinder operator.

For the boundary value problem  -v'' + Q(x) v = -mu v  on [0,1] we build
the two fundamental systems launched at x=0 and x=1 with Cauchy data

    c0(0)=1, c0'(0)=0,  s0(0)=0, s0'(0)=1,
    c1(1)=1, c1'(1)=0,  s1(1)=0, s1'(1)=1,

the characteristic function Delta(mu) = W(s0, s1) and the Weyl functions
M = -W(c0, s1)/Delta, N = -W(c1, s0)/Delta, with W(u,v) = u v' - u' v.

Evaluating the (constant-in-x) Wronskians at the launch points collapses
them to single endpoint values:

    Delta = W(s0,s1)|_{x=1} = s0(1)      (= -s1(0) when taken at x=0),
    W(c0,s1)|_{x=1} = c0(1),   W(c1,s0)|_{x=0} = c1(0),

so one forward and one backward sweep of the integrator provide Delta,
M and N together.  The x=0 evaluation of Delta is kept as a cross-check.

Zeros alpha_1 > alpha_2 > ... of Delta are minus the Dirichlet
eigenvalues of -d^2/dx^2 + Q; they are bracketed by integer jumps of the
Pruefer phase at x=1 and refined on Delta itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BracketError, PoleError
from .grid import GridFunction, integrate_grid
from .ode import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    ScaledSolution,
    integrate_schrodinger,
    integrate_schrodinger_batch,
    rk45_path,
)

POLE_THRESHOLD = 1e-10
MAX_SPECTRUM_COUNT = 200


@dataclass(frozen=True)
class ScaledValue:
    """mantissa * exp(log_scale)."""

    mantissa: float
    log_scale: float = 0.0

    @property
    def value(self) -> float:
        return self.mantissa * math.exp(self.log_scale)

    @property
    def log_abs(self) -> float:
        if self.mantissa == 0.0:
            return -math.inf
        return math.log(abs(self.mantissa)) + self.log_scale


@dataclass(frozen=True)
class FundamentalSystem:
    mu: float
    c0: ScaledSolution  # at x=1
    s0: ScaledSolution  # at x=1
    c1: ScaledSolution  # at x=0
    s1: ScaledSolution  # at x=0
    trajectories: Optional[dict] = None


@dataclass(frozen=True)
class SpectralData:
    mu: float
    delta: ScaledValue
    m: float
    n_fn: float
    delta_from_right: ScaledValue = field(repr=False, default=None)

    @property
    def delta_value(self) -> float:
        return self.delta.value


def fundamental_system(
    Q: GridFunction,
    mu: float,
    record_trajectories: bool = False,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> FundamentalSystem:
    """Integrate the four Cauchy solutions across [0,1]."""
    if not record_trajectories:
        fwd, fwd_log = integrate_schrodinger_batch(
            Q, [mu, mu], [[1.0, 0.0], [0.0, 1.0]], start=0, rtol=rtol, atol=atol
        )
        bwd, bwd_log = integrate_schrodinger_batch(
            Q, [mu, mu], [[1.0, 0.0], [0.0, 1.0]], start=1, rtol=rtol, atol=atol
        )
        return FundamentalSystem(
            mu=mu,
            c0=ScaledSolution(fwd[0, 0], fwd[0, 1], fwd_log[0]),
            s0=ScaledSolution(fwd[1, 0], fwd[1, 1], fwd_log[1]),
            c1=ScaledSolution(bwd[0, 0], bwd[0, 1], bwd_log[0]),
            s1=ScaledSolution(bwd[1, 0], bwd[1, 1], bwd_log[1]),
        )

    trajectories = {}
    sols = {}
    for name, start, init in (
        ("c0", 0, (1.0, 0.0)),
        ("s0", 0, (0.0, 1.0)),
        ("c1", 1, (1.0, 0.0)),
        ("s1", 1, (0.0, 1.0)),
    ):
        sol, v, dv = integrate_schrodinger(
            Q, mu, init[0], init[1], start=start, record_trajectory=True,
            rtol=rtol, atol=atol,
        )
        sols[name] = sol
        trajectories[name] = (v, dv)
    return FundamentalSystem(mu=mu, trajectories=trajectories, **sols)


def spectral_data_batch(
    Q: GridFunction,
    mus,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    check_poles: bool = True,
):
    """Delta, M, N at many spectral parameters with two batched sweeps."""
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    n = mus.size
    rows = np.repeat(mus, 2)
    inits = np.tile(np.array([[1.0, 0.0], [0.0, 1.0]]), (n, 1))

    fwd, fwd_log = integrate_schrodinger_batch(Q, rows, inits, start=0, rtol=rtol, atol=atol)
    bwd, bwd_log = integrate_schrodinger_batch(Q, rows, inits, start=1, rtol=rtol, atol=atol)

    out = []
    for i, mu in enumerate(mus):
        c0v, c0l = fwd[2 * i, 0], fwd_log[2 * i]
        s0v, s0l = fwd[2 * i + 1, 0], fwd_log[2 * i + 1]
        c1v, c1l = bwd[2 * i, 0], bwd_log[2 * i]
        s1v, s1l = bwd[2 * i + 1, 0], bwd_log[2 * i + 1]

        delta = ScaledValue(float(s0v), float(s0l))
        delta_right = ScaledValue(float(-s1v), float(s1l))

        if check_poles:
            w_log = math.log(abs(c0v)) + c0l if c0v != 0.0 else -math.inf
            if delta.log_abs < math.log(POLE_THRESHOLD) + max(w_log, 0.0):
                raise PoleError(
                    f"characteristic function vanishes near mu={mu:.9g}", mu=mu
                )

        m_val = -float(c0v / s0v) * math.exp(c0l - s0l)
        n_val = float(c1v / s1v) * math.exp(c1l - s1l)
        out.append(
            SpectralData(mu=float(mu), delta=delta, m=m_val, n_fn=n_val,
                         delta_from_right=delta_right)
        )
    return out


def spectral_data(Q, mu, **kw) -> SpectralData:
    return spectral_data_batch(Q, [mu], **kw)[0]


def characteristic(
    Q: GridFunction, mu: float, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL
) -> ScaledValue:
    """Delta(mu) with its log scale (one forward sweep)."""
    y, log = integrate_schrodinger_batch(Q, [mu], [[0.0, 1.0]], start=0, rtol=rtol, atol=atol)
    return ScaledValue(float(y[0, 0]), float(log[0]))


def characteristic_from_right(
    Q: GridFunction, mu: float, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL
) -> ScaledValue:
    """Delta evaluated at x=0 (cross-check of the one-sided form)."""
    y, log = integrate_schrodinger_batch(Q, [mu], [[0.0, 1.0]], start=1, rtol=rtol, atol=atol)
    return ScaledValue(float(-y[0, 0]), float(log[0]))


def weyl_functions(
    Q: GridFunction, mu: float, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL
):
    """(M(mu), N(mu)); raises PoleError at zeros of Delta."""
    sd = spectral_data(Q, mu, rtol=rtol, atol=atol)
    return sd.m, sd.n_fn


# ---------------------------------------------------------------------------
# Dirichlet spectrum
# ---------------------------------------------------------------------------


class _PrueferSystem:
    """theta' = cos^2 theta + (nu - Q) sin^2 theta, batched over nu."""

    def __init__(self, Q: GridFunction, nus: np.ndarray):
        self._q = Q.spline()
        self.nus = nus

    def __call__(self, x, theta):
        q = self._q(x)
        s = np.sin(theta)
        c = np.cos(theta)
        return c * c + (self.nus - q) * s * s


class _ModifiedPrueferSystem:
    """phi' = omega - (Q/omega) sin^2 phi with omega = sqrt(nu).

    Same pi-crossing structure as the classic phase (phi passes each
    multiple of pi exactly at a zero of v, always upward), but the
    right-hand side stays O(sqrt(nu)) smooth instead of sweeping through
    stiff plateau/jump cycles, so large nu stays accurate.
    """

    def __init__(self, Q: GridFunction, nus: np.ndarray):
        self._q = Q.spline()
        self.omega = np.sqrt(nus)

    def __call__(self, x, phi):
        q = self._q(x)
        s = np.sin(phi)
        return self.omega - (q / self.omega) * s * s


def _prufer_phase_at_one(Q: GridFunction, nus: np.ndarray) -> np.ndarray:
    """Oscillation phase at x=1 for each nu; floor(phase/pi) counts the
    zeros of the solution launched with v(0)=0, v'(0)>0."""
    nus = np.asarray(nus, dtype=float)
    q_sup = float(np.abs(Q.values).max())
    switch = max(100.0, 4.0 * q_sup)
    theta = np.empty_like(nus)

    low = nus <= switch
    if low.any():
        sys = _PrueferSystem(Q, nus[low])
        rate = math.sqrt(1.0 + float(np.max(np.abs(nus[low]))) + q_sup)
        (th,) = rk45_path(
            sys, 0.0, np.zeros(int(low.sum())), [1.0],
            rtol=1e-8, atol=1e-8, first_step=min(0.05, 0.5 / rate),
        )
        theta[low] = th
    high = ~low
    if high.any():
        sys = _ModifiedPrueferSystem(Q, nus[high])
        rate = float(np.max(sys.omega))
        (ph,) = rk45_path(
            sys, 0.0, np.zeros(int(high.sum())), [1.0],
            rtol=1e-8, atol=1e-8, first_step=min(0.05, 0.5 / rate),
        )
        theta[high] = ph
    return theta


class _LazyEigenfunctions(Sequence):
    def __init__(self, spectrum: "DirichletSpectrum"):
        self._spectrum = spectrum

    def __len__(self):
        return len(self._spectrum.alphas)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        return self._spectrum.eigenfunction(i + 1)


class DirichletSpectrum:
    """Zeros alpha_k of Delta (decreasing) with lazily computed,
    L2-normalized eigenfunctions (sign convention phi_k'(0) > 0)."""

    def __init__(self, Q: GridFunction, alphas: np.ndarray,
                 rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL):
        self.Q = Q
        self.alphas = np.asarray(alphas, dtype=float)
        self._rtol = rtol
        self._atol = atol
        self._cache = {}

    @property
    def count(self) -> int:
        return self.alphas.size

    @property
    def eigenfunctions(self) -> Sequence[GridFunction]:
        return _LazyEigenfunctions(self)

    def eigenfunction(self, k: int) -> GridFunction:
        return self.eigenfunction_pair(k)[0]

    def eigenfunction_pair(self, k: int):
        """(phi_k, phi_k') for the 1-based index k."""
        if not 1 <= k <= self.count:
            raise IndexError(f"eigenfunction index {k} out of range 1..{self.count}")
        if k not in self._cache:
            _, v, dv = integrate_schrodinger(
                self.Q, float(self.alphas[k - 1]), 0.0, 1.0, start=0,
                record_trajectory=True, rtol=self._rtol, atol=self._atol,
            )
            vals = v.values.copy()
            # a Dirichlet eigenfunction vanishes at the ends by definition;
            # the integrated values there are pure localization noise
            vals[0] = 0.0
            vals[-1] = 0.0
            norm = math.sqrt(integrate_grid(GridFunction(vals ** 2)))
            self._cache[k] = (GridFunction(vals / norm), GridFunction(dv.values / norm))
        return self._cache[k]


_COARSE_RTOL = 1e-8
_COARSE_WIDTH = 1e-3  # bracket width below which full tolerance is used


def dirichlet_spectrum(
    Q: GridFunction,
    count: int,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> DirichletSpectrum:
    """First `count` zeros of Delta, each bracketed by the Pruefer phase
    and refined by bisection (to 1e-6) plus secant on Delta itself.

    Initial brackets are the asymptotic guesses nu_k ~ (k pi)^2 + mean(Q)
    plus/minus a window, verified against the Pruefer oscillation count
    theta(1, nu) and repaired where the guess is off.  Bisection runs at
    a coarse integrator tolerance while the brackets are wide; the final
    digits come from full-tolerance sweeps.
    """
    if not 1 <= count <= MAX_SPECTRUM_COUNT:
        raise ValueError(f"count must be in 1..{MAX_SPECTRUM_COUNT}")

    q_vals = Q.values
    q_mean = float(q_vals.mean())
    q_sup = float(np.abs(q_vals).max())
    ks = np.arange(1, count + 1)
    k_pi = ks * math.pi

    nu_min = math.pi ** 2 - q_sup - 10.0
    nu_max = (count + 2) ** 2 * math.pi ** 2 + float(q_vals.max()) + 10.0

    guess = (ks * math.pi) ** 2 + q_mean
    width = max(4.0, 0.75 * float(q_vals.max() - q_vals.min()))
    # Brackets may never cross the midpoints between neighbouring guesses,
    # so each can hold at most the eigenvalue it is aimed at.
    mid = 0.5 * (guess[:-1] + guess[1:])
    floor_nu = np.concatenate([[nu_min], mid])
    ceil_nu = np.concatenate([mid, [0.5 * (guess[-1] + (count + 1) ** 2 * math.pi ** 2 + q_mean)]])
    lo_nu = np.maximum(guess - width, floor_nu)
    hi_nu = np.minimum(guess + width, ceil_nu)

    # Verify each bracket by its oscillation count: theta(1, nu) crosses
    # k pi exactly at nu_k, so the k-th bracket needs theta(lo) < k pi <
    # theta(hi).  Ends on the wrong side are pushed outward (never past
    # the midpoints, so the bracket cannot swallow a neighbour).
    for attempt in range(14):
        theta = _prufer_phase_at_one(Q, np.concatenate([lo_nu, hi_nu]))
        th_lo, th_hi = theta[:count], theta[count:]
        lo_bad = th_lo >= k_pi  # lower end overshot nu_k
        hi_bad = th_hi <= k_pi  # upper end undershot nu_k
        if not (lo_bad.any() or hi_bad.any()):
            break
        grow = width * 2.0 ** attempt
        lo_nu = np.where(lo_bad, np.maximum(lo_nu - grow, floor_nu), lo_nu)
        hi_nu = np.where(hi_bad, np.minimum(hi_nu + grow, ceil_nu), hi_nu)
    else:
        raise BracketError("Pruefer bracketing did not separate the spectrum")

    # Count anchor: at the half-integer phase point above the top bracket
    # the oscillation count must equal `count` (margin pi/2 in phase, far
    # above the integrator's phase error).
    nu_anchor = ((count + 0.5) * math.pi) ** 2 + q_mean
    (theta_top,) = _prufer_phase_at_one(Q, np.array([nu_anchor]))
    if abs(theta_top - (count + 0.5) * math.pi) > 0.45 * math.pi:
        raise BracketError(
            "oscillation count at the top of the search window is off"
        )

    # Refine on Delta with vectorized bisection + secant (mu = -nu).
    lo = -hi_nu  # mu lower ends (more negative)
    hi = -lo_nu

    def delta_at(mu_arr, sweep_rtol):
        y, log = integrate_schrodinger_batch(
            Q, mu_arr, np.tile([[0.0, 1.0]], (len(mu_arr), 1)), start=0,
            rtol=sweep_rtol, atol=atol,
        )
        return y[:, 0] * np.exp(log)

    coarse = max(rtol, _COARSE_RTOL)
    # Delta changes sign across each of its (simple) zeros, so the sign at
    # a point with exactly j zeros above it is (-1)^j.  The k-th bracket
    # must therefore show (-1)^k at its lower end and (-1)^(k-1) at its
    # upper end; ends with the wrong sign are pushed outward.
    sign_hi_expect = np.where(ks % 2 == 1, 1.0, -1.0)  # (-1)^(k-1)
    for attempt in range(14):
        f_lo = delta_at(lo, coarse)
        f_hi = delta_at(hi, coarse)
        lo_bad = np.sign(f_lo) == sign_hi_expect
        hi_bad = np.sign(f_hi) == -sign_hi_expect
        if not (lo_bad.any() or hi_bad.any()):
            break
        grow = width * 2.0 ** attempt
        lo = np.where(lo_bad, np.maximum(lo - grow, -ceil_nu), lo)
        hi = np.where(hi_bad, np.minimum(hi + grow, -floor_nu), hi)
    else:
        raise BracketError("characteristic function does not change sign in bracket")
    if np.any(np.sign(f_lo) == np.sign(f_hi)):
        raise BracketError("characteristic function does not change sign in bracket")

    while np.max(hi - lo) > 1e-6:
        sweep_rtol = coarse if np.max(hi - lo) > _COARSE_WIDTH else rtol
        mid = 0.5 * (lo + hi)
        f_mid = delta_at(mid, sweep_rtol)
        take_lo = f_lo * f_mid < 0
        hi = np.where(take_lo, mid, hi)
        f_hi = np.where(take_lo, f_mid, f_hi)
        lo = np.where(take_lo, lo, mid)
        f_lo = np.where(take_lo, f_lo, f_mid)

    x0, f0 = lo.copy(), f_lo.copy()
    x1, f1 = hi.copy(), f_hi.copy()
    tol = np.maximum(1e-12, 1e-13 * np.abs(lo))
    for _ in range(12):
        denom = np.where(f1 == f0, 1.0, f1 - f0)
        x2 = x1 - f1 * (x1 - x0) / denom
        x2 = np.clip(x2, lo, hi)
        if np.all(np.abs(x2 - x1) < tol):
            x1 = x2
            break
        f2 = delta_at(x2, rtol)
        inside = f_lo * f2 < 0
        hi = np.where(inside, x2, hi)
        lo = np.where(inside, lo, x2)
        f_lo = np.where(inside, f_lo, f2)
        x0, f0, x1, f1 = x1, f1, x2, f2

    alphas = np.sort(x1)[::-1]  # decreasing: alpha_1 > alpha_2 > ...
    return DirichletSpectrum(Q, alphas, rtol=rtol, atol=atol)


def hadamard_product(spectrum: DirichletSpectrum, C: float, mu: float) -> float:
    """Truncated product C * prod_k (1 - mu/alpha_k) over the stored zeros."""
    if spectrum.count == 0:
        raise ValueError("spectrum is empty")
    return float(C * np.prod(1.0 - mu / spectrum.alphas))
