"""Adaptive Dormand-Prince 4(5) integration with overflow-safe scaling.

The reduced cylinder equation  -v'' + Q(x) v = -mu v  has solutions that
grow like exp(sqrt(mu) x) for large positive mu.  To evaluate spectral
quantities at mu ~ 1e4 without overflow, the integrator keeps the state
(v, v') inside [1e-4, 1e4] and accumulates the factored-out exponential
in a per-solution log_scale, so value * exp(log_scale) is the true
solution.

All routines are batched: many spectral parameters (and the two Cauchy
columns of a fundamental system) integrate together with shared adaptive
steps, which is what makes the per-harmonic DN sweeps affordable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IntegratorFailure
from .grid import GridFunction

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

# Renormalization band for (value, derivative) mantissas.
SCALE_HIGH = 1e4
SCALE_LOW = 1e-4

# Dormand-Prince 4(5) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_MIN_STEP = 1e-14


@dataclass(frozen=True)
class ScaledSolution:
    """(value, derivative) * exp(log_scale) at a point."""

    value: float
    derivative: float
    log_scale: float = 0.0

    @property
    def true_value(self) -> float:
        return self.value * np.exp(self.log_scale)

    @property
    def true_derivative(self) -> float:
        return self.derivative * np.exp(self.log_scale)


def rk45_path(
    f: Callable,
    x0: float,
    y0: np.ndarray,
    checkpoints: Sequence[float],
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    error_scale: Optional[Callable] = None,
    post_accept: Optional[Callable] = None,
    snapshot: Optional[Callable] = None,
    first_step: Optional[float] = None,
):
    """Integrate y' = f(x, y) from x0 through the sorted checkpoints.

    Steps always land exactly on each checkpoint.  Returns the list of
    snapshot(x, y) results at the checkpoints (state copies when no
    snapshot is given).  `post_accept(x, y) -> (y, rescaled)` runs after
    every accepted step (used for renormalization); `error_scale(y_old,
    y_new) -> array` supplies the per-component tolerance scale,
    defaulting to atol + rtol * max(|y_old|, |y_new|).
    """
    checkpoints = np.asarray(checkpoints, dtype=float)
    direction = 1.0 if checkpoints[-1] >= x0 else -1.0
    y = np.array(y0, dtype=float, copy=True)
    x = float(x0)
    span = abs(checkpoints[-1] - x0)
    h = direction * (first_step if first_step is not None else min(0.05, span))

    out = []
    k1 = f(x, y)
    ks = [None] * 7
    for target in checkpoints:
        while direction * (target - x) > 1e-15 * max(1.0, abs(target)):
            if abs(h) < _MIN_STEP:
                raise IntegratorFailure("step size underflow", x=x)
            if direction * (x + h - target) >= 0:
                h = target - x
                hit = True
            else:
                hit = False

            ks[0] = k1
            bad = False
            for i in range(1, 7):
                yi = y + h * sum(a * ks[j] for j, a in enumerate(_A[i]))
                ks[i] = f(x + _C[i] * h, yi)
                if not np.all(np.isfinite(ks[i])):
                    bad = True
                    break
            if bad:
                h *= 0.25
                continue

            y_new = y + h * sum(b * ks[i] for i, b in enumerate(_B5) if b != 0.0)
            err = h * sum(e * ks[i] for i, e in enumerate(_E) if e != 0.0)
            if not np.all(np.isfinite(y_new)):
                h *= 0.25
                continue

            if error_scale is not None:
                scale = error_scale(y, y_new)
            else:
                scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.max(np.abs(err) / scale))

            if err_norm <= 1.0:
                x = target if hit else x + h
                y = y_new
                k1 = ks[6]  # FSAL
                if post_accept is not None:
                    y, rescaled = post_accept(x, y)
                    if rescaled:
                        k1 = f(x, y)
                factor = 5.0 if err_norm == 0.0 else min(5.0, 0.9 * err_norm ** -0.2)
                h = h * max(0.2, factor)
            else:
                h = h * max(0.2, 0.9 * err_norm ** -0.2)
        out.append(snapshot(x, y) if snapshot is not None else y.copy())
    return out


class _SchrodingerSystem:
    """Batched right-hand side for v'' = (Q(x) + mu) v.

    State layout: (m, 2) rows of (v, v'), one row per (mu, column) pair.
    Renormalization is per row, with log scales accumulated in
    `self.log_scale`.
    """

    def __init__(self, Q: GridFunction, mu_rows: np.ndarray):
        self._q = Q.spline()
        self.mu = np.asarray(mu_rows, dtype=float)
        self.log_scale = np.zeros(self.mu.size)

    def __call__(self, x, y):
        q = self._q(x)
        out = np.empty_like(y)
        out[:, 0] = y[:, 1]
        out[:, 1] = (q + self.mu) * y[:, 0]
        return out

    def error_scale_fn(self, rtol, atol):
        def scale(y_old, y_new):
            mag = np.maximum(np.abs(y_old), np.abs(y_new)).max(axis=1)
            return (atol + rtol * mag)[:, None]

        return scale

    def post_accept(self, x, y):
        mag = np.abs(y).max(axis=1)
        mask = (mag > SCALE_HIGH) | ((mag < SCALE_LOW) & (mag > 0.0))
        if not np.any(mask):
            return y, False
        y[mask] /= mag[mask, None]
        self.log_scale[mask] += np.log(mag[mask])
        return y, True


def _first_step_guess(Q: GridFunction, mus: np.ndarray) -> float:
    rate = np.sqrt(1.0 + np.max(np.abs(mus)) + np.abs(Q.values).max())
    return min(0.05, 0.5 / rate)


def integrate_schrodinger_batch(
    Q: GridFunction,
    mus,
    inits,
    start: int = 0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
):
    """Integrate -v'' + Q v = -mu v across [0,1] for many rows at once.

    mus, inits: arrays of shape (m,) and (m, 2).  `start` is 0 or 1.
    Returns (y, log_scale): the (m, 2) mantissas at the far endpoint and
    the accumulated per-row log scales.
    """
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    y0 = np.array(inits, dtype=float).reshape(mus.size, 2)
    sys = _SchrodingerSystem(Q, mus)
    x0, x1 = (0.0, 1.0) if start == 0 else (1.0, 0.0)
    (y,) = rk45_path(
        sys,
        x0,
        y0,
        [x1],
        rtol=rtol,
        atol=atol,
        error_scale=sys.error_scale_fn(rtol, atol),
        post_accept=sys.post_accept,
        first_step=_first_step_guess(Q, mus),
    )
    return y, sys.log_scale.copy()


def integrate_schrodinger(
    Q: GridFunction,
    mu: float,
    init_value: float,
    init_derivative: float,
    start: int = 0,
    record_trajectory: bool = False,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
):
    """Single-solution integration of -v'' + Q v = -mu v over [0,1].

    Returns a ScaledSolution at the far endpoint; with
    record_trajectory=True returns (solution, v_traj, dv_traj) where the
    trajectories hold true values on Q's grid (so this path is meant for
    solutions that stay in double range, e.g. eigenfunctions).
    """
    if start not in (0, 1):
        raise ValueError("start must be 0 or 1")
    if init_value == 0.0 and init_derivative == 0.0:
        raise ValueError("initial data must not both be zero")

    if not record_trajectory:
        y, log = integrate_schrodinger_batch(
            Q, [mu], [[init_value, init_derivative]], start=start, rtol=rtol, atol=atol
        )
        return ScaledSolution(float(y[0, 0]), float(y[0, 1]), float(log[0]))

    sys = _SchrodingerSystem(Q, np.array([float(mu)]))
    nodes = Q.x if start == 0 else Q.x[::-1]

    def snap(x, y):
        return (y[0, 0], y[0, 1], sys.log_scale[0])

    states = rk45_path(
        sys,
        nodes[0],
        np.array([[float(init_value), float(init_derivative)]]),
        nodes[1:],
        rtol=rtol,
        atol=atol,
        error_scale=sys.error_scale_fn(rtol, atol),
        post_accept=sys.post_accept,
        snapshot=snap,
        first_step=_first_step_guess(Q, np.array([float(mu)])),
    )

    n = nodes.size
    vals = np.empty(n)
    ders = np.empty(n)
    vals[0], ders[0] = init_value, init_derivative
    for i, (v, dv, ls) in enumerate(states, start=1):
        s = np.exp(ls)
        vals[i] = v * s
        ders[i] = dv * s
    if start == 1:
        vals = vals[::-1]
        ders = ders[::-1]
    final = states[-1]
    sol = ScaledSolution(float(final[0]), float(final[1]), float(final[2]))
    return sol, GridFunction(vals), GridFunction(ders)
