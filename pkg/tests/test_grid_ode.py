"""Grid functions, the batched integrator and the banded solver."""
import math

import numpy as np
import pytest

from calderon_lab.errors import BracketError, CalderonLabError, SingularSystemError
from calderon_lab.grid import GridFunction, integral_to_right, integrate_grid
from calderon_lab.ode import integrate_schrodinger, integrate_schrodinger_batch, rk45_path
from calderon_lab.solvers import find_root, second_difference_dirichlet, solve_banded_bvp


def test_grid_function_basics():
    g = GridFunction.from_callable(np.sin, 129)
    assert g.n_points == 129
    assert g(0.5) == pytest.approx(math.sin(0.5), abs=1e-9)
    with pytest.raises(CalderonLabError):
        GridFunction(np.ones(10))  # too coarse
    with pytest.raises(CalderonLabError):
        GridFunction([np.nan] * 129)
    # values are read-only
    with pytest.raises(ValueError):
        g.values[0] = 3.0


def test_quadrature():
    g = GridFunction.from_callable(lambda x: np.exp(x), 2049)
    assert integrate_grid(g) == pytest.approx(math.e - 1.0, rel=1e-12)
    tail = integral_to_right(g)
    assert tail.values[0] == pytest.approx(math.e - 1.0, rel=1e-10)
    assert tail.values[-1] == 0.0


def test_rk45_scalar_exponential():
    out = rk45_path(lambda x, y: y, 0.0, np.array([1.0]), [0.5, 1.0], rtol=1e-12, atol=1e-14)
    assert out[0][0] == pytest.approx(math.exp(0.5), rel=1e-10)
    assert out[1][0] == pytest.approx(math.e, rel=1e-10)


def test_rk45_backward():
    out = rk45_path(lambda x, y: -2.0 * x * y, 1.0, np.array([1.0]), [0.0], rtol=1e-12)
    assert out[0][0] == pytest.approx(math.e, rel=1e-9)


def test_schrodinger_batch_closed_form():
    # v'' = mu v with v(0)=0, v'(0)=1  ->  v = sinh(sqrt(mu) x)/sqrt(mu)
    Q = GridFunction.constant(0.0, 2049)
    mus = np.array([1.0, 4.0, 25.0])
    y, logs = integrate_schrodinger_batch(Q, mus, [[0.0, 1.0]] * 3, start=0)
    for i, mu in enumerate(mus):
        r = math.sqrt(mu)
        got = y[i, 0] * math.exp(logs[i])
        assert got == pytest.approx(math.sinh(r) / r, rel=1e-9)


def test_schrodinger_renormalization_scales():
    # at mu = 2500 the raw solution reaches ~e^50; mantissas must stay bounded
    Q = GridFunction.constant(0.0, 2049)
    y, logs = integrate_schrodinger_batch(Q, [2500.0], [[0.0, 1.0]], start=0)
    assert abs(y[0, 0]) < 1e5
    assert math.log(abs(y[0, 0])) + logs[0] == pytest.approx(
        math.log(math.sinh(50.0) / 50.0), abs=1e-8
    )


def test_schrodinger_trajectory():
    Q = GridFunction.constant(0.0, 513)
    sol, v, dv = integrate_schrodinger(Q, -math.pi**2, 0.0, 1.0, start=0, record_trajectory=True)
    x = v.x
    expect = np.sin(math.pi * x) / math.pi
    assert np.abs(v.values - expect).max() < 1e-9


def test_banded_bvp_exact_cubic():
    # the 3-point stencil is exact on cubics, so the solve must be too
    n = 257
    x = np.linspace(0, 1, n)
    u_exact = x**3 - 2 * x**2 + x + 1
    rhs = 6 * x - 4.0
    sub, diag, sup = second_difference_dirichlet(n)
    u = solve_banded_bvp((sub, diag, sup), rhs, u_exact[0], u_exact[-1])
    assert np.abs(u.values - u_exact).max() < 5e-11


def test_banded_bvp_rejects_singular():
    n = 65
    sub, diag, sup = second_difference_dirichlet(n)
    with pytest.raises(SingularSystemError):
        solve_banded_bvp((sub, diag, sup), np.zeros(n - 4), 0.0, 1.0)


def test_find_root():
    r = find_root(lambda v: v**2 - 2.0, (0.0, 2.0))
    assert r == pytest.approx(math.sqrt(2.0), abs=1e-12)
    with pytest.raises(BracketError):
        find_root(lambda v: v**2 + 1.0, (0.0, 2.0))
