"""Warping profiles, conformal factors and transverse spectra."""
import json
import math

import numpy as np
import pytest

from calderon_lab.errors import CalderonLabError, PositivityError
from calderon_lab.geometry import (
    ConformalFactor,
    TransverseSpectrum,
    WarpingProfile,
    conformal_rescale,
    effective_potential,
    potential_of_conformal_factor,
    transverse_spectrum,
)
from calderon_lab.grid import GridFunction

N = 2049


def _exp_profile(rate, n_dim=3):
    return WarpingProfile.from_callables(
        lambda x: np.exp(rate * x),
        lambda x: rate * np.exp(rate * x),
        lambda x: rate**2 * np.exp(rate * x),
        n_dim, N,
    )


def test_profile_validation():
    with pytest.raises(PositivityError):
        WarpingProfile.from_callables(lambda x: x - 0.5, lambda x: 1 + 0 * x,
                                      lambda x: 0 * x, 3, N)
    with pytest.raises(CalderonLabError):
        # inconsistent derivative must be caught
        WarpingProfile(
            GridFunction.from_callable(lambda x: 1 + x, N),
            GridFunction.constant(5.0, N),
            GridFunction.constant(0.0, N),
            3,
        )


def test_q_potential_exponential():
    # f = e^{ax}: q_f = (n-2)[a^2 + (n-3)a^2] = (n-2)^2 a^2, constant
    for n_dim in (3, 4, 5):
        prof = _exp_profile(0.5, n_dim)
        q = prof.q_potential()
        expect = (n_dim - 2) ** 2 * 0.25
        assert np.abs(q.values - expect).max() < 1e-12


def test_q_potential_scale_invariance():
    # q_f only sees ratios f''/f and (f'/f)^2, so scaling f by 2 (exact
    # in binary) must reproduce the same values bit for bit
    prof = WarpingProfile.from_values(1.0 + 0.3 * np.sin(np.pi * np.linspace(0, 1, N)))
    scaled = WarpingProfile(
        GridFunction(2.0 * prof.f.values),
        GridFunction(2.0 * prof.df.values),
        GridFunction(2.0 * prof.d2f.values),
        3,
    )
    assert np.array_equal(prof.q_potential().values, scaled.q_potential().values)


def test_q_potential_dim2_is_zero():
    prof = _exp_profile(0.7, 2)
    assert np.all(prof.q_potential().values == 0.0)


def test_effective_potential_flat():
    prof = WarpingProfile.constant(1.0, 3, N)
    V = GridFunction.from_callable(lambda x: 2 + np.sin(np.pi * x), N)
    Q = effective_potential(prof, V, 5.0)
    assert np.abs(Q.values - (V.values - 5.0)).max() == 0.0


def test_conformal_rescale_product_rule():
    prof = _exp_profile(0.3)
    c = ConformalFactor.from_callables(
        lambda x: 1 + 0.2 * np.sin(np.pi * x),
        lambda x: 0.2 * np.pi * np.cos(np.pi * x),
        lambda x: -0.2 * np.pi**2 * np.sin(np.pi * x),
        N,
    )
    resc = conformal_rescale(prof, c)
    spline_check = GridFunction(resc.f.values).spline().derivative()(prof.x)
    assert np.abs(spline_check - resc.df.values).max() < 1e-6


def test_link_identity_randomized():
    rng = np.random.default_rng(3)
    for trial in range(5):
        lam = [0.0, 2.0, -3.0][trial % 3]
        n_dim = [3, 4, 5][trial % 3]
        a, b = rng.uniform(0.9, 1.3), rng.uniform(-0.2, 0.2)
        f = WarpingProfile.from_callables(
            lambda x: a + b * np.sin(np.pi * x),
            lambda x: b * np.pi * np.cos(np.pi * x),
            lambda x: -b * np.pi**2 * np.sin(np.pi * x),
            n_dim, N,
        )
        d = rng.uniform(-0.2, 0.2)
        c = ConformalFactor.from_callables(
            lambda x: 1.0 + d * x * (1 - x),
            lambda x: d * (1 - 2 * x),
            lambda x: -2 * d + 0 * x,
            N,
        )
        v_gen = potential_of_conformal_factor(f, c, lam)
        lhs = effective_potential(conformal_rescale(f, c), 0.0, lam)
        rhs = effective_potential(f, v_gen, lam)
        assert np.abs(lhs.values - rhs.values).max() < 1e-10


def test_potential_of_identity_factor_is_zero():
    prof = _exp_profile(0.4)
    v = potential_of_conformal_factor(prof, ConformalFactor.identity(N), 2.0)
    assert np.abs(v.values).max() == 0.0


def test_circle_spectrum():
    sp = transverse_spectrum("circle", 4)
    assert sp.entries == ((0.0, 1), (1.0, 2), (4.0, 2), (9.0, 2))


def test_torus2_spectrum():
    sp = transverse_spectrum("torus2", 5)
    # lattice norms j^2+l^2 with their representation counts
    assert sp.entries == ((0.0, 1), (1.0, 4), (2.0, 4), (4.0, 4), (5.0, 8))
    assert len(transverse_spectrum("torus2", 20)) == 20


def test_custom_spectrum_from_json(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps([
        {"mu": 0.0, "multiplicity": 1},
        {"mu": 2.5, "multiplicity": 3},
    ]))
    sp = TransverseSpectrum.from_json(str(path))
    assert sp.entries == ((0.0, 1), (2.5, 3))


def test_spectrum_validation():
    with pytest.raises(CalderonLabError):
        TransverseSpectrum(((1.0, 1),))  # must start at zero
    with pytest.raises(CalderonLabError):
        TransverseSpectrum(((0.0, 1), (2.0, 2), (1.0, 2)))  # not increasing
    with pytest.raises(CalderonLabError):
        transverse_spectrum("torus3", 5)
