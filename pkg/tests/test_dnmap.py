"""Per-harmonic DN blocks and torus-patch field synthesis."""
import math

import numpy as np
import pytest

from calderon_lab.dnmap import (
    BoundaryPatch,
    GaugeFieldCheck,
    MuBlockCache,
    check_admissibility,
    compare_models,
    disjoint_coefficients,
    dn_block,
    dn_block_batch,
    synthesize_gauge_check,
)
from calderon_lab.errors import AdmissibilityError, CalderonLabError
from calderon_lab.geometry import (
    ConformalFactor,
    WarpingProfile,
    conformal_rescale,
    transverse_spectrum,
)
from calderon_lab.grid import GridFunction

from oracles import delta_exact, weyl_exact

N = 2049
F1 = WarpingProfile.constant(1.0, 3, N)
V0 = GridFunction.constant(0.0, N)


def test_block_harmonic_extension():
    b = dn_block(F1, V0, 0.0, 0.0)
    assert np.abs(b.as_matrix() - np.array([[1.0, -1.0], [-1.0, 1.0]])).max() < 1e-10


def test_block_closed_form_at_pi_squared():
    b = dn_block(F1, V0, 0.0, math.pi**2)
    assert b.a00 == pytest.approx(math.pi / math.tanh(math.pi), rel=1e-10)
    assert b.a11 == pytest.approx(math.pi / math.tanh(math.pi), rel=1e-10)
    assert b.a01 == pytest.approx(-math.pi / math.sinh(math.pi), rel=1e-9)
    assert b.a10 == pytest.approx(-math.pi / math.sinh(math.pi), rel=1e-9)


def test_block_frequency_shift():
    # lambda shifts the effective spectral parameter: the mu=0 block of
    # lambda = pi^2/2 equals the zero-frequency closed form at mu' = -pi^2/2
    lam = math.pi**2 / 2
    b = dn_block(F1, V0, lam, 0.0)
    assert b.a00 == pytest.approx(-weyl_exact(-lam), abs=1e-9)
    assert b.a01 == pytest.approx(-1.0 / delta_exact(-lam), abs=1e-9)


def test_disjoint_coefficients_closed_form():
    sp = transverse_spectrum("torus2", 5)
    got = disjoint_coefficients(F1, V0, 0.0, sp, "gamma0->gamma1")
    expect = np.array([-1.0 / delta_exact(m) for m in sp.mus])
    assert np.abs((got - expect) / expect).max() < 1e-9
    mirrored = disjoint_coefficients(F1, V0, 0.0, sp, "gamma1->gamma0")
    assert np.abs(mirrored - got).max() < 1e-9  # symmetric profile
    with pytest.raises(CalderonLabError):
        disjoint_coefficients(F1, V0, 0.0, sp, "sideways")


def test_block_cache_shared():
    cache = MuBlockCache()
    first = dn_block_batch(F1, V0, 0.0, [1.0, 2.0], cache=cache)
    again = dn_block_batch(F1, V0, 0.0, [2.0, 1.0], cache=cache)
    assert again[0] is first[1] and again[1] is first[0]


def test_admissibility_rejects_near_eigenvalue():
    # lambda = pi^2 makes Delta vanish at mu = 0 for the flat cylinder
    with pytest.raises(AdmissibilityError):
        check_admissibility(F1, V0, math.pi**2, [0.0])
    check_admissibility(F1, V0, math.pi**2, [1.0, 4.0])  # other harmonics fine


def test_compare_identical_models():
    sp = transverse_spectrum("torus2", 6)
    cmp_ = compare_models((F1, V0, 2.0), (F1, V0, 2.0), sp)
    assert cmp_.off_diagonal_sup_rel == 0.0
    assert cmp_.diagonal_sup_abs == 0.0
    with pytest.raises(AdmissibilityError):
        compare_models((F1, V0, 2.0), (F1, V0, 3.0), sp)


def test_patch_geometry():
    p1 = BoundaryPatch("gamma0", ((0.0, 1.0), (0.0, 1.0)))
    p2 = BoundaryPatch("gamma0", ((2.0, 3.0), (0.0, 1.0)))
    p3 = BoundaryPatch("gamma1", ((0.0, 1.0), (0.0, 1.0)))
    assert p1.disjoint_from(p2)
    assert p1.disjoint_from(p3)
    assert not p1.disjoint_from(p1)
    t1, t2 = p1.interior_grid(16)
    assert t1.min() > 0.0 and t1.max() < 1.0 and t1.size == 16
    with pytest.raises(CalderonLabError):
        BoundaryPatch("gamma0", ((1.0, 1.0), (0.0, 1.0)))
    with pytest.raises(CalderonLabError):
        BoundaryPatch("side", ((0.0, 1.0), (0.0, 1.0)))


PD = BoundaryPatch("gamma0", ((0.5, 1.5), (0.5, 1.5)))
PN = BoundaryPatch("gamma0", ((3.0, 4.5), (3.0, 4.5)))


def test_synthesis_trivial_factor():
    res = synthesize_gauge_check(F1, 3, 0.0, ConformalFactor.identity(N), (PD, PN), 8)
    assert isinstance(res, GaugeFieldCheck)
    assert res.sup_on_neumann == 0.0
    assert res.sup_on_dirichlet == 0.0
    assert res.kappa == 0.0


def test_synthesis_preconditions():
    c = ConformalFactor.from_callables(
        lambda x: 1.0 + x, lambda x: 1.0 + 0 * x, lambda x: 0 * x, N
    )
    bad_c = ConformalFactor.from_callables(
        lambda x: 2.0 + 0 * x, lambda x: 0 * x, lambda x: 0 * x, N
    )
    with pytest.raises(AdmissibilityError):
        synthesize_gauge_check(F1, 3, 0.0, bad_c, (PD, PN), 8)
    with pytest.raises(AdmissibilityError):
        synthesize_gauge_check(F1, 3, 0.0, c, (PD, PD), 8)
    overlapping = BoundaryPatch("gamma0", ((1.0, 2.0), (0.5, 1.5)))
    with pytest.raises(AdmissibilityError):
        synthesize_gauge_check(F1, 3, 0.0, c, (PD, overlapping), 8)


def test_synthesis_identity_with_linear_factor():
    # c = 1 + x solves nothing, but the multiplier difference is still
    # dominated by the constant kappa; the control field on the source
    # patch must look like kappa * psi
    c = ConformalFactor.from_callables(
        lambda x: 1.0 + x, lambda x: 1.0 + 0 * x, lambda x: 0 * x, N
    )
    res = synthesize_gauge_check(F1, 3, 0.0, c, (PD, PN), 16)
    assert res.sup_on_dirichlet > 0.1
    assert res.kappa == -1.0
