"""Per-harmonic Dirichlet-to-Neumann blocks and boundary-field synthesis.

On the warped cylinder the DN map diagonalizes over transverse
harmonics: for each transverse eigenvalue mu the 2x2 block acting on
(end data at x=0, end data at x=1) is

    a00 = (n-2) f'(0)/f^3(0) - M(mu)/f^2(0)
    a01 = -f^(n-2)(1) / (f^n(0) Delta(mu))      (data on Gamma1, read on Gamma0)
    a10 = -f^(n-2)(0) / (f^n(1) Delta(mu))      (data on Gamma0, read on Gamma1)
    a11 = -(n-2) f'(1)/f^3(1) - N(mu)/f^2(1)

with Delta, M, N the characteristic function and Weyl functions of the
effective potential Q = q_f + (V - lambda) f^4.  When Dirichlet and
Neumann patches sit in different ends, the off-diagonal entries are the
complete content of the measured map; same-end data also sees the Weyl
functions through the diagonal.

The two off-diagonal entries here are evaluated from *independent*
integrations (Delta from the left sweep for a01, from the right sweep
for a10), so their algebraic cross-consistency relation

    a01 f^n(0)/f^(n-2)(1) = a10 f^n(1)/f^(n-2)(0)  ( = -1/Delta )

is a real numerical check, not an identity of the code path.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import AdmissibilityError, CalderonLabError
from .geometry import (
    ConformalFactor,
    TransverseSpectrum,
    WarpingProfile,
    conformal_rescale,
    effective_potential,
)
from .grid import GridFunction
from .sturm import spectral_data_batch

ADMISSIBILITY_THRESHOLD = 1e-8
CROSS_CONSISTENCY_TOL = 1e-10
_FFT_SAMPLES = 8192
FIELD_GRID = 64

GAMMA0 = "gamma0"
GAMMA1 = "gamma1"


@dataclass(frozen=True)
class DnBlock:
    """2x2 DN block at one transverse eigenvalue."""

    mu: float
    a00: float
    a01: float
    a10: float
    a11: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.a00, self.a01], [self.a10, self.a11]])


@dataclass(frozen=True)
class BoundaryPatch:
    """Open angular rectangle on one end torus of the cylinder."""

    component: str
    rectangle: Tuple[Tuple[float, float], Tuple[float, float]]

    def __post_init__(self):
        if self.component not in (GAMMA0, GAMMA1):
            raise CalderonLabError(f"unknown boundary component {self.component!r}")
        for a, b in self.rectangle:
            if not b > a:
                raise CalderonLabError("patch rectangle must be a nonempty open box")
            if b - a > 2.0 * math.pi:
                raise CalderonLabError("patch interval exceeds a full angle")

    def disjoint_from(self, other: "BoundaryPatch") -> bool:
        if self.component != other.component:
            return True
        for (a, b), (c, d) in zip(self.rectangle, other.rectangle):
            if b <= c or d <= a:
                return True
        return False

    def interior_grid(self, n: int = FIELD_GRID) -> Tuple[np.ndarray, np.ndarray]:
        """n x n uniform angles strictly inside the open rectangle."""
        (a, b), (c, d) = self.rectangle
        t1 = np.linspace(a, b, n + 2)[1:-1]
        t2 = np.linspace(c, d, n + 2)[1:-1]
        return t1, t2


@dataclass
class DnComparison:
    """Harmonic-wise comparison of two cylinder models over one mu list."""

    off_diagonal_sup_rel: float
    diagonal_sup_abs: float
    per_mu: List[dict] = field(default_factory=list)


class MuBlockCache:
    """Write-once cache of DN blocks keyed by rounded mu.

    Insertion is serialized; lookups are lock-free reads of an
    append-only dict, so concurrent sweeps over harmonics can share one
    instance."""

    def __init__(self):
        self._data: Dict[float, DnBlock] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(mu: float) -> float:
        return round(float(mu), 9)

    def get(self, mu: float) -> Optional[DnBlock]:
        return self._data.get(self.key(mu))

    def insert(self, blocks: Sequence[DnBlock]) -> None:
        with self._lock:
            for b in blocks:
                self._data.setdefault(self.key(b.mu), b)


def _boundary_coefficients(f: WarpingProfile):
    nd = f.n_dim
    f0, f1 = float(f.f.values[0]), float(f.f.values[-1])
    df0, df1 = float(f.df.values[0]), float(f.df.values[-1])
    return {
        "edge0": (nd - 2) * df0 / f0 ** 3,
        "edge1": (nd - 2) * df1 / f1 ** 3,
        "inv_f0_sq": 1.0 / f0 ** 2,
        "inv_f1_sq": 1.0 / f1 ** 2,
        # off-diagonal numerators/denominators
        "num01": f1 ** (nd - 2),
        "den01": f0 ** nd,
        "num10": f0 ** (nd - 2),
        "den10": f1 ** nd,
    }


def dn_block_batch(
    f: WarpingProfile,
    V,
    lam: float,
    mus,
    cache: Optional[MuBlockCache] = None,
) -> List[DnBlock]:
    """DN blocks at many transverse eigenvalues (one batched sweep pair).

    Each block's off-diagonal pair is checked against the
    cross-consistency relation at 1e-10 relative before it is returned.
    """
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    out: List[Optional[DnBlock]] = [None] * mus.size
    missing_idx = []
    for i, mu in enumerate(mus):
        hit = cache.get(mu) if cache is not None else None
        if hit is not None:
            out[i] = hit
        else:
            missing_idx.append(i)
    if not missing_idx:
        return out  # type: ignore[return-value]

    v = V if isinstance(V, GridFunction) else GridFunction.constant(float(V), f.n_points)
    Q = effective_potential(f, v, lam)
    data = spectral_data_batch(Q, mus[missing_idx])
    coef = _boundary_coefficients(f)

    fresh = []
    for i, sd in zip(missing_idx, data):
        inv_delta_left = 1.0 / sd.delta.value
        inv_delta_right = 1.0 / sd.delta_from_right.value
        a00 = coef["edge0"] - sd.m * coef["inv_f0_sq"]
        a11 = -coef["edge1"] - sd.n_fn * coef["inv_f1_sq"]
        a01 = -coef["num01"] / coef["den01"] * inv_delta_left
        a10 = -coef["num10"] / coef["den10"] * inv_delta_right

        lhs = a01 * coef["den01"] / coef["num01"]
        rhs = a10 * coef["den10"] / coef["num10"]
        if abs(lhs - rhs) > CROSS_CONSISTENCY_TOL * max(abs(lhs), abs(rhs)):
            raise CalderonLabError(
                f"off-diagonal cross-consistency fails at mu={sd.mu:.9g}: "
                f"{lhs:.12e} vs {rhs:.12e}"
            )
        block = DnBlock(mu=float(sd.mu), a00=a00, a01=a01, a10=a10, a11=a11)
        out[i] = block
        fresh.append(block)
    if cache is not None:
        cache.insert(fresh)
    return out  # type: ignore[return-value]


def dn_block(f: WarpingProfile, V, lam: float, mu: float) -> DnBlock:
    return dn_block_batch(f, V, lam, [mu])[0]


def check_admissibility(f: WarpingProfile, V, lam: float, mus) -> None:
    """Reject a frequency whose characteristic function nearly vanishes
    at some transverse eigenvalue (numerical surrogate for lambda lying
    in the Dirichlet spectrum of some harmonic)."""
    v = V if isinstance(V, GridFunction) else GridFunction.constant(float(V), f.n_points)
    Q = effective_potential(f, v, lam)
    data = spectral_data_batch(Q, np.asarray(mus, dtype=float), check_poles=False)
    for k, sd in enumerate(data):
        if abs(sd.delta.value) < ADMISSIBILITY_THRESHOLD:
            raise AdmissibilityError(
                f"frequency is spectrally inadmissible: |Delta(mu_{k})| = "
                f"{abs(sd.delta.value):.3e} at mu={sd.mu:.9g}"
            )


def disjoint_coefficients(
    f: WarpingProfile,
    V,
    lam: float,
    spectrum: TransverseSpectrum,
    direction: str = "gamma0->gamma1",
    cache: Optional[MuBlockCache] = None,
) -> np.ndarray:
    """Per-harmonic coefficients of the disjoint-data (cross-end) DN map.

    direction 'gamma0->gamma1' reads the a10 entries (Dirichlet data on
    the x=0 end, flux on the x=1 end); 'gamma1->gamma0' the a01 entries.
    """
    if direction not in ("gamma0->gamma1", "gamma1->gamma0"):
        raise CalderonLabError(f"unknown direction {direction!r}")
    mus = spectrum.mus
    check_admissibility(f, V, lam, mus)
    blocks = dn_block_batch(f, V, lam, mus, cache=cache)
    if direction == "gamma0->gamma1":
        return np.array([b.a10 for b in blocks])
    return np.array([b.a01 for b in blocks])


def compare_models(
    model_a: Tuple[WarpingProfile, GridFunction, float],
    model_b: Tuple[WarpingProfile, GridFunction, float],
    spectrum: TransverseSpectrum,
    n_harmonics: Optional[int] = None,
) -> DnComparison:
    """Harmonic-wise DN comparison of two cylinder models at one frequency.

    off_diagonal_sup_rel is the worst relative deviation of the
    cross-end entries; diagonal_sup_abs the worst absolute deviation of
    the x=0 same-end entries.
    """
    fa, va, lam_a = model_a
    fb, vb, lam_b = model_b
    if lam_a != lam_b:
        raise AdmissibilityError("models must be compared at the same frequency")
    mus = spectrum.mus
    if n_harmonics is not None:
        mus = mus[:n_harmonics]
    check_admissibility(fa, va, lam_a, mus)
    check_admissibility(fb, vb, lam_b, mus)
    blocks_a = dn_block_batch(fa, va, lam_a, mus)
    blocks_b = dn_block_batch(fb, vb, lam_b, mus)

    off_rel = 0.0
    diag_abs = 0.0
    rows = []
    for ba, bb in zip(blocks_a, blocks_b):
        rel01 = abs(ba.a01 - bb.a01) / abs(ba.a01)
        rel10 = abs(ba.a10 - bb.a10) / abs(ba.a10)
        off_rel = max(off_rel, rel01, rel10)
        diag_abs = max(diag_abs, abs(ba.a00 - bb.a00))
        rows.append(
            {
                "mu": ba.mu,
                "a00_a": ba.a00, "a00_b": bb.a00,
                "a01_a": ba.a01, "a01_b": bb.a01,
                "a10_a": ba.a10, "a10_b": bb.a10,
                "a11_a": ba.a11, "a11_b": bb.a11,
            }
        )
    return DnComparison(
        off_diagonal_sup_rel=off_rel, diagonal_sup_abs=diag_abs, per_mu=rows
    )


# ---------------------------------------------------------------------------
# Boundary-field synthesis on torus patches
# ---------------------------------------------------------------------------


def _axis_bump_coefficients(interval: Tuple[float, float], n_modes: int) -> np.ndarray:
    """Fourier coefficients (indices -n..n) of the C^2 bump (1-s^2)^3
    supported on the interval, as a 2pi-periodic function."""
    a, b = interval
    theta = np.linspace(0.0, 2.0 * math.pi, _FFT_SAMPLES, endpoint=False)
    s = (2.0 * theta - (a + b)) / (b - a)
    vals = np.where(np.abs(s) < 1.0, (1.0 - np.minimum(s * s, 1.0)) ** 3, 0.0)
    spec = np.fft.fft(vals) / _FFT_SAMPLES
    idx = np.arange(-n_modes, n_modes + 1)
    return spec[idx % _FFT_SAMPLES]


def _axis_bump_values(interval: Tuple[float, float], theta: np.ndarray) -> np.ndarray:
    a, b = interval
    s = (2.0 * theta - (a + b)) / (b - a)
    return np.where(np.abs(s) < 1.0, (1.0 - np.minimum(s * s, 1.0)) ** 3, 0.0)


def _synthesize(coef: np.ndarray, t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """Evaluate sum_{j,l} coef[j,l] e^{i(j t1 + l t2)} on the grid."""
    n = (coef.shape[0] - 1) // 2
    idx = np.arange(-n, n + 1)
    e1 = np.exp(1j * np.outer(t1, idx))
    e2 = np.exp(1j * np.outer(idx, t2))
    return np.real(e1 @ coef @ e2)


@dataclass
class GaugeFieldCheck:
    """Synthesized DN difference fields for a gauge-related metric pair."""

    kappa: float
    n_modes: int
    sup_on_neumann: float
    sup_on_dirichlet: float
    identity_defect: float
    field_neumann: np.ndarray
    field_dirichlet: np.ndarray
    psi_dirichlet: np.ndarray


def synthesize_gauge_check(
    f: WarpingProfile,
    n_dim: int,
    lam: float,
    c: ConformalFactor,
    patches: Tuple[BoundaryPatch, BoundaryPatch],
    n_modes: int,
    cache_a: Optional[MuBlockCache] = None,
    cache_b: Optional[MuBlockCache] = None,
) -> GaugeFieldCheck:
    """Difference of the two DN responses to a bump supported in the
    Dirichlet patch, for the metrics g and c^4 g at frequency lam.

    Both patches must lie on the x=0 end torus, where c = 1; the theory
    predicts the difference field equals kappa * psi with the constant
    kappa = -(n-2) c'(0)/f^2(0), hence vanishes on the (disjoint)
    Neumann patch up to the Fourier-truncation tail.
    """
    if n_dim != f.n_dim:
        raise AdmissibilityError(
            f"n_dim={n_dim} conflicts with the profile dimension {f.n_dim}"
        )
    patch_d, patch_n = patches
    if patch_d.component != GAMMA0 or patch_n.component != GAMMA0:
        raise AdmissibilityError("both patches must lie on the x=0 end")
    if not patch_d.disjoint_from(patch_n):
        raise AdmissibilityError("Dirichlet and Neumann patches must be disjoint")
    if abs(float(c.c.values[0]) - 1.0) > 1e-12:
        raise AdmissibilityError("conformal factor must equal 1 on the x=0 end")
    if n_modes < 1:
        raise CalderonLabError("n_modes must be positive")

    f_rescaled = conformal_rescale(f, c)
    kappa = -(n_dim - 2) * float(c.dc.values[0]) / float(f.f.values[0]) ** 2

    idx = np.arange(-n_modes, n_modes + 1)
    mu_grid = (idx[:, None] ** 2 + idx[None, :] ** 2).astype(float)
    distinct = np.unique(mu_grid)

    zero = GridFunction.constant(0.0, f.n_points)
    check_admissibility(f, zero, lam, distinct)
    check_admissibility(f_rescaled, zero, lam, distinct)
    blocks_a = dn_block_batch(f, zero, lam, distinct, cache=cache_a)
    blocks_b = dn_block_batch(f_rescaled, zero, lam, distinct, cache=cache_b)
    diff_by_mu = {
        MuBlockCache.key(ba.mu): ba.a00 - bb.a00
        for ba, bb in zip(blocks_a, blocks_b)
    }
    mult = np.vectorize(lambda m: diff_by_mu[MuBlockCache.key(m)])(mu_grid)

    coef = np.outer(
        _axis_bump_coefficients(patch_d.rectangle[0], n_modes),
        _axis_bump_coefficients(patch_d.rectangle[1], n_modes),
    )
    diff_coef = mult * coef

    tn1, tn2 = patch_n.interior_grid()
    td1, td2 = patch_d.interior_grid()
    field_n = _synthesize(diff_coef, tn1, tn2)
    field_d = _synthesize(diff_coef, td1, td2)
    psi_d = np.outer(
        _axis_bump_values(patch_d.rectangle[0], td1),
        _axis_bump_values(patch_d.rectangle[1], td2),
    )
    return GaugeFieldCheck(
        kappa=kappa,
        n_modes=n_modes,
        sup_on_neumann=float(np.abs(field_n).max()),
        sup_on_dirichlet=float(np.abs(field_d).max()),
        identity_defect=float(np.abs(field_d - kappa * psi_d).max()),
        field_neumann=field_n,
        field_dirichlet=field_d,
        psi_dirichlet=psi_d,
    )
