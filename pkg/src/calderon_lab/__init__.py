"""Numerical laboratory for Dirichlet-to-Neumann maps on warped cylinders.

The package is organized bottom-up:

    grid, ode, solvers   -- uniform-grid functions, batched RK45, banded solves
    sturm                -- characteristic function, Weyl functions, spectra
    geometry             -- warping profiles, conformal factors, transverse spectra
    deform               -- explicit isospectral flows of Dirichlet potentials
    yamabe               -- monotone solves producing conformal factors
    dnmap                -- per-harmonic DN blocks and boundary-field synthesis
    harness              -- CLI, scenario orchestration, reports
"""

from .errors import (
    AdmissibilityError,
    BracketError,
    CalderonLabError,
    ConvergenceError,
    IntegratorFailure,
    PoleError,
    PositivityError,
    RoundTripError,
    SingularSystemError,
)
from .grid import DEFAULT_GRID_SIZE, GridFunction, integral_to_right, integrate_grid
from .geometry import (
    ConformalFactor,
    TransverseSpectrum,
    WarpingProfile,
    conformal_rescale,
    effective_potential,
    potential_of_conformal_factor,
    transverse_spectrum,
)
from .sturm import (
    DirichletSpectrum,
    characteristic,
    dirichlet_spectrum,
    hadamard_product,
    spectral_data,
    weyl_functions,
)
from .deform import IsospectralDeformation, deform_cylinder_potential, make_theta, pt_transform
from .yamabe import (
    YamabeProblem,
    lower_upper_solutions,
    monotone_iterate,
    solve_conformal_for_potential,
    solve_gauge_factor,
)
from .dnmap import (
    BoundaryPatch,
    DnBlock,
    compare_models,
    disjoint_coefficients,
    dn_block,
    synthesize_gauge_check,
)

__version__ = "0.1.0"
