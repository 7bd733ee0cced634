"""Radial-hedgehog profiles of the Landau-de Gennes model.

Submodules: :mod:`model` (parameters and potential), :mod:`series` (core
expansion), :mod:`profile` (shooting solvers), :mod:`analysis` (energies and
pointwise checks), :mod:`perturbation` (biaxial test and stability), and
:mod:`cli`.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    DomainError,
    ModelParams,
    PhysicalParams,
    ReducedGeometry,
    bulk_potential,
    derive_model_params,
    nondimensionalize,
    ode_rhs,
)
from .series import SeriesExpansion, launch_state, series_coefficients  # noqa: E402
from .profile import (  # noqa: E402
    Profile,
    SolverError,
    classify_shot,
    integrate,
    solve_finite_ball,
    solve_semi_infinite,
)
from .analysis import (  # noqa: E402
    check_bounds,
    farfield_fit,
    gradient_bound,
    reduced_energy,
    tensor_residual,
)
from .perturbation import (  # noqa: E402
    BiaxialPerturbation,
    amplitude_family,
    biaxial_delta,
    second_variation_biaxial,
    second_variation_general,
    stability_map,
    stability_threshold,
)
