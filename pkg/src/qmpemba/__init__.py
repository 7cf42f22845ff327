"""Liouvillian spectral analysis and accelerated relaxation for open quantum systems.

Builds Lindblad generators for collective-spin models, computes their full
mode decomposition, constructs the initial unitary that removes the overlap
with the slowest decaying mode, and propagates states along both a spectral
and an independent Runge-Kutta route.
"""

__version__ = "0.1.0"

from . import errors
from .config import ExperimentConfig, load_config
from .dynamics import (
    DecayFit,
    TimeGrid,
    TrajectoryRecord,
    evolve_integrator,
    evolve_spectral,
    evolve_spectral_grid,
    find_plateau,
    fit_decay_rate,
    hs_distance,
    integrator_trajectory,
    robust_trajectory,
    spectral_trajectory,
)
from .linalg import GeneralEig, HermitianEig, general_eig, hermitian_eig, kron
from .models import (
    AllToAllParams,
    CollectiveSpinBasis,
    DickeParams,
    adiabatic_coefficients,
    all_to_all_model,
    dicke_model,
    random_pure_state,
    spin_operators,
)
from .mpemba import (
    MpembaRotation,
    SlowModeSpectrum,
    build_permutation,
    build_rotation,
    build_u1,
    optimal_unitary,
    overlap_scan,
    rotation_angle,
    slow_mode_spectrum,
)
from .spectral import (
    SpectralDecomposition,
    decompose,
    hermitize_slow_mode,
    mode_overlaps,
)
from .superop import (
    LindbladModel,
    Superoperator,
    build_adjoint_liouvillian,
    build_liouvillian,
    unvec,
    vec,
)

__all__ = [
    "AllToAllParams",
    "CollectiveSpinBasis",
    "DecayFit",
    "DickeParams",
    "ExperimentConfig",
    "GeneralEig",
    "HermitianEig",
    "LindbladModel",
    "MpembaRotation",
    "SlowModeSpectrum",
    "SpectralDecomposition",
    "Superoperator",
    "TimeGrid",
    "TrajectoryRecord",
    "adiabatic_coefficients",
    "all_to_all_model",
    "build_adjoint_liouvillian",
    "build_liouvillian",
    "build_permutation",
    "build_rotation",
    "build_u1",
    "decompose",
    "dicke_model",
    "errors",
    "evolve_integrator",
    "evolve_spectral",
    "evolve_spectral_grid",
    "find_plateau",
    "fit_decay_rate",
    "general_eig",
    "hermitian_eig",
    "hermitize_slow_mode",
    "hs_distance",
    "integrator_trajectory",
    "kron",
    "load_config",
    "mode_overlaps",
    "optimal_unitary",
    "overlap_scan",
    "random_pure_state",
    "robust_trajectory",
    "rotation_angle",
    "slow_mode_spectrum",
    "spectral_trajectory",
    "spin_operators",
    "unvec",
    "vec",
]
