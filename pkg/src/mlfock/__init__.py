"""Mittag-Leffler Fock space: levels, states, ladder operators, thermal states."""

from .errors import (
    ConsistencyError,
    ConvergenceError,
    DomainError,
    IncompatibleSpaceError,
    MLFockError,
    WeightOverflowError,
)
from .operators import (
    OperatorKind,
    OperatorMatrix,
    adjoint_defect,
    annihilate,
    classical_matrix,
    commutator_diagonal,
    create,
    matrix,
    number_apply,
)
from .space import (
    MLState,
    SlitPoint,
    basis_amplitudes,
    basis_state,
    coeff_growth_report,
    evaluate,
    inner,
    kernel,
    kernel_state,
    norm,
    state_from_basis,
    zero_state,
)
from .specfun import (
    EvalControl,
    LevelSpectrum,
    digamma,
    level,
    level_derivative,
    level_elasticity,
    level_function,
    level_spectrum,
    log_gamma,
    log_level,
    mittag_leffler,
)
from .thermal import (
    ConvergenceReport,
    DiagonalState,
    PartitionResult,
    ThermalMoments,
    ThermalSpec,
    abscissa_profile,
    abscissa_tail_max,
    convergence_report,
    entropy,
    mean_level,
    mean_occupation,
    partial_partition,
    partition,
    thermal_state,
)

__version__ = "0.1.0"
