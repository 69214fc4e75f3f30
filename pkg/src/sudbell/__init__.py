"""Bell inequalities for d-outcome measurements on folded two-mode squeezed states."""
__version__ = "0.1.0"

from .sud_algebra import (
    BlochDecomposition,
    GeneratorSet,
    ParameterVector,
    StructureConstants,
    adjoint_matrix_direct,
    adjoint_matrix_exp,
    bloch_decompose,
    bloch_reconstruct,
    build_generators,
    structure_constants,
    unitary_from_params,
)
from .correlation import (
    BipartiteState,
    CorrelationMatrix,
    MeasurementConfig,
    correlation_matrix,
    correlation_value,
    correlation_weights,
    joint_probabilities,
)
from .bell import (
    CGLMP,
    QFT_OPTIMAL_PHASES,
    BellSpec,
    bell_value,
    bell_value_qft,
    cglmp_qft_max,
    lhv_max_bruteforce,
    qft_unitary,
)
from .cv_map import (
    INFINITE_SQUEEZING,
    ChoiBlockMap,
    CVState,
    cp_map_single,
    cp_map_two_mode,
    tmsv_mapped_pure,
    tmsv_state,
)
from .optimizer import (
    BellObjective,
    OptimizationResult,
    OptimizerSettings,
    RelaxationSettings,
    conjugate_gradient,
    dynamic_relaxation,
    maximize_qft,
    multistart_maximize,
    steepest_descent,
)

__all__ = [
    "BlochDecomposition",
    "GeneratorSet",
    "ParameterVector",
    "StructureConstants",
    "adjoint_matrix_direct",
    "adjoint_matrix_exp",
    "bloch_decompose",
    "bloch_reconstruct",
    "build_generators",
    "structure_constants",
    "unitary_from_params",
    "BipartiteState",
    "CorrelationMatrix",
    "MeasurementConfig",
    "correlation_matrix",
    "correlation_value",
    "correlation_weights",
    "joint_probabilities",
    "CGLMP",
    "QFT_OPTIMAL_PHASES",
    "BellSpec",
    "bell_value",
    "bell_value_qft",
    "cglmp_qft_max",
    "lhv_max_bruteforce",
    "qft_unitary",
    "INFINITE_SQUEEZING",
    "ChoiBlockMap",
    "CVState",
    "cp_map_single",
    "cp_map_two_mode",
    "tmsv_mapped_pure",
    "tmsv_state",
    "BellObjective",
    "OptimizationResult",
    "OptimizerSettings",
    "RelaxationSettings",
    "conjugate_gradient",
    "dynamic_relaxation",
    "maximize_qft",
    "multistart_maximize",
    "steepest_descent",
]
