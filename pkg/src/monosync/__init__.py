"""Simulation and certification of monotone phase-coupled oscillator networks.

All-to-all networks of identical phase oscillators coupled through a
strictly monotone, discontinuous coupling function contract (or expand)
globally under a total-variation distance, which pins their collective
behavior to one of two outcomes: finite-time full synchronization or
convergence to the equispaced splay configuration.  This package simulates
such networks deterministically and certifies those properties numerically.
"""

from .coupling import (
    CouplingClass,
    CouplingFunction,
    Curvature,
    MixedCurvatureError,
    Monotonicity,
    NotMonotoneError,
    affine,
    classify,
    expfam,
    make_coupling,
    one_sided_limits,
    tabulated,
)
from .dynamics import (
    DerivativeTerms,
    ModelParams,
    SynchronizedPairError,
    cluster_vector_field,
    derivative_terms,
    full_vector_field,
    reduced_vector_field,
)
from .experiments import (
    BehaviorReport,
    ContractionReport,
    Figure4Result,
    behavior_sweep,
    contraction_sweep,
    figure4,
)
from .integrator import (
    NumericalDivergenceError,
    SimConfig,
    SyncEvent,
    Trajectory,
    boundary_velocity_probe,
    simulate,
    step,
)
from .state import (
    AbsoluteState,
    ClusterState,
    ConeLocation,
    CriticalSet,
    EmptyDecompositionError,
    ReducedState,
    alternating_sum,
    cone_location,
    critical_decomposition,
    reduce,
    splay_state,
    to_reduced,
    tv_distance,
)

__version__ = "0.1.0"
