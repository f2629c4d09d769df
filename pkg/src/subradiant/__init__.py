"""Dissipative two-emitter entanglement in multi-mode lossy cavities."""

from .dynamics import (
    Backend,
    PropagatorConfig,
    Trajectory,
    UnsupportedStateError,
    evolve,
    evolve_exact,
    evolve_lindblad,
    reduce_to_emitters,
    steady_state,
)
from .entanglement import (
    InvalidStateError,
    PersistenceReport,
    check_persistence,
    concurrence,
    find_dark_state,
    single_mode_steady_state,
    state_populations,
)
from .fields import (
    DomainError,
    FieldSurrogate,
    HollowCylinderField,
    Selector,
    classify_parity,
    coupling_at,
    filter_modes,
    hollow_cylinder_profile,
    npom_modes,
)
from .model import (
    ConfigurationError,
    CouplingMatrix,
    DarkStateSpec,
    DirectCoupling,
    EmitterDescriptor,
    ModeDescriptor,
    Parity,
    QuantumState,
    SystemModel,
    build_dissipators,
    build_hamiltonian,
)

__version__ = "0.1.0"
