"""Precision limits for finite-dimensional quantum thermal machines."""

from __future__ import annotations

from .bounds import (
    BoundContext,
    BoundReport,
    Family,
    PetrovParams,
    ThermoReport,
    achievable_min_lambda,
    entropy_production,
    fidelity,
    fundamental_limit,
    hellinger_sq,
    hellinger_tur,
    minimize_pg0,
    omega_exponent,
    petrov_lower_bound,
    petrov_ratio,
    phi_exponent,
    psi_exponent,
    quantum_relative_entropy,
    salazar_f,
    von_neumann_entropy,
)
from .errors import QTMError
from .experiments import ExperimentConfig, RunSummary, run_suite, run_verify_bounds
from .linalg import HermitianMatrix, eig_hermitian, kron, partial_trace_environment, partial_trace_system
from .machines import (
    BatteryReport,
    CollisionConfig,
    MarkovChain,
    battery_charge,
    collision_run,
    markov_rates_report,
    saturation_scenario,
)
from .states import (
    DensityOperator,
    Hamiltonian,
    Observable,
    UnitaryOperator,
    gibbs_state,
    random_haar_unitary,
)

__version__ = "0.1.0"
