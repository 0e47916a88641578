"""Quantum walks on tight-binding networks with stochastically fluctuating
couplings: noise-averaged master equations for one and two particles, a
seeded trajectory Monte-Carlo oracle, and a declarative experiment runner.

Units are ps and ps^-1 throughout.  Site indices are 0-based in this API;
configuration files and CLI output use 1-based labels.
"""

from . import errors
from .config import (
    ExperimentConfig,
    InitialState,
    OracleOptions,
    OutputSpec,
    apply_overrides,
    parse_config_document,
    parse_experiment_config,
    serialize_experiment_config,
)
from .network import (
    HermitianMatrix,
    NetworkSpec,
    ValidatedNetwork,
    mean_hamiltonian,
    parse_network_config,
    serialize_network_spec,
    validate_network,
)
from .observables import (
    DensityDiagnostics,
    JointProbabilityMatrix,
    bunching_ratio,
    coherence,
    complex_difference,
    delta_rho,
    joint_probability,
    populations,
    validate_density,
)
from .ode import SolverOptions, TimeGrid, integrate, rk4_step
from .oracle import (
    NoiseRealization,
    TrajectoryEnsemble,
    gamma_from_sigma,
    mc_single_density,
    mc_two_density,
    propagate_unitary_trajectory,
    sample_coupling_noise,
    sigma_sq_from_gamma,
    trajectory_rng,
)
from .runner import RunReport, run_experiment, write_outputs
from .single_particle import (
    DensityMatrix,
    evolve_single,
    liouvillian_matrix_single,
    single_rhs,
    steady_state_single,
)
from .two_particle import (
    BOSON,
    FERMION,
    InputAmplitudeProfile,
    TwoParticleAmplitude,
    TwoParticleDensity,
    canonical_two_particle_state,
    compose_two_particle_amplitude,
    evolve_two,
    liouvillian_matrix_two,
    two_rhs,
)

__version__ = "0.1.0"
