//! Simulation of post-selected entanglement filtering in photonic waveguide
//! networks.
//!
//! A small set of system waveguides (a dimer, a trimer, or any `M`-mode
//! arrangement) is evanescently coupled to a uniform tight-binding lattice
//! that acts as a photon bath. Photons that leak into the bath are detected
//! and the corresponding runs are discarded. Among the surviving runs the
//! system state is driven toward the unique dark state of its photon-number
//! sector.
//!
//! The crate evolves `N`-photon mixed states with three engines:
//!
//! - [`EngineKind::ExactNetwork`]: coherent propagation through the full
//!   system + truncated bath network, lifted to the `N`-photon sector with
//!   matrix permanents.
//! - [`EngineKind::MarkovNoJump`]: the jump-free part of the Born–Markov
//!   master equation, driven by the effective non-Hermitian Hamiltonian.
//! - [`EngineKind::LindbladFull`]: the complete master equation on the
//!   stacked sectors `0..=N`, integrated with RK4 and conditioned afterwards.

// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod effective_model;
pub mod error;
pub mod evolution;
pub mod fock_space;
pub mod lattice_network;
pub mod observables;
pub mod runner;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use config::{parse_config, preset, ExperimentConfig, StateDescriptor, Tolerances};
pub use effective_model::{
    apt_symmetry_check, dark_condition_trimer, dark_search, dark_vector_trimer, effective_dimer,
    effective_network, spectrum, DarkStateCertificate, EffectiveHamiltonian,
};
pub use error::{Error, Result};
pub use evolution::{
    conditional_sweep, evolve_exact, evolve_lindblad, evolve_markov, run_sweep, ConditionalState,
    EngineKind, LindbladGenerator, SweepOptions,
};
pub use fock_space::{
    enumerate_basis, lift_matrix, mix, mode_power_state, permanent, DensityMatrix, FockBasis,
    PureState,
};
pub use lattice_network::{
    bound_state_residual, build_hamiltonian, propagator, system_block, BoundStateTail,
    NetworkSpec, Propagator, SingleParticleHamiltonian, Topology,
};
pub use observables::{
    convergence_length, fidelity_to_pure, purity, trace_distance, EvolutionResult,
};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
