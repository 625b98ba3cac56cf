//! Evolutionary dynamics of a four-population AI governance game.
//!
//! The populations are the commentariat (`x`), users (`y`), developers (`z`)
//! and regulators (`w`). Each frequency is the share playing the cooperative
//! (or trusting) strategy. The crate covers the payoff tables, the replicator
//! flow and its equilibria, and the finite-population Markov chain.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod params;
pub mod equilibrium;
pub mod finite;
pub mod integrate;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod replicator;

pub use params::{
    payoff, payoff_table, validate_params, Action, ActionProfile, GovernanceParams,
    ModelVariant, MonomorphicState, ParamError, ParamViolation, PayoffVector, Role, ValidParams,
    PARAM_NAMES,
};
pub use replicator::{fitness, fitness_difference, rhs, GapField, PopulationState, StateDerivative};
pub use integrate::{integrate, IntegrateError, IntegratorConfig, Trajectory};
pub use equilibrium::{
    census_interior_equilibria, classify, equilibrium_edges, find_boundary_equilibria,
    find_interior_equilibria, lemma_guarantees_no_interior, lemma_guarantees_no_interior_in, vertex_reports, Classification,
    EquilibriumCensus, InteriorEquilibrium, ParamRanges, SearchConfig, VertexReport,
};
pub use finite::{
    fermi, fixation_probability, restricted_transition_matrix, simulate_agents, stationary_distribution,
    transition_matrix, FiniteConfig, FiniteError, SimulationRecord, StationaryDistribution, TransitionMatrix,
};
