//! Exact analysis: lumped birth-death chains on the clique, closed forms,
//! the full-configuration oracle and lazy random walks.

mod birth_death;
mod closed_form;
mod oracle;
mod walk;

pub use birth_death::{
    absorption_time_birth_death, absorption_times_birth_death, clique_async_chain, fixation_birth_death,
    BirthDeathChain,
};
pub use closed_form::{
    degree_weighted_fixation, diffusion_estimate, drift_bound_sync, entropy_h, fixation_closed_form, glaz_time,
    harmonic_numbers, sync_clique_kernel_distribution, sync_drift, unbiased_clique_time_closed, DriftBound,
    NEUTRAL_R_TOL,
};
pub use oracle::{
    async_kernel_row, configuration_kernel, full_state_oracle, solve_oracle, sync_kernel_row, OracleResult,
    OracleSolution, MAX_ASYNC_NODES, MAX_SYNC_NODES,
};
pub use walk::{
    fitness_cut_invariance_check, fitness_cut_ratios, transition_matrix, walk_analysis, WalkAnalysis, WalkMode,
    MAX_WALK_NODES,
};
