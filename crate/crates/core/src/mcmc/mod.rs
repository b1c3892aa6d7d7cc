//! Posterior construction and the two samplers.

mod chain;
mod nuts;
mod posterior;
mod smmala;

pub use chain::{cpu_time, run_chain, run_chains, Chain, Sampler};
pub use nuts::{
    adaptation_windows, find_reasonable_step_size, leapfrog, nuts_transition, DualAveraging,
    MetricInit, Nuts, NutsConfig, NutsTransition, Point, MAX_ENERGY_ERROR,
};
pub use posterior::{effective_engine, LogDensity, Posterior};
pub use smmala::{log_acceptance_ratio, smmala_step, SmmalaConfig, SmmalaState, SmmalaStep};
