//! Bayesian inference for stable linear SDEs observed with noise.
//!
//! The posterior is built from the Whittle approximation to the likelihood of
//! a sampled trajectory's periodogram. The analytic spectral density comes
//! from an eigendecomposition of the drift matrix. Gradients and Hessians are
//! available through finite differences or forward-mode dual numbers, and feed
//! two samplers: simplified manifold MALA and NUTS.

pub mod autodiff;
pub mod derivcheck;
pub mod diagnostics;
pub mod error;
pub mod matrix;
pub mod mcmc;
pub mod model;
pub mod par;
pub mod rng;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use mcmc::{run_chain, Chain, LogDensity, Posterior, Sampler};
pub use model::{HarmonicOscillator, ParamSpec, StableSde};
