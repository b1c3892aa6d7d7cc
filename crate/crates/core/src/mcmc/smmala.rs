//! Simplified manifold MALA.
//!
//! Each proposal is Gaussian with mean `θ + ½ C ∇log π(θ)` and covariance
//! `C = h² M⁻¹`, where `M` is the negated Hessian of the log density with
//! its eigenvalues replaced by `max(|λ|, floor)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::Engine;
use crate::error::{Error, Result};

use super::posterior::LogDensity;

#[derive(Debug, Clone, PartialEq)]
pub struct SmmalaConfig {
    /// Step size `h`.
    pub step_size: f64,
    pub n_iterations: usize,
    pub seed: u64,
    /// Lower bound on the eigenvalues of the regularized metric.
    pub hessian_floor: f64,
}

impl Default for SmmalaConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            n_iterations: 1000,
            seed: 0,
            hessian_floor: 1e-6,
        }
    }
}

impl SmmalaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Config(format!(
                "step_size must be > 0, got {}",
                self.step_size
            )));
        }
        if self.n_iterations == 0 {
            return Err(Error::Config("n_iterations must be at least 1".into()));
        }
        if !(self.hessian_floor > 0.0) {
            return Err(Error::Config(format!(
                "hessian_floor must be > 0, got {}",
                self.hessian_floor
            )));
        }
        Ok(())
    }
}

/// Position with everything needed to propose from it and to evaluate
/// proposal densities centred on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SmmalaState {
    pub theta: Vec<f64>,
    pub log_density: f64,
    pub gradient: Vec<f64>,
    /// Proposal mean `m`.
    pub mean: Vec<f64>,
    /// Eigenvectors of the regularized metric `M` (columns).
    basis: DMatrix<f64>,
    /// Floored eigenvalues of `M`.
    curvature: Vec<f64>,
    step_size: f64,
}

impl SmmalaState {
    /// Evaluates gradient and Hessian at `theta` and builds the proposal.
    pub fn new<P: LogDensity>(
        target: &P,
        engine: Engine,
        theta: &[f64],
        cfg: &SmmalaConfig,
    ) -> Result<Self> {
        if !target.in_support(theta) {
            return Err(Error::Domain(format!("{theta:?} is outside the support")));
        }
        let (value, gradient, hessian) = engine.value_grad_hessian(target, theta)?;
        if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Evaluation {
                theta: theta.to_vec(),
            });
        }
        Self::from_derivatives(theta, value, gradient, &hessian, cfg)
    }

    pub fn from_derivatives(
        theta: &[f64],
        log_density: f64,
        gradient: Vec<f64>,
        hessian: &DMatrix<f64>,
        cfg: &SmmalaConfig,
    ) -> Result<Self> {
        let n = theta.len();
        if hessian.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                theta: theta.to_vec(),
            });
        }
        let metric = -(hessian + hessian.transpose()) * 0.5;
        let eig = SymmetricEigen::new(metric);
        let curvature: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|l| l.abs().max(cfg.hessian_floor))
            .collect();
        let basis = eig.eigenvectors;
        let h2 = cfg.step_size * cfg.step_size;

        // m = θ + ½ C g with C = h² V diag(1/μ) Vᵀ
        let g = DVector::from_column_slice(&gradient);
        let mut proj = basis.transpose() * &g;
        for i in 0..n {
            proj[i] *= h2 / curvature[i];
        }
        let shift = &basis * proj;
        let mean = (0..n).map(|i| theta[i] + 0.5 * shift[i]).collect();
        Ok(Self {
            theta: theta.to_vec(),
            log_density,
            gradient,
            mean,
            basis,
            curvature,
            step_size: cfg.step_size,
        })
    }

    /// Proposal covariance `C`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let h2 = self.step_size * self.step_size;
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.curvature.len(),
            self.curvature.iter().map(|m| h2 / m),
        ));
        &self.basis * d * self.basis.transpose()
    }

    /// `log q(x | θ)`, the proposal density centred on this state.
    pub fn proposal_log_density(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let h2 = self.step_size * self.step_size;
        let diff = DVector::from_iterator(n, (0..n).map(|i| x[i] - self.mean[i]));
        let proj = self.basis.transpose() * diff;
        let mut quad = 0.0;
        let mut log_det = 0.0;
        for i in 0..n {
            quad += self.curvature[i] / h2 * proj[i] * proj[i];
            log_det += (h2 / self.curvature[i]).ln();
        }
        -0.5 * (quad + log_det + n as f64 * (2.0 * std::f64::consts::PI).ln())
    }

    /// Draws `m + h V diag(μ^{-1/2}) z`.
    fn propose<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.theta.len();
        let z = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let z: f64 = StandardNormal.sample(rng);
                self.step_size * z / self.curvature[i].sqrt()
            }),
        );
        let step = &self.basis * z;
        (0..n).map(|i| self.mean[i] + step[i]).collect()
    }
}

/// `log α(from → to)` before clipping at zero: the Metropolis–Hastings log
/// ratio including the reverse proposal density.
pub fn log_acceptance_ratio(from: &SmmalaState, to: &SmmalaState) -> f64 {
    to.log_density - from.log_density + to.proposal_log_density(&from.theta)
        - from.proposal_log_density(&to.theta)
}

/// Result of one smMALA transition.
#[derive(Debug, Clone, PartialEq)]
pub struct SmmalaStep {
    pub accepted: bool,
    /// Acceptance probability `min(1, ratio)`.
    pub alpha: f64,
    pub log_alpha: f64,
    /// Logarithm of the uniform draw compared against `log_alpha`.
    pub log_u: f64,
    pub proposal: Vec<f64>,
}

/// One transition from `state`. Proposals outside the support are rejected
/// without evaluating derivatives there.
pub fn smmala_step<P: LogDensity, R: rand::Rng + ?Sized>(
    target: &P,
    engine: Engine,
    state: SmmalaState,
    cfg: &SmmalaConfig,
    rng: &mut R,
) -> Result<(SmmalaState, SmmalaStep)> {
    let proposal = state.propose(rng);
    let u: f64 = rng.random();
    let log_u = u.ln();

    let candidate = if target.in_support(&proposal) {
        Some(SmmalaState::new(target, engine, &proposal, cfg)?)
    } else {
        None
    };
    let log_alpha = match &candidate {
        Some(c) => log_acceptance_ratio(&state, c).min(0.0),
        None => f64::NEG_INFINITY,
    };
    let log_alpha = if log_alpha.is_nan() {
        f64::NEG_INFINITY
    } else {
        log_alpha
    };
    let accepted = log_u < log_alpha;
    let step = SmmalaStep {
        accepted,
        alpha: log_alpha.exp(),
        log_alpha,
        log_u,
        proposal,
    };
    match candidate {
        Some(c) if accepted => Ok((c, step)),
        _ => Ok((state, step)),
    }
}
