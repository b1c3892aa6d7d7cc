#![allow(dead_code)]

use spectral_mcmc::autodiff::{Scalar, ScalarField};
use spectral_mcmc::mcmc::{LogDensity, Posterior};
use spectral_mcmc::simulate::{simulate_observations, SimOptions};
use spectral_mcmc::spectral::periodogram;
use spectral_mcmc::{HarmonicOscillator, ParamSpec};

/// ω₀(c1), ω₀(c2), σ_in(c1), σ_in(c2), ζ.
pub const TRUTH: [f64; 5] = [80.0, 40.0, 100.0, 10.0, 0.2];
pub const SIGMA_OBS: f64 = 0.05;
pub const DELTA_T: f64 = 0.01;
pub const DURATION: f64 = 20.0;

pub fn oscillator() -> HarmonicOscillator {
    HarmonicOscillator::new(SIGMA_OBS, DELTA_T).unwrap()
}

/// Observed series for both conditions at the true parameters.
pub fn observations(seed: u64) -> Vec<Vec<f64>> {
    simulate_observations(
        &oscillator(),
        &ParamSpec::oscillator(2),
        &TRUTH,
        DURATION,
        DELTA_T,
        seed,
        &SimOptions::default(),
    )
    .unwrap()
}

pub fn posterior(seed: u64) -> Posterior<HarmonicOscillator> {
    let data = observations(seed)
        .iter()
        .map(|y| periodogram(y, DELTA_T).unwrap())
        .collect();
    Posterior::new(oscillator(), ParamSpec::oscillator(2), data).unwrap()
}

/// Independent Gaussian with per-coordinate means and scales, restricted to
/// `|θ_i − μ_i| ≤ bound·s_i`.
pub struct Gaussian {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub bound: f64,
}

impl Gaussian {
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
            bound: f64::INFINITY,
        }
    }
}

impl ScalarField for Gaussian {
    fn eval<S: Scalar>(&self, x: &[S]) -> spectral_mcmc::Result<S> {
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .fold(S::zero(), |acc, (&v, (m, s))| {
                let z = (v - *m) / *s;
                acc - z * z * 0.5
            }))
    }
}

impl LogDensity for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn in_support(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .all(|(v, (m, s))| ((v - m) / s).abs() <= self.bound)
    }
}

/// Fraction of bins where `inside` holds.
pub fn fraction(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for f in flags {
        hit += usize::from(f);
        total += 1;
    }
    hit as f64 / total as f64
}
