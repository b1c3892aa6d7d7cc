//! Cross-checks of the dual-number derivatives against finite differences.

use rand::Rng;

use crate::autodiff::Engine;
use crate::error::{Error, Result};
use crate::mcmc::LogDensity;
use crate::rng;

/// `‖reference − other‖∞ / (1 + ‖reference‖∞)`.
pub fn relative_discrepancy(reference: &[f64], other: &[f64]) -> f64 {
    let diff = reference
        .iter()
        .zip(other)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = reference.iter().map(|a| a.abs()).fold(0.0, f64::max);
    diff / (1.0 + scale)
}

/// `n` points drawn uniformly from the box `[lower, upper]`.
pub fn uniform_points(lower: &[f64], upper: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, 0);
    (0..n)
        .map(|_| {
            lower
                .iter()
                .zip(upper)
                .map(|(&l, &h)| if h > l { r.random_range(l..h) } else { l })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub points: usize,
    pub max_gradient_discrepancy: f64,
    pub max_hessian_discrepancy: f64,
    pub worst_gradient_point: Vec<f64>,
    pub worst_hessian_point: Vec<f64>,
}

impl DerivativeReport {
    pub fn to_text(&self) -> String {
        format!(
            "points checked: {}\nmax relative gradient discrepancy (ad vs fd): {:.3e} at {:?}\nmax relative hessian discrepancy (ad vs fd): {:.3e} at {:?}\n",
            self.points,
            self.max_gradient_discrepancy,
            self.worst_gradient_point,
            self.max_hessian_discrepancy,
            self.worst_hessian_point
        )
    }
}

/// Compares dual-number gradients and Hessians with those of `fd` at every
/// point.
pub fn compare_engines<P: LogDensity>(
    target: &P,
    points: &[Vec<f64>],
    fd: Engine,
) -> Result<DerivativeReport> {
    if !target.supports_dual() {
        return Err(Error::Config(
            "dual-number derivatives are unavailable for this model".into(),
        ));
    }
    let mut report = DerivativeReport {
        points: points.len(),
        max_gradient_discrepancy: 0.0,
        max_hessian_discrepancy: 0.0,
        worst_gradient_point: vec![],
        worst_hessian_point: vec![],
    };
    for theta in points {
        let (_, ga, ha) = Engine::Dual.value_grad_hessian(target, theta)?;
        let (_, gf, hf) = fd.value_grad_hessian(target, theta)?;
        let dg = relative_discrepancy(&ga, &gf);
        let dh = relative_discrepancy(ha.as_slice(), hf.as_slice());
        if !(dg <= report.max_gradient_discrepancy) {
            report.max_gradient_discrepancy = dg;
            report.worst_gradient_point = theta.clone();
        }
        if !(dh <= report.max_hessian_discrepancy) {
            report.max_hessian_discrepancy = dh;
            report.worst_hessian_point = theta.clone();
        }
    }
    Ok(report)
}
