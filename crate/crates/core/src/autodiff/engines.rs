use nalgebra::DMatrix;

use super::{Dual, Dual2, Scalar, ScalarField};
use crate::error::{Error, Result};
use crate::par;

/// Below this magnitude a coordinate gets the absolute step floor.
pub const FD_FLOOR_THRESHOLD: f64 = 1e-8;

/// Default central-difference step for coordinate value `theta_i`.
///
/// First derivatives use `√ε·|θ_i|`, second derivatives `ε^{1/3}·|θ_i|`;
/// near zero the relative rule collapses, so the bare `√ε` / `ε^{1/3}` is
/// used instead. `scale` multiplies the result.
pub fn fd_step(theta_i: f64, second_order: bool, scale: f64) -> f64 {
    let base = if second_order {
        f64::EPSILON.cbrt()
    } else {
        f64::EPSILON.sqrt()
    };
    let magnitude = if theta_i.abs() < FD_FLOOR_THRESHOLD {
        1.0
    } else {
        theta_i.abs()
    };
    base * magnitude * scale
}

/// Probe points `θ_i ± h` and the exact floating-point distance between them.
fn probes(theta_i: f64, h: f64) -> (f64, f64, f64) {
    let plus = theta_i + h;
    let minus = theta_i - h;
    (plus, minus, plus - minus)
}

fn checked<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { theta: x.to_vec() })
    }
}

fn gradient_with_steps<F>(f: &F, theta: &[f64], steps: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = theta.len();
    let values = par::map_indexed(2 * n, |k| {
        let i = k / 2;
        let (plus, minus, _) = probes(theta[i], steps[i]);
        let mut x = theta.to_vec();
        x[i] = if k % 2 == 0 { plus } else { minus };
        checked(f, &x)
    });
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..n)
        .map(|i| {
            let (_, _, width) = probes(theta[i], steps[i]);
            (values[2 * i] - values[2 * i + 1]) / width
        })
        .collect())
}

/// Central finite-difference gradient with the default step rule (2N evaluations).
pub fn fd_gradient<F>(f: &F, theta: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fd_gradient_scaled(f, theta, 1.0)
}

/// [`fd_gradient`] with every step multiplied by `step_scale`.
pub fn fd_gradient_scaled<F>(f: &F, theta: &[f64], step_scale: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let steps: Vec<f64> = theta
        .iter()
        .map(|&t| fd_step(t, false, step_scale))
        .collect();
    gradient_with_steps(f, theta, &steps)
}

/// Central difference of central-difference gradients, symmetrized.
pub fn fd_hessian<F>(f: &F, theta: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fd_hessian_scaled(f, theta, 1.0)
}

/// [`fd_hessian`] with every step multiplied by `step_scale`.
pub fn fd_hessian_scaled<F>(f: &F, theta: &[f64], step_scale: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = theta.len();
    let steps: Vec<f64> = theta
        .iter()
        .map(|&t| fd_step(t, true, step_scale))
        .collect();
    let shifted = par::map_indexed(2 * n, |k| {
        let j = k / 2;
        let (plus, minus, _) = probes(theta[j], steps[j]);
        let mut x = theta.to_vec();
        x[j] = if k % 2 == 0 { plus } else { minus };
        // Inner gradients keep the steps chosen at the centre point.
        let inner = par::map_indexed(2 * n, |m| {
            let i = m / 2;
            let (p, q, _) = probes(x[i], steps[i]);
            let mut y = x.clone();
            y[i] = if m % 2 == 0 { p } else { q };
            checked(f, &y)
        });
        let inner = inner.into_iter().collect::<Result<Vec<_>>>()?;
        Ok((0..n)
            .map(|i| (inner[2 * i] - inner[2 * i + 1]) / probes(x[i], steps[i]).2)
            .collect::<Vec<f64>>())
    });
    let shifted = shifted.into_iter().collect::<Result<Vec<_>>>()?;
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let (_, _, width) = probes(theta[j], steps[j]);
        for i in 0..n {
            h[(i, j)] = (shifted[2 * j][i] - shifted[2 * j + 1][i]) / width;
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Exact gradient by forward-mode duals: one evaluation per coordinate.
pub fn dual_gradient<F: ScalarField>(f: &F, theta: &[f64]) -> Result<Vec<f64>> {
    Ok(dual_value_and_gradient(f, theta)?.1)
}

fn dual_value_and_gradient<F: ScalarField>(f: &F, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = theta.len();
    let passes = par::map_indexed(n, |i| {
        let x: Vec<Dual> = theta
            .iter()
            .enumerate()
            .map(|(k, &t)| Dual::new(t, if k == i { 1.0 } else { 0.0 }))
            .collect();
        let y = f.eval(&x)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Evaluation {
                theta: theta.to_vec(),
            })
        }
    });
    let passes = passes.into_iter().collect::<Result<Vec<_>>>()?;
    let value = match passes.first() {
        Some(d) => d.primal,
        None => f.eval(theta)?,
    };
    Ok((value, passes.iter().map(|d| d.tangent).collect()))
}

/// Exact Hessian by tangent-over-tangent duals: `N(N+1)/2` evaluations,
/// symmetric by construction.
pub fn dual2_hessian<F: ScalarField>(f: &F, theta: &[f64]) -> Result<DMatrix<f64>> {
    Ok(dual2_grad_hessian(f, theta)?.2)
}

/// Value, gradient and Hessian from the same `N(N+1)/2` second-order passes;
/// the gradient is read off the diagonal seeds.
pub fn dual2_grad_hessian<F: ScalarField>(
    f: &F,
    theta: &[f64],
) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
    let n = theta.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let passes = par::map_slice(&pairs, |&(i, j)| {
        let x: Vec<Dual2> = theta
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                Dual2::new(
                    t,
                    if k == i { 1.0 } else { 0.0 },
                    if k == j { 1.0 } else { 0.0 },
                    0.0,
                )
            })
            .collect();
        let y = f.eval(&x)?;
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Evaluation {
                theta: theta.to_vec(),
            })
        }
    });
    let passes = passes.into_iter().collect::<Result<Vec<_>>>()?;
    let mut hess = DMatrix::zeros(n, n);
    let mut grad = vec![0.0; n];
    for (&(i, j), d) in pairs.iter().zip(&passes) {
        hess[(i, j)] = d.cross;
        hess[(j, i)] = d.cross;
        if i == j {
            grad[i] = d.tangent1;
        }
    }
    let value = match passes.first() {
        Some(d) => d.primal,
        None => f.eval(theta)?,
    };
    Ok((value, grad, hess))
}

/// Which derivative implementation a sampler uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    /// Central finite differences; `step_scale` multiplies the default steps.
    FiniteDiff { step_scale: f64 },
    /// Forward-mode dual numbers.
    Dual,
}

impl Engine {
    pub const FD: Engine = Engine::FiniteDiff { step_scale: 1.0 };

    pub fn name(&self) -> &'static str {
        match self {
            Engine::FiniteDiff { .. } => "fd",
            Engine::Dual => "ad",
        }
    }

    pub fn value_and_gradient<F: ScalarField>(
        &self,
        f: &F,
        theta: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        match *self {
            Engine::Dual => dual_value_and_gradient(f, theta),
            Engine::FiniteDiff { step_scale } => {
                let value = f.eval(theta)?;
                if !value.is_finite() {
                    return Err(Error::Evaluation {
                        theta: theta.to_vec(),
                    });
                }
                let g = fd_gradient_scaled(&plain(f), theta, step_scale)?;
                Ok((value, g))
            }
        }
    }

    pub fn value_grad_hessian<F: ScalarField>(
        &self,
        f: &F,
        theta: &[f64],
    ) -> Result<(f64, Vec<f64>, DMatrix<f64>)> {
        match *self {
            Engine::Dual => dual2_grad_hessian(f, theta),
            Engine::FiniteDiff { step_scale } => {
                let (value, g) = self.value_and_gradient(f, theta)?;
                let h = fd_hessian_scaled(&plain(f), theta, step_scale)?;
                Ok((value, g, h))
            }
        }
    }
}

/// Plain `f64` view of a scalar field; failures become NaN so the
/// finite-difference engine reports them with the probe point.
fn plain<F: ScalarField>(f: &F) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    move |x: &[f64]| f.eval(x).unwrap_or(f64::NAN)
}
