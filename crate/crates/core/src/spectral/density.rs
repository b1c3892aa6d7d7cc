use crate::autodiff::{Complex, Scalar};
use crate::error::{Error, Result};
use crate::model::{Layout, ParamSpec, StableSde};

use super::eigen::{eigen_decompose, EigenDecomp};

fn singular(omega: f64, lambda: (f64, f64)) -> bool {
    let gap = lambda.0.hypot(omega - lambda.1);
    let scale = lambda.0.hypot(lambda.1).max(omega.abs()).max(1.0);
    !(gap > f64::EPSILON * scale)
}

/// Element `(i, j)` of the transfer matrix
/// `T(ω) = R · diag[1 / (c_k (iω − λ_k))] · L`, i.e. of `(iωI − A)⁻¹`.
pub fn transfer_element<S: Scalar>(
    d: &EigenDecomp<S>,
    omega: f64,
    i: usize,
    j: usize,
) -> Result<Complex<S>> {
    let n = d.dim();
    if i >= n || j >= n {
        return Err(Error::Index {
            what: "transfer element",
            index: i.max(j),
            limit: n,
        });
    }
    let iw = Complex::imag(S::from_f64(omega));
    let mut acc = Complex::zero();
    for k in 0..n {
        if singular(omega, d.lambda[k].primal()) {
            return Err(Error::Singular { omega });
        }
        acc += d.right(i, k) * d.left(k, j) / (d.c[k] * (iw - d.lambda[k]));
    }
    Ok(acc)
}

/// Everything needed to evaluate one condition's observed spectrum at many
/// frequencies: poles and residues of `T_ij`, plus the noise floor.
#[derive(Debug, Clone)]
pub struct ConditionSpectrum<'m, M, S> {
    model: &'m M,
    params: Vec<S>,
    poles: Vec<Complex<S>>,
    residues: Vec<Complex<S>>,
    floor: f64,
}

impl<'m, M: StableSde, S: Scalar> ConditionSpectrum<'m, M, S> {
    /// `params` are the model-ordered parameters of a single condition.
    pub fn new(model: &'m M, params: Vec<S>) -> Result<Self> {
        let a = model.jacobian(&params);
        let d = eigen_decompose(&a)?;
        let (i, j) = (model.observed_component(), model.input_component());
        let residues = (0..d.dim())
            .map(|k| d.right(i, k) * d.left(k, j) / d.c[k])
            .collect();
        Ok(Self {
            model,
            params,
            poles: d.lambda,
            residues,
            floor: model.obs_psd_term(),
        })
    }

    /// `|T_ij(ω)|²`.
    pub fn gain(&self, omega: f64) -> Result<S> {
        let iw = Complex::imag(S::from_f64(omega));
        let mut t = Complex::zero();
        for (pole, residue) in self.poles.iter().zip(&self.residues) {
            if singular(omega, pole.primal()) {
                return Err(Error::Singular { omega });
            }
            t += *residue / (iw - *pole);
        }
        Ok(t.norm_sqr())
    }

    /// Observed spectral density `|T_ij(ω)|² f_Pj(ω) + σ_obs² Δt`.
    pub fn density(&self, omega: f64) -> Result<S> {
        let input =
            self.model
                .input_psd_component(&self.params, self.model.input_component(), omega);
        Ok(self.gain(omega)? * input + self.floor)
    }
}

/// Observed-component spectral density `f_Y(ω)` for one condition.
pub fn spectral_density<M: StableSde, S: Scalar>(
    model: &M,
    spec: &ParamSpec,
    theta: &[S],
    condition: usize,
    omega: f64,
) -> Result<S> {
    let primal: Vec<f64> = theta.iter().map(|t| t.primal()).collect();
    spec.check(&primal)?;
    let params = Layout::new(model, spec)?.condition_params(theta, condition)?;
    ConditionSpectrum::new(model, params)?.density(omega)
}
