use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::model::{Layout, ParamSpec, StableSde};
use crate::par;

use super::density::ConditionSpectrum;
use super::periodogram::SpectralData;

/// One condition's Whittle log-likelihood `Σ_k [−ln f(ω_k) − S_k / f(ω_k)]`.
///
/// θ-independent constants are dropped.
pub fn condition_loglik<M: StableSde, S: Scalar>(
    model: &M,
    params: Vec<S>,
    data: &SpectralData,
) -> Result<S> {
    let spectrum = ConditionSpectrum::new(model, params)?;
    par::try_chunked_sum(data.len(), S::zero(), |k| {
        let f = spectrum.density(data.omega[k])?;
        Ok(-f.ln() - f.recip() * data.s[k])
    })
}

/// Whittle log-likelihood summed over conditions, skipping the support check.
pub fn whittle_loglik_unchecked<M: StableSde, S: Scalar>(
    model: &M,
    layout: &Layout,
    theta: &[S],
    data: &[SpectralData],
) -> Result<S> {
    if data.is_empty() {
        return Err(Error::Shape("no spectral data".into()));
    }
    if data.len() != layout.n_conditions() {
        return Err(Error::Shape(format!(
            "{} datasets for {} conditions",
            data.len(),
            layout.n_conditions()
        )));
    }
    let per_condition = par::map_indexed(data.len(), |c| {
        condition_loglik(model, layout.condition_params(theta, c)?, &data[c])
    });
    per_condition
        .into_iter()
        .try_fold(S::zero(), |acc, ll| Ok(acc + ll?))
}

/// Whittle log-likelihood of `theta` given one dataset per condition.
///
/// Out-of-support parameters give `−∞` instead of an error.
pub fn whittle_loglik<M: StableSde, S: Scalar>(
    model: &M,
    spec: &ParamSpec,
    theta: &[S],
    data: &[SpectralData],
) -> Result<S> {
    let primal: Vec<f64> = theta.iter().map(|t| t.primal()).collect();
    if !spec.in_support(&primal) {
        return Ok(S::from_f64(f64::NEG_INFINITY));
    }
    let layout = Layout::new(model, spec)?;
    whittle_loglik_unchecked(model, &layout, theta, data)
}
