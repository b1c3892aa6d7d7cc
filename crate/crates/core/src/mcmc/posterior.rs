use crate::autodiff::{Engine, Scalar, ScalarField};
use crate::error::{Error, Result};
use crate::model::{Layout, ParamSpec, StableSde};
use crate::spectral::{whittle_loglik_unchecked, SpectralData};

/// Unnormalized log density that the samplers can target.
///
/// [`ScalarField::eval`] must be defined on a neighbourhood of the support
/// (finite-difference probes may step slightly outside it); `log_density`
/// applies the support indicator.
pub trait LogDensity: ScalarField {
    fn dim(&self) -> usize;

    fn in_support(&self, theta: &[f64]) -> bool;

    /// Whether dual-number evaluation is available.
    fn supports_dual(&self) -> bool {
        true
    }

    fn param_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("theta[{i}]")).collect()
    }

    /// Starting point when none is supplied.
    fn default_init(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    /// `−∞` outside the support, the density otherwise.
    fn log_density(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::Shape(format!(
                "parameter vector has length {}, expected {}",
                theta.len(),
                self.dim()
            )));
        }
        if !self.in_support(theta) {
            return Ok(f64::NEG_INFINITY);
        }
        let v = self.eval(theta)?;
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::Evaluation {
                theta: theta.to_vec(),
            });
        }
        Ok(v)
    }
}

/// The engine actually used for `target`: dual numbers fall back to finite
/// differences when the target cannot be evaluated on duals.
pub fn effective_engine<P: LogDensity + ?Sized>(target: &P, requested: Engine) -> Engine {
    match requested {
        Engine::Dual if !target.supports_dual() => Engine::FD,
        e => e,
    }
}

/// Whittle likelihood times a uniform prior on the parameter box.
#[derive(Debug, Clone)]
pub struct Posterior<M> {
    model: M,
    spec: ParamSpec,
    layout: Layout,
    data: Vec<SpectralData>,
}

impl<M: StableSde> Posterior<M> {
    pub fn new(model: M, spec: ParamSpec, data: Vec<SpectralData>) -> Result<Self> {
        let layout = Layout::new(&model, &spec)?;
        if data.len() != spec.n_conditions() {
            return Err(Error::Shape(format!(
                "{} datasets for {} conditions",
                data.len(),
                spec.n_conditions()
            )));
        }
        if data.iter().any(|d| d.is_empty()) {
            return Err(Error::Shape("empty spectral dataset".into()));
        }
        Ok(Self {
            model,
            spec,
            layout,
            data,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn spec(&self) -> &ParamSpec {
        &self.spec
    }

    pub fn data(&self) -> &[SpectralData] {
        &self.data
    }

    /// Log posterior up to a constant; `−∞` outside the prior box. Numerical
    /// failures are reported together with the offending parameters.
    pub fn log_posterior(&self, theta: &[f64]) -> Result<f64> {
        self.log_density(theta).map_err(|e| match e {
            Error::Evaluation { .. } | Error::Shape(_) => e,
            other => Error::Numerical(format!("{other} at theta = {theta:?}")),
        })
    }
}

impl<M: StableSde> ScalarField for Posterior<M> {
    fn eval<S: Scalar>(&self, theta: &[S]) -> Result<S> {
        whittle_loglik_unchecked(&self.model, &self.layout, theta, &self.data)
    }
}

impl<M: StableSde> LogDensity for Posterior<M> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn in_support(&self, theta: &[f64]) -> bool {
        self.spec.in_support(theta)
    }

    fn supports_dual(&self) -> bool {
        self.model.state_dim() <= 2
    }

    fn param_names(&self) -> Vec<String> {
        self.spec.flat_names()
    }

    /// Centre of the prior box.
    fn default_init(&self) -> Vec<f64> {
        let (lo, hi) = self.spec.bounds();
        lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }
}
