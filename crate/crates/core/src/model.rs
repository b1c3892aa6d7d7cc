//! Stable linear SDE models and their parameterization.
//!
//! A model supplies three things: the drift Jacobian `A(θ)`, the spectral
//! density of its stochastic input, and the observation-noise floor. The
//! spectral density and Whittle likelihood are built on top of those alone.
//!
//! Parameters are declared in a [`ParamSpec`]. Each entry is either shared by
//! all experimental conditions or repeated once per condition; the sampler
//! sees the flattened vector.

use std::collections::HashSet;
use std::sync::Arc;

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub shared: bool,
}

impl ParamEntry {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64, shared: bool) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            shared,
        }
    }
}

/// Named parameters with box bounds and a condition-sharing layout.
///
/// Flat layout: entries in declaration order, a shared entry takes one slot
/// and a per-condition entry takes `n_conditions` consecutive slots.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    entries: Vec<ParamEntry>,
    n_conditions: usize,
    offsets: Vec<usize>,
    dim: usize,
}

impl ParamSpec {
    pub fn new(entries: Vec<ParamEntry>, n_conditions: usize) -> Result<Self> {
        if n_conditions == 0 {
            return Err(Error::Config("n_conditions must be positive".into()));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate parameter name '{}'",
                    e.name
                )));
            }
            if !(e.lower < e.upper) {
                return Err(Error::Config(format!(
                    "parameter '{}': lower bound {} must be below upper bound {}",
                    e.name, e.lower, e.upper
                )));
            }
        }
        let mut offsets = Vec::with_capacity(entries.len());
        let mut dim = 0;
        for e in &entries {
            offsets.push(dim);
            dim += if e.shared { 1 } else { n_conditions };
        }
        Ok(Self {
            entries,
            n_conditions,
            offsets,
            dim,
        })
    }

    /// Default oscillator layout: `omega0` and `sigma_in` per condition,
    /// `zeta` shared.
    pub fn oscillator(n_conditions: usize) -> Self {
        Self::new(
            vec![
                ParamEntry::new("omega0", 1.0, 200.0, false),
                ParamEntry::new("sigma_in", 0.1, 500.0, false),
                ParamEntry::new("zeta", 0.01, 0.99, true),
            ],
            n_conditions,
        )
        .expect("default oscillator spec is valid")
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn n_conditions(&self) -> usize {
        self.n_conditions
    }

    /// Length of the flat sampling vector.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry_index(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    fn check_condition(&self, condition: usize) -> Result<()> {
        if condition >= self.n_conditions {
            return Err(Error::Index {
                what: "condition",
                index: condition,
                limit: self.n_conditions,
            });
        }
        Ok(())
    }

    /// Flat index of `entry` for `condition`.
    pub fn flat_index(&self, entry: usize, condition: usize) -> Result<usize> {
        self.check_condition(condition)?;
        let e = self.entries.get(entry).ok_or(Error::Index {
            what: "entry",
            index: entry,
            limit: self.entries.len(),
        })?;
        Ok(self.offsets[entry] + if e.shared { 0 } else { condition })
    }

    /// Names of the flat coordinates, e.g. `omega0[c1]`, `zeta`.
    pub fn flat_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim);
        for e in &self.entries {
            if e.shared {
                names.push(e.name.clone());
            } else {
                names.extend((1..=self.n_conditions).map(|c| format!("{}[c{c}]", e.name)));
            }
        }
        names
    }

    /// Flat lower and upper bounds.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        for e in &self.entries {
            let reps = if e.shared { 1 } else { self.n_conditions };
            lo.extend(std::iter::repeat_n(e.lower, reps));
            hi.extend(std::iter::repeat_n(e.upper, reps));
        }
        (lo, hi)
    }

    pub fn in_support(&self, flat: &[f64]) -> bool {
        if flat.len() != self.dim {
            return false;
        }
        let (lo, hi) = self.bounds();
        flat.iter()
            .zip(lo.iter().zip(&hi))
            .all(|(&x, (&l, &h))| l <= x && x <= h)
    }

    /// Checks length and support, reporting the first offending coordinate.
    pub fn check(&self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.dim {
            return Err(Error::Shape(format!(
                "parameter vector has length {}, expected {}",
                flat.len(),
                self.dim
            )));
        }
        let (lo, hi) = self.bounds();
        let names = self.flat_names();
        for i in 0..self.dim {
            if !(lo[i] <= flat[i] && flat[i] <= hi[i]) {
                return Err(Error::Domain(format!(
                    "{} = {} not in [{}, {}]",
                    names[i], flat[i], lo[i], hi[i]
                )));
            }
        }
        Ok(())
    }

    /// Values effective for `condition`, one per entry in declaration order.
    pub fn unpack<S: Copy>(&self, flat: &[S], condition: usize) -> Result<Vec<S>> {
        self.check_condition(condition)?;
        if flat.len() != self.dim {
            return Err(Error::Shape(format!(
                "parameter vector has length {}, expected {}",
                flat.len(),
                self.dim
            )));
        }
        Ok((0..self.entries.len())
            .map(|e| {
                let shift = if self.entries[e].shared { 0 } else { condition };
                flat[self.offsets[e] + shift]
            })
            .collect())
    }

    /// Inverse of [`ParamSpec::unpack`]: rebuilds the flat vector from one
    /// per-entry view per condition. Shared entries must agree.
    pub fn flatten(&self, per_condition: &[Vec<f64>]) -> Result<Vec<f64>> {
        if per_condition.len() != self.n_conditions
            || per_condition.iter().any(|v| v.len() != self.entries.len())
        {
            return Err(Error::Shape(format!(
                "expected {} condition views of {} values",
                self.n_conditions,
                self.entries.len()
            )));
        }
        let mut flat = vec![0.0; self.dim];
        for (e, entry) in self.entries.iter().enumerate() {
            if entry.shared {
                let v = per_condition[0][e];
                if per_condition.iter().any(|c| c[e] != v) {
                    return Err(Error::Shape(format!(
                        "shared parameter '{}' differs across conditions",
                        entry.name
                    )));
                }
                flat[self.offsets[e]] = v;
            } else {
                for (c, view) in per_condition.iter().enumerate() {
                    flat[self.offsets[e] + c] = view[e];
                }
            }
        }
        Ok(flat)
    }
}

/// A flat parameter vector tied to its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    spec: Arc<ParamSpec>,
}

impl ParamVector {
    /// Checks the length only; support is a separate question.
    pub fn new(spec: Arc<ParamSpec>, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.dim() {
            return Err(Error::Shape(format!(
                "parameter vector has length {}, expected {}",
                values.len(),
                spec.dim()
            )));
        }
        Ok(Self { values, spec })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spec(&self) -> &ParamSpec {
        &self.spec
    }

    pub fn in_support(&self) -> bool {
        self.spec.in_support(&self.values)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A linear(ized) SDE `dX = A(θ) X dt + P(t)` with a single stochastic input
/// and a single observed component.
///
/// Implementations receive the per-condition parameters in the order given by
/// [`StableSde::param_names`].
pub trait StableSde: Send + Sync {
    fn name(&self) -> &str;
    fn param_names(&self) -> &[&'static str];
    fn state_dim(&self) -> usize;
    fn jacobian<S: Scalar>(&self, params: &[S]) -> SquareMatrix<S>;
    /// Spectral density of input component `component` at `omega`.
    fn input_psd_component<S: Scalar>(&self, params: &[S], component: usize, omega: f64) -> S;
    /// Spectral density of every input component at `omega`.
    fn input_psd<S: Scalar>(&self, params: &[S], omega: f64) -> Vec<S> {
        (0..self.state_dim())
            .map(|j| self.input_psd_component(params, j, omega))
            .collect()
    }
    /// Additive observation-noise contribution to the observed spectrum.
    fn obs_psd_term(&self) -> f64;
    fn observed_component(&self) -> usize;
    fn input_component(&self) -> usize;
    fn delta_t(&self) -> f64;
    /// Standard deviation of the additive observation noise.
    fn sigma_obs(&self) -> f64;
}

/// Noise-driven damped harmonic oscillator observed through its position.
///
/// Parameters: `omega0` (natural frequency, rad/s), `zeta` (damping ratio),
/// `sigma_in` (input noise intensity). White noise drives the velocity with
/// flat two-sided spectral density `sigma_in²`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicOscillator {
    pub sigma_obs: f64,
    pub delta_t: f64,
}

impl HarmonicOscillator {
    pub const PARAMS: [&'static str; 3] = ["omega0", "zeta", "sigma_in"];

    pub fn new(sigma_obs: f64, delta_t: f64) -> Result<Self> {
        if !(sigma_obs >= 0.0) || !(delta_t > 0.0) {
            return Err(Error::Config(format!(
                "oscillator needs sigma_obs >= 0 and delta_t > 0 (got {sigma_obs}, {delta_t})"
            )));
        }
        Ok(Self { sigma_obs, delta_t })
    }
}

impl StableSde for HarmonicOscillator {
    fn name(&self) -> &str {
        "harmonic_oscillator"
    }

    fn param_names(&self) -> &[&'static str] {
        &Self::PARAMS
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn jacobian<S: Scalar>(&self, p: &[S]) -> SquareMatrix<S> {
        let (omega0, zeta) = (p[0], p[1]);
        let mut a = SquareMatrix::zeros(2);
        a[(0, 1)] = S::one();
        a[(1, 0)] = -(omega0 * omega0);
        a[(1, 1)] = -(zeta * omega0 * 2.0);
        a
    }

    fn input_psd_component<S: Scalar>(&self, p: &[S], component: usize, _omega: f64) -> S {
        if component == 1 {
            p[2] * p[2]
        } else {
            S::zero()
        }
    }

    fn obs_psd_term(&self) -> f64 {
        self.sigma_obs * self.sigma_obs * self.delta_t
    }

    fn observed_component(&self) -> usize {
        0
    }

    fn input_component(&self) -> usize {
        1
    }

    fn delta_t(&self) -> f64 {
        self.delta_t
    }

    fn sigma_obs(&self) -> f64 {
        self.sigma_obs
    }
}

/// Precomputed map from (condition, model parameter) to flat index.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    indices: Vec<Vec<usize>>,
}

impl Layout {
    /// Every model parameter must name an entry of `spec`; extra entries are
    /// rejected so nothing is silently left unsampled.
    pub fn new<M: StableSde>(model: &M, spec: &ParamSpec) -> Result<Self> {
        let names = model.param_names();
        if spec.entries().len() != names.len() {
            return Err(Error::Config(format!(
                "model '{}' expects parameters {:?}, spec declares {:?}",
                model.name(),
                names,
                spec.entries().iter().map(|e| &e.name).collect::<Vec<_>>()
            )));
        }
        let entry_of: Vec<usize> = names
            .iter()
            .map(|n| {
                spec.entry_index(n).ok_or_else(|| {
                    Error::Config(format!("model '{}' needs parameter '{n}'", model.name()))
                })
            })
            .collect::<Result<_>>()?;
        let indices = (0..spec.n_conditions())
            .map(|c| {
                entry_of
                    .iter()
                    .map(|&e| spec.flat_index(e, c))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { indices })
    }

    pub fn n_conditions(&self) -> usize {
        self.indices.len()
    }

    /// Model-ordered parameters for `condition`.
    pub fn condition_params<S: Copy>(&self, flat: &[S], condition: usize) -> Result<Vec<S>> {
        let idx = self.indices.get(condition).ok_or(Error::Index {
            what: "condition",
            index: condition,
            limit: self.indices.len(),
        })?;
        Ok(idx.iter().map(|&i| flat[i]).collect())
    }
}

fn supported_params<M: StableSde, S: Scalar>(
    model: &M,
    spec: &ParamSpec,
    theta: &[S],
    condition: usize,
) -> Result<Vec<S>> {
    let primal: Vec<f64> = theta.iter().map(|t| t.primal()).collect();
    spec.check(&primal)?;
    Layout::new(model, spec)?.condition_params(theta, condition)
}

/// Drift Jacobian `A(θ)` for one condition.
pub fn jacobian<M: StableSde, S: Scalar>(
    model: &M,
    spec: &ParamSpec,
    theta: &[S],
    condition: usize,
) -> Result<SquareMatrix<S>> {
    let p = supported_params(model, spec, theta, condition)?;
    Ok(model.jacobian(&p))
}

/// Input spectral density per state component for one condition.
pub fn input_psd<M: StableSde, S: Scalar>(
    model: &M,
    spec: &ParamSpec,
    theta: &[S],
    condition: usize,
    omega: f64,
) -> Result<Vec<S>> {
    let p = supported_params(model, spec, theta, condition)?;
    Ok(model.input_psd(&p, omega))
}

/// Observation-noise floor `σ_obs²·Δt`.
pub fn obs_psd_term<M: StableSde>(model: &M) -> f64 {
    model.obs_psd_term()
}

/// Per-condition view of a parameter vector, in spec entry order.
pub fn unpack(theta: &ParamVector, condition: usize) -> Result<Vec<f64>> {
    theta.spec().unpack(theta.values(), condition)
}
