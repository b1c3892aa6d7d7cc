//! Run configuration read from a TOML file.
//!
//! Unknown keys are rejected everywhere. Relative paths inside the file are
//! resolved against the directory containing it.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use spectral_mcmc::autodiff::Engine;
use spectral_mcmc::mcmc::{MetricInit, NutsConfig, Sampler, SmmalaConfig};
use spectral_mcmc::model::ParamEntry;
use spectral_mcmc::simulate::SimOptions;
use spectral_mcmc::{HarmonicOscillator, ParamSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub param: Vec<ParamConfig>,
    pub data: Option<DataConfig>,
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub smmala: SmmalaSection,
    #[serde(default)]
    pub nuts: NutsSection,
    #[serde(default)]
    pub derivatives: Derivatives,
    #[serde(default = "one")]
    pub fd_step_scale: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub init: Option<Init>,
    #[serde(default)]
    pub check: CheckSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub sigma_obs: f64,
    pub delta_t: f64,
    #[serde(default = "two")]
    pub conditions: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamConfig {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub shared: bool,
}

/// Either explicit CSV files or a manifest written by `simulate`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub paths: Vec<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub truth: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub duration: f64,
    pub truth: Vec<f64>,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default)]
    pub warmup_seconds: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[default]
    Smmala,
    Nuts,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmmalaSection {
    #[serde(default = "one")]
    pub step_size: f64,
    #[serde(default = "default_floor")]
    pub hessian_floor: f64,
}

impl Default for SmmalaSection {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            hessian_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NutsSection {
    #[serde(default = "default_adapt")]
    pub n_adapt: usize,
    #[serde(default = "default_target")]
    pub target_accept: f64,
    #[serde(default = "default_depth")]
    pub max_tree_depth: usize,
    #[serde(default = "yes")]
    pub adapt_metric: bool,
    #[serde(default)]
    pub metric_init: MetricChoice,
    pub step_size: Option<f64>,
}

impl Default for NutsSection {
    fn default() -> Self {
        Self {
            n_adapt: default_adapt(),
            target_accept: default_target(),
            max_tree_depth: default_depth(),
            adapt_metric: true,
            metric_init: MetricChoice::default(),
            step_size: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricChoice {
    #[default]
    Hessian,
    Identity,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Derivatives {
    #[default]
    Ad,
    Fd,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Init {
    Named(String),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_gradient_tolerance")]
    pub gradient_tolerance: f64,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            points: default_points(),
            gradient_tolerance: default_gradient_tolerance(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn yes() -> bool {
    true
}
fn default_iterations() -> usize {
    1000
}
fn default_output() -> PathBuf {
    PathBuf::from("output")
}
fn default_substeps() -> usize {
    SimOptions::default().substeps
}
fn default_floor() -> f64 {
    1e-6
}
fn default_adapt() -> usize {
    NutsConfig::default().n_adapt
}
fn default_target() -> f64 {
    NutsConfig::default().target_accept
}
fn default_depth() -> usize {
    NutsConfig::default().max_tree_depth
}
fn default_points() -> usize {
    20
}
fn default_gradient_tolerance() -> f64 {
    1e-4
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// A parsed configuration plus the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }
}

pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config =
        parse(&text).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))?;
    let mut base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if base.as_os_str().is_empty() {
        base = PathBuf::from(".");
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.output {
        // Command-line paths are relative to the working directory.
        config.output_dir = std::path::absolute(out)
            .map_err(|e| CliError::Config(format!("output directory {}: {e}", out.display())))?;
    }
    config.validate()?;
    Ok(Loaded { config, base })
}

pub fn parse(text: &str) -> Result<RunConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

impl RunConfig {
    fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.model.name != "harmonic_oscillator" {
            return bad(format!(
                "model.name: unknown model '{}' (expected \"harmonic_oscillator\")",
                self.model.name
            ));
        }
        if self.model.conditions == 0 {
            return bad("model.conditions must be positive".into());
        }
        if self.data.is_some() && self.simulate.is_some() {
            return bad("give either [data] or [simulate], not both".into());
        }
        if let Some(d) = &self.data {
            if d.paths.is_empty() == d.manifest.is_none() {
                return bad("[data] needs exactly one of `paths` or `manifest`".into());
            }
        }
        if let Some(Init::Named(s)) = &self.init {
            if s != "truth" {
                return bad(format!(
                    "init: expected \"truth\" or a list of numbers, got \"{s}\""
                ));
            }
        }
        if !(self.fd_step_scale > 0.0 && self.fd_step_scale.is_finite()) {
            return bad("fd_step_scale must be positive".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if self.check.points == 0 {
            return bad("check.points must be positive".into());
        }
        self.model()?;
        self.spec()?;
        Ok(())
    }

    pub fn model(&self) -> CliResult<HarmonicOscillator> {
        Ok(HarmonicOscillator::new(
            self.model.sigma_obs,
            self.model.delta_t,
        )?)
    }

    pub fn spec(&self) -> CliResult<ParamSpec> {
        if self.param.is_empty() {
            return Ok(ParamSpec::oscillator(self.model.conditions));
        }
        let entries = self
            .param
            .iter()
            .map(|p| ParamEntry::new(p.name.clone(), p.lower, p.upper, p.shared))
            .collect();
        Ok(ParamSpec::new(entries, self.model.conditions)?)
    }

    pub fn engine(&self, derivatives: Derivatives) -> Engine {
        match derivatives {
            Derivatives::Ad => Engine::Dual,
            Derivatives::Fd => Engine::FiniteDiff {
                step_scale: self.fd_step_scale,
            },
        }
    }

    /// Sampler for `kind`. NUTS adaptation runs on top of `iterations`.
    pub fn sampler(&self, kind: SamplerKind) -> Sampler {
        match kind {
            SamplerKind::Smmala => Sampler::Smmala(SmmalaConfig {
                step_size: self.smmala.step_size,
                n_iterations: self.iterations,
                seed: self.seed,
                hessian_floor: self.smmala.hessian_floor,
            }),
            SamplerKind::Nuts => Sampler::Nuts(NutsConfig {
                n_iterations: self.iterations + self.nuts.n_adapt,
                n_adapt: self.nuts.n_adapt,
                target_accept: self.nuts.target_accept,
                max_tree_depth: self.nuts.max_tree_depth,
                seed: self.seed,
                adapt_metric: self.nuts.adapt_metric,
                metric_init: match self.nuts.metric_init {
                    MetricChoice::Hessian => MetricInit::Hessian,
                    MetricChoice::Identity => MetricInit::Identity,
                },
                step_size: self.nuts.step_size,
            }),
        }
    }

    /// Iterations discarded before the kept draws, when fixed by the config.
    pub fn burn_in(&self, kind: SamplerKind) -> Option<usize> {
        match kind {
            SamplerKind::Smmala => self.burn_in,
            SamplerKind::Nuts => Some(self.nuts.n_adapt + self.burn_in.unwrap_or(0)),
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        let s = self.simulate.as_ref();
        SimOptions {
            substeps: s.map_or(default_substeps(), |s| s.substeps),
            warmup_seconds: s.map_or(0.0, |s| s.warmup_seconds),
            x0: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model]
        name = "harmonic_oscillator"
        sigma_obs = 0.05
        delta_t = 0.01

        [simulate]
        duration = 20.0
        truth = [80.0, 40.0, 100.0, 10.0, 0.2]
    "#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.sampler, SamplerKind::Smmala);
        assert_eq!(c.derivatives, Derivatives::Ad);
        assert_eq!(c.iterations, 1000);
        assert_eq!(c.model.conditions, 2);
        assert_eq!(c.smmala.step_size, 1.0);
        assert_eq!(c.spec().unwrap().dim(), 5);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = parse(&format!("{MINIMAL}\n[nuts]\nn_adpat = 3\n")).unwrap_err();
        assert!(err.contains("n_adpat"), "{err}");
        assert!(err.contains("line"), "{err}");
        assert!(parse(&format!("itertions = 4\n{MINIMAL}")).is_err());
    }

    #[test]
    fn nuts_adaptation_is_added_to_iterations() {
        let c = parse(&format!("iterations = 1000\n{MINIMAL}")).unwrap();
        let Sampler::Nuts(n) = c.sampler(SamplerKind::Nuts) else {
            panic!()
        };
        assert_eq!(n.n_iterations, 1500);
        assert_eq!(c.burn_in(SamplerKind::Nuts), Some(500));
        assert_eq!(c.burn_in(SamplerKind::Smmala), None);
    }

    #[test]
    fn inconsistent_configs_fail_validation() {
        let both = format!("{MINIMAL}\n[data]\npaths = [\"a.csv\"]\n");
        assert!(parse(&both).unwrap().validate().is_err());
        let init = format!("init = \"centre\"\n{MINIMAL}");
        assert!(parse(&init).unwrap().validate().is_err());
        let model = MINIMAL.replace("harmonic_oscillator", "pendulum");
        assert!(parse(&model).unwrap().validate().is_err());
        let sigma = MINIMAL.replace("0.05", "-1.0");
        assert!(parse(&sigma).unwrap().validate().is_err());
    }

    #[test]
    fn explicit_init_vector_parses() {
        let c = parse(&format!("init = [1.0, 2.0]\n{MINIMAL}")).unwrap();
        assert!(matches!(c.init, Some(Init::Values(ref v)) if v.len() == 2));
    }
}
