//! Synthetic data: Euler–Maruyama paths of a stable SDE plus observation
//! noise.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{Layout, ParamSpec, StableSde};
use crate::par;
use crate::rng;

/// Sampled state path on the grid `t_k = k·Δt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// Row-major `n × state_dim`.
    x: Vec<f64>,
    state_dim: usize,
    pub delta_t: f64,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.x[k * self.state_dim..(k + 1) * self.state_dim]
    }

    pub fn component(&self, j: usize) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.x[k * self.state_dim + j])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Euler–Maruyama steps per output sample.
    pub substeps: usize,
    /// Simulated time discarded before the first recorded sample.
    pub warmup_seconds: f64,
    /// Initial state; zero when absent.
    pub x0: Option<Vec<f64>>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            substeps: 100,
            warmup_seconds: 0.0,
            x0: None,
        }
    }
}

/// Number of samples `duration / Δt`, which must be an integer ≥ 4.
pub fn sample_count(duration: f64, delta_t: f64) -> Result<usize> {
    if !(duration > 0.0 && delta_t > 0.0) {
        return Err(Error::Shape(format!(
            "duration ({duration}) and delta_t ({delta_t}) must be positive"
        )));
    }
    let ratio = duration / delta_t;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * n.max(1.0) || n < 4.0 {
        return Err(Error::Shape(format!(
            "duration / delta_t = {ratio} must be an integer of at least 4"
        )));
    }
    Ok(n as usize)
}

/// Simulates one condition with default options (100 substeps, zero start).
pub fn simulate_sde<M: StableSde>(
    model: &M,
    spec: &ParamSpec,
    theta: &[f64],
    condition: usize,
    duration: f64,
    delta_t: f64,
    seed: u64,
) -> Result<Trajectory> {
    simulate_sde_with(
        model,
        spec,
        theta,
        condition,
        duration,
        delta_t,
        seed,
        &SimOptions::default(),
    )
}

/// `x ← x + A x δ + b √(f_P) √δ z` with `δ = Δt / substeps` and the input
/// intensity taken from the (flat) input spectral density.
#[allow(clippy::too_many_arguments)]
pub fn simulate_sde_with<M: StableSde>(
    model: &M,
    spec: &ParamSpec,
    theta: &[f64],
    condition: usize,
    duration: f64,
    delta_t: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let n = sample_count(duration, delta_t)?;
    if opts.substeps == 0 {
        return Err(Error::Config("substeps must be at least 1".into()));
    }
    spec.check(theta)?;
    let params = Layout::new(model, spec)?.condition_params(theta, condition)?;
    let a = model.jacobian(&params);
    let dim = a.dim();

    let max_real = a
        .primal()
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(max_real < 0.0) {
        return Err(Error::Unstable {
            max_real_part: max_real,
        });
    }

    let amplitude: Vec<f64> = (0..dim)
        .map(|j| model.input_psd_component(&params, j, 0.0).max(0.0).sqrt())
        .collect();
    let step = delta_t / opts.substeps as f64;
    let noise_scale: Vec<f64> = amplitude.iter().map(|s| s * step.sqrt()).collect();

    let mut x = match &opts.x0 {
        Some(x0) if x0.len() == dim => x0.clone(),
        Some(x0) => {
            return Err(Error::Shape(format!(
                "initial state has {} components, model has {dim}",
                x0.len()
            )))
        }
        None => vec![0.0; dim],
    };
    let mut rng = rng::stream(seed, rng::streams::SDE_BASE + condition as u64);
    let mut drift = vec![0.0; dim];
    let mut advance = |x: &mut Vec<f64>| {
        for i in 0..dim {
            drift[i] = (0..dim).map(|j| a[(i, j)] * x[j]).sum::<f64>();
        }
        for i in 0..dim {
            x[i] += drift[i] * step;
            if noise_scale[i] > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                x[i] += noise_scale[i] * z;
            }
        }
    };

    let warmup_steps = (opts.warmup_seconds / step).round() as usize;
    for _ in 0..warmup_steps {
        advance(&mut x);
    }

    let mut path = Vec::with_capacity(n * dim);
    for k in 0..n {
        path.extend_from_slice(&x);
        if k + 1 < n {
            for _ in 0..opts.substeps {
                advance(&mut x);
            }
        }
    }
    if path.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "simulation produced non-finite states".into(),
        ));
    }
    Ok(Trajectory {
        t: (0..n).map(|k| k as f64 * delta_t).collect(),
        x: path,
        state_dim: dim,
        delta_t,
        seed,
    })
}

/// `y_k = x_{k,component} + σ_obs z_k` with its own random stream.
pub fn observe(traj: &Trajectory, component: usize, sigma_obs: f64, seed: u64) -> Result<Vec<f64>> {
    observe_stream(traj, component, sigma_obs, seed, rng::streams::OBS_BASE)
}

/// [`observe`] on an explicit stream id (one per condition).
pub fn observe_stream(
    traj: &Trajectory,
    component: usize,
    sigma_obs: f64,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    if component >= traj.state_dim() {
        return Err(Error::Index {
            what: "observed component",
            index: component,
            limit: traj.state_dim(),
        });
    }
    let mut rng = rng::stream(seed, stream);
    Ok((0..traj.len())
        .map(|k| {
            let z: f64 = StandardNormal.sample(&mut rng);
            traj.state(k)[component] + sigma_obs * z
        })
        .collect())
}

/// Observed series for every condition of `spec`: condition `c` uses process
/// stream `c` and observation stream `c` of `seed`, so conditions are
/// independent and can be generated in parallel.
#[allow(clippy::too_many_arguments)]
pub fn simulate_observations<M: StableSde>(
    model: &M,
    spec: &ParamSpec,
    theta: &[f64],
    duration: f64,
    delta_t: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Vec<Vec<f64>>> {
    par::map_indexed(spec.n_conditions(), |c| {
        let traj = simulate_sde_with(model, spec, theta, c, duration, delta_t, seed, opts)?;
        observe_stream(
            &traj,
            model.observed_component(),
            model.sigma_obs(),
            seed,
            rng::streams::OBS_BASE + c as u64,
        )
    })
    .into_iter()
    .collect()
}
