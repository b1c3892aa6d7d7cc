use std::time::Instant;

use crate::autodiff::Engine;
use crate::error::{Error, Result};
use crate::par;
use crate::rng;

use super::nuts::{Nuts, NutsConfig, Point};
use super::posterior::{effective_engine, LogDensity};
use super::smmala::{smmala_step, SmmalaConfig, SmmalaState};

/// Sampler choice together with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampler {
    Smmala(SmmalaConfig),
    Nuts(NutsConfig),
}

impl Sampler {
    pub fn name(&self) -> &'static str {
        match self {
            Sampler::Smmala(_) => "smMALA",
            Sampler::Nuts(_) => "NUTS",
        }
    }

    pub fn n_iterations(&self) -> usize {
        match self {
            Sampler::Smmala(c) => c.n_iterations,
            Sampler::Nuts(c) => c.n_iterations,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Sampler::Smmala(c) => c.seed,
            Sampler::Nuts(c) => c.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Sampler::Smmala(c) => c.validate(),
            Sampler::Nuts(c) => c.validate(),
        }
    }
}

/// Post-burn-in draws of one chain with their bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub names: Vec<String>,
    /// One row per kept iteration.
    pub samples: Vec<Vec<f64>>,
    pub log_posts: Vec<f64>,
    /// Per kept iteration: whether the chain moved.
    pub accepted: Vec<bool>,
    /// Accepted transitions among the kept iterations.
    pub accept_count: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub n_iterations: usize,
    pub sampler: &'static str,
    pub engine: &'static str,
    /// Divergent NUTS transitions over the whole run.
    pub divergences: usize,
    /// Final NUTS step size.
    pub step_size: Option<f64>,
    /// Process CPU time of the sampling loop.
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// Draws of parameter `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[i]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.accept_count as f64 / self.len() as f64
        }
    }

    /// CSV with columns `iteration, <names>, log_posterior, accepted`;
    /// iterations are numbered from 1 over the whole run.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "iteration,{},log_posterior,accepted\n",
            self.names.join(",")
        );
        for (k, s) in self.samples.iter().enumerate() {
            out.push_str(&(self.burn_in + k + 1).to_string());
            for v in s {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push_str(&format!(
                ",{},{}\n",
                self.log_posts[k],
                u8::from(self.accepted[k])
            ));
        }
        out
    }
}

/// Process CPU time in seconds.
pub fn cpu_time() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Runs one chain on stream `chain_index` of the sampler's seed.
///
/// Without an explicit `init` the chain starts at the target's default point
/// and discards the first half of the iterations; with one, nothing is
/// discarded unless `burn_in` says otherwise. NUTS additionally discards its
/// adaptation phase.
pub fn run_chain<P: LogDensity>(
    target: &P,
    sampler: &Sampler,
    engine: Engine,
    init: Option<&[f64]>,
    burn_in: Option<usize>,
    chain_index: u64,
) -> Result<Chain> {
    sampler.validate()?;
    let n_iter = sampler.n_iterations();
    let start = match init {
        Some(x) => x.to_vec(),
        None => target.default_init(),
    };
    if start.len() != target.dim() {
        return Err(Error::Config(format!(
            "initial point has {} values, target has {} parameters",
            start.len(),
            target.dim()
        )));
    }
    if !target.in_support(&start) {
        return Err(Error::Domain(format!(
            "initial point {start:?} is outside the prior support"
        )));
    }
    let mut burn = burn_in.unwrap_or(if init.is_some() { 0 } else { n_iter / 2 });
    if let Sampler::Nuts(c) = sampler {
        burn = burn.max(c.n_adapt);
    }
    if burn >= n_iter {
        return Err(Error::Config(format!(
            "burn-in ({burn}) leaves no draws out of {n_iter} iterations"
        )));
    }

    let engine = effective_engine(target, engine);
    let seed = sampler.seed();
    let mut rng = rng::stream(seed, chain_index);
    let keep = n_iter - burn;
    let mut samples = Vec::with_capacity(keep);
    let mut log_posts = Vec::with_capacity(keep);
    let mut accepted = Vec::with_capacity(keep);
    let mut divergences = 0;
    let mut step_size = None;

    let cpu0 = cpu_time();
    let wall0 = Instant::now();
    match sampler {
        Sampler::Smmala(cfg) => {
            let mut state = SmmalaState::new(target, engine, &start, cfg)?;
            for t in 0..n_iter {
                let (next, step) = smmala_step(target, engine, state, cfg, &mut rng)?;
                state = next;
                if t >= burn {
                    samples.push(state.theta.clone());
                    log_posts.push(state.log_density);
                    accepted.push(step.accepted);
                }
            }
        }
        Sampler::Nuts(cfg) => {
            let mut point = Point::new(target, engine, &start)?;
            if !point.log_density.is_finite() {
                return Err(Error::Evaluation { theta: start });
            }
            let mut nuts = Nuts::new(target, engine, cfg, &point, &mut rng)?;
            for t in 0..n_iter {
                let tr = nuts.step(target, &point, &mut rng);
                divergences += usize::from(tr.divergent);
                point = tr.point;
                if t >= burn {
                    samples.push(point.q.clone());
                    log_posts.push(point.log_density);
                    accepted.push(tr.moved);
                }
            }
            step_size = Some(nuts.step_size());
        }
    }
    let cpu_seconds = cpu_time() - cpu0;
    let wall_seconds = wall0.elapsed().as_secs_f64();

    Ok(Chain {
        names: target.param_names(),
        accept_count: accepted.iter().filter(|&&a| a).count(),
        samples,
        log_posts,
        accepted,
        seed,
        burn_in: burn,
        n_iterations: n_iter,
        sampler: sampler.name(),
        engine: engine.name(),
        divergences,
        step_size,
        cpu_seconds,
        wall_seconds,
    })
}

/// Runs `n_chains` chains on distinct streams, in parallel when enabled.
pub fn run_chains<P: LogDensity>(
    target: &P,
    sampler: &Sampler,
    engine: Engine,
    init: Option<&[f64]>,
    burn_in: Option<usize>,
    n_chains: usize,
) -> Result<Vec<Chain>> {
    par::map_indexed(n_chains, |c| {
        run_chain(target, sampler, engine, init, burn_in, c as u64)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Scalar, ScalarField};

    /// Standard normal restricted to a box.
    struct BoxedNormal(f64);
    impl ScalarField for BoxedNormal {
        fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
            Ok(x.iter().fold(S::zero(), |acc, &v| acc - v * v * 0.5))
        }
    }
    impl LogDensity for BoxedNormal {
        fn dim(&self) -> usize {
            2
        }
        fn in_support(&self, x: &[f64]) -> bool {
            x.iter().all(|v| v.abs() <= self.0)
        }
    }

    fn smmala(n: usize) -> Sampler {
        Sampler::Smmala(SmmalaConfig {
            n_iterations: n,
            seed: 5,
            ..SmmalaConfig::default()
        })
    }

    #[test]
    fn burn_in_rules() {
        let t = BoxedNormal(3.0);
        let c = run_chain(&t, &smmala(10), Engine::Dual, Some(&[0.1, 0.1]), None, 0).unwrap();
        assert_eq!((c.burn_in, c.len()), (0, 10));
        let c = run_chain(&t, &smmala(10), Engine::Dual, None, None, 0).unwrap();
        assert_eq!((c.burn_in, c.len()), (5, 5));
        let c = run_chain(&t, &smmala(1), Engine::Dual, Some(&[0.1, 0.1]), None, 0).unwrap();
        assert_eq!(c.len(), 1);
        assert!(run_chain(
            &t,
            &smmala(10),
            Engine::Dual,
            Some(&[0.1, 0.1]),
            Some(10),
            0
        )
        .is_err());
    }

    #[test]
    fn rejects_out_of_support_init() {
        let t = BoxedNormal(1.0);
        let err = run_chain(&t, &smmala(10), Engine::Dual, Some(&[2.0, 0.0]), None, 0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn reproducible_and_in_support() {
        let t = BoxedNormal(1.0);
        for s in [
            smmala(400),
            Sampler::Nuts(NutsConfig {
                n_iterations: 400,
                n_adapt: 100,
                seed: 5,
                ..NutsConfig::default()
            }),
        ] {
            let a = run_chain(&t, &s, Engine::Dual, Some(&[0.2, 0.2]), None, 3).unwrap();
            let b = run_chain(&t, &s, Engine::Dual, Some(&[0.2, 0.2]), None, 3).unwrap();
            assert_eq!(a.samples, b.samples);
            assert_eq!(a.log_posts, b.log_posts);
            assert_eq!(a.accepted, b.accepted);
            assert!(a.samples.iter().all(|x| t.in_support(x)));
            for (x, lp) in a.samples.iter().zip(&a.log_posts) {
                assert!((t.log_density(x).unwrap() - lp).abs() <= 1e-10);
            }
            let other = run_chain(&t, &s, Engine::Dual, Some(&[0.2, 0.2]), None, 4).unwrap();
            assert_ne!(a.samples, other.samples);
        }
    }

    #[test]
    fn csv_layout() {
        let t = BoxedNormal(3.0);
        let c = run_chain(&t, &smmala(3), Engine::Dual, Some(&[0.1, 0.1]), None, 0).unwrap();
        let csv = c.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "iteration,theta[0],theta[1],log_posterior,accepted"
        );
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,"));
    }
}
