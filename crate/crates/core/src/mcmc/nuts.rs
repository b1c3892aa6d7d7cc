//! No-U-Turn sampler with multinomial trajectory sampling, a diagonal
//! Euclidean metric, and dual-averaging step-size adaptation.
//!
//! Tree depth `d` means `d` doublings after the first leapfrog step, so a
//! trajectory holds at most `2^(d+1) − 1` new points and `max_tree_depth = 0`
//! is a single Metropolis-adjusted leapfrog step.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::Engine;
use crate::error::{Error, Result};

use super::posterior::LogDensity;

/// Energy error beyond which a trajectory is declared divergent.
pub const MAX_ENERGY_ERROR: f64 = 1000.0;

/// Starting metric before any adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricInit {
    Identity,
    /// Diagonal of the inverse regularized negative Hessian at the initial
    /// point.
    Hessian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NutsConfig {
    /// Total transitions, adaptation included.
    pub n_iterations: usize,
    /// Leading transitions used for adaptation (and later discarded).
    pub n_adapt: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub seed: u64,
    /// Adapt a diagonal metric in windows during warm-up.
    pub adapt_metric: bool,
    pub metric_init: MetricInit,
    /// Initial step size; found heuristically when absent.
    pub step_size: Option<f64>,
}

impl Default for NutsConfig {
    fn default() -> Self {
        Self {
            n_iterations: 1500,
            n_adapt: 500,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed: 0,
            adapt_metric: true,
            metric_init: MetricInit::Hessian,
            step_size: None,
        }
    }
}

impl NutsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config(format!(
                "target_accept must lie in (0, 1), got {}",
                self.target_accept
            )));
        }
        if self.n_iterations == 0 || self.n_adapt >= self.n_iterations {
            return Err(Error::Config(format!(
                "need 0 <= n_adapt < n_iterations (got {} and {})",
                self.n_adapt, self.n_iterations
            )));
        }
        if let Some(eps) = self.step_size {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Config(format!("step_size must be > 0, got {eps}")));
            }
        }
        Ok(())
    }
}

/// Position with its log density and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub q: Vec<f64>,
    pub log_density: f64,
    pub gradient: Vec<f64>,
}

impl Point {
    pub fn new<P: LogDensity>(target: &P, engine: Engine, q: &[f64]) -> Result<Self> {
        if !target.in_support(q) {
            return Ok(Self::outside(q));
        }
        let (log_density, gradient) = engine.value_and_gradient(target, q)?;
        Ok(Self {
            q: q.to_vec(),
            log_density,
            gradient,
        })
    }

    fn outside(q: &[f64]) -> Self {
        Self {
            q: q.to_vec(),
            log_density: f64::NEG_INFINITY,
            gradient: vec![0.0; q.len()],
        }
    }

    /// Like [`Point::new`], but evaluation failures count as zero density.
    fn probe<P: LogDensity>(target: &P, engine: Engine, q: &[f64]) -> Self {
        match Self::new(target, engine, q) {
            Ok(p) if p.log_density.is_finite() && p.gradient.iter().all(|g| g.is_finite()) => p,
            _ => Self::outside(q),
        }
    }
}

/// One leapfrog step of signed size `eps` under inverse mass `inv_mass`.
pub fn leapfrog<P: LogDensity>(
    target: &P,
    engine: Engine,
    point: &Point,
    momentum: &mut [f64],
    eps: f64,
    inv_mass: &[f64],
) -> Point {
    let n = momentum.len();
    for i in 0..n {
        momentum[i] += 0.5 * eps * point.gradient[i];
    }
    let q: Vec<f64> = (0..n)
        .map(|i| point.q[i] + eps * inv_mass[i] * momentum[i])
        .collect();
    let next = Point::probe(target, engine, &q);
    for i in 0..n {
        momentum[i] += 0.5 * eps * next.gradient[i];
    }
    next
}

fn kinetic(p: &[f64], inv_mass: &[f64]) -> f64 {
    0.5 * p.iter().zip(inv_mass).map(|(p, m)| m * p * p).sum::<f64>()
}

fn hamiltonian(point: &Point, p: &[f64], inv_mass: &[f64]) -> f64 {
    let h = -point.log_density + kinetic(p, inv_mass);
    if h.is_nan() {
        f64::INFINITY
    } else {
        h
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn sharp(p: &[f64], inv_mass: &[f64]) -> Vec<f64> {
    p.iter().zip(inv_mass).map(|(p, m)| p * m).collect()
}

fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    let dot = |a: &[f64]| a.iter().zip(rho).map(|(x, y)| x * y).sum::<f64>();
    dot(p_sharp_plus) > 0.0 && dot(p_sharp_minus) > 0.0
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Outcome of one NUTS transition.
#[derive(Debug, Clone, PartialEq)]
pub struct NutsTransition {
    pub point: Point,
    /// Mean Metropolis acceptance over all new trajectory points.
    pub accept_stat: f64,
    pub n_leapfrog: usize,
    pub depth: usize,
    pub divergent: bool,
    /// Whether the chain left its previous position.
    pub moved: bool,
}

struct Tree<'a, P> {
    target: &'a P,
    engine: Engine,
    eps: f64,
    inv_mass: &'a [f64],
    h0: f64,
    n_leapfrog: usize,
    sum_metro: f64,
    divergent: bool,
}

/// End of a trajectory being extended: its point and momentum.
#[derive(Clone)]
struct Edge {
    point: Point,
    p: Vec<f64>,
}

struct Span {
    p_sharp_beg: Vec<f64>,
    p_sharp_end: Vec<f64>,
    p_beg: Vec<f64>,
    p_end: Vec<f64>,
}

impl<P: LogDensity> Tree<'_, P> {
    /// Extends `edge` by `2^depth` steps in direction `sign`, accumulating
    /// into `rho` and `log_sum_weight`. Returns false on divergence or an
    /// internal U-turn.
    #[allow(clippy::too_many_arguments)]
    fn build<R: rand::Rng + ?Sized>(
        &mut self,
        depth: usize,
        edge: &mut Edge,
        propose: &mut Point,
        span: &mut Span,
        rho: &mut [f64],
        sign: f64,
        log_sum_weight: &mut f64,
        rng: &mut R,
    ) -> bool {
        if depth == 0 {
            edge.point = leapfrog(
                self.target,
                self.engine,
                &edge.point,
                &mut edge.p,
                sign * self.eps,
                self.inv_mass,
            );
            self.n_leapfrog += 1;
            let h = hamiltonian(&edge.point, &edge.p, self.inv_mass);
            if h - self.h0 > MAX_ENERGY_ERROR {
                self.divergent = true;
            }
            let log_w = self.h0 - h;
            *log_sum_weight = log_add_exp(*log_sum_weight, log_w);
            self.sum_metro += if log_w > 0.0 { 1.0 } else { log_w.exp() };
            *propose = edge.point.clone();
            let ps = sharp(&edge.p, self.inv_mass);
            span.p_sharp_beg = ps.clone();
            span.p_sharp_end = ps;
            for (r, p) in rho.iter_mut().zip(&edge.p) {
                *r += p;
            }
            span.p_beg = edge.p.clone();
            span.p_end = edge.p.clone();
            return !self.divergent;
        }

        let n = rho.len();
        let mut left = Span {
            p_sharp_beg: vec![],
            p_sharp_end: vec![],
            p_beg: vec![],
            p_end: vec![],
        };
        let mut rho_left = vec![0.0; n];
        let mut lsw_left = f64::NEG_INFINITY;
        if !self.build(
            depth - 1,
            edge,
            propose,
            &mut left,
            &mut rho_left,
            sign,
            &mut lsw_left,
            rng,
        ) {
            return false;
        }

        let mut right = Span {
            p_sharp_beg: vec![],
            p_sharp_end: vec![],
            p_beg: vec![],
            p_end: vec![],
        };
        let mut propose_right = propose.clone();
        let mut rho_right = vec![0.0; n];
        let mut lsw_right = f64::NEG_INFINITY;
        if !self.build(
            depth - 1,
            edge,
            &mut propose_right,
            &mut right,
            &mut rho_right,
            sign,
            &mut lsw_right,
            rng,
        ) {
            return false;
        }

        let lsw_subtree = log_add_exp(lsw_left, lsw_right);
        *log_sum_weight = log_add_exp(*log_sum_weight, lsw_subtree);
        if lsw_right > lsw_subtree || rng.random::<f64>() < (lsw_right - lsw_subtree).exp() {
            *propose = propose_right;
        }

        let rho_subtree = add(&rho_left, &rho_right);
        let mut persist = no_u_turn(&left.p_sharp_beg, &right.p_sharp_end, &rho_subtree);
        persist &= no_u_turn(
            &left.p_sharp_beg,
            &right.p_sharp_beg,
            &add(&rho_left, &right.p_beg),
        );
        persist &= no_u_turn(
            &left.p_sharp_end,
            &right.p_sharp_end,
            &add(&rho_right, &left.p_end),
        );
        for (r, s) in rho.iter_mut().zip(&rho_subtree) {
            *r += s;
        }
        span.p_sharp_beg = left.p_sharp_beg;
        span.p_sharp_end = right.p_sharp_end;
        span.p_beg = left.p_beg;
        span.p_end = right.p_end;
        persist
    }
}

/// One NUTS transition from `current` with fixed step size and metric.
pub fn nuts_transition<P: LogDensity, R: rand::Rng + ?Sized>(
    target: &P,
    engine: Engine,
    current: &Point,
    eps: f64,
    inv_mass: &[f64],
    max_tree_depth: usize,
    rng: &mut R,
) -> NutsTransition {
    let n = current.q.len();
    let p0: Vec<f64> = inv_mass
        .iter()
        .map(|m| {
            let z: f64 = StandardNormal.sample(rng);
            z / m.sqrt()
        })
        .collect();
    let ps0 = sharp(&p0, inv_mass);
    let mut tree = Tree {
        target,
        engine,
        eps,
        inv_mass,
        h0: hamiltonian(current, &p0, inv_mass),
        n_leapfrog: 0,
        sum_metro: 0.0,
        divergent: false,
    };

    let mut fwd = Edge {
        point: current.clone(),
        p: p0.clone(),
    };
    let mut bck = fwd.clone();
    // Momenta (and their sharp forms) at the inner ends of the forward and
    // backward halves; only sharp forms are needed at the outer ends.
    let (mut p_fwd_bck, mut p_bck_fwd) = (p0.clone(), p0.clone());
    let (mut ps_fwd_fwd, mut ps_fwd_bck, mut ps_bck_fwd, mut ps_bck_bck) =
        (ps0.clone(), ps0.clone(), ps0.clone(), ps0);
    let mut rho = p0;
    let mut log_sum_weight = 0.0;
    let mut sample = current.clone();
    let mut depth = 0;

    while depth <= max_tree_depth {
        let mut rho_fwd = vec![0.0; n];
        let mut rho_bck = vec![0.0; n];
        let mut lsw_subtree = f64::NEG_INFINITY;
        let mut propose = current.clone();
        let mut span = Span {
            p_sharp_beg: vec![],
            p_sharp_end: vec![],
            p_beg: vec![],
            p_end: vec![],
        };
        let valid = if rng.random::<f64>() > 0.5 {
            rho_bck.clone_from(&rho);
            p_bck_fwd.clone_from(&p_fwd_bck);
            ps_bck_fwd.clone_from(&ps_fwd_bck);
            let ok = tree.build(
                depth,
                &mut fwd,
                &mut propose,
                &mut span,
                &mut rho_fwd,
                1.0,
                &mut lsw_subtree,
                rng,
            );
            ps_fwd_bck = span.p_sharp_beg;
            ps_fwd_fwd = span.p_sharp_end;
            p_fwd_bck = span.p_beg;
            ok
        } else {
            rho_fwd.clone_from(&rho);
            p_fwd_bck.clone_from(&p_bck_fwd);
            ps_fwd_bck.clone_from(&ps_bck_fwd);
            let ok = tree.build(
                depth,
                &mut bck,
                &mut propose,
                &mut span,
                &mut rho_bck,
                -1.0,
                &mut lsw_subtree,
                rng,
            );
            ps_bck_fwd = span.p_sharp_beg;
            ps_bck_bck = span.p_sharp_end;
            p_bck_fwd = span.p_beg;
            ok
        };
        if !valid {
            break;
        }
        depth += 1;

        if lsw_subtree > log_sum_weight
            || rng.random::<f64>() < (lsw_subtree - log_sum_weight).exp()
        {
            sample = propose;
        }
        log_sum_weight = log_add_exp(log_sum_weight, lsw_subtree);

        rho = add(&rho_bck, &rho_fwd);
        let mut persist = no_u_turn(&ps_bck_bck, &ps_fwd_fwd, &rho);
        persist &= no_u_turn(&ps_bck_bck, &ps_fwd_bck, &add(&rho_bck, &p_fwd_bck));
        persist &= no_u_turn(&ps_bck_fwd, &ps_fwd_fwd, &add(&rho_fwd, &p_bck_fwd));
        if !persist {
            break;
        }
    }

    let accept_stat = if tree.n_leapfrog > 0 {
        tree.sum_metro / tree.n_leapfrog as f64
    } else {
        0.0
    };
    if tree.divergent {
        sample = current.clone();
    }
    let moved = sample.q != current.q;
    NutsTransition {
        point: sample,
        accept_stat,
        n_leapfrog: tree.n_leapfrog,
        depth,
        divergent: tree.divergent,
        moved,
    }
}

/// Doubles or halves `eps` until one leapfrog step crosses an acceptance of
/// 0.8.
pub fn find_reasonable_step_size<P: LogDensity, R: rand::Rng + ?Sized>(
    target: &P,
    engine: Engine,
    point: &Point,
    inv_mass: &[f64],
    eps: f64,
    rng: &mut R,
) -> f64 {
    let log_target = 0.8f64.ln();
    let mut eps = eps;
    let trial = |eps: f64, rng: &mut R| {
        let mut p: Vec<f64> = inv_mass
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                z / m.sqrt()
            })
            .collect();
        let h0 = hamiltonian(point, &p, inv_mass);
        let next = leapfrog(target, engine, point, &mut p, eps, inv_mass);
        let dh = h0 - hamiltonian(&next, &p, inv_mass);
        if dh.is_nan() {
            f64::NEG_INFINITY
        } else {
            dh
        }
    };
    let up = trial(eps, rng) > log_target;
    for _ in 0..100 {
        let dh = trial(eps, rng);
        if up && !(dh > log_target) || !up && !(dh < log_target) {
            break;
        }
        let next = if up { 2.0 * eps } else { 0.5 * eps };
        if !(1e-10..=1e7).contains(&next) {
            break;
        }
        eps = next;
    }
    eps
}

/// Nesterov dual averaging of `log ε` toward a target acceptance rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAveraging {
    mu: f64,
    s_bar: f64,
    x_bar: f64,
    counter: f64,
    delta: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    pub fn new(delta: f64, eps: f64) -> Self {
        let mut da = Self {
            mu: 0.0,
            s_bar: 0.0,
            x_bar: 0.0,
            counter: 0.0,
            delta,
        };
        da.restart(eps);
        da
    }

    pub fn restart(&mut self, eps: f64) {
        self.mu = (10.0 * eps).ln();
        self.s_bar = 0.0;
        self.x_bar = 0.0;
        self.counter = 0.0;
    }

    /// Updates with one acceptance statistic and returns the next step size.
    pub fn learn(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let a = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + Self::T0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - a);
        let x = self.mu - self.s_bar * self.counter.sqrt() / Self::GAMMA;
        let w = self.counter.powf(-Self::KAPPA);
        self.x_bar = w * x + (1.0 - w) * self.x_bar;
        x.exp()
    }

    /// Averaged step size used after adaptation.
    pub fn final_step_size(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Slow metric-adaptation windows `[start, end)` within `n_adapt` warm-up
/// iterations: an initial fast buffer, doubling windows, and a terminal fast
/// buffer.
pub fn adaptation_windows(n_adapt: usize) -> Vec<(usize, usize)> {
    if n_adapt < 20 {
        return vec![];
    }
    let (mut init, mut term, mut base) = (75, 50, 25);
    if init + term + base > n_adapt {
        init = (0.15 * n_adapt as f64) as usize;
        term = (0.1 * n_adapt as f64) as usize;
        base = n_adapt - init - term;
    }
    let end_slow = n_adapt - term;
    let mut windows = vec![];
    let (mut start, mut size) = (init, base);
    while start < end_slow {
        let mut end = start + size;
        if end + 2 * size > end_slow {
            end = end_slow;
        }
        windows.push((start, end));
        start = end;
        size *= 2;
    }
    windows
}

/// Running mean and variance.
#[derive(Debug, Clone, Default)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn add(&mut self, x: &[f64]) {
        if self.n == 0 {
            self.mean = vec![0.0; x.len()];
            self.m2 = vec![0.0; x.len()];
        }
        self.n += 1;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / self.n as f64;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    /// Sample variance shrunk toward `1e-3`.
    fn regularized_variance(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|m2| (n / (n + 5.0)) * m2 / (n - 1.0) + 1e-3 * (5.0 / (n + 5.0)))
            .collect()
    }
}

fn hessian_inv_mass<P: LogDensity>(target: &P, engine: Engine, q: &[f64]) -> Result<Vec<f64>> {
    let (_, _, h) = engine.value_grad_hessian(target, q)?;
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation { theta: q.to_vec() });
    }
    let eig = SymmetricEigen::new(-(&h + h.transpose()) * 0.5);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if top == 0.0 {
        return Ok(vec![1.0; q.len()]);
    }
    let floor = 1e-10 * top;
    let inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.abs().max(floor)));
    let cov = &eig.eigenvectors * inv * eig.eigenvectors.transpose();
    Ok((0..q.len()).map(|i| cov[(i, i)]).collect())
}

/// NUTS sampler state across iterations, including warm-up adaptation.
#[derive(Debug, Clone)]
pub struct Nuts {
    cfg: NutsConfig,
    engine: Engine,
    step_size: f64,
    inv_mass: Vec<f64>,
    dual: DualAveraging,
    windows: Vec<(usize, usize)>,
    estimator: Welford,
    iteration: usize,
}

impl Nuts {
    pub fn new<P: LogDensity, R: rand::Rng + ?Sized>(
        target: &P,
        engine: Engine,
        cfg: &NutsConfig,
        start: &Point,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        let inv_mass = match cfg.metric_init {
            MetricInit::Identity => vec![1.0; start.q.len()],
            MetricInit::Hessian => hessian_inv_mass(target, engine, &start.q)?,
        };
        let step_size = match cfg.step_size {
            Some(eps) => eps,
            None => find_reasonable_step_size(target, engine, start, &inv_mass, 1.0, rng),
        };
        Ok(Self {
            cfg: cfg.clone(),
            engine,
            step_size,
            inv_mass,
            dual: DualAveraging::new(cfg.target_accept, step_size),
            windows: if cfg.adapt_metric {
                adaptation_windows(cfg.n_adapt)
            } else {
                vec![]
            },
            estimator: Welford::default(),
            iteration: 0,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn inv_mass(&self) -> &[f64] {
        &self.inv_mass
    }

    /// One transition, followed by adaptation while in warm-up.
    pub fn step<P: LogDensity, R: rand::Rng + ?Sized>(
        &mut self,
        target: &P,
        current: &Point,
        rng: &mut R,
    ) -> NutsTransition {
        let tr = nuts_transition(
            target,
            self.engine,
            current,
            self.step_size,
            &self.inv_mass,
            self.cfg.max_tree_depth,
            rng,
        );
        let t = self.iteration;
        self.iteration += 1;
        if t >= self.cfg.n_adapt {
            return tr;
        }

        self.step_size = self.dual.learn(tr.accept_stat);
        if let Some(&(_, end)) = self.windows.iter().find(|(s, e)| (*s..*e).contains(&t)) {
            self.estimator.add(&tr.point.q);
            if t + 1 == end {
                self.inv_mass = self.estimator.regularized_variance();
                self.estimator = Welford::default();
                self.step_size = find_reasonable_step_size(
                    target,
                    self.engine,
                    &tr.point,
                    &self.inv_mass,
                    self.step_size,
                    rng,
                );
                self.dual.restart(self.step_size);
            }
        }
        if t + 1 == self.cfg.n_adapt {
            self.step_size = self.dual.final_step_size();
        }
        tr
    }
}
