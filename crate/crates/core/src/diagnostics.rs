//! Autocorrelation, effective sample size, quantiles and summary tables.

use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{Error, Result};
use crate::mcmc::Chain;

fn check_series(x: &[f64]) -> Result<f64> {
    if x.len() < 4 {
        return Err(Error::Shape(format!(
            "need at least 4 samples, got {}",
            x.len()
        )));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let spread = x.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if !(spread > 1e-14 * mean.abs().max(1e-300)) {
        return Err(Error::Degenerate { spread });
    }
    Ok(mean)
}

/// Biased sample autocorrelation `ρ̂(k)`, `k = 0..S−1`, via FFT of the
/// demeaned series zero-padded to avoid circular wrap-around.
pub fn autocorrelation(x: &[f64]) -> Result<Vec<f64>> {
    let mean = check_series(x)?;
    let n = x.len();
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = x
        .iter()
        .map(|v| Complex64::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(m)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    let c0 = buf[0].re;
    if !(c0 > 0.0) {
        return Err(Error::Degenerate { spread: 0.0 });
    }
    Ok(buf[..n].iter().map(|c| c.re / c0).collect())
}

/// `S / (1 + 2 Σ ρ̂(k))`, summing pairs `ρ̂(2j) + ρ̂(2j+1)` while they stay
/// positive (Geyer's initial positive sequence), clamped to `(0, S]`.
pub fn effective_sample_size(x: &[f64]) -> Result<f64> {
    let rho = autocorrelation(x)?;
    let s = x.len();
    // τ = −1 + 2 Σ_j Γ_j with Γ_j = ρ(2j) + ρ(2j+1), equivalent to 1 + 2 Σ_{k≥1} ρ(k).
    let mut tau = -1.0;
    let mut j = 0;
    while 2 * j + 1 < s {
        let gamma = rho[2 * j] + rho[2 * j + 1];
        if gamma < 0.0 {
            break;
        }
        tau += 2.0 * gamma;
        j += 1;
    }
    let ess = s as f64 / tau.max(f64::MIN_POSITIVE);
    Ok(ess.clamp(f64::MIN_POSITIVE, s as f64))
}

/// Type-7 (linear interpolation) sample quantiles.
pub fn quantiles(x: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Shape("quantiles of an empty sample".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(probs
        .iter()
        .map(|&p| {
            let h = (n - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub actual: Option<f64>,
    pub q025: f64,
    pub q500: f64,
    pub q975: f64,
    pub n_eff: f64,
}

impl SummaryRow {
    pub fn covers_actual(&self) -> Option<bool> {
        self.actual.map(|a| self.q025 <= a && a <= self.q975)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub min_n_eff: f64,
    /// Minimum N Eff per second of sampling CPU time.
    pub min_n_eff_per_sec: f64,
    pub cpu_seconds: f64,
}

impl Summary {
    pub fn row(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(4)
            .max(9);
        let mut out = format!(
            "{:<width$} {:>12} {:>12} {:>12} {:>12} {:>10}\n",
            "parameter", "actual", "q0.025", "q0.500", "q0.975", "n_eff"
        );
        for r in &self.rows {
            let actual = r.actual.map_or("-".to_string(), |a| format!("{a:.4}"));
            out.push_str(&format!(
                "{:<width$} {:>12} {:>12.4} {:>12.4} {:>12.4} {:>10.1}\n",
                r.name, actual, r.q025, r.q500, r.q975, r.n_eff
            ));
        }
        out.push_str(&format!(
            "min n_eff: {:.1}  cpu time (s): {:.3}  min n_eff/s: {:.2}\n",
            self.min_n_eff, self.cpu_seconds, self.min_n_eff_per_sec
        ));
        out
    }

    /// CSV with columns `name, actual, q025, q500, q975, n_eff`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,actual,q025,q500,q975,n_eff\n");
        for r in &self.rows {
            let actual = r.actual.map_or(String::new(), |a| a.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.name, actual, r.q025, r.q500, r.q975, r.n_eff
            ));
        }
        out
    }
}

/// Quantile and N Eff summary of every parameter. A constant column (e.g. a
/// chain that never moved) or one shorter than 4 draws gets N Eff 1.
pub fn summarize(chain: &Chain, actual: Option<&[f64]>) -> Result<Summary> {
    if chain.is_empty() {
        return Err(Error::Shape("cannot summarize an empty chain".into()));
    }
    if let Some(a) = actual {
        if a.len() != chain.dim() {
            return Err(Error::Shape(format!(
                "{} actual values for {} parameters",
                a.len(),
                chain.dim()
            )));
        }
    }
    let rows = (0..chain.dim())
        .map(|i| {
            let col = chain.column(i);
            let q = quantiles(&col, &[0.025, 0.5, 0.975])?;
            let n_eff = match effective_sample_size(&col) {
                Ok(v) => v,
                Err(Error::Degenerate { .. } | Error::Shape(_)) => 1.0,
                Err(e) => return Err(e),
            };
            Ok(SummaryRow {
                name: chain.names[i].clone(),
                actual: actual.map(|a| a[i]),
                q025: q[0],
                q500: q[1],
                q975: q[2],
                n_eff,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_n_eff = rows.iter().map(|r| r.n_eff).fold(f64::INFINITY, f64::min);
    let min_n_eff_per_sec = if chain.cpu_seconds > 0.0 {
        min_n_eff / chain.cpu_seconds
    } else {
        f64::INFINITY
    };
    Ok(Summary {
        rows,
        min_n_eff,
        min_n_eff_per_sec,
        cpu_seconds: chain.cpu_seconds,
    })
}
