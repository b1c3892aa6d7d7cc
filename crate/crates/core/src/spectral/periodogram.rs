use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::par;

/// Periodogram ordinates on the interior Fourier grid `k = 1..n/2-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Angular frequencies `2πk / (nΔt)`.
    pub omega: Vec<f64>,
    /// Periodogram ordinates `S_k`.
    pub s: Vec<f64>,
    pub delta_t: f64,
    /// Length of the underlying series.
    pub n: usize,
}

impl SpectralData {
    /// Builds data from precomputed ordinates on the standard grid.
    pub fn from_ordinates(s: Vec<f64>, delta_t: f64, n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 || s.len() != n / 2 - 1 {
            return Err(Error::Shape(format!(
                "{} ordinates do not match a series of length {n}",
                s.len()
            )));
        }
        if !(delta_t > 0.0) || s.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Shape(
                "delta_t must be positive and ordinates non-negative".into(),
            ));
        }
        Ok(Self {
            omega: fourier_grid(n, delta_t),
            s,
            delta_t,
            n,
        })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

fn fourier_grid(n: usize, delta_t: f64) -> Vec<f64> {
    (1..n / 2)
        .map(|k| 2.0 * PI * k as f64 / (n as f64 * delta_t))
        .collect()
}

fn forward_fft(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

/// `S_k = (Δt/n) |Σ_j y_j e^{−2πijk/n}|²` for `k = 1..n/2−1`.
///
/// DC and Nyquist are excluded. With this scaling white noise of variance
/// `σ²` has `E[S_k] = σ²Δt`, matching the two-sided model spectrum.
pub fn periodogram(y: &[f64], delta_t: f64) -> Result<SpectralData> {
    let n = y.len();
    if n < 4 || n % 2 != 0 {
        return Err(Error::Shape(format!(
            "periodogram needs an even length of at least 4, got {n}"
        )));
    }
    if !(delta_t > 0.0) {
        return Err(Error::Shape(format!(
            "delta_t must be positive, got {delta_t}"
        )));
    }
    let mut buf: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_fft(n).process(&mut buf);
    let scale = delta_t / n as f64;
    let s = buf[1..n / 2].iter().map(|z| z.norm_sqr() * scale).collect();
    Ok(SpectralData {
        omega: fourier_grid(n, delta_t),
        s,
        delta_t,
        n,
    })
}

/// Welch spectral estimate with a chi-squared confidence band.
#[derive(Debug, Clone, PartialEq)]
pub struct WelchEstimate {
    pub omega: Vec<f64>,
    pub estimate: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub n_segments: usize,
}

pub const WELCH_SEGMENT: usize = 256;
pub const WELCH_OVERLAP: f64 = 0.5;

/// Averaged Hann-windowed periodograms of overlapping, demeaned segments,
/// scaled like [`periodogram`], with a 95% interval from a chi-squared law on
/// `2·segments` degrees of freedom.
pub fn welch_psd(
    y: &[f64],
    delta_t: f64,
    segment_length: usize,
    overlap: f64,
) -> Result<WelchEstimate> {
    let n = y.len();
    if segment_length < 4 || segment_length % 2 != 0 {
        return Err(Error::Shape(format!(
            "segment length must be even and at least 4, got {segment_length}"
        )));
    }
    if segment_length > n {
        return Err(Error::Shape(format!(
            "segment length {segment_length} exceeds series length {n}"
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Shape(format!(
            "overlap must lie in [0, 1), got {overlap}"
        )));
    }
    if !(delta_t > 0.0) {
        return Err(Error::Shape(format!(
            "delta_t must be positive, got {delta_t}"
        )));
    }
    let step = ((segment_length as f64 * (1.0 - overlap)).round() as usize).max(1);
    let starts: Vec<usize> = (0..=n - segment_length).step_by(step).collect();

    let window: Vec<f64> = (0..segment_length)
        .map(|j| 0.5 * (1.0 - (2.0 * PI * j as f64 / segment_length as f64).cos()))
        .collect();
    let power: f64 = window.iter().map(|w| w * w).sum();
    let fft = forward_fft(segment_length);
    let half = segment_length / 2;

    let spectra = par::map_slice(&starts, |&start| {
        let seg = &y[start..start + segment_length];
        let mean = seg.iter().sum::<f64>() / segment_length as f64;
        let mut buf: Vec<Complex64> = seg
            .iter()
            .zip(&window)
            .map(|(&v, &w)| Complex64::new((v - mean) * w, 0.0))
            .collect();
        fft.process(&mut buf);
        buf[1..half]
            .iter()
            .map(|z| z.norm_sqr() * delta_t / power)
            .collect::<Vec<f64>>()
    });
    let k = spectra.len();
    let mut estimate = vec![0.0; half - 1];
    for s in &spectra {
        for (acc, v) in estimate.iter_mut().zip(s) {
            *acc += v;
        }
    }
    estimate.iter_mut().for_each(|v| *v /= k as f64);

    let dof = 2.0 * k as f64;
    let chi2 = ChiSquared::new(dof).map_err(|e| Error::Numerical(e.to_string()))?;
    let (q_lo, q_hi) = (chi2.inverse_cdf(0.025), chi2.inverse_cdf(0.975));
    Ok(WelchEstimate {
        omega: fourier_grid(segment_length, delta_t),
        ci_low: estimate.iter().map(|&e| dof * e / q_hi).collect(),
        ci_high: estimate.iter().map(|&e| dof * e / q_lo).collect(),
        estimate,
        n_segments: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect()
    }

    /// O(n²) direct DFT, the oracle for the FFT path.
    fn naive(y: &[f64], dt: f64) -> Vec<f64> {
        let n = y.len();
        (1..n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (j, &v) in y.iter().enumerate() {
                    let ang = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                (re * re + im * im) * dt / n as f64
            })
            .collect()
    }

    #[test]
    fn fft_matches_direct_dft() {
        let y = white(300, 1.3, 3);
        let p = periodogram(&y, 0.02).unwrap();
        let oracle = naive(&y, 0.02);
        let scale = oracle.iter().cloned().fold(0.0, f64::max);
        for (a, b) in p.s.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
        assert_eq!(p.len(), 149);
        assert!((p.omega[0] - 2.0 * PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_no_interior_power() {
        let p = periodogram(&[2.5; 64], 1.0).unwrap();
        assert!(p.s.iter().all(|&v| v < 1e-24));
    }

    #[test]
    fn pure_cosine() {
        let (n, m) = (128, 9);
        let y: Vec<f64> = (0..n)
            .map(|j| (2.0 * PI * (j * m) as f64 / n as f64).cos())
            .collect();
        let p = periodogram(&y, 1.0).unwrap();
        for (k, &v) in p.s.iter().enumerate() {
            if k + 1 == m {
                assert!((v - n as f64 / 4.0).abs() < 1e-10);
            } else {
                assert!(v < 1e-20);
            }
        }
    }

    #[test]
    fn shape_errors() {
        assert!(periodogram(&[1.0, 2.0, 3.0], 1.0).is_err());
        assert!(periodogram(&[1.0, 2.0], 1.0).is_err());
        assert!(welch_psd(&[0.0; 100], 1.0, 128, 0.5).is_err());
        assert!(SpectralData::from_ordinates(vec![1.0; 3], 1.0, 10).is_err());
    }

    #[test]
    fn white_noise_level() {
        // 50 replicates: mean ordinate ≈ σ²Δt within 5%
        let (sigma, dt) = (0.7, 0.01);
        let levels: Vec<f64> = (0..50)
            .map(|r| {
                let p = periodogram(&white(4096, sigma, 100 + r), dt).unwrap();
                p.s.iter().sum::<f64>() / p.len() as f64
            })
            .collect();
        let target = sigma * sigma * dt;
        for l in &levels {
            assert!((l / target - 1.0).abs() < 0.1);
        }
        let mean = levels.iter().sum::<f64>() / 50.0;
        assert!((mean / target - 1.0).abs() < 0.05);
    }

    #[test]
    fn welch_white_noise_is_flat() {
        let w = welch_psd(&white(8192, 1.0, 11), 1.0, 256, 0.5).unwrap();
        assert_eq!(w.n_segments, 63);
        assert_eq!(w.omega.len(), 127);
        for i in 0..w.estimate.len() {
            assert!(
                w.estimate[i] > 0.7 && w.estimate[i] < 1.4,
                "{}",
                w.estimate[i]
            );
            assert!(w.ci_low[i] < w.estimate[i] && w.estimate[i] < w.ci_high[i]);
        }
    }

    #[test]
    fn welch_constant_is_zero() {
        let w = welch_psd(&[3.0; 1024], 0.1, 256, 0.5).unwrap();
        assert!(w.estimate.iter().all(|&v| v < 1e-24));
    }
}
