mod common;

use nalgebra::{Complex as C64, DMatrix};
use proptest::prelude::*;
use rand::Rng;
use spectral_mcmc::autodiff::{Dual, Dual2};
use spectral_mcmc::matrix::SquareMatrix;
use spectral_mcmc::model::Layout;
use spectral_mcmc::rng;
use spectral_mcmc::simulate::{simulate_sde, SimOptions};
use spectral_mcmc::spectral::{
    eigen_decompose, periodogram, spectral_density, transfer_element, welch_psd, whittle_loglik,
    whittle_loglik_unchecked, ConditionSpectrum, SpectralData, WELCH_OVERLAP, WELCH_SEGMENT,
};
use spectral_mcmc::{ParamSpec, StableSde};

use common::*;

/// Random matrix shifted far enough left to be stable: every eigenvalue
/// lies within ‖B‖_F of the origin.
fn random_stable(n: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::stream(seed, 0);
    let b = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    let shift = b.norm() + 0.1;
    b - DMatrix::identity(n, n) * shift
}

fn to_square(a: &DMatrix<f64>) -> SquareMatrix<f64> {
    SquareMatrix::from_dmatrix(a).unwrap()
}

#[test]
fn resolvent_identity_random_matrices() {
    for n in 2..=5 {
        for seed in 0..10 {
            let a = random_stable(n, 100 * n as u64 + seed);
            let d = eigen_decompose(&to_square(&a)).unwrap();
            let mut r = rng::stream(seed, 1);
            for _ in 0..20 {
                let w: f64 = r.random_range(-20.0..20.0);
                let mut worst = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        // (𝒯 (iωI − A))_ij = Σ_m 𝒯_im (iω δ_mj − A_mj)
                        let mut acc = C64::new(0.0, 0.0);
                        for m in 0..n {
                            let t = transfer_element(&d, w, i, m).unwrap();
                            let t = C64::new(t.re, t.im);
                            let rhs = C64::new(-a[(m, j)], if m == j { w } else { 0.0 });
                            acc += t * rhs;
                        }
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((acc - C64::new(target, 0.0)).norm());
                    }
                }
                assert!(worst <= 1e-9, "n={n} seed={seed} ω={w}: {worst}");
            }
        }
    }
}

#[test]
fn eigen_residuals_random_matrices() {
    for n in 2..=5 {
        for seed in 0..10 {
            let a = random_stable(n, 7 * n as u64 + seed);
            let d = eigen_decompose(&to_square(&a)).unwrap();
            let scale = a.norm();
            for k in 0..n {
                let lambda = C64::new(d.lambda[k].re, d.lambda[k].im);
                for i in 0..n {
                    let mut right = C64::new(0.0, 0.0);
                    let mut left = C64::new(0.0, 0.0);
                    for m in 0..n {
                        let r = d.right(m, k);
                        right += C64::new(r.re, r.im) * a[(i, m)];
                        let l = d.left(k, m);
                        left += C64::new(l.re, l.im) * a[(m, i)];
                    }
                    let ri = d.right(i, k);
                    let li = d.left(k, i);
                    right -= lambda * C64::new(ri.re, ri.im);
                    left -= lambda * C64::new(li.re, li.im);
                    assert!(
                        right.norm() <= 1e-10 * scale,
                        "AR residual {}",
                        right.norm()
                    );
                    assert!(left.norm() <= 1e-10 * scale, "LA residual {}", left.norm());
                }
            }
        }
    }
}

/// Spectrum of the sampled state: the continuous-time density folded over
/// its aliases `ω + 2πm/Δt`.
fn aliased(f: impl Fn(f64) -> f64, omega: f64) -> f64 {
    let fold = 2.0 * std::f64::consts::PI / DELTA_T;
    (-200..=200)
        .map(|m| f((omega + fold * m as f64).abs()))
        .sum()
}

fn state_welch(seed: u64) -> spectral_mcmc::spectral::WelchEstimate {
    let traj = simulate_sde(
        &oscillator(),
        &ParamSpec::oscillator(2),
        &TRUTH,
        0,
        DURATION,
        DELTA_T,
        seed,
    )
    .unwrap();
    welch_psd(&traj.component(0), DELTA_T, WELCH_SEGMENT, WELCH_OVERLAP).unwrap()
}

#[test]
fn welch_of_state_matches_model_spectrum() {
    let osc = oscillator();
    let s = ConditionSpectrum::new(&osc, vec![80.0, 0.2, 100.0]).unwrap();
    let f_x = |w: f64| s.density(w).unwrap() - osc.obs_psd_term();
    // Single realisations scatter around the threshold, so average the
    // coverage over independent simulations.
    let seeds: Vec<u64> = (20..30).collect();
    let coverage = seeds
        .iter()
        .map(|seed| {
            let w = state_welch(*seed);
            fraction((0..w.omega.len()).map(|k| {
                let f = f_x(w.omega[k]);
                w.ci_low[k] <= f && f <= w.ci_high[k]
            }))
        })
        .sum::<f64>()
        / seeds.len() as f64;
    assert!(coverage >= 0.85, "{coverage}");
}

#[test]
fn welch_of_state_matches_aliased_spectrum() {
    let osc = oscillator();
    let s = ConditionSpectrum::new(&osc, vec![80.0, 0.2, 100.0]).unwrap();
    let f_x = |w: f64| s.density(w).unwrap() - osc.obs_psd_term();
    let w = state_welch(11);
    let inside = fraction((0..w.omega.len()).map(|k| {
        let f = aliased(f_x, w.omega[k]);
        w.ci_low[k] <= f && f <= w.ci_high[k]
    }));
    assert!(inside >= 0.90, "{inside}");
}

#[test]
fn welch_of_observations_matches_model_spectrum() {
    let ys = observations(12);
    let spec = ParamSpec::oscillator(2);
    for (c, y) in ys.iter().enumerate() {
        let w = welch_psd(y, DELTA_T, WELCH_SEGMENT, WELCH_OVERLAP).unwrap();
        let inside = fraction((0..w.omega.len()).map(|k| {
            let f = spectral_density(&oscillator(), &spec, &TRUTH, c, w.omega[k]).unwrap();
            w.ci_low[k] <= f && f <= w.ci_high[k]
        }));
        assert!(inside >= 0.90, "condition {c}: {inside}");
    }
}

#[test]
fn periodogram_flattens_at_noise_floor() {
    let osc = oscillator();
    let s = ConditionSpectrum::new(&osc, vec![80.0, 0.2, 100.0]).unwrap();
    let floor = osc.obs_psd_term();
    let f_y = |w: f64| aliased(|v| s.density(v).unwrap() - floor, w) + floor;

    let p = periodogram(&observations(13)[0], DELTA_T).unwrap();
    let band: Vec<usize> = (0..p.len()).filter(|&k| p.omega[k] > 250.0).collect();
    // the predicted level is within 15% of the floor over the whole band
    assert!(band.iter().all(|&k| f_y(p.omega[k]) < 1.15 * floor));
    // ordinates are ≈ f·Exp(1), so the normalized mean has s.d. 1/√m
    let m = band.len() as f64;
    let ratio = band.iter().map(|&k| p.s[k] / f_y(p.omega[k])).sum::<f64>() / m;
    assert!((ratio - 1.0).abs() <= 3.0 / m.sqrt(), "{ratio}");
}

#[test]
fn halves_are_spectrally_consistent() {
    let y = &observations(14)[0];
    let (a, b) = y.split_at(y.len() / 2);
    let wa = welch_psd(a, DELTA_T, WELCH_SEGMENT, WELCH_OVERLAP).unwrap();
    let wb = welch_psd(b, DELTA_T, WELCH_SEGMENT, WELCH_OVERLAP).unwrap();
    let overlap = fraction(
        (0..wa.omega.len()).map(|k| wa.ci_low[k] <= wb.ci_high[k] && wb.ci_low[k] <= wa.ci_high[k]),
    );
    assert!(overlap >= 0.8, "{overlap}");
}

#[test]
fn simulated_length_and_determinism() {
    let a = observations(15);
    assert_eq!(a.len(), 2);
    assert!(a.iter().all(|y| y.len() == 2000));
    assert_eq!(a, observations(15));
    assert_ne!(a, observations(16));
}

#[test]
fn truth_beats_perturbation() {
    let p = posterior(17);
    let mut doubled = TRUTH;
    doubled[0] = 160.0;
    let spec = ParamSpec::oscillator(2);
    let truth: f64 = whittle_loglik(&oscillator(), &spec, &TRUTH, p.data()).unwrap();
    let other: f64 = whittle_loglik(&oscillator(), &spec, &doubled, p.data()).unwrap();
    assert!(truth > other);
    let mut outside = TRUTH;
    outside[4] = 1.5;
    let v: f64 = whittle_loglik(&oscillator(), &spec, &outside, p.data()).unwrap();
    assert_eq!(v, f64::NEG_INFINITY);
}

#[test]
fn condition_permutation_invariance() {
    let p = posterior(18);
    let spec = ParamSpec::oscillator(2);
    let swapped_data: Vec<SpectralData> = vec![p.data()[1].clone(), p.data()[0].clone()];
    let theta = [70.0, 45.0, 90.0, 12.0, 0.25];
    let swapped_theta = [45.0, 70.0, 12.0, 90.0, 0.25];
    let a: f64 = whittle_loglik(&oscillator(), &spec, &theta, p.data()).unwrap();
    let b: f64 = whittle_loglik(&oscillator(), &spec, &swapped_theta, &swapped_data).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_ordinate_examples() {
    // f ≡ σ_obs²Δt when σ_in = 0, so one ordinate reproduces the closed forms.
    let osc = spectral_mcmc::HarmonicOscillator::new(1.0, 1.0).unwrap();
    let spec = ParamSpec::new(
        vec![
            spectral_mcmc::model::ParamEntry::new("omega0", 0.1, 10.0, false),
            spectral_mcmc::model::ParamEntry::new("sigma_in", 0.0, 10.0, false),
            spectral_mcmc::model::ParamEntry::new("zeta", 0.01, 0.99, true),
        ],
        1,
    )
    .unwrap();
    let theta = [1.0, 0.0, 0.5];
    let zero = SpectralData::from_ordinates(vec![0.0], 1.0, 4).unwrap();
    let v: f64 = whittle_loglik(&osc, &spec, &theta, &[zero]).unwrap();
    assert_eq!(v, 0.0);
    let one = SpectralData::from_ordinates(vec![1.0], 1.0, 4).unwrap();
    let v: f64 = whittle_loglik(&osc, &spec, &theta, &[one]).unwrap();
    assert_eq!(v, -1.0);
}

#[test]
fn dual_evaluation_preserves_primal() {
    let p = posterior(19);
    let spec = ParamSpec::oscillator(2);
    let layout = Layout::new(&oscillator(), &spec).unwrap();
    let theta = [75.0, 42.0, 95.0, 11.0, 0.22];
    let plain: f64 = whittle_loglik_unchecked(&oscillator(), &layout, &theta, p.data()).unwrap();
    let d: Vec<Dual> = theta
        .iter()
        .enumerate()
        .map(|(i, &t)| Dual::new(t, f64::from(i == 4)))
        .collect();
    let dv = whittle_loglik_unchecked(&oscillator(), &layout, &d, p.data()).unwrap();
    let d2: Vec<Dual2> = theta
        .iter()
        .map(|&t| Dual2::new(t, 1.0, 1.0, 0.0))
        .collect();
    let d2v = whittle_loglik_unchecked(&oscillator(), &layout, &d2, p.data()).unwrap();
    assert!((dv.primal - plain).abs() <= 1e-12 * plain.abs());
    assert!((d2v.primal - plain).abs() <= 1e-12 * plain.abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn density_never_below_noise_floor(
        w0 in 1.0f64..200.0, sigma in 0.1f64..500.0, zeta in 0.01f64..0.99, omega in 0.01f64..400.0
    ) {
        let osc = oscillator();
        let s = ConditionSpectrum::new(&osc, vec![w0, zeta, sigma]).unwrap();
        prop_assert!(s.density(omega).unwrap() >= osc.obs_psd_term());
    }

    #[test]
    fn oscillator_gain_closed_form(w0 in 1.0f64..200.0, zeta in 0.01f64..0.99, omega in 0.0f64..400.0) {
        let a = SquareMatrix::from_row_major(2, vec![0.0, 1.0, -w0 * w0, -2.0 * zeta * w0]).unwrap();
        let d = eigen_decompose(&a).unwrap();
        let t = transfer_element(&d, omega, 0, 1).unwrap();
        let gain = t.re * t.re + t.im * t.im;
        let exact = 1.0 / ((w0 * w0 - omega * omega).powi(2) + (2.0 * zeta * w0 * omega).powi(2));
        prop_assert!((gain - exact).abs() <= 1e-9 * exact);
    }
}

#[test]
fn simulation_options_are_validated() {
    let osc = oscillator();
    let spec = ParamSpec::oscillator(1);
    let opts = SimOptions {
        substeps: 0,
        ..SimOptions::default()
    };
    assert!(spectral_mcmc::simulate::simulate_sde_with(
        &osc,
        &spec,
        &[80.0, 100.0, 0.2],
        0,
        1.0,
        0.01,
        1,
        &opts
    )
    .is_err());
}
