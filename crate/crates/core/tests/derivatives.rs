mod common;

use proptest::prelude::*;
use spectral_mcmc::autodiff::{dual_gradient, Complex, Dual, Engine, Scalar, ScalarField};
use spectral_mcmc::derivcheck::{compare_engines, uniform_points};
use spectral_mcmc::mcmc::LogDensity;
use spectral_mcmc::spectral::{eigen_decompose, transfer_element};
use spectral_mcmc::{HarmonicOscillator, StableSde};

use common::*;

#[test]
fn engines_agree_at_truth() {
    let target = posterior(21);
    let report = compare_engines(&target, &[TRUTH.to_vec()], Engine::FD).unwrap();
    assert!(
        report.max_gradient_discrepancy <= 1e-5,
        "{}",
        report.to_text()
    );
    assert!(
        report.max_hessian_discrepancy <= 1e-2,
        "{}",
        report.to_text()
    );
}

#[test]
fn fd_gradient_matches_dual_per_component_at_truth() {
    let target = posterior(22);
    let ga = dual_gradient(&target, &TRUTH).unwrap();
    let (_, gf) = Engine::FD.value_and_gradient(&target, &TRUTH).unwrap();
    let scale = 1.0 + ga.iter().map(|g| g.abs()).fold(0.0, f64::max);
    for (a, f) in ga.iter().zip(&gf) {
        assert!((a - f).abs() / scale <= 1e-5, "{a} vs {f}");
    }
}

#[test]
fn gradient_agreement_over_box() {
    let target = posterior(23);
    let (lo, hi) = target.spec().bounds();
    let report = compare_engines(&target, &uniform_points(&lo, &hi, 20, 23), Engine::FD).unwrap();
    assert!(
        report.max_gradient_discrepancy <= 1e-5,
        "{}",
        report.to_text()
    );
}

#[test]
fn huge_fd_step_is_detected() {
    let target = posterior(24);
    let report = compare_engines(
        &target,
        &[TRUTH.to_vec()],
        Engine::FiniteDiff { step_scale: 1e7 },
    )
    .unwrap();
    assert!(
        report.max_gradient_discrepancy > 1e-3,
        "{}",
        report.to_text()
    );
}

/// Central differences are exact on a quadratic in exact arithmetic; only
/// rounding separates the two engines.
#[test]
fn quadratic_target_engines_agree_to_1e9() {
    let target = Gaussian {
        mean: vec![0.5, -1.0, 2.0, 0.0, 3.0],
        scale: vec![1.0, 2.0, 0.5, 1.5, 1.0],
        bound: 4.0,
    };
    let lo: Vec<f64> = target
        .mean
        .iter()
        .zip(&target.scale)
        .map(|(m, s)| m - 3.0 * s)
        .collect();
    let hi: Vec<f64> = target
        .mean
        .iter()
        .zip(&target.scale)
        .map(|(m, s)| m + 3.0 * s)
        .collect();
    let report = compare_engines(&target, &uniform_points(&lo, &hi, 20, 25), Engine::FD).unwrap();
    assert!(
        report.max_gradient_discrepancy <= 1e-9,
        "{}",
        report.to_text()
    );
    assert!(
        report.max_hessian_discrepancy <= 1e-9,
        "{}",
        report.to_text()
    );
}

/// |T₀₁(ω₀)|² = 1/(4ζ²ω₀⁴) at resonance, so d/dζ = −1/(2ζ³ω₀⁴).
#[test]
fn resonance_gain_derivative_matches_closed_form() {
    struct Gain;
    impl ScalarField for Gain {
        fn eval<S: Scalar>(&self, x: &[S]) -> spectral_mcmc::Result<S> {
            let osc = HarmonicOscillator::new(0.05, 0.01)?;
            let a = osc.jacobian(&[S::from_f64(80.0), x[0], S::from_f64(100.0)]);
            let d = eigen_decompose(&a)?;
            Ok(transfer_element(&d, 80.0, 0, 1)?.norm_sqr())
        }
    }
    let zeta = 0.2;
    let g = dual_gradient(&Gain, &[zeta]).unwrap()[0];
    let exact = -1.0 / (2.0 * zeta.powi(3) * 80f64.powi(4));
    assert!((g - exact).abs() <= 1e-12 * exact.abs(), "{g} vs {exact}");
}

proptest! {
    /// d/dx |g(x)|² = 2 Re(conj(g) g′) for g(x) = 1/(ix − λ).
    #[test]
    fn complex_chain_rule(re in -5.0f64..-0.01, im in -5.0f64..5.0, x in -10.0f64..10.0) {
        let g = |x: Dual| Complex::new(Dual::constant(-re), x - im).recip();
        let value = g(Dual::variable(x)).norm_sqr();
        let d = Complex::new(-re, x - im);
        let d2 = d.re * d.re + d.im * d.im;
        // g = conj(d)/|d|², g′ = −i/d² ⇒ 2 Re(conj(g) g′) = −2 Im(d)/|d|⁴
        let expected = -2.0 * d.im / (d2 * d2);
        prop_assert!((value.tangent - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }

    #[test]
    fn dual_primal_is_plain_value(z in 0.02f64..0.95, w in 5.0f64..150.0) {
        let target = posterior(26);
        let theta = [w, 40.0, 100.0, 10.0, z];
        let plain = target.log_density(&theta).unwrap();
        let x: Vec<Dual> = theta.iter().enumerate().map(|(i, &t)| if i == 4 { Dual::variable(t) } else { Dual::constant(t) }).collect();
        let dual = target.eval(&x).unwrap().primal;
        prop_assert!((plain - dual).abs() <= 1e-15 * plain.abs());
    }
}
