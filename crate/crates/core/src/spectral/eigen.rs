use nalgebra::{Complex as NComplex, DMatrix, DVector};

use crate::autodiff::{Complex, Scalar};
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// Relative eigenvalue spread below which a pair counts as repeated.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Left/right eigendecomposition `A R = R Λ`, `L A = Λ L`, `L R = diag(c)`.
///
/// `right` holds the right eigenvectors as columns, `left` the left
/// eigenvectors as rows; both are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomp<S> {
    pub lambda: Vec<Complex<S>>,
    right: Vec<Complex<S>>,
    left: Vec<Complex<S>>,
    pub c: Vec<Complex<S>>,
}

impl<S: Scalar> EigenDecomp<S> {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `R[i, k]`: component `i` of the `k`-th right eigenvector.
    pub fn right(&self, i: usize, k: usize) -> Complex<S> {
        self.right[i * self.dim() + k]
    }

    /// `L[k, j]`: component `j` of the `k`-th left eigenvector.
    pub fn left(&self, k: usize, j: usize) -> Complex<S> {
        self.left[k * self.dim() + j]
    }
}

/// Eigendecomposition of a square matrix with simple eigenvalues.
///
/// 2×2 matrices use the closed-form characteristic-polynomial solution, which
/// works for every scalar type. Larger matrices are only supported for plain
/// `f64` and go through a Schur-based eigenvalue solve followed by inverse
/// iteration for both eigenvector sets.
pub fn eigen_decompose<S: Scalar>(a: &SquareMatrix<S>) -> Result<EigenDecomp<S>> {
    match a.dim() {
        0 => Err(Error::Shape("empty matrix".into())),
        1 => {
            let one = Complex::one();
            Ok(EigenDecomp {
                lambda: vec![Complex::from_real(a[(0, 0)])],
                right: vec![one],
                left: vec![one],
                c: vec![one],
            })
        }
        2 => closed_form_2x2(a),
        n if S::HAS_TANGENTS => Err(Error::DualEigenUnsupported(n)),
        _ => {
            let d = eigen_general(&a.primal())?;
            let lift = |v: &[NComplex<f64>]| -> Vec<Complex<S>> {
                v.iter()
                    .map(|z| Complex::new(S::from_f64(z.re), S::from_f64(z.im)))
                    .collect()
            };
            Ok(EigenDecomp {
                lambda: lift(&d.lambda),
                right: lift(&d.right),
                left: lift(&d.left),
                c: lift(&d.c),
            })
        }
    }
}

fn closed_form_2x2<S: Scalar>(m: &SquareMatrix<S>) -> Result<EigenDecomp<S>> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let zero = Complex::<S>::zero();
    let one = Complex::<S>::one();

    if b.primal() == 0.0 && c.primal() == 0.0 {
        let spread = (a.primal() - d.primal()).abs();
        let scale = a.primal().abs().max(d.primal().abs());
        if !(spread > DEGENERACY_TOL * scale) {
            return Err(Error::Degenerate {
                spread: if scale > 0.0 { spread / scale } else { 0.0 },
            });
        }
        return Ok(EigenDecomp {
            lambda: vec![Complex::from_real(a), Complex::from_real(d)],
            right: vec![one, zero, zero, one],
            left: vec![one, zero, zero, one],
            c: vec![one, one],
        });
    }

    let half_trace = (a + d) * 0.5;
    let diff = a - d;
    let disc = diff * diff + b * c * 4.0;
    let (lambda1, lambda2) = if disc.primal() >= 0.0 {
        let root = disc.sqrt() * 0.5;
        (
            Complex::from_real(half_trace + root),
            Complex::from_real(half_trace - root),
        )
    } else {
        let root = (-disc).sqrt() * 0.5;
        (
            Complex::new(half_trace, root),
            Complex::new(half_trace, -root),
        )
    };

    let spread = disc.primal().abs().sqrt();
    let scale = {
        let (r, i) = lambda1.primal();
        let (r2, i2) = lambda2.primal();
        (r * r + i * i).sqrt().max((r2 * r2 + i2 * i2).sqrt())
    };
    if !(spread > DEGENERACY_TOL * scale) {
        return Err(Error::Degenerate {
            spread: if scale > 0.0 { spread / scale } else { 0.0 },
        });
    }

    // (A - λI) r = 0 and l (A - λI) = 0, using whichever off-diagonal entry
    // is larger so the vectors cannot vanish.
    let use_b = b.primal().abs() >= c.primal().abs();
    let (ca, cb, cc, cd) = (
        Complex::from_real(a),
        Complex::from_real(b),
        Complex::from_real(c),
        Complex::from_real(d),
    );
    let vectors = |lam: Complex<S>| {
        if use_b {
            ([cb, lam - ca], [lam - cd, cb])
        } else {
            ([lam - cd, cc], [cc, lam - ca])
        }
    };
    let (r1, l1) = vectors(lambda1);
    let (r2, l2) = vectors(lambda2);
    let c1 = l1[0] * r1[0] + l1[1] * r1[1];
    let c2 = l2[0] * r2[0] + l2[1] * r2[1];
    Ok(EigenDecomp {
        lambda: vec![lambda1, lambda2],
        right: vec![r1[0], r2[0], r1[1], r2[1]],
        left: vec![l1[0], l1[1], l2[0], l2[1]],
        c: vec![c1, c2],
    })
}

struct RealDecomp {
    lambda: Vec<NComplex<f64>>,
    right: Vec<NComplex<f64>>,
    left: Vec<NComplex<f64>>,
    c: Vec<NComplex<f64>>,
}

/// Null vector of `m - λI` by shifted inverse iteration.
fn inverse_iteration(
    m: &DMatrix<f64>,
    lambda: NComplex<f64>,
    scale: f64,
) -> Result<DVector<NComplex<f64>>> {
    let n = m.nrows();
    let shift = lambda + NComplex::new(scale * 1e-13, scale * 1e-13);
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        NComplex::new(m[(i, j)], 0.0)
            - if i == j {
                shift
            } else {
                NComplex::new(0.0, 0.0)
            }
    });
    let lu = shifted.lu();
    let mut x = DVector::from_fn(n, |i, _| {
        NComplex::new(1.0 + 0.1 * i as f64, 0.3 - 0.05 * i as f64)
    });
    for _ in 0..3 {
        x = lu.solve(&x).ok_or_else(|| {
            Error::Numerical("inverse iteration hit an exactly singular shift".into())
        })?;
        let norm = x.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Numerical("inverse iteration diverged".into()));
        }
        x /= NComplex::new(norm, 0.0);
    }
    Ok(x)
}

fn eigen_general(a: &DMatrix<f64>) -> Result<RealDecomp> {
    let n = a.nrows();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let schur = a
        .clone()
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let lambda: Vec<NComplex<f64>> = schur.complex_eigenvalues().iter().copied().collect();

    let lambda_scale = lambda.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let mut min_spread = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            min_spread = min_spread.min((lambda[i] - lambda[j]).norm());
        }
    }
    if !(min_spread > DEGENERACY_TOL * lambda_scale) {
        return Err(Error::Degenerate {
            spread: min_spread / lambda_scale.max(f64::MIN_POSITIVE),
        });
    }

    let at = a.transpose();
    let mut right = vec![NComplex::new(0.0, 0.0); n * n];
    let mut left = vec![NComplex::new(0.0, 0.0); n * n];
    let mut c = Vec::with_capacity(n);
    for (k, &lam) in lambda.iter().enumerate() {
        let r = inverse_iteration(a, lam, scale)?;
        let l = inverse_iteration(&at, lam, scale)?;
        for i in 0..n {
            right[i * n + k] = r[i];
            left[k * n + i] = l[i];
        }
        let ck: NComplex<f64> = (0..n).map(|i| l[i] * r[i]).sum();
        if !(ck.norm() > 1e-12) {
            return Err(Error::Degenerate { spread: ck.norm() });
        }
        c.push(ck);
    }
    Ok(RealDecomp {
        lambda,
        right,
        left,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Dual;

    fn residuals(a: &DMatrix<f64>, d: &EigenDecomp<f64>) -> (f64, f64, f64) {
        let n = a.nrows();
        let cplx = |z: Complex<f64>| NComplex::new(z.re, z.im);
        let ac = a.map(|x| NComplex::new(x, 0.0));
        let r = DMatrix::from_fn(n, n, |i, k| cplx(d.right(i, k)));
        let l = DMatrix::from_fn(n, n, |k, j| cplx(d.left(k, j)));
        let lam = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                cplx(d.lambda[i])
            } else {
                NComplex::new(0.0, 0.0)
            }
        });
        let norm_a = a.norm();
        let right_res = (&ac * &r - &r * &lam).norm() / (norm_a * r.norm());
        let left_res = (&l * &ac - &lam * &l).norm() / (norm_a * l.norm());
        let lr = &l * &r;
        let mut off = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    assert!((lr[(i, i)] - cplx(d.c[i])).norm() <= 1e-10 * lr[(i, i)].norm());
                } else {
                    off = off.max(lr[(i, j)].norm());
                }
            }
        }
        (right_res, left_res, off / (l.norm() * r.norm()))
    }

    #[test]
    fn oscillator_eigenvalues() {
        let a = SquareMatrix::from_row_major(2, vec![0.0, 1.0, -6400.0, -32.0]).unwrap();
        let d = eigen_decompose(&a).unwrap();
        // λ² + 32λ + 6400 = 0
        let im = 80.0 * 0.96f64.sqrt();
        let mut got: Vec<(f64, f64)> = d.lambda.iter().map(|z| (z.re, z.im)).collect();
        got.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
        assert!((got[0].0 + 16.0).abs() < 1e-12 && (got[0].1 + im).abs() < 1e-10);
        assert!((got[1].0 + 16.0).abs() < 1e-12 && (got[1].1 - im).abs() < 1e-10);
        assert!((im - 78.38367176906169).abs() < 1e-10);
        let (r, l, off) = residuals(&a.primal(), &d);
        assert!(r < 1e-12 && l < 1e-12 && off < 1e-12);
    }

    #[test]
    fn diagonal_matrix() {
        let a = SquareMatrix::from_row_major(2, vec![-1.0, 0.0, 0.0, -2.0]).unwrap();
        let d = eigen_decompose(&a).unwrap();
        assert_eq!(
            d.lambda,
            vec![Complex::from_real(-1.0), Complex::from_real(-2.0)]
        );
        assert_eq!(d.c, vec![Complex::one(), Complex::one()]);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j {
                    Complex::one()
                } else {
                    Complex::zero()
                };
                assert_eq!(d.right(i, j), e);
                assert_eq!(d.left(i, j), e);
            }
        }
    }

    #[test]
    fn real_distinct_and_triangular_2x2() {
        for m in [
            [1.0, 2.0, 3.0, -4.0],
            [-1.0, 5.0, 0.0, -3.0],
            [-2.0, 0.0, 7.0, -0.5],
        ] {
            let a = SquareMatrix::from_row_major(2, m.to_vec()).unwrap();
            let d = eigen_decompose(&a).unwrap();
            let (r, l, off) = residuals(&a.primal(), &d);
            assert!(r < 1e-14 && l < 1e-14 && off < 1e-14, "{m:?}");
        }
    }

    #[test]
    fn repeated_eigenvalues_rejected() {
        // critical damping: ζ = 1
        let a = SquareMatrix::from_row_major(2, vec![0.0, 1.0, -100.0, -20.0]).unwrap();
        assert!(matches!(eigen_decompose(&a), Err(Error::Degenerate { .. })));
        let a = SquareMatrix::from_row_major(2, vec![-1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(eigen_decompose(&a), Err(Error::Degenerate { .. })));
        let a =
            SquareMatrix::from_row_major(3, vec![-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -2.0])
                .unwrap();
        assert!(matches!(eigen_decompose(&a), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn dual_scalars_limited_to_2x2() {
        let a = SquareMatrix::<Dual>::zeros(3);
        assert_eq!(eigen_decompose(&a), Err(Error::DualEigenUnsupported(3)));
        assert!(SquareMatrix::<f64>::from_row_major(2, vec![1.0]).is_err());
    }

    #[test]
    fn random_stable_4x4() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let a = &m - DMatrix::identity(4, 4) * 3.0;
            let d = eigen_decompose(&SquareMatrix::from_dmatrix(&a).unwrap()).unwrap();
            assert!(d.lambda.iter().all(|l| l.re < 0.0));
            let (r, l, off) = residuals(&a, &d);
            assert!(r <= 1e-10 && l <= 1e-10 && off <= 1e-10, "{r} {l} {off}");
        }
    }
}
