//! Dense matrix exponential by scaling and squaring of a Taylor series.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// Largest absolute row sum.
fn norm_inf(m: &DMatrix<C64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(m)` for a square matrix.
///
/// The argument is scaled by `2^-s` until its infinity norm is at most 1/2,
/// the series is summed until terms drop below machine precision relative to
/// the partial sum, and the result is squared `s` times.
pub fn expm(m: &DMatrix<C64>) -> DMatrix<C64> {
    assert!(m.is_square(), "expm needs a square matrix");
    let n = m.nrows();
    let norm = norm_inf(m);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = m * C64::new(0.5f64.powi(squarings), 0.0);

    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=40 {
        term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if norm_inf(&term) <= f64::EPSILON * 1e-2 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gives_identity() {
        let z = DMatrix::<C64>::zeros(4, 4);
        assert_eq!(expm(&z), DMatrix::identity(4, 4));
    }

    #[test]
    fn rotation_generator() {
        // exp([[0, -t], [t, 0]]) is a rotation by t.
        let t = 2.7;
        let g = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(-t, 0.0), C64::new(t, 0.0), C64::new(0.0, 0.0)],
        );
        let e = expm(&g);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-14);
        assert!((e[(0, 1)].re + t.sin()).abs() < 1e-14);
    }

    #[test]
    fn diagonal_matches_scalar_exp() {
        let d = [C64::new(3.0, 1.0), C64::new(-2.0, 0.5), C64::new(0.0, 7.0)];
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d));
        let e = expm(&m);
        for (k, z) in d.iter().enumerate() {
            assert!((e[(k, k)] - z.exp()).norm() < 1e-12 * z.exp().norm().max(1.0));
        }
    }
}
