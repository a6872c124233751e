//! Small dense-matrix helpers on top of nalgebra.

use nalgebra::DMatrix;

/// 2-norm condition number; infinite for singular or empty input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Infinity norm (largest absolute row sum), floored at 1 for use as a
/// relative tolerance scale.
pub fn tol_scale(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(1.0, f64::max)
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (c, s) = (a.nrows(), b.nrows());
    let mut m = DMatrix::zeros(c + s, c + s);
    m.view_mut((0, 0), (c, c)).copy_from(a);
    m.view_mut((c, c), (s, s)).copy_from(b);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, -0.5, 2.0]));
        assert!((condition_number(&m) - 8.0).abs() < 1e-12);
        assert!(condition_number(&DMatrix::zeros(2, 2)).is_infinite());
    }

    #[test]
    fn block_diag_layout() {
        let a = DMatrix::from_row_slice(1, 1, &[3.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let m = block_diag(&a, &b);
        assert_eq!(
            m,
            DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 3.0, 4.0])
        );
        assert_eq!(tol_scale(&m), 7.0);
    }
}
