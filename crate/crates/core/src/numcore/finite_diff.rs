use super::Matrix;
use crate::error::{Error, Result};

/// Central-difference Jacobian of `f` at `x` with step `h`.
pub fn finite_diff_jacobian<F>(f: F, x: &[f64], h: f64) -> Result<Matrix>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let mut xp = x.to_vec();
    let mut cols = Vec::with_capacity(x.len());
    let mut rows = None;
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        if fp.len() != fm.len() || rows.is_some_and(|r| r != fp.len()) {
            return Err(Error::InvalidArgument("function output length varies".into()));
        }
        rows = Some(fp.len());
        let col: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        if !super::all_finite(&col) {
            return Err(Error::NonFinite(format!("finite-difference column {j}")));
        }
        cols.push(col);
    }
    let rows = rows.unwrap_or_else(|| f(x).len());
    Matrix::from_columns(rows, &cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_identity() {
        let j = finite_diff_jacobian(|x| x.to_vec(), &[0.3, -2.0, 5.0], 1e-5).unwrap();
        assert!(j.sub(&Matrix::identity(3)).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn test_linear_map() {
        let a = Matrix::from_row_major(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.5]).unwrap();
        let j = finite_diff_jacobian(|x| a.matvec(x).unwrap(), &[1.0, 2.0, 3.0], 1e-4).unwrap();
        assert!(j.sub(&a).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn test_square_at_three() {
        let j = finite_diff_jacobian(|x| vec![x[0] * x[0]], &[3.0], 1e-5).unwrap();
        assert!((j[(0, 0)] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn test_rejects_bad_step_and_nan() {
        assert!(finite_diff_jacobian(|x| x.to_vec(), &[1.0], 0.0).is_err());
        assert!(finite_diff_jacobian(|_| vec![f64::NAN], &[1.0], 1e-3).is_err());
    }
}
