//! Linear cotangent-lift baseline `A = diag(Φ, Φ)`.

use nalgebra::DMatrix;

use super::metrics::Reconstructor;
use crate::error::{check_dim, Error, Result};
use crate::numcore::Matrix;
use crate::symplectic::{apply_j, apply_jt};

/// Relative singular value threshold below which the basis is rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CotangentLift {
    /// `n × k` with orthonormal columns.
    phi: Matrix,
    singular_values: Vec<f64>,
}

impl CotangentLift {
    /// Leading `k` left singular vectors of `[Q P]` built from the snapshots.
    pub fn fit(snapshots: &[&[f64]], k: usize) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::InvalidArgument("no snapshots".into()));
        }
        if k == 0 || snapshots.len() < k {
            return Err(Error::InvalidArgument(format!(
                "need k >= 1 and at least k snapshots, got k = {k}, {} snapshots",
                snapshots.len()
            )));
        }
        let dim = snapshots[0].len();
        if dim % 2 != 0 {
            return Err(Error::InvalidArgument("phase-space dimension must be even".into()));
        }
        let n = dim / 2;
        if k > n {
            return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
        }
        let count = snapshots.len();
        let mut data = DMatrix::<f64>::zeros(n, 2 * count);
        for (j, x) in snapshots.iter().enumerate() {
            check_dim("cotangent snapshot", dim, x.len())?;
            for i in 0..n {
                data[(i, j)] = x[i];
                data[(i, count + j)] = x[n + i];
            }
        }
        let svd = data.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let sv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
        if sv.len() < k {
            return Err(Error::RankDeficient { index: sv.len(), value: 0.0 });
        }
        let top = sv[0];
        if !(sv[k - 1] > RANK_TOL * top) {
            return Err(Error::RankDeficient { index: k - 1, value: sv[k - 1] });
        }
        let cols: Vec<Vec<f64>> = idx[..k]
            .iter()
            .map(|&c| u.column(c).iter().copied().collect())
            .collect();
        Ok(Self {
            phi: Matrix::from_columns(n, &cols)?,
            singular_values: sv,
        })
    }

    pub fn phi(&self) -> &Matrix {
        &self.phi
    }

    /// All singular values of `[Q P]` in decreasing order.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn n(&self) -> usize {
        self.phi.rows()
    }

    pub fn k(&self) -> usize {
        self.phi.cols()
    }

    /// `A = diag(Φ, Φ)`, `2n × 2k`.
    pub fn matrix(&self) -> Matrix {
        let (n, k) = (self.n(), self.k());
        let mut cols = Vec::with_capacity(2 * k);
        for half in 0..2 {
            for c in 0..k {
                let mut col = vec![0.0; 2 * n];
                for i in 0..n {
                    col[half * n + i] = self.phi[(i, c)];
                }
                cols.push(col);
            }
        }
        Matrix::from_columns(2 * n, &cols).expect("consistent shape")
    }

    /// Symplectic inverse `A⁺ = J_{2k}ᵀ Aᵀ J_{2n}`, `2k × 2n`.
    pub fn symplectic_inverse(&self) -> Matrix {
        let at = self.matrix().transpose();
        let (n, k) = (self.n(), self.k());
        let cols: Vec<Vec<f64>> = (0..2 * n)
            .map(|j| {
                let mut e = vec![0.0; 2 * n];
                e[j] = 1.0;
                let je = apply_j(&e);
                apply_jt(&at.matvec(&je).expect("consistent shape"))
            })
            .collect();
        Matrix::from_columns(2 * k, &cols).expect("consistent shape")
    }
}

impl Reconstructor for CotangentLift {
    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (n, k) = (self.n(), self.k());
        check_dim("cotangent encode", 2 * n, x.len())?;
        let mut y = vec![0.0; 2 * k];
        for c in 0..k {
            for i in 0..n {
                y[c] += self.phi[(i, c)] * x[i];
                y[k + c] += self.phi[(i, c)] * x[n + i];
            }
        }
        Ok(y)
    }

    fn decode(&self, y: &[f64]) -> Result<Vec<f64>> {
        let (n, k) = (self.n(), self.k());
        check_dim("cotangent decode", 2 * k, y.len())?;
        let mut x = vec![0.0; 2 * n];
        for i in 0..n {
            for c in 0..k {
                x[i] += self.phi[(i, c)] * y[c];
                x[n + i] += self.phi[(i, c)] * y[k + c];
            }
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_exact_subspace_reconstructs() {
        // q and p both lie in span{(1,1,0)/√2}
        let snaps = [vec![1.0, 1.0, 0.0, 2.0, 2.0, 0.0], vec![-3.0, -3.0, 0.0, 0.5, 0.5, 0.0]];
        let refs: Vec<&[f64]> = snaps.iter().map(|v| v.as_slice()).collect();
        let lift = CotangentLift::fit(&refs, 1).unwrap();
        for s in &snaps {
            let r = lift.reconstruct(s).unwrap();
            for (a, b) in r.iter().zip(s) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn test_rank_deficient_rejected() {
        let snaps = [vec![1.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0]];
        let refs: Vec<&[f64]> = snaps.iter().map(|v| v.as_slice()).collect();
        assert!(matches!(CotangentLift::fit(&refs, 2), Err(Error::RankDeficient { .. })));
    }
}
