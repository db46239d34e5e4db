use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::numcore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Zero ghost values beyond both ends.
    Dirichlet,
    Periodic,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Periodic => "periodic",
        })
    }
}

/// Second-order central difference `(q_{i+1} - 2 q_i + q_{i-1}) / Δx²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DxxOperator {
    pub n: usize,
    pub dx: f64,
    pub boundary: Boundary,
}

impl DxxOperator {
    pub fn new(n: usize, dx: f64, boundary: Boundary) -> Self {
        Self { n, dx, boundary }
    }

    pub fn apply(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_dim("DxxOperator::apply", self.n, q.len())?;
        let mut out = vec![0.0; self.n];
        self.apply_into(q, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, q: &[f64], out: &mut [f64]) {
        let n = self.n;
        let inv = 1.0 / (self.dx * self.dx);
        let get = |i: isize| -> f64 {
            if i >= 0 && (i as usize) < n {
                q[i as usize]
            } else {
                match self.boundary {
                    Boundary::Dirichlet => 0.0,
                    Boundary::Periodic => q[i.rem_euclid(n as isize) as usize],
                }
            }
        };
        for i in 0..n {
            let ii = i as isize;
            out[i] = (get(ii + 1) - 2.0 * q[i] + get(ii - 1)) * inv;
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.n;
        let inv = 1.0 / (self.dx * self.dx);
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] += -2.0 * inv;
            if i + 1 < n {
                m[(i, i + 1)] += inv;
                m[(i + 1, i)] += inv;
            }
        }
        if self.boundary == Boundary::Periodic && n > 1 {
            m[(0, n - 1)] += inv;
            m[(n - 1, 0)] += inv;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_matrix_matches_apply() {
        for b in [Boundary::Dirichlet, Boundary::Periodic] {
            let d = DxxOperator::new(6, 0.3, b);
            let q = [0.1, -0.4, 2.0, 0.7, -1.2, 0.5];
            let direct = d.apply(&q).unwrap();
            let via = d.to_matrix().matvec(&q).unwrap();
            for (a, c) in direct.iter().zip(&via) {
                assert!((a - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn test_dirichlet_stencil() {
        let m = DxxOperator::new(4, 1.0, Boundary::Dirichlet).to_matrix();
        assert_eq!(m.row(0), &[-2.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.row(2), &[0.0, 1.0, -2.0, 1.0]);
    }
}
