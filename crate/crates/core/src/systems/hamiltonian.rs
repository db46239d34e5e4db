//! Discrete Hamiltonians `H(q, p)` and their gradients.

use super::dxx::{Boundary, DxxOperator};
use super::spec::{kappa, SystemSpec};
use crate::error::{check_dim, Error, Result};

/// A finite-dimensional Hamiltonian on `R^{2n}`, `z = (q, p)`.
///
/// The mixed second derivatives `∂²H/∂q_i∂p_j` must vanish for `i ≠ j`;
/// `mixed_diag` returns the diagonal `∂²H/∂q_i∂p_i`.
pub trait HamiltonianSystem: Sync {
    fn half_dim(&self) -> usize;
    fn energy(&self, q: &[f64], p: &[f64]) -> f64;
    fn grad_q(&self, q: &[f64], p: &[f64]) -> Vec<f64>;
    fn grad_p(&self, q: &[f64], p: &[f64]) -> Vec<f64>;
    /// `H = T(p) + V(q)`, so Störmer–Verlet is explicit.
    fn is_separable(&self) -> bool;
    fn mixed_diag(&self, q: &[f64], p: &[f64]) -> Vec<f64>;

    /// `H(z)` for a stacked state.
    fn hamiltonian(&self, z: &[f64]) -> Result<f64> {
        check_dim("hamiltonian", 2 * self.half_dim(), z.len())?;
        let n = self.half_dim();
        Ok(self.energy(&z[..n], &z[n..]))
    }

    /// `∇_z H` for a stacked state.
    fn grad_hamiltonian(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim("grad_hamiltonian", 2 * self.half_dim(), z.len())?;
        let n = self.half_dim();
        let mut g = self.grad_q(&z[..n], &z[n..]);
        g.extend(self.grad_p(&z[..n], &z[n..]));
        Ok(g)
    }
}

/// `H = ½(q² + p²)` summed over components.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicOscillator {
    pub n: usize,
}

impl HamiltonianSystem for HarmonicOscillator {
    fn half_dim(&self) -> usize {
        self.n
    }

    fn energy(&self, q: &[f64], p: &[f64]) -> f64 {
        0.5 * q.iter().chain(p).map(|v| v * v).sum::<f64>()
    }

    fn grad_q(&self, q: &[f64], _p: &[f64]) -> Vec<f64> {
        q.to_vec()
    }

    fn grad_p(&self, _q: &[f64], p: &[f64]) -> Vec<f64> {
        p.to_vec()
    }

    fn is_separable(&self) -> bool {
        true
    }

    fn mixed_diag(&self, q: &[f64], _p: &[f64]) -> Vec<f64> {
        vec![0.0; q.len()]
    }
}

/// A discretized PDE with its per-trajectory parameters resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum PdeSystem {
    /// `H = (Δx/2) Σ p_i² + (Δx s/2) Σ_{edges} (q_{e+1} - q_e)²/Δx²`
    /// with zero ghosts `q_0 = q_{N+1} = 0`; `s` is ω² or κ(ω).
    Wave { n: usize, dx: f64, speed2: f64 },
    /// `H = Δx Σ [-((Δq)² + (Δp)²)/(2Δx²) + (ε/4)(q_i² + p_i²)²]`, periodic.
    Nls { n: usize, dx: f64, eps: f64 },
}

impl PdeSystem {
    pub fn new(spec: &SystemSpec, params: &[f64]) -> Result<Self> {
        check_dim("PdeSystem::new params", spec.param_len(), params.len())?;
        let n = spec.grid_points();
        let dx = spec.dx();
        Ok(match *spec {
            SystemSpec::Wave { omega2, .. } => PdeSystem::Wave {
                n,
                dx,
                speed2: omega2,
            },
            SystemSpec::ParamWave { c2, .. } => PdeSystem::Wave {
                n,
                dx,
                speed2: kappa(params, c2),
            },
            SystemSpec::Nls { .. } => {
                if !params[0].is_finite() {
                    return Err(Error::InvalidArgument("ε must be finite".into()));
                }
                PdeSystem::Nls {
                    n,
                    dx,
                    eps: params[0],
                }
            }
        })
    }

    pub fn dxx(&self) -> DxxOperator {
        match *self {
            PdeSystem::Wave { n, dx, .. } => DxxOperator::new(n, dx, Boundary::Dirichlet),
            PdeSystem::Nls { n, dx, .. } => DxxOperator::new(n, dx, Boundary::Periodic),
        }
    }
}

impl HamiltonianSystem for PdeSystem {
    fn half_dim(&self) -> usize {
        match *self {
            PdeSystem::Wave { n, .. } | PdeSystem::Nls { n, .. } => n,
        }
    }

    fn energy(&self, q: &[f64], p: &[f64]) -> f64 {
        match *self {
            PdeSystem::Wave { n, dx, speed2 } => {
                let kinetic: f64 = p.iter().map(|v| v * v).sum();
                let mut strain = q[0] * q[0] + q[n - 1] * q[n - 1];
                for i in 1..n {
                    let d = q[i] - q[i - 1];
                    strain += d * d;
                }
                0.5 * dx * kinetic + 0.5 * speed2 * strain / dx
            }
            PdeSystem::Nls { n, dx, eps } => {
                let mut total = 0.0;
                for i in 0..n {
                    let j = (i + n - 1) % n;
                    let dq = q[i] - q[j];
                    let dp = p[i] - p[j];
                    let m = q[i] * q[i] + p[i] * p[i];
                    total += -(dq * dq + dp * dp) / (2.0 * dx * dx) + 0.25 * eps * m * m;
                }
                dx * total
            }
        }
    }

    fn grad_q(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; q.len()];
        self.dxx().apply_into(q, &mut out);
        match *self {
            PdeSystem::Wave { dx, speed2, .. } => {
                for v in &mut out {
                    *v *= -dx * speed2;
                }
            }
            PdeSystem::Nls { dx, eps, .. } => {
                for i in 0..out.len() {
                    let m = q[i] * q[i] + p[i] * p[i];
                    out[i] = dx * (out[i] + eps * m * q[i]);
                }
            }
        }
        out
    }

    fn grad_p(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        match *self {
            PdeSystem::Wave { dx, .. } => p.iter().map(|v| dx * v).collect(),
            PdeSystem::Nls { dx, eps, .. } => {
                let mut out = vec![0.0; p.len()];
                self.dxx().apply_into(p, &mut out);
                for i in 0..out.len() {
                    let m = q[i] * q[i] + p[i] * p[i];
                    out[i] = dx * (out[i] + eps * m * p[i]);
                }
                out
            }
        }
    }

    fn is_separable(&self) -> bool {
        matches!(self, PdeSystem::Wave { .. })
    }

    fn mixed_diag(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        match *self {
            PdeSystem::Wave { n, .. } => vec![0.0; n],
            PdeSystem::Nls { dx, eps, .. } => q
                .iter()
                .zip(p)
                .map(|(a, b)| 2.0 * dx * eps * a * b)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_zero_state_zero_energy() {
        let sys = PdeSystem::Nls {
            n: 8,
            dx: 0.5,
            eps: 1.0,
        };
        assert_eq!(sys.hamiltonian(&[0.0; 16]).unwrap(), 0.0);
        assert_eq!(sys.grad_hamiltonian(&[0.0; 16]).unwrap(), vec![0.0; 16]);
    }

    #[test]
    fn test_wave_unit_momentum() {
        let n = 10;
        let dx = 0.1;
        let sys = PdeSystem::Wave { n, dx, speed2: 0.01 };
        let mut z = vec![0.0; 2 * n];
        z[n..].fill(1.0);
        assert!((sys.hamiltonian(&z).unwrap() - 0.5 * dx * n as f64).abs() < 1e-15);
    }

    #[test]
    fn test_wave_gradient_is_stiffness() {
        let n = 5;
        let sys = PdeSystem::Wave { n, dx: 0.2, speed2: 0.3 };
        let q = [0.1, 0.4, -0.3, 0.2, 0.9];
        let d = sys.dxx().apply(&q).unwrap();
        let g = sys.grad_q(&q, &[0.0; 5]);
        for i in 0..n {
            assert!((g[i] + 0.2 * 0.3 * d[i]).abs() < 1e-14);
        }
    }
}
