//! Reconstruction error and Hamiltonian traces.

use serde::{Deserialize, Serialize};

use super::model::{RomModel, Space};
use crate::error::{Error, Result};
use crate::numcore::{all_finite, dist2, finite_diff_jacobian, poisson};
use crate::systems::HamiltonianSystem;

/// Anything with a full-to-latent encoder and a matching decoder.
pub trait Reconstructor {
    fn encode(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn decode(&self, y: &[f64]) -> Result<Vec<f64>>;

    fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(x)?)
    }
}

impl Reconstructor for RomModel {
    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        RomModel::encode(self, x)
    }

    fn decode(&self, y: &[f64]) -> Result<Vec<f64>> {
        RomModel::decode(self, y)
    }
}

/// Mean of `‖x - x̂‖²` over every snapshot of every trajectory.
pub fn evaluate_mse<R: Reconstructor + ?Sized>(rec: &R, trajectories: &[Vec<&[f64]>]) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for traj in trajectories {
        for x in traj {
            total += dist2(&rec.reconstruct(x)?, x);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidArgument("no snapshots to evaluate".into()));
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub h: f64,
    /// `H - H₀`.
    pub dh: f64,
}

/// Discrete Hamiltonian along a sequence of states spaced `dt` apart.
pub fn energy_trace<H: HamiltonianSystem + ?Sized>(
    states: &[Vec<f64>],
    dt: f64,
    system: &H,
) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::with_capacity(states.len());
    let mut h0 = 0.0;
    for (i, x) in states.iter().enumerate() {
        if !all_finite(x) {
            return Err(Error::NonFinite(format!("state at step {i}")));
        }
        let h = system.hamiltonian(x)?;
        if i == 0 {
            h0 = h;
        }
        out.push(TraceRecord {
            t: i as f64 * dt,
            h,
            dh: h - h0,
        });
    }
    Ok(out)
}

/// Hamiltonian along a latent-space rollout of `steps` steps from `x0`.
pub fn hamiltonian_trace<H: HamiltonianSystem + ?Sized>(
    model: &RomModel,
    x0: &[f64],
    steps: usize,
    dt: f64,
    system: &H,
) -> Result<Vec<TraceRecord>> {
    let states = if steps == 0 {
        vec![x0.to_vec()]
    } else {
        model.rollout(x0, steps, Space::Latent)?
    };
    energy_trace(&states, dt, system)
}

/// Finite-difference defect `‖DᵀJD − J‖∞` of `y ↦ f_dec(flow^j(y))` at `y`.
pub fn latent_defect(model: &RomModel, y: &[f64], flow_steps: usize, h: f64) -> Result<f64> {
    let map = |y: &[f64]| {
        let mut y = y.to_vec();
        for _ in 0..flow_steps {
            y = model.flow_step(&y).unwrap_or_else(|_| vec![f64::NAN; y.len()]);
        }
        model.decode(&y).unwrap_or_else(|_| vec![f64::NAN; 2 * model.n()])
    };
    let d = finite_diff_jacobian(map, y, h)?;
    if !d.is_finite() {
        return Err(Error::NonFinite("decoder Jacobian".into()));
    }
    let djd = d.transpose().matmul(&poisson(model.n()))?.matmul(&d)?;
    Ok(djd.sub(&poisson(model.k()))?.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Shift(f64);

    impl Reconstructor for Shift {
        fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(x.to_vec())
        }
        fn decode(&self, y: &[f64]) -> Result<Vec<f64>> {
            Ok(y.iter().enumerate().map(|(i, v)| if i == 0 { v + self.0 } else { *v }).collect())
        }
    }

    #[test]
    fn test_mse_values() {
        let a = [1.0, 2.0];
        assert_eq!(evaluate_mse(&Shift(0.0), &[vec![&a[..]]]).unwrap(), 0.0);
        assert_eq!(evaluate_mse(&Shift(1.0), &[vec![&a[..]]]).unwrap(), 1.0);
        assert!(evaluate_mse(&Shift(1.0), &[]).is_err());
    }

    #[test]
    fn test_mse_mean_of_three() {
        struct PerSnapshot;
        impl Reconstructor for PerSnapshot {
            fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
                Ok(x.to_vec())
            }
            fn decode(&self, y: &[f64]) -> Result<Vec<f64>> {
                Ok(vec![y[0], y[1] + y[0].sqrt()])
            }
        }
        let s = [[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        let traj: Vec<&[f64]> = s.iter().map(|v| v.as_slice()).collect();
        let mse = evaluate_mse(&PerSnapshot, &[traj]).unwrap();
        assert!((mse - 2.0).abs() < 1e-14);
    }
}
