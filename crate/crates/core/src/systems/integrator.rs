//! Störmer–Verlet: explicit for separable Hamiltonians, Newton-resolved
//! half steps otherwise.

use super::hamiltonian::HamiltonianSystem;
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Absolute tolerance on the residual infinity norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 50,
        }
    }
}

/// Residual norms of the two implicit stages, one entry per evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub momentum_residuals: Vec<f64>,
    pub position_residuals: Vec<f64>,
}

impl StepStats {
    /// Newton updates taken by the slower of the two stages.
    pub fn max_iterations(&self) -> usize {
        self.momentum_residuals
            .len()
            .max(self.position_residuals.len())
            .saturating_sub(1)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `r(x) = 0` where `∂r/∂x` is diagonal.
fn diagonal_newton<R, D>(
    mut x: Vec<f64>,
    residual: R,
    jac_diag: D,
    settings: &NewtonSettings,
    history: &mut Vec<f64>,
) -> Result<Vec<f64>>
where
    R: Fn(&[f64]) -> Vec<f64>,
    D: Fn(&[f64]) -> Vec<f64>,
{
    for iteration in 0..=settings.max_iter {
        let r = residual(&x);
        let norm = inf_norm(&r);
        history.push(norm);
        if norm < settings.tol {
            return Ok(x);
        }
        if !norm.is_finite() || iteration == settings.max_iter {
            break;
        }
        let d = jac_diag(&x);
        for i in 0..x.len() {
            x[i] -= r[i] / d[i];
        }
    }
    Err(Error::NewtonDivergence {
        iterations: history.len().saturating_sub(1),
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// One Störmer–Verlet step of size `dt` from `(q, p)`.
pub fn stormer_verlet_step<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    q: &[f64],
    p: &[f64],
    dt: f64,
    settings: &NewtonSettings,
) -> Result<(Vec<f64>, Vec<f64>, StepStats)> {
    let n = sys.half_dim();
    check_dim("stormer_verlet_step q", n, q.len())?;
    check_dim("stormer_verlet_step p", n, p.len())?;
    let h = 0.5 * dt;
    let mut stats = StepStats::default();

    let p_half = if sys.is_separable() {
        let g = sys.grad_q(q, p);
        p.iter().zip(&g).map(|(a, b)| a - h * b).collect()
    } else {
        let g0 = sys.grad_q(q, p);
        let guess = p.iter().zip(&g0).map(|(a, b)| a - h * b).collect();
        diagonal_newton(
            guess,
            |pp| {
                let g = sys.grad_q(q, pp);
                (0..n).map(|i| pp[i] - p[i] + h * g[i]).collect()
            },
            |pp| sys.mixed_diag(q, pp).iter().map(|m| 1.0 + h * m).collect(),
            settings,
            &mut stats.momentum_residuals,
        )?
    };

    let gp0 = sys.grad_p(q, &p_half);
    let q_new: Vec<f64> = if sys.is_separable() {
        q.iter().zip(&gp0).map(|(a, b)| a + dt * b).collect()
    } else {
        let guess = q.iter().zip(&gp0).map(|(a, b)| a + dt * b).collect();
        diagonal_newton(
            guess,
            |qq| {
                let g = sys.grad_p(qq, &p_half);
                (0..n).map(|i| qq[i] - q[i] - h * (gp0[i] + g[i])).collect()
            },
            |qq| sys.mixed_diag(qq, &p_half).iter().map(|m| 1.0 - h * m).collect(),
            settings,
            &mut stats.position_residuals,
        )?
    };

    let g1 = sys.grad_q(&q_new, &p_half);
    let p_new = p_half.iter().zip(&g1).map(|(a, b)| a - h * b).collect();
    Ok((q_new, p_new, stats))
}

/// Integrates `steps` steps from the stacked state `z0`; returns all
/// `steps + 1` states.
pub fn integrate<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    z0: &[f64],
    dt: f64,
    steps: usize,
    settings: &NewtonSettings,
) -> Result<Vec<Vec<f64>>> {
    let n = sys.half_dim();
    check_dim("integrate", 2 * n, z0.len())?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(z0.to_vec());
    let (mut q, mut p) = (z0[..n].to_vec(), z0[n..].to_vec());
    for step in 0..steps {
        let (q1, p1, _) = stormer_verlet_step(sys, &q, &p, dt, settings).map_err(|e| match e {
            Error::NewtonDivergence { .. } => Error::Generation(format!("step {step}: {e}")),
            other => other,
        })?;
        q = q1;
        p = p1;
        let z = [q.as_slice(), p.as_slice()].concat();
        if !crate::numcore::all_finite(&z) {
            return Err(Error::NonFinite(format!("state at step {}", step + 1)));
        }
        out.push(z);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::HarmonicOscillator;

    #[test]
    fn test_harmonic_hand_value() {
        let sys = HarmonicOscillator { n: 1 };
        let (q, p, _) = stormer_verlet_step(&sys, &[1.0], &[0.0], 0.1, &Default::default()).unwrap();
        assert!((q[0] - 0.995).abs() < 1e-15);
        assert!((p[0] + 0.09975).abs() < 1e-15);
    }

    #[test]
    fn test_zero_step_is_identity() {
        let sys = HarmonicOscillator { n: 2 };
        let (q, p, _) =
            stormer_verlet_step(&sys, &[1.0, 2.0], &[3.0, 4.0], 0.0, &Default::default()).unwrap();
        assert_eq!((q, p), (vec![1.0, 2.0], vec![3.0, 4.0]));
    }

    #[test]
    fn test_dimension_check() {
        let sys = HarmonicOscillator { n: 2 };
        assert!(stormer_verlet_step(&sys, &[1.0], &[0.0, 1.0], 0.1, &Default::default()).is_err());
    }
}
