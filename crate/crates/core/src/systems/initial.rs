//! Initial conditions and the analytic wave solution.

use super::spec::SystemSpec;
use super::spline_h;
use crate::error::{check_dim, Error, Result};

fn wave_omega(spec: &SystemSpec) -> Result<f64> {
    match *spec {
        SystemSpec::Wave { omega2, .. } => Ok(omega2.sqrt()),
        _ => Err(Error::InvalidArgument(format!(
            "expected a wave system, got {}",
            spec.kind()
        ))),
    }
}

/// Spline pulse `q_i = h(a0 |x_i - ½ - x0|)` moving right:
/// `p_i = -ω (q_{i+1} - q_{i-1}) / (2Δx)` with zero ghosts.
pub fn wave_initial_state(spec: &SystemSpec, a0: f64, x0: f64) -> Result<Vec<f64>> {
    let omega = wave_omega(spec)?;
    let dx = spec.dx();
    let q: Vec<f64> = spec
        .grid()
        .iter()
        .map(|x| spline_h(a0 * (x - 0.5 - x0)))
        .collect();
    let n = q.len();
    let at = |i: isize| if i < 0 || i >= n as isize { 0.0 } else { q[i as usize] };
    let p: Vec<f64> = (0..n as isize)
        .map(|i| -omega * (at(i + 1) - at(i - 1)) / (2.0 * dx))
        .collect();
    Ok([q, p].concat())
}

/// Displacement `u⁰(x - ω τ)` at physical time `τ`
/// (see [`SystemSpec::physical_time`]).
pub fn exact_wave_solution(spec: &SystemSpec, a0: f64, x0: f64, tau: f64) -> Result<Vec<f64>> {
    let omega = wave_omega(spec)?;
    Ok(spec
        .grid()
        .iter()
        .map(|x| spline_h(a0 * (x - omega * tau - 0.5 - x0)))
        .collect())
}

/// Standing pulse `q_i = h(10 |x_i - ½|)`, `p = 0`.
pub fn param_wave_initial_state(spec: &SystemSpec) -> Vec<f64> {
    let n = spec.grid_points();
    let mut z: Vec<f64> = spec.grid().iter().map(|x| spline_h(10.0 * (x - 0.5))).collect();
    z.resize(2 * n, 0.0);
    z
}

/// Soliton `u = √2 sech(x - x0) exp(i c (x - x0) / 2)` split as `u = p + i q`.
pub fn nls_initial_state(spec: &SystemSpec) -> Result<Vec<f64>> {
    let SystemSpec::Nls { speed, center, .. } = *spec else {
        return Err(Error::InvalidArgument(format!(
            "expected an nls system, got {}",
            spec.kind()
        )));
    };
    let x0 = center.unwrap_or(0.5 * spec.domain_length());
    let grid = spec.grid();
    let mut q = Vec::with_capacity(grid.len());
    let mut p = Vec::with_capacity(grid.len());
    for x in grid {
        let amp = std::f64::consts::SQRT_2 / (x - x0).cosh();
        let phase = 0.5 * speed * (x - x0);
        p.push(amp * phase.cos());
        q.push(amp * phase.sin());
    }
    Ok([q, p].concat())
}

/// Initial state for one trajectory given its parameter vector.
pub fn initial_state(spec: &SystemSpec, params: &[f64]) -> Result<Vec<f64>> {
    check_dim("initial_state params", spec.param_len(), params.len())?;
    match spec {
        SystemSpec::Wave { .. } => wave_initial_state(spec, params[0], params[1]),
        SystemSpec::ParamWave { .. } => Ok(param_wave_initial_state(spec)),
        SystemSpec::Nls { .. } => nls_initial_state(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(n: usize) -> SystemSpec {
        SystemSpec::Wave {
            grid_points: n,
            dt: 0.24,
            omega2: 0.01,
        }
    }

    #[test]
    fn test_wave_peak_and_support() {
        let spec = wave(64);
        let dx = spec.dx();
        let x0 = 3.0 * dx;
        let z = wave_initial_state(&spec, 8.0, x0).unwrap();
        // x_i = i dx, so ½ + x0 is node 35, index 34.
        assert_eq!(z[34], 1.0);
        for (i, x) in spec.grid().iter().enumerate() {
            if 8.0 * (x - 0.5 - x0).abs() > 2.0 {
                assert_eq!(z[i], 0.0);
            }
        }
    }

    #[test]
    fn test_exact_solution_at_zero_matches_initial() {
        let spec = wave(32);
        let z = wave_initial_state(&spec, 7.5, 0.1).unwrap();
        assert_eq!(exact_wave_solution(&spec, 7.5, 0.1, 0.0).unwrap(), z[..32].to_vec());
    }

    #[test]
    fn test_nls_modulus() {
        let spec = SystemSpec::Nls {
            grid_points: 64,
            dt: 0.2,
            speed: 1.0,
            domain_scale: 0.11,
            center: None,
        };
        let z = nls_initial_state(&spec).unwrap();
        let m = |i: usize| (z[i] * z[i] + z[64 + i] * z[64 + i]).sqrt();
        assert!((m(31) - std::f64::consts::SQRT_2).abs() < 1e-15);
        for d in 1..31 {
            assert!((m(31 + d) - m(31 - d)).abs() < 1e-14);
        }
    }
}
