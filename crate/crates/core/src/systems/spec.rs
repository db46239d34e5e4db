use serde::{Deserialize, Serialize};

use super::dxx::Boundary;
use crate::error::{Error, Result};

/// Static description of a full-order system; per-trajectory parameters
/// (`a0, x0` | `ω1..ω4` | `ε`) are supplied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `u_tt = ω² u_xx` on `[0, 1]`, Dirichlet, `Δx = 1/N`.
    Wave {
        grid_points: usize,
        dt: f64,
        omega2: f64,
    },
    /// `u_tt = κ(ω) u_xx` on `[0, 1]`, Dirichlet, `Δx = 1/N`.
    ParamWave {
        grid_points: usize,
        dt: f64,
        c2: f64,
    },
    /// Cubic Schrödinger equation on a torus of length `L = 2π / domain_scale`.
    Nls {
        grid_points: usize,
        dt: f64,
        speed: f64,
        domain_scale: f64,
        /// Soliton centre; defaults to `L / 2`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
    },
}

impl SystemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemSpec::Wave { .. } => "wave",
            SystemSpec::ParamWave { .. } => "param-wave",
            SystemSpec::Nls { .. } => "nls",
        }
    }

    pub fn grid_points(&self) -> usize {
        match *self {
            SystemSpec::Wave { grid_points, .. }
            | SystemSpec::ParamWave { grid_points, .. }
            | SystemSpec::Nls { grid_points, .. } => grid_points,
        }
    }

    pub fn dt(&self) -> f64 {
        match *self {
            SystemSpec::Wave { dt, .. } | SystemSpec::ParamWave { dt, .. } | SystemSpec::Nls { dt, .. } => {
                dt
            }
        }
    }

    pub fn boundary(&self) -> Boundary {
        match self {
            SystemSpec::Nls { .. } => Boundary::Periodic,
            _ => Boundary::Dirichlet,
        }
    }

    /// Domain length: 1 for the wave systems, `2π / l` for NLS.
    pub fn domain_length(&self) -> f64 {
        match *self {
            SystemSpec::Nls { domain_scale, .. } => 2.0 * std::f64::consts::PI / domain_scale,
            _ => 1.0,
        }
    }

    pub fn dx(&self) -> f64 {
        self.domain_length() / self.grid_points() as f64
    }

    /// Grid nodes `x_i = i Δx`, `i = 1..=N`.
    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (1..=self.grid_points()).map(|i| i as f64 * dx).collect()
    }

    /// Number of per-trajectory parameters.
    pub fn param_len(&self) -> usize {
        match self {
            SystemSpec::Wave { .. } => 2,
            SystemSpec::ParamWave { .. } => 4,
            SystemSpec::Nls { .. } => 1,
        }
    }

    /// Physical time reached after system time `t`.
    ///
    /// The discrete Hamiltonians carry the quadrature weight `Δx`, so
    /// `ż = J∇H` runs the PDE at rate `Δx`.
    pub fn physical_time(&self, t: f64) -> f64 {
        self.dx() * t
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.grid_points() < 3 {
            return bad(format!("grid_points must be at least 3, got {}", self.grid_points()));
        }
        if !(self.dt().is_finite() && self.dt() > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt()));
        }
        match *self {
            SystemSpec::Wave { omega2, .. } if !(omega2 >= 0.0 && omega2.is_finite()) => {
                bad(format!("omega2 must be non-negative, got {omega2}"))
            }
            SystemSpec::ParamWave { c2, .. } if !(c2 >= 0.0 && c2.is_finite()) => {
                bad(format!("c2 must be non-negative, got {c2}"))
            }
            SystemSpec::Nls {
                domain_scale,
                speed,
                center,
                ..
            } => {
                if !(domain_scale > 0.0 && domain_scale.is_finite()) {
                    return bad(format!("domain_scale must be positive, got {domain_scale}"));
                }
                if !speed.is_finite() {
                    return bad("speed must be finite".into());
                }
                if let Some(c) = center {
                    if !(0.0..=self.domain_length()).contains(&c) {
                        return bad(format!("center {c} outside the domain"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// `κ(ω) = c² Σ_l ω_l / l²`.
pub fn kappa(omega: &[f64], c2: f64) -> f64 {
    c2 * omega
        .iter()
        .enumerate()
        .map(|(l, w)| w / ((l + 1) * (l + 1)) as f64)
        .sum::<f64>()
}

/// Parameter sampling and integration horizon for dataset generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    /// Final system time; trajectories hold `ceil(horizon / dt) + 1` snapshots.
    pub horizon: f64,
    pub seed: u64,
    /// Number of random samples (wave, nls).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Points per axis of the `[0,1]^4` grid (param-wave).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_per_axis: Option<usize>,
    #[serde(default = "default_a0_range")]
    pub a0_range: [f64; 2],
    #[serde(default = "default_x0_range")]
    pub x0_range: [f64; 2],
    #[serde(default = "default_eps_range")]
    pub eps_range: [f64; 2],
}

fn default_a0_range() -> [f64; 2] {
    [7.0, 8.0]
}

fn default_x0_range() -> [f64; 2] {
    [-0.2, 0.2]
}

fn default_eps_range() -> [f64; 2] {
    [0.9, 1.1]
}

impl Sampling {
    pub fn random(horizon: f64, count: usize, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            count: Some(count),
            grid_per_axis: None,
            a0_range: default_a0_range(),
            x0_range: default_x0_range(),
            eps_range: default_eps_range(),
        }
    }

    pub fn grid(horizon: f64, per_axis: usize, seed: u64) -> Self {
        Self {
            count: None,
            grid_per_axis: Some(per_axis),
            ..Self::random(horizon, 0, seed)
        }
    }

    pub fn n_steps(&self, dt: f64) -> usize {
        (self.horizon / dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self, spec: &SystemSpec) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        for (name, r) in [
            ("a0_range", self.a0_range),
            ("x0_range", self.x0_range),
            ("eps_range", self.eps_range),
        ] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return bad(format!("{name} must be an ordered finite pair, got {r:?}"));
            }
        }
        match spec {
            SystemSpec::ParamWave { .. } => match self.grid_per_axis {
                Some(g) if g >= 1 => Ok(()),
                _ => bad("param-wave sampling needs grid_per_axis >= 1".into()),
            },
            _ => match self.count {
                Some(c) if c >= 1 => Ok(()),
                _ => bad(format!("{} sampling needs count >= 1", spec.kind())),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_kappa() {
        assert_eq!(kappa(&[0.0; 4], 0.1), 0.0);
        let k = kappa(&[1.0; 4], 0.1);
        assert!((k - 0.1 * (1.0 + 0.25 + 1.0 / 9.0 + 0.0625)).abs() < 1e-15);
        assert!((k - 0.14236).abs() < 1e-5);
    }

    #[test]
    fn test_spec_json_round_trip() {
        let s = SystemSpec::Nls {
            grid_points: 64,
            dt: 0.2,
            speed: 1.0,
            domain_scale: 0.11,
            center: None,
        };
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"kind\":\"nls\""));
        assert_eq!(serde_json::from_str::<SystemSpec>(&text).unwrap(), s);
        let bad = r#"{"kind":"wave","grid_points":8,"dt":0.1,"omega2":0.01,"typo":1}"#;
        assert!(serde_json::from_str::<SystemSpec>(bad).is_err());
    }

    #[test]
    fn test_steps_from_horizon() {
        let s = Sampling::random(0.24, 1, 0);
        assert_eq!(s.n_steps(0.24), 1);
        assert_eq!(Sampling::random(12.0, 1, 0).n_steps(0.24), 50);
    }
}
