//! Snapshot datasets: generation and the binary + JSON sidecar container.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{HamiltonianSystem, PdeSystem};
use super::initial::initial_state;
use super::integrator::{integrate, NewtonSettings};
use super::spec::{Sampling, SystemSpec};
use crate::error::{check_dim, Error, Result};
use crate::numcore::RngStream;

pub const FORMAT_VERSION: u32 = 1;

/// Trajectories × snapshots × `2N` states, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotDataset {
    pub spec: SystemSpec,
    /// Per-trajectory parameters.
    pub params: Vec<Vec<f64>>,
    /// Integrator steps per trajectory; each holds `n_steps + 1` snapshots.
    pub n_steps: usize,
    pub seed: u64,
    states: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format_version: u32,
    kind: String,
    #[serde(rename = "N")]
    n: usize,
    dt: f64,
    #[serde(rename = "dx_or_L")]
    dx_or_l: f64,
    boundary: String,
    n_traj: usize,
    n_steps: usize,
    params: Vec<Vec<f64>>,
    seed: u64,
    generator: String,
    spec: SystemSpec,
}

impl SnapshotDataset {
    pub fn from_trajectories(
        spec: SystemSpec,
        params: Vec<Vec<f64>>,
        seed: u64,
        trajectories: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        check_dim("SnapshotDataset params", trajectories.len(), params.len())?;
        let dim = 2 * spec.grid_points();
        let snaps = trajectories.first().map_or(1, |t| t.len());
        if snaps == 0 {
            return Err(Error::InvalidArgument("trajectories must be non-empty".into()));
        }
        let mut states = Vec::with_capacity(trajectories.len() * snaps * dim);
        for (traj, p) in trajectories.iter().zip(&params) {
            check_dim("SnapshotDataset trajectory length", snaps, traj.len())?;
            check_dim("SnapshotDataset parameter length", spec.param_len(), p.len())?;
            for z in traj {
                check_dim("SnapshotDataset state", dim, z.len())?;
                states.extend_from_slice(z);
            }
        }
        if !crate::numcore::all_finite(&states) {
            return Err(Error::NonFinite("dataset states".into()));
        }
        Ok(Self {
            spec,
            params,
            n_steps: snaps - 1,
            seed,
            states,
        })
    }

    pub fn n_traj(&self) -> usize {
        self.params.len()
    }

    pub fn snapshots_per_trajectory(&self) -> usize {
        self.n_steps + 1
    }

    pub fn state_dim(&self) -> usize {
        2 * self.spec.grid_points()
    }

    /// Shared time grid `t_j = j Δt`.
    pub fn times(&self) -> Vec<f64> {
        let dt = self.spec.dt();
        (0..=self.n_steps).map(|j| j as f64 * dt).collect()
    }

    pub fn snapshot(&self, traj: usize, step: usize) -> &[f64] {
        let dim = self.state_dim();
        let start = (traj * self.snapshots_per_trajectory() + step) * dim;
        &self.states[start..start + dim]
    }

    pub fn trajectory(&self, traj: usize) -> Vec<&[f64]> {
        (0..self.snapshots_per_trajectory())
            .map(|j| self.snapshot(traj, j))
            .collect()
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn system(&self, traj: usize) -> Result<PdeSystem> {
        PdeSystem::new(&self.spec, &self.params[traj])
    }

    /// Max relative energy deviation `|H(t) - H(0)| / |H(0)|` along a trajectory.
    pub fn energy_drift(&self, traj: usize) -> Result<f64> {
        let sys = self.system(traj)?;
        let h0 = sys.hamiltonian(self.snapshot(traj, 0))?;
        let mut worst: f64 = 0.0;
        for j in 1..self.snapshots_per_trajectory() {
            let h = sys.hamiltonian(self.snapshot(traj, j))?;
            worst = worst.max((h - h0).abs());
        }
        Ok(if h0 != 0.0 { worst / h0.abs() } else { worst })
    }

    /// Sidecar location for a dataset file: same path with a `.json` extension.
    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        for v in &self.states {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        let sidecar = Sidecar {
            format_version: FORMAT_VERSION,
            kind: self.spec.kind().to_string(),
            n: self.spec.grid_points(),
            dt: self.spec.dt(),
            dx_or_l: match self.spec {
                SystemSpec::Nls { .. } => self.spec.domain_length(),
                _ => self.spec.dx(),
            },
            boundary: self.spec.boundary().to_string(),
            n_traj: self.n_traj(),
            n_steps: self.n_steps,
            params: self.params.clone(),
            seed: self.seed,
            generator: format!("symrom {}", env!("CARGO_PKG_VERSION")),
            spec: self.spec.clone(),
        };
        let mut text = serde_json::to_string_pretty(&sidecar)?;
        text.push('\n');
        fs::write(Self::sidecar_path(path), text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(Self::sidecar_path(path))?;
        let meta: Sidecar = serde_json::from_str(&text)?;
        if meta.format_version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset format version {}",
                meta.format_version
            )));
        }
        meta.spec.validate()?;
        if meta.n != meta.spec.grid_points() || meta.params.len() != meta.n_traj {
            return Err(Error::Format("sidecar fields disagree with spec".into()));
        }
        let bytes = fs::read(path)?;
        let count = meta.n_traj * (meta.n_steps + 1) * 2 * meta.n;
        if bytes.len() != count * 8 {
            return Err(Error::Format(format!(
                "expected {} bytes of state data, found {}",
                count * 8,
                bytes.len()
            )));
        }
        let states: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        for p in &meta.params {
            check_dim("dataset parameter vector", meta.spec.param_len(), p.len())?;
        }
        Ok(Self {
            spec: meta.spec,
            params: meta.params,
            n_steps: meta.n_steps,
            seed: meta.seed,
            states,
        })
    }
}

/// Draws per-trajectory parameters.
///
/// Wave: `(a0, x0)` uniform on the configured box. Param-wave: the tensor
/// grid `linspace(0, 1, g)^4` in lexicographic order. NLS: `ε` uniform.
pub fn sample_params(spec: &SystemSpec, sampling: &Sampling) -> Result<Vec<Vec<f64>>> {
    sampling.validate(spec)?;
    let mut rng = RngStream::new(sampling.seed);
    Ok(match spec {
        SystemSpec::Wave { .. } => {
            let [a_lo, a_hi] = sampling.a0_range;
            let [x_lo, x_hi] = sampling.x0_range;
            (0..sampling.count.unwrap_or(0))
                .map(|_| {
                    let a0 = rng.uniform(a_lo, a_hi);
                    let x0 = rng.uniform(x_lo, x_hi);
                    vec![a0, x0]
                })
                .collect()
        }
        SystemSpec::ParamWave { .. } => {
            let g = sampling.grid_per_axis.unwrap_or(1);
            let axis: Vec<f64> = if g == 1 {
                vec![0.0]
            } else {
                (0..g).map(|i| i as f64 / (g - 1) as f64).collect()
            };
            let mut out = Vec::with_capacity(g.pow(4));
            for &a in &axis {
                for &b in &axis {
                    for &c in &axis {
                        for &d in &axis {
                            out.push(vec![a, b, c, d]);
                        }
                    }
                }
            }
            out
        }
        SystemSpec::Nls { .. } => {
            let [lo, hi] = sampling.eps_range;
            (0..sampling.count.unwrap_or(0))
                .map(|_| vec![rng.uniform(lo, hi)])
                .collect()
        }
    })
}

/// Samples parameters and integrates every trajectory to the horizon.
///
/// Trajectories are integrated in parallel and assembled in sampling order.
/// Any integration failure aborts the run with a list of the failures.
pub fn generate_dataset(spec: &SystemSpec, sampling: &Sampling) -> Result<SnapshotDataset> {
    spec.validate()?;
    let params = sample_params(spec, sampling)?;
    let steps = sampling.n_steps(spec.dt());
    let settings = NewtonSettings::default();
    let results: Vec<Result<Vec<Vec<f64>>>> = params
        .par_iter()
        .map(|p| {
            let sys = PdeSystem::new(spec, p)?;
            let z0 = initial_state(spec, p)?;
            integrate(&sys, &z0, spec.dt(), steps, &settings)
        })
        .collect();
    let mut trajectories = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => trajectories.push(t),
            Err(Error::Generation(msg)) => failures.push(format!("trajectory {i} {:?}: {msg}", params[i])),
            Err(e) => failures.push(format!("trajectory {i} {:?}: {e}", params[i])),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Generation(failures.join("; ")));
    }
    SnapshotDataset::from_trajectories(spec.clone(), params, sampling.seed, trajectories)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_grid_enumeration() {
        let spec = SystemSpec::ParamWave {
            grid_points: 16,
            dt: 0.24,
            c2: 0.1,
        };
        let p = sample_params(&spec, &Sampling::grid(0.24, 2, 0)).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p[0], vec![0.0; 4]);
        assert_eq!(p[1], vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(p[15], vec![1.0; 4]);
    }

    #[test]
    fn test_one_step_horizon_has_two_snapshots() {
        let spec = SystemSpec::Wave {
            grid_points: 16,
            dt: 0.24,
            omega2: 0.01,
        };
        let ds = generate_dataset(&spec, &Sampling::random(0.24, 3, 9)).unwrap();
        assert_eq!(ds.n_traj(), 3);
        assert_eq!(ds.snapshots_per_trajectory(), 2);
        assert_eq!(ds.times(), vec![0.0, 0.24]);
    }
}
