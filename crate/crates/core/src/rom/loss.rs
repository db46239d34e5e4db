//! Reconstruction, multi-step prediction and Hamiltonian penalty terms.
//!
//! All norms are squared ℓ2 and every sum is averaged over its term count.
//! A trajectory `x_0..x_T` contributes one window per start `i = 0..=T-M`;
//! the window starting at `i` owns the reconstruction of `x_i` (the last
//! window also owns `x_{i+1}..x_T`) and the prediction of `x_{i+1}..x_{i+M}`
//! from a noisy copy of `x_i`.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::RomModel;
use crate::error::{check_dim, Error, Result};
use crate::numcore::{axpy, dist2, RngStream};
use crate::symplectic::Parameterized;
use crate::systems::{HamiltonianSystem, HarmonicOscillator, PdeSystem, SnapshotDataset};

/// Loss weights and unrolling settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Unroll length `M`.
    pub unroll: usize,
    pub noise_sigma: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 0.01,
            unroll: 3,
            noise_sigma: 1e-3,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "loss weights must be non-negative, got ({}, {})",
                self.lambda1, self.lambda2
            )));
        }
        if self.unroll == 0 {
            return Err(Error::InvalidArgument("unroll must be at least 1".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument("noise_sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// `λ1 L_rom + λ2 L_ham`.
pub fn loss_total(l_rom: f64, l_ham: f64, lambda1: f64, lambda2: f64) -> Result<f64> {
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
    }
    Ok(lambda1 * l_rom + lambda2 * l_ham)
}

/// One training window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowTask {
    pub traj: usize,
    pub start: usize,
    /// Snapshot indices whose reconstruction this window owns.
    pub recon: Range<usize>,
}

/// Windows for trajectories with the given snapshot counts.
pub fn windows(lengths: &[usize], unroll: usize) -> Result<Vec<WindowTask>> {
    if lengths.is_empty() {
        return Err(Error::InvalidArgument("no trajectories".into()));
    }
    let mut out = Vec::new();
    for (traj, &len) in lengths.iter().enumerate() {
        if len <= unroll {
            return Err(Error::InvalidArgument(format!(
                "unroll {unroll} needs trajectories longer than {unroll} snapshots, trajectory {traj} has {len}"
            )));
        }
        let last = len - 1 - unroll;
        for start in 0..=last {
            let end = if start == last { len } else { start + 1 };
            out.push(WindowTask {
                traj,
                start,
                recon: start..end,
            });
        }
    }
    Ok(out)
}

/// Unweighted sums of the four loss terms and their counts.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermSums {
    pub recon: f64,
    pub pred: f64,
    pub ham_recon: f64,
    pub ham_pred: f64,
    pub n_recon: usize,
    pub n_pred: usize,
}

impl TermSums {
    pub fn add(&mut self, o: &TermSums) {
        self.recon += o.recon;
        self.pred += o.pred;
        self.ham_recon += o.ham_recon;
        self.ham_pred += o.ham_pred;
        self.n_recon += o.n_recon;
        self.n_pred += o.n_pred;
    }

    pub fn parts(&self, lambda1: f64, lambda2: f64) -> LossParts {
        let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
        let l_r = mean(self.recon, self.n_recon);
        let l_f = mean(self.pred, self.n_pred);
        let l_rom = l_r + l_f;
        let l_ham = mean(self.ham_recon, self.n_recon) + mean(self.ham_pred, self.n_pred);
        LossParts {
            l_r,
            l_f,
            l_rom,
            l_ham,
            l_total: lambda1 * l_rom + lambda2 * l_ham,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub l_r: f64,
    pub l_f: f64,
    pub l_rom: f64,
    pub l_ham: f64,
    pub l_total: f64,
}

/// Per-term gradient multipliers.
#[derive(Debug, Clone, Copy)]
struct TermWeights {
    recon: f64,
    pred: f64,
    ham_recon: f64,
    ham_pred: f64,
}

impl TermWeights {
    /// Weights that make the gradient that of `parts(λ1, λ2).l_total` for a
    /// batch with the given counts.
    fn for_counts(cfg: &LossConfig, n_recon: usize, n_pred: usize) -> Self {
        let inv = |n: usize| if n == 0 { 0.0 } else { 1.0 / n as f64 };
        Self {
            recon: cfg.lambda1 * inv(n_recon),
            pred: cfg.lambda1 * inv(n_pred),
            ham_recon: cfg.lambda2 * inv(n_recon),
            ham_pred: cfg.lambda2 * inv(n_pred),
        }
    }
}

/// Trajectories with their generating Hamiltonians.
#[derive(Debug, Clone)]
pub struct TrainData<'a, H> {
    pub trajectories: Vec<Vec<&'a [f64]>>,
    pub hamiltonians: Option<Vec<H>>,
    /// `H(x_0)` per trajectory (zero without Hamiltonians).
    pub h0: Vec<f64>,
}

impl<'a, H: HamiltonianSystem> TrainData<'a, H> {
    pub fn new(trajectories: Vec<Vec<&'a [f64]>>, hamiltonians: Option<Vec<H>>) -> Result<Self> {
        if trajectories.is_empty() || trajectories.iter().any(|t| t.is_empty()) {
            return Err(Error::InvalidArgument("empty trajectory data".into()));
        }
        let dim = trajectories[0][0].len();
        for t in &trajectories {
            for x in t {
                check_dim("TrainData state", dim, x.len())?;
            }
        }
        let h0 = match &hamiltonians {
            Some(hs) => {
                check_dim("TrainData hamiltonians", trajectories.len(), hs.len())?;
                hs.iter()
                    .zip(&trajectories)
                    .map(|(h, t)| h.hamiltonian(t[0]))
                    .collect::<Result<Vec<_>>>()?
            }
            None => vec![0.0; trajectories.len()],
        };
        Ok(Self {
            trajectories,
            hamiltonians,
            h0,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.trajectories[0][0].len()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.trajectories.iter().map(|t| t.len()).collect()
    }
}

impl<'a> TrainData<'a, PdeSystem> {
    pub fn from_dataset(ds: &'a SnapshotDataset) -> Result<Self> {
        let trajs = (0..ds.n_traj()).map(|i| ds.trajectory(i)).collect();
        let hams = (0..ds.n_traj())
            .map(|i| ds.system(i))
            .collect::<Result<Vec<_>>>()?;
        Self::new(trajs, Some(hams))
    }
}

/// Adds `2 w (H(x) - h0) ∇H(x)` to `cot` when `w ≠ 0`; returns `(H(x) - h0)²`.
fn ham_term<H: HamiltonianSystem>(
    ham: Option<(&H, f64)>,
    x: &[f64],
    w: Option<f64>,
    cot: &mut [f64],
) -> Result<f64> {
    let Some((h, h0)) = ham else {
        return Ok(0.0);
    };
    let dev = h.hamiltonian(x)? - h0;
    if let Some(w) = w.filter(|w| *w != 0.0) {
        axpy(2.0 * w * dev, &h.grad_hamiltonian(x)?, cot);
    }
    Ok(dev * dev)
}

/// Loss sums of one window; accumulates the weighted gradient when asked.
fn window_terms<H: HamiltonianSystem>(
    model: &RomModel,
    traj: &[&[f64]],
    ham: Option<(&H, f64)>,
    task: &WindowTask,
    noise: &[f64],
    unroll: usize,
    weights: Option<&TermWeights>,
    grad: &mut [f64],
) -> Result<TermSums> {
    let mut sums = TermSums::default();
    let dim = traj[0].len();

    for idx in task.recon.clone() {
        let x = traj[idx];
        let (y, te) = model.encode_traced(x)?;
        let (xh, td) = model.decode_traced(&y)?;
        sums.recon += dist2(&xh, x);
        sums.n_recon += 1;
        let mut cot = vec![0.0; dim];
        if let Some(w) = weights {
            for i in 0..dim {
                cot[i] = 2.0 * w.recon * (xh[i] - x[i]);
            }
        }
        sums.ham_recon += ham_term(ham, &xh, weights.map(|w| w.ham_recon), &mut cot)?;
        if weights.is_some() {
            let cy = model.decode_pullback(&td, &cot, grad)?;
            model.encode_pullback(&te, &cy, grad)?;
        }
    }

    check_dim("window noise", dim, noise.len())?;
    let mut xh: Vec<f64> = traj[task.start]
        .iter()
        .zip(noise)
        .map(|(a, b)| a + b)
        .collect();
    let mut steps = Vec::with_capacity(unroll);
    for j in 0..unroll {
        let (y, te) = model.encode_traced(&xh)?;
        let (y2, tf) = model.flow_traced(&y)?;
        let (next, td) = model.decode_traced(&y2)?;
        xh = next;
        steps.push((te, tf, td, xh.clone()));
        let target = traj[task.start + j + 1];
        sums.pred += dist2(&xh, target);
        sums.n_pred += 1;
    }

    let mut c = vec![0.0; dim];
    for (j, (te, tf, td, xj)) in steps.iter().enumerate().rev() {
        let target = traj[task.start + j + 1];
        if let Some(w) = weights {
            for i in 0..dim {
                c[i] += 2.0 * w.pred * (xj[i] - target[i]);
            }
        }
        sums.ham_pred += ham_term(ham, xj, weights.map(|w| w.ham_pred), &mut c)?;
        if weights.is_some() {
            let cy2 = model.decode_pullback(td, &c, grad)?;
            let cy = model.flow_pullback(tf, &cy2, grad)?;
            c = model.encode_pullback(te, &cy, grad)?;
        }
    }
    Ok(sums)
}

/// Evaluates a set of windows with fixed noise, optionally with the gradient
/// of `parts(λ1, λ2).l_total` over exactly these windows.
///
/// Windows run in parallel; per-window gradients are summed in task order so
/// the result does not depend on the thread count.
pub fn evaluate_windows<H: HamiltonianSystem>(
    model: &RomModel,
    data: &TrainData<'_, H>,
    tasks: &[WindowTask],
    noise: &[Vec<f64>],
    cfg: &LossConfig,
    with_grad: bool,
) -> Result<(TermSums, Option<Vec<f64>>)> {
    cfg.validate()?;
    check_dim("evaluate_windows noise", tasks.len(), noise.len())?;
    let n_recon: usize = tasks.iter().map(|t| t.recon.len()).sum();
    let n_pred = tasks.len() * cfg.unroll;
    let weights = TermWeights::for_counts(cfg, n_recon, n_pred);
    let p = model.param_count();
    let results: Vec<Result<(TermSums, Vec<f64>)>> = tasks
        .par_iter()
        .zip(noise.par_iter())
        .map(|(task, eps)| {
            let traj = &data.trajectories[task.traj];
            let ham = data
                .hamiltonians
                .as_ref()
                .map(|hs| (&hs[task.traj], data.h0[task.traj]));
            let mut g = if with_grad { vec![0.0; p] } else { Vec::new() };
            let w = with_grad.then_some(&weights);
            let s = window_terms(model, traj, ham, task, eps, cfg.unroll, w, &mut g)?;
            Ok((s, g))
        })
        .collect();
    let mut sums = TermSums::default();
    let mut grad = with_grad.then(|| vec![0.0; p]);
    for r in results {
        let (s, g) = r?;
        sums.add(&s);
        if let Some(total) = grad.as_mut() {
            for (a, b) in total.iter_mut().zip(&g) {
                *a += b;
            }
        }
    }
    Ok((sums, grad))
}

/// Gaussian perturbation of standard deviation `sigma` (no draws when zero).
pub fn draw_noise(rng: &mut RngStream, sigma: f64, dim: usize) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; dim];
    }
    (0..dim).map(|_| sigma * rng.normal()).collect()
}

fn all_windows_noise(tasks: &[WindowTask], sigma: f64, dim: usize, rng: &mut RngStream) -> Vec<Vec<f64>> {
    tasks.iter().map(|_| draw_noise(rng, sigma, dim)).collect()
}

/// `L_r`: mean of `‖x - f_dec(f_enc(x))‖²` over the snapshots.
pub fn loss_recon(model: &RomModel, snapshots: &[&[f64]]) -> Result<f64> {
    if snapshots.is_empty() {
        return Err(Error::InvalidArgument("no snapshots".into()));
    }
    let mut total = 0.0;
    for x in snapshots {
        total += dist2(&model.reconstruct(x)?, x);
    }
    Ok(total / snapshots.len() as f64)
}

/// `L_rom = L_r + L_f` over all windows, noise drawn window by window.
pub fn loss_rom_multistep(
    model: &RomModel,
    trajectories: &[Vec<&[f64]>],
    unroll: usize,
    noise_sigma: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    let data = TrainData::<HarmonicOscillator>::new(trajectories.to_vec(), None)?;
    let cfg = LossConfig {
        lambda1: 1.0,
        lambda2: 0.0,
        unroll,
        noise_sigma,
    };
    let tasks = windows(&data.lengths(), unroll)?;
    let noise = all_windows_noise(&tasks, noise_sigma, data.state_dim(), rng);
    let (sums, _) = evaluate_windows(model, &data, &tasks, &noise, &cfg, false)?;
    Ok(sums.parts(1.0, 0.0).l_rom)
}

/// `L_ham`: squared deviations of `H` on reconstructions and on unrolled
/// predictions from `H(x_0)` of each trajectory.
pub fn loss_ham_multistep<H: HamiltonianSystem + Clone>(
    model: &RomModel,
    trajectories: &[Vec<&[f64]>],
    unroll: usize,
    hamiltonians: &[H],
    noise_sigma: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    let data = TrainData::new(trajectories.to_vec(), Some(hamiltonians.to_vec()))?;
    let cfg = LossConfig {
        lambda1: 0.0,
        lambda2: 1.0,
        unroll,
        noise_sigma,
    };
    let tasks = windows(&data.lengths(), unroll)?;
    let noise = all_windows_noise(&tasks, noise_sigma, data.state_dim(), rng);
    let (sums, _) = evaluate_windows(model, &data, &tasks, &noise, &cfg, false)?;
    Ok(sums.parts(0.0, 1.0).l_ham)
}

/// All loss parts and the gradient of `L_total` over the full data set with
/// the given per-window noise.
pub fn total_loss_and_grad<H: HamiltonianSystem>(
    model: &RomModel,
    data: &TrainData<'_, H>,
    cfg: &LossConfig,
    noise: &[Vec<f64>],
) -> Result<(LossParts, Vec<f64>)> {
    let tasks = windows(&data.lengths(), cfg.unroll)?;
    let (sums, grad) = evaluate_windows(model, data, &tasks, noise, cfg, true)?;
    Ok((sums.parts(cfg.lambda1, cfg.lambda2), grad.expect("gradient requested")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_window_layout() {
        let w = windows(&[5, 3], 2).unwrap();
        let starts: Vec<(usize, usize)> = w.iter().map(|t| (t.traj, t.start)).collect();
        assert_eq!(starts, vec![(0, 0), (0, 1), (0, 2), (1, 0)]);
        assert_eq!(w[2].recon, 2..5);
        assert_eq!(w[3].recon, 0..3);
        assert!(windows(&[2], 2).is_err());
    }

    #[test]
    fn test_loss_total_arithmetic() {
        assert!((loss_total(2.0, 3.0, 1.0, 0.01).unwrap() - 2.03).abs() < 1e-15);
        assert_eq!(loss_total(2.0, 3.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(loss_total(2.0, 3.0, 1.5, 0.0).unwrap(), 3.0);
        assert!(loss_total(1.0, 1.0, -1.0, 0.0).is_err());
    }
}
