//! Mini-batch Adam training of the full model on all loss terms at once.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::loss::{draw_noise, evaluate_windows, windows, LossConfig, LossParts, TermSums, TrainData};
use super::model::RomModel;
use crate::error::{Error, Result};
use crate::numcore::{all_finite, AdamConfig, AdamState, RngStream};
use crate::symplectic::Parameterized;
use crate::systems::HamiltonianSystem;

/// RNG stream used for model initialization from the training seed.
pub const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Unroll length `M`.
    pub unroll: usize,
    pub noise_sigma: f64,
    pub epochs: usize,
    /// Windows per mini-batch.
    pub batch_size: usize,
    pub lr: f64,
    pub decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let loss = LossConfig::default();
        let adam = AdamConfig::default();
        Self {
            lambda1: loss.lambda1,
            lambda2: loss.lambda2,
            unroll: loss.unroll,
            noise_sigma: loss.noise_sigma,
            epochs: 100,
            batch_size: 32,
            lr: adam.lr,
            decay: adam.decay,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn loss(&self) -> LossConfig {
        LossConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            unroll: self.unroll,
            noise_sigma: self.noise_sigma,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            decay: self.decay,
            ..AdamConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.loss().validate()?;
        self.adam().validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Loss parts averaged over one epoch plus its wall-clock time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub parts: LossParts,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub epochs: Vec<EpochLoss>,
}

impl LossReport {
    pub const CSV_HEADER: &'static str = "epoch,L_r,L_f,L_rom,L_ham,L_total,seconds";

    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }

    /// CSV text; with `timing == false` the seconds column is written as 0 so
    /// that runs with equal seeds give identical files.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.epochs {
            let p = &e.parts;
            let secs = if timing { e.seconds } else { 0.0 };
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.6}",
                e.epoch, p.l_r, p.l_f, p.l_rom, p.l_ham, p.l_total, secs
            )
            .expect("write to String");
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("training diverged in epoch {epoch}: non-finite loss or gradient")]
    Diverged {
        epoch: usize,
        last_good: Box<RomModel>,
        report: LossReport,
    },
}

/// Trains `model` on `data`; `observer` sees every finished epoch.
///
/// Windows are reshuffled each epoch from the seed and noise is drawn batch
/// by batch from a separate stream, so a fixed seed and thread count give
/// bitwise identical results. Changing the thread count only changes which
/// thread evaluates a window, not the reduction order.
pub fn train<H: HamiltonianSystem>(
    mut model: RomModel,
    data: &TrainData<'_, H>,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochLoss),
) -> std::result::Result<(RomModel, LossReport), TrainError> {
    cfg.validate()?;
    if data.state_dim() != 2 * model.n() {
        return Err(Error::DimensionMismatch {
            context: "train data".into(),
            expected: 2 * model.n(),
            got: data.state_dim(),
        }
        .into());
    }
    let loss_cfg = cfg.loss();
    let tasks = windows(&data.lengths(), cfg.unroll)?;
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    let mut shuffle_rng = RngStream::with_stream(cfg.seed, SHUFFLE_STREAM);
    let mut noise_rng = RngStream::with_stream(cfg.seed, NOISE_STREAM);
    let mut adam = AdamState::new(model.param_count(), cfg.adam());
    let mut params = model.params();
    let mut report = LossReport::default();
    let dim = data.state_dim();

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        shuffle_rng.shuffle(&mut order);
        let mut sums = TermSums::default();
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&i| tasks[i].clone()).collect();
            let noise: Vec<Vec<f64>> = batch
                .iter()
                .map(|_| draw_noise(&mut noise_rng, cfg.noise_sigma, dim))
                .collect();
            let diverged = |model: &RomModel, report: &LossReport| TrainError::Diverged {
                epoch,
                last_good: Box::new(model.clone()),
                report: report.clone(),
            };
            let (s, grad) = match evaluate_windows(&model, data, &batch, &noise, &loss_cfg, true) {
                Ok(r) => r,
                Err(Error::NonFinite(_)) => return Err(diverged(&model, &report)),
                Err(e) => return Err(e.into()),
            };
            let grad = grad.expect("gradient requested");
            let total = s.parts(cfg.lambda1, cfg.lambda2).l_total;
            if !total.is_finite() || !all_finite(&grad) {
                return Err(diverged(&model, &report));
            }
            sums.add(&s);
            adam.step(&mut params, &grad)?;
            if !all_finite(&params) {
                return Err(diverged(&model, &report));
            }
            model.set_params(&params)?;
        }
        adam.end_epoch();
        let record = EpochLoss {
            epoch,
            parts: sums.parts(cfg.lambda1, cfg.lambda2),
            seconds: start.elapsed().as_secs_f64(),
        };
        observer(&record);
        report.epochs.push(record);
    }
    Ok((model, report))
}
