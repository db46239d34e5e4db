//! Reduced model, losses, training, baseline and metrics.

mod checkpoint;
mod cotangent;
mod loss;
mod metrics;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, sidecar_path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use cotangent::CotangentLift;
pub use loss::{
    draw_noise, evaluate_windows, loss_ham_multistep, loss_recon, loss_rom_multistep, loss_total,
    total_loss_and_grad, windows, LossConfig, LossParts, TermSums, TrainData, WindowTask,
};
pub use metrics::{energy_trace, evaluate_mse, hamiltonian_trace, latent_defect, Reconstructor, TraceRecord};
pub use model::{DecodeTrace, EncodeTrace, ModelConfig, RomModel, Space};
pub use train::{train, INIT_STREAM, EpochLoss, LossReport, TrainConfig, TrainError};
