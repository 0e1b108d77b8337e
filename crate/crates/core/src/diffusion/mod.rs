//! Footprint-masked conditional denoising diffusion: schedule, forward
//! kernel, reverse sampler, loss and denoisers.

pub mod checkpoint;
pub mod denoiser;
pub mod loss;
pub mod nn;
pub mod process;
pub mod restore;
pub mod schedule;
pub mod train;
pub mod unet;

pub use denoiser::{oracle_denoiser, AffineDenoiser, Denoiser, DenoiserInput, OracleDenoiser, Trainable, ZeroDenoiser};
pub use loss::{masked_l1_loss, masked_l1_loss_grad};
pub use process::{
    apply_footprint, forward, forward_at, reverse_step, reverse_update, sample, sample_observed,
    standard_normal, SampleOptions, SampleOutput, Snapshot, EXTERIOR,
};
pub use schedule::{make_schedule, BetaShape, DiffusionSchedule, ReverseCoeffs, ScheduleConfig};
pub use unet::{reference_denoiser, OutputHead, UNet, UNetConfig, INPUT_CHANNELS};
pub use train::{example_gradient, train, Optimizer, OptimizerConfig, TrainConfig, TrainReport, TrainingExample};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use restore::{restore_with_diffusion, Restoration, RestoreOptions};
