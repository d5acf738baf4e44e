//! Loss, data synthesis, optimiser, learning-rate schedule and a toy
//! training loop.

mod adam;
mod loss;
mod metrics;
mod schedule;
mod trainer;

pub use adam::{Adam, AdamConfig};
pub use loss::{cmse_compressed, cmse_loss, LinearLoss, LossConfig, LossValue};
pub use metrics::{sdr, snr_db, snr_mix, snr_mix_parts, Mixture, SDR_CAP_DB};
pub use schedule::{Phase, ScheduleConfig, ScheduleState, Transition};
pub use trainer::{
    hum, overfit_pair, synthetic_pair, synthetic_voice, EpochStats, Example, OverfitReport, Trainer,
};
