//! Single-utterance training loop on the recording tape.

use super::adam::{Adam, AdamConfig};
use super::loss::{cmse_compressed, LossConfig};
use super::metrics::{snr_mix_parts, Mixture};
use super::schedule::{ScheduleState, Transition};
use crate::dsp::{compress, extract, AudioBuffer, Stft, WindowSpec};
use crate::model::{features, spectra_to_planes, Features, Model, ModelConfig, STAGE1};
use crate::tensor::{Backend, Gradients, NormStat, ParamId, ParamStore, Tape, Tensor};
use crate::{math, rng, Result};
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;

/// Decay of the running instance-norm statistics.
pub const NORM_DECAY: f64 = 0.99;

/// Network inputs and compressed clean target for one utterance.
#[derive(Debug, Clone)]
pub struct Example {
    pub features: Features,
    pub target: Tensor,
}

impl Example {
    pub fn new(model: &Model, noisy: &AudioBuffer, clean: &AudioBuffer) -> Result<Self> {
        let stft = Stft::new(WindowSpec::default())?;
        let c = model.config().compression;
        let feats = features(&extract(noisy)?, &stft, c)?;
        let target = clean_planes(&extract(clean)?, &stft, c)?;
        if target.shape() != feats.cri.shape() {
            return Err(crate::error::shape_err!("clean and noisy lengths differ"));
        }
        Ok(Self {
            features: feats,
            target,
        })
    }
}

fn clean_planes(bank: &crate::dsp::SubChannelBank, stft: &Stft, c: f64) -> Result<Tensor> {
    let specs = bank
        .channels()
        .iter()
        .map(|ch| compress(&stft.analyze(ch.samples())?, c))
        .collect::<Result<Vec<_>>>()?;
    spectra_to_planes(&specs)
}

pub struct Trainer<'m> {
    model: &'m Model,
    pub store: ParamStore,
    pub loss: LossConfig,
    pub schedule: ScheduleState,
    adam: Adam,
    stage1: BTreeSet<ParamId>,
}

impl<'m> Trainer<'m> {
    pub fn new(model: &'m Model, store: ParamStore) -> Self {
        let stage1 = store
            .ids()
            .filter(|&id| store.entry(id).name.starts_with(STAGE1))
            .collect();
        Self {
            model,
            store,
            loss: LossConfig {
                c: model.config().compression,
                ..LossConfig::default()
            },
            schedule: ScheduleState::default(),
            adam: Adam::new(AdamConfig::default()),
            stage1,
        }
    }

    /// Loss, parameter gradients and observed norm statistics.
    pub fn loss_and_grads(&self, ex: &Example) -> Result<(f64, Gradients, Vec<NormStat>)> {
        let mut tape = Tape::new(&self.store);
        let mag = tape.input(ex.features.mag.clone());
        let cri = tape.input(ex.features.cri.clone());
        let out = self.model.spectral(&mut tape, &mag, &cri)?.enhanced;
        let lv = cmse_compressed(tape.get(out), &ex.target, &self.loss)?;
        let stats = tape.norm_stats().to_vec();
        let grads = tape.backward(out, lv.grad)?;
        Ok((lv.loss, grads, stats))
    }

    /// Forward-only loss with the same (per-utterance) normalisation as
    /// training.
    pub fn evaluate(&self, ex: &Example) -> Result<f64> {
        let mut tape = Tape::new(&self.store);
        let mag = tape.input(ex.features.mag.clone());
        let cri = tape.input(ex.features.cri.clone());
        let out = self.model.spectral(&mut tape, &mag, &cri)?.enhanced;
        Ok(cmse_compressed(tape.get(out), &ex.target, &self.loss)?.loss)
    }

    /// One Adam step with rates `(stage 1, stage 2)`; returns the loss
    /// before the update.
    pub fn step(&mut self, ex: &Example, lrs: (f64, f64)) -> Result<f64> {
        let (loss, grads, stats) = self.loss_and_grads(ex)?;
        let stage1 = &self.stage1;
        self.adam.step(&mut self.store, &grads, |id| {
            if stage1.contains(&id) {
                lrs.0
            } else {
                lrs.1
            }
        });
        if lrs.0 > 0.0 || lrs.1 > 0.0 {
            self.update_running_stats(&stats, lrs);
        }
        Ok(loss)
    }

    fn update_running_stats(&mut self, stats: &[NormStat], lrs: (f64, f64)) {
        for s in stats {
            let active = if self.stage1.contains(&s.ids.gamma) {
                lrs.0
            } else {
                lrs.1
            };
            if active == 0.0 {
                continue;
            }
            for (id, batch) in [(s.ids.mean, &s.mean), (s.ids.var, &s.var)] {
                for (r, b) in self
                    .store
                    .get_mut(id)
                    .data_mut()
                    .iter_mut()
                    .zip(batch.iter())
                {
                    *r = NORM_DECAY * *r + (1.0 - NORM_DECAY) * b;
                }
            }
        }
    }

    /// One pass over `train` at the scheduled rates, then a schedule tick
    /// on the mean validation loss.
    pub fn epoch(&mut self, train: &[Example], val: &[Example]) -> Result<EpochStats> {
        let lrs = self.schedule.effective_lrs();
        let mut train_total = 0.0;
        for ex in train {
            train_total += self.step(ex, lrs)?;
        }
        let mut total = 0.0;
        for ex in val {
            total += self.evaluate(ex)?;
        }
        let val_loss = total / val.len().max(1) as f64;
        Ok(EpochStats {
            train_loss: train_total / train.len().max(1) as f64,
            val_loss,
            lrs,
            transition: self.schedule.tick(val_loss),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Mean pre-update loss over the pass.
    pub train_loss: f64,
    pub val_loss: f64,
    /// Rates `(stage 1, stage 2)` used during the pass.
    pub lrs: (f64, f64),
    pub transition: Transition,
}

/// A voiced-speech-like harmonic signal with vibrato and a syllable envelope.
pub fn synthetic_voice(seed: u64, samples: usize) -> Vec<f64> {
    let rate = crate::FULL_BAND_RATE as f64;
    let mut r = rng::seeded(seed, 0);
    let f0 = r.gen_range(110.0..220.0);
    let vibrato = r.gen_range(2.0..5.0);
    let syllable = r.gen_range(3.0..5.0);
    let mut phase = 0.0;
    (0..samples)
        .map(|n| {
            let t = n as f64 / rate;
            phase += 2.0 * PI * f0 * (1.0 + 0.05 * math::sin(2.0 * PI * vibrato * t)) / rate;
            let env = 0.5 * (1.0 - math::cos(2.0 * PI * syllable * t));
            let mut v = 0.0;
            for h in 1..=12 {
                v += math::sin(h as f64 * phase) / h as f64;
            }
            0.2 * env * v
        })
        .collect()
}

/// Mains hum: 50 or 60 Hz with seven harmonics of random level and phase.
pub fn hum(seed: u64, samples: usize) -> Vec<f64> {
    let rate = crate::FULL_BAND_RATE as f64;
    let mut r = rng::seeded(seed, 2);
    let f = if r.gen_bool(0.5) { 50.0 } else { 60.0 };
    let parts: Vec<(f64, f64)> = (1..=7)
        .map(|_| (r.gen_range(0.2..1.0), r.gen_range(0.0..2.0 * PI)))
        .collect();
    (0..samples)
        .map(|n| {
            let t = n as f64 / rate;
            parts
                .iter()
                .enumerate()
                .map(|(h, &(a, p))| {
                    a * math::sin(2.0 * PI * f * (h + 1) as f64 * t + p) / (h + 1) as f64
                })
                .sum()
        })
        .collect()
}

/// [`synthetic_voice`] plus white noise, mixed at `snr_db`.
pub fn synthetic_pair(seed: u64, samples: usize, snr_db: f64) -> Result<Mixture> {
    let clean = synthetic_voice(seed, samples);
    let noise = rng::noise_vec(&mut rng::seeded(seed, 1), samples, 0.1);
    snr_mix_parts(
        &AudioBuffer::full_band(clean),
        &AudioBuffer::full_band(noise),
        snr_db,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverfitReport {
    pub params: usize,
    pub losses: Vec<f64>,
}

impl OverfitReport {
    pub fn initial(&self) -> f64 {
        self.losses.first().copied().unwrap_or(0.0)
    }

    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(0.0)
    }

    /// Fractional reduction from first to last loss.
    pub fn reduction(&self) -> f64 {
        1.0 - self.final_loss() / self.initial()
    }
}

/// Train `cfg` on [`synthetic_voice`] against [`hum`] at 5 dB for `steps`
/// Adam updates and report the loss trajectory (the last entry is measured
/// after the final step).
pub fn overfit_pair(
    cfg: ModelConfig,
    seed: u64,
    seconds: f64,
    steps: usize,
    lr: f64,
) -> Result<OverfitReport> {
    let model = Model::new(cfg)?;
    let samples = (seconds * crate::FULL_BAND_RATE as f64) as usize;
    let clean = AudioBuffer::full_band(synthetic_voice(seed, samples));
    let mix = snr_mix_parts(&clean, &AudioBuffer::full_band(hum(seed, samples)), 5.0)?;
    let ex = Example::new(&model, &mix.noisy, &mix.clean)?;
    let mut trainer = Trainer::new(&model, model.init_params(seed));
    let mut losses = Vec::with_capacity(steps + 1);
    for _ in 0..steps {
        losses.push(trainer.step(&ex, (lr, lr))?);
    }
    losses.push(trainer.evaluate(&ex)?);
    Ok(OverfitReport {
        params: trainer.store.trainable_count(),
        losses,
    })
}
