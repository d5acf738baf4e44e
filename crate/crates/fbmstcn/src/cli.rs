//! Command-line interface.

use crate::acceptance;
use crate::checkpoint::Checkpoint;
use crate::config_file::{Preset, RunConfig};
use crate::error::{exit, AppError, Result};
use crate::manifest;
use crate::report::{
    AnalyzeReport, EnhanceReport, EpochRow, Format, GradRow, GradcheckReport, MixReport, Report,
    SdrReport, TrainReport,
};
use crate::rtf;
use crate::wav::{self, SampleFormat};
use clap::{Parser, Subcommand};
use fbmstcn_core::dsp::{decompress, extract, AudioBuffer, Domain, Stft, WindowSpec};
use fbmstcn_core::gradcheck::{self, Target};
use fbmstcn_core::model::complexity::analyze;
use fbmstcn_core::model::{planes_to_spectra, Model};
use fbmstcn_core::tensor::{ParamStore, Tensor};
use fbmstcn_core::train::{sdr, snr_db, snr_mix_parts, Example, ScheduleState, Trainer};
use fbmstcn_core::{rng, FULL_BAND_RATE};
use rand::Rng;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(
    name = "fbmstcn",
    version,
    about = "Full-band two-stage speech enhancement"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Model size when no config or checkpoint is given.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Trained weights; its stored configuration takes precedence.
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub report: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enhance a 48 kHz mono WAV file.
    Enhance {
        input: PathBuf,
        output: PathBuf,
        /// Run the 10 ms block-wise path instead of the offline forward.
        #[arg(long)]
        streaming: bool,
        /// Directory for 16 kHz per-sub-channel debug WAVs.
        #[arg(long)]
        taps: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: SampleFormat,
    },
    /// Parameter and MAC counts per module.
    Analyze,
    /// Finite-difference check of every layer and the loss.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Also check the whole network (slow).
        #[arg(long)]
        model: bool,
    },
    /// Mix clean speech and noise at a given SNR.
    Mix {
        clean: PathBuf,
        noise: PathBuf,
        output: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        snr: f64,
        #[arg(long, value_enum, default_value_t)]
        format: SampleFormat,
    },
    /// Signal-to-distortion ratio of an estimate against a reference.
    Sdr {
        reference: PathBuf,
        estimate: PathBuf,
    },
    /// Run the acceptance criteria.
    Selftest {
        /// Run only these criteria (repeatable).
        #[arg(long)]
        only: Vec<usize>,
    },
    /// Train on a manifest of (clean, noise, snr, seed) records.
    Train {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Write a randomly initialised checkpoint.
    Init {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Where the network and its weights come from.
#[derive(Debug, Clone, Default)]
pub struct ModelSource {
    pub config: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub checkpoint: Option<PathBuf>,
    pub seed: u64,
}

impl ModelSource {
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut rc = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = self.preset {
            rc.preset = p;
            rc.model = None;
        }
        Ok(rc)
    }

    /// Checkpoint weights if given, otherwise seeded random initialisation.
    pub fn load(&self) -> Result<(Model, ParamStore)> {
        if let Some(p) = &self.checkpoint {
            let ck = Checkpoint::load(p)?;
            let model = ck.model()?;
            return Ok((model, ck.store));
        }
        let model = Model::new(self.run_config()?.model_config())?;
        let store = model.init_params(self.seed);
        Ok((model, store))
    }
}

#[derive(Debug, Clone, Default)]
pub struct EnhanceOptions {
    pub input: PathBuf,
    pub output: PathBuf,
    pub streaming: bool,
    pub taps: Option<PathBuf>,
    pub format: SampleFormat,
}

fn audio_err(e: fbmstcn_core::Error) -> AppError {
    AppError::Audio(e.to_string())
}

pub fn enhance(src: &ModelSource, opts: &EnhanceOptions) -> Result<EnhanceReport> {
    let input = wav::read_at(&opts.input, FULL_BAND_RATE)?;
    if input.is_empty() {
        return Err(AppError::Audio(format!(
            "{}: no samples",
            opts.input.display()
        )));
    }
    let (model, store) = src.load()?;
    let t = Instant::now();
    let (output, latency) = if opts.streaming {
        let (out, lat) = rtf::measure(&model, &store, &input)?;
        (out, Some(lat))
    } else {
        (model.forward(&store, &input)?, None)
    };
    let wall = t.elapsed().as_secs_f64();
    let duration_s = input.len() as f64 / FULL_BAND_RATE as f64;
    let hops = input.len().div_ceil(fbmstcn_core::stream::BLOCK_SAMPLES);
    let (per_frame_ms, rtf) = match &latency {
        Some(l) => (l.per_frame_compute_ms, l.rtf),
        None => (wall * 1e3 / hops as f64, wall / duration_s),
    };
    if let Some(dir) = &opts.taps {
        write_taps(&model, &store, &input, dir)?;
    }
    wav::write(&opts.output, &output, opts.format)?;
    Ok(EnhanceReport {
        input: opts.input.display().to_string(),
        output: opts.output.display().to_string(),
        streaming: opts.streaming,
        samples: output.len(),
        duration_s,
        wall_ms: wall * 1e3,
        per_frame_ms,
        rtf,
        sdr_vs_input_db: sdr(&input, &output).map_err(audio_err)?,
        latency,
    })
}

/// Noisy, stage-1 and final signals of every sub-channel as 16 kHz WAVs.
fn write_taps(model: &Model, store: &ParamStore, input: &AudioBuffer, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| AppError::io(format!("creating {}", dir.display()), e))?;
    let det = model.forward_detailed(store, input)?;
    let bank = extract(input)?;
    let stft = Stft::new(WindowSpec::default())?;
    let c = model.config().compression;
    let sub = |planes: &Tensor| -> Result<Vec<AudioBuffer>> {
        let mut out = Vec::new();
        for s in planes_to_spectra(planes, Domain::Compressed(c))? {
            let mut x = stft.synthesize(&decompress(&s, c)?)?;
            x.resize(bank.channel_len(), 0.0);
            out.push(AudioBuffer::sub_band(x));
        }
        Ok(out)
    };
    let sets = [
        ("stage1", sub(&det.stages.masked)?),
        ("enhanced", sub(&det.stages.enhanced)?),
    ];
    for (j, ch) in bank.channels().iter().enumerate() {
        wav::write(
            &dir.join(format!("noisy_{j}.wav")),
            ch,
            SampleFormat::Float32,
        )?;
    }
    for (name, chans) in &sets {
        for (j, ch) in chans.iter().enumerate() {
            wav::write(
                &dir.join(format!("{name}_{j}.wav")),
                ch,
                SampleFormat::Float32,
            )?;
        }
    }
    Ok(())
}

pub fn analyze_config(src: &ModelSource) -> Result<AnalyzeReport> {
    let cfg = match &src.checkpoint {
        Some(p) => Checkpoint::load(p)?.config,
        None => src.run_config()?.model_config(),
    };
    cfg.validate()?;
    let rep = analyze(&cfg);
    Ok(AnalyzeReport {
        total_params: rep.total_params(),
        total_macs_per_second: rep.total_macs_per_second(),
        algorithmic_latency_ms: rep.algorithmic_latency_ms(),
        modules: rep.modules(),
    })
}

pub fn gradcheck_all(seed: u64, seeds: u64, with_model: bool) -> Result<GradcheckReport> {
    let mut targets: Vec<Target> = Target::LAYERS.to_vec();
    targets.push(Target::Loss);
    if with_model {
        targets.push(Target::Model);
    }
    let mut rows = Vec::new();
    for t in targets {
        let mut worst = 0.0f64;
        let mut passed = true;
        for s in seed..seed + seeds {
            let r = gradcheck::check(t, s)?;
            worst = worst.max(r.worst());
            passed &= r.passed();
        }
        rows.push(GradRow {
            target: t.name(),
            seeds: seeds as usize,
            worst_rel_error: worst,
            passed,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(GradcheckReport {
        seed,
        tolerance: gradcheck::TOLERANCE,
        rows,
        passed,
    })
}

fn read_any(path: &Path) -> Result<AudioBuffer> {
    wav::read(path)
}

/// Noise is rotated by a seeded offset before tiling, so different seeds
/// draw different noise segments.
pub fn mix_files(
    clean: &Path,
    noise: &Path,
    output: &Path,
    snr: f64,
    seed: u64,
    format: SampleFormat,
) -> Result<MixReport> {
    let c = read_any(clean)?;
    let n = read_any(noise)?;
    if c.sample_rate() != n.sample_rate() {
        return Err(AppError::Audio(format!(
            "rates differ: {} vs {} Hz",
            c.sample_rate(),
            n.sample_rate()
        )));
    }
    let mut ns = n.into_samples();
    if !ns.is_empty() {
        let k = rng::seeded(seed, 0).gen_range(0..ns.len());
        ns.rotate_left(k);
    }
    let n = AudioBuffer::new(ns, c.sample_rate())?;
    let mix = snr_mix_parts(&c, &n, snr).map_err(audio_err)?;
    wav::write(output, &mix.noisy, format)?;
    Ok(MixReport {
        output: output.display().to_string(),
        requested_snr_db: snr,
        measured_snr_db: snr_db(mix.clean.samples(), mix.noise.samples()),
        peak_gain: mix.peak_gain,
    })
}

pub fn sdr_files(reference: &Path, estimate: &Path) -> Result<SdrReport> {
    let r = read_any(reference)?;
    let e = read_any(estimate)?;
    if r.sample_rate() != e.sample_rate() {
        return Err(AppError::Audio(format!(
            "rates differ: {} vs {} Hz",
            r.sample_rate(),
            e.sample_rate()
        )));
    }
    Ok(SdrReport {
        sdr_db: sdr(&r, &e).map_err(audio_err)?,
    })
}

pub fn train(
    src: &ModelSource,
    manifest_path: &Path,
    out: &Path,
    epochs: Option<usize>,
) -> Result<TrainReport> {
    let rc = src.run_config()?;
    let (model, store) = src.load()?;
    let records = manifest::load(manifest_path)?;
    if records.is_empty() {
        return Err(AppError::Usage(format!(
            "{}: no records",
            manifest_path.display()
        )));
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    let every = rc.train.val_every.max(2);
    for (i, r) in records.iter().enumerate() {
        let clean = wav::read_at(&r.clean, FULL_BAND_RATE)?;
        let noise = wav::read_at(&r.noise, FULL_BAND_RATE)?;
        let mut ns = noise.into_samples();
        if !ns.is_empty() {
            let k = rng::seeded(r.seed, 0).gen_range(0..ns.len());
            ns.rotate_left(k);
        }
        let mix =
            snr_mix_parts(&clean, &AudioBuffer::full_band(ns), r.snr_db).map_err(audio_err)?;
        let ex = Example::new(&model, &mix.noisy, &mix.clean)?;
        if records.len() > 1 && i % every == every - 1 {
            val.push(ex);
        } else {
            train.push(ex);
        }
    }
    if val.is_empty() {
        val = train.clone();
    }
    let mut trainer = Trainer::new(&model, store);
    trainer.loss = rc.train.loss(model.config());
    trainer.schedule = ScheduleState::new(rc.train.schedule);
    let mut rows = Vec::new();
    for epoch in 1..=epochs.unwrap_or(rc.train.epochs) {
        let st = trainer.epoch(&train, &val)?;
        rows.push(EpochRow {
            epoch,
            train_loss: st.train_loss,
            val_loss: st.val_loss,
            phase: trainer.schedule.phase,
            lr_stage1: st.lrs.0,
            lr_stage2: st.lrs.1,
        });
    }
    let s = &trainer.schedule;
    let mut ck = Checkpoint::new(model.config().clone(), trainer.store.clone());
    ck.meta = serde_json::json!({
        "epochs": rows.len(),
        "phase": s.phase,
        "lr_stage1": s.lr_stage1,
        "lr_stage2": s.lr_stage2,
        "best_val": if s.best.is_finite() { Some(s.best) } else { None },
    });
    ck.save(out)?;
    Ok(TrainReport {
        checkpoint: out.display().to_string(),
        examples: train.len(),
        validation: val.len(),
        epochs: rows,
    })
}

/// Rendered report and whether the command's checks passed.
fn dispatch(cli: Cli) -> Result<(String, bool)> {
    let src = ModelSource {
        config: cli.config.clone(),
        preset: cli.preset,
        checkpoint: cli.checkpoint.clone(),
        seed: cli.seed,
    };
    let fmt = cli.report;
    Ok(match cli.command {
        Command::Enhance {
            input,
            output,
            streaming,
            taps,
            format,
        } => {
            let opts = EnhanceOptions {
                input,
                output,
                streaming,
                taps,
                format,
            };
            (enhance(&src, &opts)?.render(fmt), true)
        }
        Command::Analyze => (analyze_config(&src)?.render(fmt), true),
        Command::Gradcheck { seeds, model } => {
            let r = gradcheck_all(cli.seed, seeds, model)?;
            (r.render(fmt), r.passed)
        }
        Command::Mix {
            clean,
            noise,
            output,
            snr,
            format,
        } => (
            mix_files(&clean, &noise, &output, snr, cli.seed, format)?.render(fmt),
            true,
        ),
        Command::Sdr {
            reference,
            estimate,
        } => (sdr_files(&reference, &estimate)?.render(fmt), true),
        Command::Selftest { only } => {
            let ids: Vec<usize> = if only.is_empty() {
                (1..=10).collect()
            } else {
                only
            };
            let dir =
                tempfile::tempdir().map_err(|e| AppError::io("creating a scratch directory", e))?;
            let r = acceptance::run_all(&ids, dir.path());
            (r.render(fmt), r.passed)
        }
        Command::Train {
            manifest,
            out,
            epochs,
        } => (train(&src, &manifest, &out, epochs)?.render(fmt), true),
        Command::Init { out } => {
            let ck = Checkpoint::init(src.run_config()?.model_config(), cli.seed)?;
            ck.save(&out)?;
            (
                format!(
                    "wrote {} ({} parameters)\n",
                    out.display(),
                    ck.store.trainable_count()
                ),
                true,
            )
        }
    })
}

/// Parse `args`, run, write the report to `out`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok((text, ok)) => {
            let _ = out.write_all(text.as_bytes());
            if !text.ends_with('\n') {
                let _ = writeln!(out);
            }
            if ok {
                exit::SUCCESS
            } else {
                exit::SELFTEST_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
