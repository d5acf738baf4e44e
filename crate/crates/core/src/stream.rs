//! Block-wise real-time execution.
//!
//! Each push carries one 10 ms hop (480 samples at 48 kHz, 160 per
//! sub-channel). One new STFT frame is analysed per hop, the network runs
//! on that single frame against its cached layer histories, and the frame
//! is overlap-added. Completed samples are released with a fixed delay of
//! [`LATENCY_SAMPLES`], so the concatenated output equals the offline
//! [`Model::forward`] result sample for sample.

use crate::dsp::{compress, decompress, ComplexSpectrum, Domain, Stft, WindowSpec};
use crate::model::{spectra_to_planes, Features, Model};
use crate::tensor::{ParamStore, Runner, RunnerCache};
use crate::{Error, Result, NUM_SUBCHANNELS};
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// One hop at 48 kHz.
pub const BLOCK_SAMPLES: usize = 480;
/// 30 ms at 48 kHz: analysis window plus one hop.
pub const LATENCY_SAMPLES: usize = 1440;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Extract,
    Analysis,
    Network,
    Synthesis,
    Interpolate,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Extract,
        Stage::Analysis,
        Stage::Network,
        Stage::Synthesis,
        Stage::Interpolate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::Analysis => "stft",
            Stage::Network => "network",
            Stage::Synthesis => "istft",
            Stage::Interpolate => "interpolate",
        }
    }
}

/// Hook for per-stage wall-clock measurement (the core has no clock).
pub trait StageTimer {
    fn begin(&mut self, _stage: Stage) {}
    fn end(&mut self, _stage: Stage) {}
}

/// Timer that records nothing.
pub struct NoTimer;
impl StageTimer for NoTimer {}

/// Algorithmic and measured latency figures.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LatencyReport {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub algorithmic_ms: f64,
    pub frames: usize,
    pub per_frame_compute_ms: f64,
    pub rtf: f64,
    /// Mean per-frame milliseconds by stage name.
    pub stages: Vec<(&'static str, f64)>,
}

impl LatencyReport {
    pub fn from_measurement(
        frames: usize,
        per_frame_compute_ms: f64,
        stages: Vec<(&'static str, f64)>,
    ) -> Self {
        let spec = WindowSpec::default();
        let rate = crate::SUB_BAND_RATE as f64 / 1000.0;
        let frame_ms = spec.win_len as f64 / rate;
        let hop_ms = spec.hop_len as f64 / rate;
        Self {
            frame_ms,
            hop_ms,
            algorithmic_ms: frame_ms + hop_ms,
            frames,
            per_frame_compute_ms,
            rtf: per_frame_compute_ms / hop_ms,
            stages,
        }
    }
}

pub struct StreamState<'m> {
    model: &'m Model,
    store: &'m ParamStore,
    stft: Stft,
    cache: RunnerCache,
    /// Previous hop of each sub-channel (first half of the next frame).
    prev: [Vec<f64>; NUM_SUBCHANNELS],
    /// Second half of the last synthesised frame, awaiting overlap.
    ola: [Vec<f64>; NUM_SUBCHANNELS],
    ready: VecDeque<f64>,
    total_in: usize,
    total_out: usize,
    frames: usize,
    closed: bool,
}

impl<'m> StreamState<'m> {
    pub fn new(model: &'m Model, store: &'m ParamStore) -> Result<Self> {
        let stft = Stft::new(WindowSpec::default())?;
        let hop = stft.spec().hop_len;
        if hop * NUM_SUBCHANNELS != BLOCK_SAMPLES {
            return Err(Error::InvalidConfig(alloc::format!(
                "hop {hop} does not match block size"
            )));
        }
        Ok(Self {
            model,
            store,
            stft,
            cache: RunnerCache::new(),
            prev: core::array::from_fn(|_| vec![0.0; hop]),
            ola: core::array::from_fn(|_| vec![0.0; hop]),
            ready: VecDeque::new(),
            total_in: 0,
            total_out: 0,
            frames: 0,
            closed: false,
        })
    }

    pub fn total_in(&self) -> usize {
        self.total_in
    }

    pub fn total_out(&self) -> usize {
        self.total_out
    }

    pub fn frames_processed(&self) -> usize {
        self.frames
    }

    /// Samples accepted but not yet emitted.
    pub fn buffered(&self) -> usize {
        self.total_in - self.total_out
    }

    pub fn cache(&self) -> &RunnerCache {
        &self.cache
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn push(&mut self, block: &[f64]) -> Result<Vec<f64>> {
        self.push_timed(block, &mut NoTimer)
    }

    /// Feed one block. A block shorter than [`BLOCK_SAMPLES`] ends the
    /// stream: it is zero-padded, and only [`flush`](Self::flush) may follow.
    pub fn push_timed(&mut self, block: &[f64], timer: &mut dyn StageTimer) -> Result<Vec<f64>> {
        if self.closed {
            return Err(Error::StreamClosed);
        }
        if block.len() > BLOCK_SAMPLES {
            return Err(Error::OversizeBlock(block.len()));
        }
        if block.len() < BLOCK_SAMPLES {
            self.closed = true;
        }
        if block.is_empty() {
            return Ok(Vec::new());
        }
        let mut padded = [0.0; BLOCK_SAMPLES];
        padded[..block.len()].copy_from_slice(block);
        self.process(&padded, timer)?;
        self.total_in += block.len();
        Ok(self.emit(self.total_in.saturating_sub(LATENCY_SAMPLES)))
    }

    /// Zero-pad and drain; afterwards `total_out == total_in`.
    pub fn flush(&mut self) -> Result<Vec<f64>> {
        self.closed = true;
        let zeros = [0.0; BLOCK_SAMPLES];
        while self.total_out + self.ready.len() < self.total_in {
            self.process(&zeros, &mut NoTimer)?;
        }
        Ok(self.emit(self.total_in))
    }

    fn emit(&mut self, upto: usize) -> Vec<f64> {
        let n = upto.saturating_sub(self.total_out).min(self.ready.len());
        self.total_out += n;
        self.ready.drain(..n).collect()
    }

    fn process(&mut self, block: &[f64; BLOCK_SAMPLES], timer: &mut dyn StageTimer) -> Result<()> {
        let hop = self.stft.spec().hop_len;
        let c = self.model.config().compression;

        timer.begin(Stage::Extract);
        let fresh: [Vec<f64>; NUM_SUBCHANNELS] =
            core::array::from_fn(|j| (0..hop).map(|m| block[NUM_SUBCHANNELS * m + j]).collect());
        timer.end(Stage::Extract);

        timer.begin(Stage::Analysis);
        let bins = self.stft.spec().bins();
        let mut specs = Vec::with_capacity(NUM_SUBCHANNELS);
        for (prev, new) in self.prev.iter().zip(&fresh) {
            let mut seg = prev.clone();
            seg.extend_from_slice(new);
            let frame = self.stft.analyze_frame(&seg);
            let (re, im) = frame.iter().map(|z| (z.re, z.im)).unzip();
            specs.push(compress(
                &ComplexSpectrum::from_parts(1, bins, re, im, Domain::Linear)?,
                c,
            )?);
        }
        let feats = Features::from_planes(spectra_to_planes(&specs)?)?;
        self.prev = fresh;
        timer.end(Stage::Analysis);

        timer.begin(Stage::Network);
        let mut run = Runner::with_cache(self.store, core::mem::take(&mut self.cache));
        let out = self.model.spectral(&mut run, &feats.mag, &feats.cri);
        self.cache = run.into_cache();
        let planes = out?.enhanced;
        timer.end(Stage::Network);

        timer.begin(Stage::Synthesis);
        let specs = crate::model::planes_to_spectra(&planes, Domain::Compressed(c))?;
        let norm = self.stft.wola_norm();
        let mut done: [Vec<f64>; NUM_SUBCHANNELS] = core::array::from_fn(|_| Vec::new());
        for (j, s) in specs.iter().enumerate() {
            let lin = decompress(s, c)?;
            let bins: Vec<_> = (0..lin.bins()).map(|k| lin.get(0, k)).collect();
            let frame = self.stft.synthesize_frame(&bins);
            done[j] = (0..hop)
                .map(|i| (self.ola[j][i] + frame[i]) / norm[i].max(crate::dsp::WOLA_FLOOR))
                .collect();
            self.ola[j] = frame[hop..].to_vec();
        }
        timer.end(Stage::Synthesis);

        timer.begin(Stage::Interpolate);
        // The first frame only completes the left padding.
        if self.frames > 0 {
            for m in 0..hop {
                for ch in &done {
                    self.ready.push_back(ch[m]);
                }
            }
        }
        self.frames += 1;
        timer.end(Stage::Interpolate);
        Ok(())
    }
}
