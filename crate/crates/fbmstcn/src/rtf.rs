//! Wall-clock timing of the streaming path.

use fbmstcn_core::dsp::AudioBuffer;
use fbmstcn_core::model::Model;
use fbmstcn_core::stream::{LatencyReport, Stage, StageTimer, StreamState, BLOCK_SAMPLES};
use fbmstcn_core::tensor::ParamStore;
use std::time::{Duration, Instant};

/// Frames excluded from averages (allocation and cache warm-up).
pub const WARMUP_FRAMES: usize = 10;

#[derive(Debug, Default)]
pub struct WallTimer {
    open: [Option<Instant>; 5],
    totals: [Duration; 5],
    pub recording: bool,
}

fn slot(s: Stage) -> usize {
    Stage::ALL.iter().position(|&x| x == s).unwrap_or(0)
}

impl StageTimer for WallTimer {
    fn begin(&mut self, stage: Stage) {
        self.open[slot(stage)] = Some(Instant::now());
    }

    fn end(&mut self, stage: Stage) {
        if let Some(t) = self.open[slot(stage)].take() {
            if self.recording {
                self.totals[slot(stage)] += t.elapsed();
            }
        }
    }
}

/// Stream `audio` through the model block by block, timing every push.
/// Returns the full-length output and the latency figures.
pub fn measure(
    model: &Model,
    store: &ParamStore,
    audio: &AudioBuffer,
) -> fbmstcn_core::Result<(AudioBuffer, LatencyReport)> {
    let mut state = StreamState::new(model, store)?;
    let mut timer = WallTimer::default();
    let mut out = Vec::with_capacity(audio.len());
    let mut compute = Duration::ZERO;
    let mut timed = 0;
    // very short inputs are timed from the first frame
    let skip = if audio.len().div_ceil(BLOCK_SAMPLES) > WARMUP_FRAMES {
        WARMUP_FRAMES
    } else {
        0
    };
    for (k, block) in audio.samples().chunks(BLOCK_SAMPLES).enumerate() {
        timer.recording = k >= skip;
        let t = Instant::now();
        out.extend(state.push_timed(block, &mut timer)?);
        if timer.recording {
            compute += t.elapsed();
            timed += 1;
        }
    }
    out.extend(state.flush()?);
    let ms = |d: Duration| {
        if timed == 0 {
            0.0
        } else {
            d.as_secs_f64() * 1e3 / timed as f64
        }
    };
    let stages = Stage::ALL
        .iter()
        .map(|&s| (s.name(), ms(timer.totals[slot(s)])))
        .collect();
    let report = LatencyReport::from_measurement(timed, ms(compute), stages);
    Ok((AudioBuffer::full_band(out), report))
}
