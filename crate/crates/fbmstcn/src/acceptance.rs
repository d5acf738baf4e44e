//! The ten acceptance criteria as runnable checks.
//!
//! Every check is deterministic. Each returns a [`Criterion`] row with the
//! measured figure in `detail`; `selftest` and the `acceptance` test target
//! both run them.

use crate::cli::{self, EnhanceOptions, ModelSource};
use crate::config_file::Preset;
use crate::report::{Criterion, SelftestReport};
use crate::wav;
use fbmstcn_core::dsp::{
    compress, decompress, extract, interpolate, AudioBuffer, ComplexSpectrum, Domain, Stft,
    WindowSpec,
};
use fbmstcn_core::gradcheck::{self, Target};
use fbmstcn_core::model::complexity::analyze;
use fbmstcn_core::model::{Model, ModelConfig, STAGE1, STAGE2};
use fbmstcn_core::rng;
use fbmstcn_core::stream::{StreamState, BLOCK_SAMPLES, LATENCY_SAMPLES};
use fbmstcn_core::train::{
    overfit_pair, synthetic_pair, Phase, ScheduleConfig, ScheduleState, Transition,
};
use rand::Rng;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

pub const NAMES: [&str; 10] = [
    "polyphase identity",
    "stft/istft",
    "compression",
    "gradient suite",
    "causality",
    "streaming equivalence",
    "complexity accounting",
    "toy training",
    "stage separability",
    "end-to-end smoke",
];

type Check = std::result::Result<(bool, String), String>;

fn timed(id: usize, f: impl FnOnce() -> Check) -> Criterion {
    let t = Instant::now();
    let (passed, detail) = match f() {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Criterion {
        id,
        name: NAMES[id - 1],
        passed,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

fn e(x: impl std::fmt::Display) -> String {
    x.to_string()
}

/// 1000 random signals, lengths 1..=10000, bit-exact round trip in < 5 s.
pub fn polyphase_identity() -> Check {
    let t = Instant::now();
    let mut r = rng::seeded(1, 0);
    let mut bad = 0;
    for _ in 0..1000 {
        let n = r.gen_range(1..=10_000);
        let x = AudioBuffer::full_band(rng::uniform_vec(&mut r, n, 1.0));
        let y = interpolate(&extract(&x).map_err(e)?).map_err(e)?;
        bad += usize::from(y.samples() != x.samples());
    }
    let s = t.elapsed().as_secs_f64();
    Ok((bad == 0 && s < 5.0, format!("{bad} mismatches, {s:.2} s")))
}

/// Independent framing and DFT: frame `f` covers `[160f - 160, 160f + 160)`
/// under a periodic Hamming window.
fn naive_frame(x: &[f64], f: usize, bin: usize) -> (f64, f64) {
    let (n, hop) = (320usize, 160usize);
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..n {
        let pos = (f * hop + i) as isize - hop as isize;
        let v = if pos >= 0 && (pos as usize) < x.len() {
            x[pos as usize]
        } else {
            0.0
        };
        let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / n as f64).cos();
        let a = -2.0 * PI * (bin * i) as f64 / n as f64;
        re += w * v * a.cos();
        im += w * v * a.sin();
    }
    (re, im)
}

/// 100 random 16 kHz signals: reconstruction <= 1e-6 relative, analysis
/// against a naive DFT <= 1e-9 relative, in < 30 s.
pub fn stft_istft() -> Check {
    let t = Instant::now();
    let stft = Stft::new(WindowSpec::default()).map_err(e)?;
    let mut r = rng::seeded(2, 0);
    let (mut worst_rec, mut worst_dft) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = r.gen_range(400..16_000);
        let x = rng::uniform_vec(&mut r, n, 1.0);
        let s = stft.analyze(&x).map_err(e)?;
        let y = stft.synthesize(&s).map_err(e)?;
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = x
            .iter()
            .zip(&y)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst_rec = worst_rec.max(err / peak);
        let mut scale = 0.0f64;
        let mut diff = 0.0f64;
        for _ in 0..4 {
            let f = r.gen_range(0..s.frames());
            for k in [0, 1, r.gen_range(2..160), 160] {
                let (re, im) = naive_frame(&x, f, k);
                let z = s.get(f, k);
                scale = scale.max(re.hypot(im));
                diff = diff.max((z.re - re).hypot(z.im - im));
            }
        }
        worst_dft = worst_dft.max(diff / scale.max(1e-12));
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((
        worst_rec <= 1e-6 && worst_dft <= 1e-9 && secs < 30.0,
        format!("reconstruction {worst_rec:.2e}, dft {worst_dft:.2e}"),
    ))
}

/// Phase kept (to rounding), round trip <= 1e-6 relative, zero bins stay zero.
pub fn compression() -> Check {
    let mut r = rng::seeded(3, 0);
    let (mut phase, mut round, mut zeros_ok) = (0.0f64, 0.0f64, true);
    for _ in 0..200 {
        let n = 161;
        let mut re = rng::uniform_vec(&mut r, n, 10.0);
        let mut im = rng::uniform_vec(&mut r, n, 10.0);
        for _ in 0..5 {
            let k = r.gen_range(0..n);
            re[k] = 0.0;
            im[k] = 0.0;
        }
        let s = ComplexSpectrum::from_parts(1, n, re, im, Domain::Linear).map_err(e)?;
        let c = r.gen_range(0.1..1.0);
        let k = compress(&s, c).map_err(e)?;
        let b = decompress(&k, c).map_err(e)?;
        for i in 0..n {
            let (a, z, y) = (s.get(0, i), k.get(0, i), b.get(0, i));
            let mag = a.re.hypot(a.im);
            if mag == 0.0 {
                zeros_ok &= z.re == 0.0 && z.im == 0.0 && y.re == 0.0 && y.im == 0.0;
                continue;
            }
            let dp = (z.im.atan2(z.re) - a.im.atan2(a.re)).abs();
            phase = phase.max(dp.min(2.0 * PI - dp));
            round = round.max((y.re - a.re).hypot(y.im - a.im) / mag);
        }
    }
    Ok((
        phase <= 1e-12 && round <= 1e-6 && zeros_ok,
        format!(
            "phase {phase:.1e} rad, round trip {round:.2e}, zero bins {}",
            if zeros_ok { "ok" } else { "BAD" }
        ),
    ))
}

/// Every layer and the loss over 20 seeds; plus the whole model on three.
pub fn gradient_suite() -> Check {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    let targets = Target::LAYERS
        .iter()
        .chain(&[Target::Loss])
        .map(|&t| (t, 20))
        .chain([(Target::Model, 3)]);
    for (target, seeds) in targets {
        for seed in 0..seeds {
            let res = gradcheck::check(target, seed).map_err(e)?;
            worst = worst.max(res.worst());
            if !res.passed() {
                failed.push(format!("{}#{seed}", target.name()));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Ok((
        failed.is_empty() && secs < 300.0,
        format!("worst {worst:.2e}, failures [{}]", failed.join(", ")),
    ))
}

/// 50 perturbations of a 1 s signal on the full two-stage graph.
pub fn causality() -> Check {
    let model = Model::new(ModelConfig::tiny()).map_err(e)?;
    let store = model.init_params(5);
    let mut r = rng::seeded(5, 1);
    let n = 48_000;
    let x = AudioBuffer::full_band(rng::uniform_vec(&mut r, n, 0.5));
    let base = model.forward(&store, &x).map_err(e)?;
    let (mut violations, mut reach) = (0, 0usize);
    for _ in 0..50 {
        let s = r.gen_range(LATENCY_SAMPLES..n);
        let mut y = x.clone();
        y.samples_mut()[s] += r.gen_range(0.1..1.0);
        let out = model.forward(&store, &y).map_err(e)?;
        if let Some(first) = base
            .samples()
            .iter()
            .zip(out.samples())
            .position(|(a, b)| a != b)
        {
            if first + LATENCY_SAMPLES < s {
                violations += 1;
            }
            reach = reach.max(s.saturating_sub(first));
        }
    }
    Ok((
        violations == 0,
        format!("{violations} violations, earliest change {reach} samples before the perturbation"),
    ))
}

/// Ten 3 s signals, block-wise vs offline, lag checked after every push.
pub fn streaming_equivalence(cfg: ModelConfig) -> Check {
    let model = Model::new(cfg).map_err(e)?;
    let mut worst = 0.0f64;
    let mut lag_ok = true;
    for seed in 0..10 {
        let store = model.init_params(seed);
        let x = rng::uniform_vec(&mut rng::seeded(seed, 6), 3 * 48_000, 0.5);
        let offline = model
            .forward(&store, &AudioBuffer::full_band(x.clone()))
            .map_err(e)?;
        let mut st = StreamState::new(&model, &store).map_err(e)?;
        let mut out = Vec::with_capacity(x.len());
        for block in x.chunks(BLOCK_SAMPLES) {
            out.extend(st.push(block).map_err(e)?);
            lag_ok &= out.len() == st.total_in().saturating_sub(LATENCY_SAMPLES);
        }
        out.extend(st.flush().map_err(e)?);
        if out.len() != x.len() {
            return Ok((
                false,
                format!("stream length {} for {} input samples", out.len(), x.len()),
            ));
        }
        worst = worst.max(
            out.iter()
                .zip(offline.samples())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
        );
    }
    Ok((
        worst <= 1e-5 && lag_ok,
        format!(
            "max |diff| {worst:.2e}, lag {LATENCY_SAMPLES} {}",
            if lag_ok { "exact" } else { "WRONG" }
        ),
    ))
}

pub fn complexity() -> Check {
    let rep = analyze(&ModelConfig::default());
    let p = rep.total_params() as f64 / 1e6;
    let g = rep.total_macs_per_second() as f64 / 1e9;
    let lat = rep.algorithmic_latency_ms();
    Ok((
        (25.4..=34.4).contains(&p) && (10.6..=14.4).contains(&g) && lat == 30.0,
        format!("{p:.2} M params, {g:.2} G MAC/s, {lat} ms"),
    ))
}

/// The scheduler on a scripted validation trace; returns the first mismatch.
pub fn schedule_script() -> std::result::Result<(), String> {
    let mut s = ScheduleState::new(ScheduleConfig::default());
    let mut step = |v: f64,
                    want: Transition,
                    phase: Phase,
                    lrs: (f64, f64)|
     -> std::result::Result<(), String> {
        let got = s.tick(v);
        if got != want || s.phase != phase || s.effective_lrs() != lrs {
            return Err(format!(
                "epoch {}: {got:?} {:?} {:?}",
                s.epoch,
                s.phase,
                s.effective_lrs()
            ));
        }
        Ok(())
    };
    use Phase::*;
    use Transition::{Entered, Halved, None as Keep};
    // improving epochs keep everything
    step(1.0, Keep, Stage1Only, (0.001, 0.0))?;
    step(0.9, Keep, Stage1Only, (0.001, 0.0))?;
    // three stale epochs halve to 0.0005, which freezes stage 1
    step(0.95, Keep, Stage1Only, (0.001, 0.0))?;
    step(0.91, Keep, Stage1Only, (0.001, 0.0))?;
    step(0.9, Entered(Stage2Frozen1), Stage2Frozen1, (0.0, 0.001))?;
    // stage 2 at 0.001: improve, stall twice, improve, stall three times
    step(0.8, Keep, Stage2Frozen1, (0.0, 0.001))?;
    step(0.85, Keep, Stage2Frozen1, (0.0, 0.001))?;
    step(0.82, Keep, Stage2Frozen1, (0.0, 0.001))?;
    step(0.7, Keep, Stage2Frozen1, (0.0, 0.001))?;
    step(0.7, Keep, Stage2Frozen1, (0.0, 0.001))?;
    step(0.71, Keep, Stage2Frozen1, (0.0, 0.001))?;
    step(0.75, Entered(Joint), Joint, (0.0005, 0.0005))?;
    // joint keeps halving on plateaus
    step(0.6, Keep, Joint, (0.0005, 0.0005))?;
    step(0.6, Keep, Joint, (0.0005, 0.0005))?;
    step(0.6, Keep, Joint, (0.0005, 0.0005))?;
    step(0.6, Halved, Joint, (0.00025, 0.00025))?;
    Ok(())
}

pub fn toy_training() -> Check {
    let rep = overfit_pair(ModelConfig::tiny().single_stage(), 0, 2.0, 300, 0.01).map_err(e)?;
    let sched = schedule_script();
    let ok = rep.params <= 50_000 && rep.reduction() >= 0.9 && sched.is_ok();
    Ok((
        ok,
        format!(
            "{} params, cMSE {:.3e} -> {:.3e} ({:.1}% in 300 steps), schedule {}",
            rep.params,
            rep.initial(),
            rep.final_loss(),
            100.0 * rep.reduction(),
            sched.err().unwrap_or_else(|| "ok".into())
        ),
    ))
}

pub fn stage_separability() -> Check {
    let mut all = true;
    for (cfg, seed) in [
        (ModelConfig::tiny(), 0),
        (ModelConfig::tiny(), 1),
        (ModelConfig::small(), 2),
    ] {
        let two = Model::new(cfg.clone()).map_err(e)?;
        let one = Model::new(cfg.single_stage()).map_err(e)?;
        let mut s2 = two.init_params(seed);
        s2.zero_prefix(STAGE2);
        let mut s1 = one.init_params(seed + 1000);
        for en in s2.entries() {
            if en.name.starts_with(STAGE1) {
                s1.set(&en.name, en.tensor.clone()).map_err(e)?;
            }
        }
        let x = synthetic_pair(seed, 24_000, 5.0).map_err(e)?.noisy;
        all &= two.forward(&s2, &x).map_err(e)?.samples()
            == one.forward(&s1, &x).map_err(e)?.samples();
    }
    Ok((
        all,
        (if all { "bit-exact" } else { "outputs differ" }).into(),
    ))
}

/// `enhance` on a 10 s file with random tiny weights, offline and streaming.
pub fn end_to_end(work: &Path) -> Check {
    let input = work.join("smoke_in.wav");
    let mix = synthetic_pair(10, 10 * 48_000, 5.0).map_err(e)?;
    wav::write(&input, &mix.noisy, wav::SampleFormat::Float32).map_err(e)?;
    let src = ModelSource {
        preset: Some(Preset::Tiny),
        seed: 10,
        ..ModelSource::default()
    };
    let mut notes = Vec::new();
    let mut ok = true;
    for streaming in [false, true] {
        let output = work.join(format!("smoke_out_{streaming}.wav"));
        let opts = EnhanceOptions {
            input: input.clone(),
            output: output.clone(),
            streaming,
            ..EnhanceOptions::default()
        };
        let rep = cli::enhance(&src, &opts).map_err(e)?;
        let out = wav::read(&output).map_err(e)?;
        let sdr = rep.sdr_vs_input_db;
        ok &= out.len() == mix.noisy.len() && sdr.is_finite() && sdr != 0.0 && rep.rtf < 1.0;
        notes.push(format!(
            "{}: {} samples, SDR {sdr:.2} dB, RTF {:.3}",
            if streaming { "stream" } else { "offline" },
            out.len(),
            rep.rtf
        ));
    }
    Ok((ok, notes.join("; ")))
}

pub fn run(id: usize, work: &Path) -> Criterion {
    timed(id, || match id {
        1 => polyphase_identity(),
        2 => stft_istft(),
        3 => compression(),
        4 => gradient_suite(),
        5 => causality(),
        6 => streaming_equivalence(ModelConfig::small()),
        7 => complexity(),
        8 => toy_training(),
        9 => stage_separability(),
        10 => end_to_end(work),
        _ => Err(format!("no criterion {id}")),
    })
}

pub fn run_all(ids: &[usize], work: &Path) -> SelftestReport {
    let criteria: Vec<Criterion> = ids.iter().map(|&id| run(id, work)).collect();
    let passed = criteria.iter().all(|c| c.passed);
    SelftestReport { criteria, passed }
}
