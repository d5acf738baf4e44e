use fbmstcn_core::dsp::AudioBuffer;
use fbmstcn_core::model::{Model, ModelConfig};
use fbmstcn_core::rng;
use fbmstcn_core::stream::{Stage, StageTimer, StreamState, BLOCK_SAMPLES, LATENCY_SAMPLES};
use fbmstcn_core::Error;

fn stream_all(model: &Model, store: &fbmstcn_core::tensor::ParamStore, x: &[f64]) -> Vec<f64> {
    let mut s = StreamState::new(model, store).unwrap();
    let mut out = Vec::new();
    for block in x.chunks(BLOCK_SAMPLES) {
        out.extend(s.push(block).unwrap());
    }
    out.extend(s.flush().unwrap());
    out
}

#[test]
fn matches_offline_forward() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    for seed in 0..3 {
        let store = model.init_params(seed);
        let n = 14_400 + 97 * seed as usize;
        let x = rng::uniform_vec(&mut rng::seeded(seed, 9), n, 0.5);
        let offline = model
            .forward(&store, &AudioBuffer::full_band(x.clone()))
            .unwrap();
        let streamed = stream_all(&model, &store, &x);
        assert_eq!(streamed.len(), n);
        let err = streamed
            .iter()
            .zip(offline.samples())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-5, "seed {seed}: {err:e}");
    }
}

#[test]
fn emission_lags_input_by_latency() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    let store = model.init_params(0);
    let mut s = StreamState::new(&model, &store).unwrap();
    let block = vec![0.1; BLOCK_SAMPLES];
    for i in 1..=10 {
        let out = s.push(&block).unwrap();
        let expect = if i * BLOCK_SAMPLES > LATENCY_SAMPLES {
            BLOCK_SAMPLES
        } else {
            0
        };
        assert_eq!(out.len(), expect, "push {i}");
        assert_eq!(
            s.total_in() - s.total_out(),
            LATENCY_SAMPLES.min(s.total_in())
        );
    }
    assert_eq!(s.flush().unwrap().len(), LATENCY_SAMPLES);
    assert_eq!(s.total_in(), s.total_out());
}

#[test]
fn impulse_appears_within_latency() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    let store = model.init_params(1);
    let at = 5_000;
    let mut x = vec![0.0; 9_600];
    x[at] = 1.0;
    let mut s = StreamState::new(&model, &store).unwrap();
    let mut first = None;
    let mut emitted = 0;
    for (k, block) in x.chunks(BLOCK_SAMPLES).enumerate() {
        let out = s.push(block).unwrap();
        if first.is_none() && out.iter().any(|&v| v != 0.0) {
            first = Some((k + 1) * BLOCK_SAMPLES);
        }
        emitted += out.len();
    }
    let arrived = first.expect("impulse never emitted");
    // the response is on the wire no later than 1440 samples after the input
    assert!(arrived - (at + 1) < LATENCY_SAMPLES + BLOCK_SAMPLES);
    assert!(emitted + LATENCY_SAMPLES == x.len());
}

#[test]
fn zero_stream_stays_zero() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    let store = model.init_params(2);
    let out = stream_all(&model, &store, &vec![0.0; 4_800]);
    assert_eq!(out.len(), 4_800);
    assert!(out.iter().all(|&v| v == 0.0));
}

#[test]
fn flush_lengths() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    let store = model.init_params(3);
    for n in [0, 1, 479, 480, 481, 1439, 1440, 1441, 5000] {
        let x = vec![0.01; n];
        assert_eq!(stream_all(&model, &store, &x).len(), n, "n {n}");
    }
}

#[test]
fn cache_holds_one_entry_per_stateful_layer() {
    for cfg in [ModelConfig::tiny(), ModelConfig::tiny().single_stage()] {
        let model = Model::new(cfg).unwrap();
        let store = model.init_params(4);
        let mut s = StreamState::new(&model, &store).unwrap();
        s.push(&vec![0.2; BLOCK_SAMPLES]).unwrap();
        let layers = model.temporal_layers();
        assert_eq!(
            s.cache().len(),
            layers.len() + model.recurrent_layers().len()
        );
        for (w, frames) in layers {
            assert_eq!(s.cache().history(w).unwrap().frames(), frames);
        }
        for w in model.recurrent_layers() {
            assert!(s.cache().lstm_state(w).is_some());
        }
    }
}

#[test]
fn block_errors() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    let store = model.init_params(0);
    let mut s = StreamState::new(&model, &store).unwrap();
    assert!(matches!(
        s.push(&vec![0.0; BLOCK_SAMPLES + 1]),
        Err(Error::OversizeBlock(481))
    ));
    s.push(&[0.0; 100]).unwrap();
    assert!(s.is_closed());
    assert!(matches!(s.push(&[0.0; 10]), Err(Error::StreamClosed)));
    assert_eq!(s.flush().unwrap().len(), 100);
}

#[derive(Default)]
struct Counts([usize; 5]);
impl StageTimer for Counts {
    fn begin(&mut self, _: Stage) {}
    fn end(&mut self, s: Stage) {
        self.0[Stage::ALL.iter().position(|&x| x == s).unwrap()] += 1;
    }
}

#[test]
fn every_stage_is_timed_once_per_frame() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    let store = model.init_params(0);
    let mut s = StreamState::new(&model, &store).unwrap();
    let mut t = Counts::default();
    for _ in 0..4 {
        s.push_timed(&vec![0.0; BLOCK_SAMPLES], &mut t).unwrap();
    }
    assert_eq!(t.0, [4; 5]);
    assert_eq!(s.frames_processed(), 4);
}
