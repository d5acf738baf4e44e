use fbmstcn_core::dsp::{extract, AudioBuffer, Stft, WindowSpec};
use fbmstcn_core::model::complexity::analyze;
use fbmstcn_core::model::mstcn::BandProbe;
use fbmstcn_core::model::{
    apply_crm, features, synthesize, CrmMask, Model, ModelConfig, STAGE1, STAGE2,
};
use fbmstcn_core::rng;
use fbmstcn_core::tensor::kernels::{conv1d, deconv2d};
use fbmstcn_core::tensor::{Backend, ParamLayout, Runner, Tensor};

fn noise(seed: u64, n: usize) -> AudioBuffer {
    AudioBuffer::full_band(rng::uniform_vec(&mut rng::seeded(seed, 0), n, 0.5))
}

#[test]
fn zero_in_zero_out_at_init() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    for seed in 0..3 {
        let store = model.init_params(seed);
        let y = model
            .forward(&store, &AudioBuffer::full_band(vec![0.0; 4800]))
            .unwrap();
        assert_eq!(y.len(), 4800);
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn output_length_matches_input() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    let store = model.init_params(3);
    for n in [1, 2, 480, 961, 48_000] {
        let y = model.forward(&store, &noise(n as u64, n)).unwrap();
        assert_eq!(y.len(), n);
        assert_eq!(y.sample_rate(), 48_000);
        assert!(y.samples().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn empty_input_is_rejected() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    assert!(model
        .forward(&model.init_params(0), &AudioBuffer::full_band(vec![]))
        .is_err());
}

#[test]
fn identity_mask_is_transparent() {
    let stft = Stft::new(WindowSpec::default()).unwrap();
    for seed in 0..5 {
        let x = noise(seed, 9_600 + 7 * seed as usize);
        let feats = features(&extract(&x).unwrap(), &stft, 0.3).unwrap();
        let id = CrmMask::identity(feats.frames(), 161).planes().unwrap();
        let empty = ParamLayout::new().init(0);
        let mut run = Runner::new(&empty);
        let cri = run.input(feats.cri.clone());
        let m = run.input(id);
        let masked = apply_crm(&mut run, &cri, &m).unwrap();
        let y = synthesize(&masked, 0.3, &stft, x.len()).unwrap();
        let err = y
            .samples()
            .iter()
            .zip(x.samples())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-5, "seed {seed}: {err:e}");
    }
}

#[test]
fn zeroed_stage2_equals_stage1_pipeline() {
    let two = Model::new(ModelConfig::tiny()).unwrap();
    let one = Model::new(ModelConfig::tiny().single_stage()).unwrap();
    for seed in 0..3 {
        let mut store2 = two.init_params(seed);
        assert!(store2.zero_prefix(STAGE2) > 0);
        let mut store1 = one.init_params(seed + 100);
        for e in store2.entries() {
            if e.name.starts_with(STAGE1) {
                store1.set(&e.name, e.tensor.clone()).unwrap();
            }
        }
        let x = noise(seed, 7_200);
        let a = two.forward(&store2, &x).unwrap();
        let b = one.forward(&store1, &x).unwrap();
        assert_eq!(a.samples(), b.samples());
    }
}

#[test]
fn stage2_changes_the_output_when_nonzero() {
    let two = Model::new(ModelConfig::tiny()).unwrap();
    let mut store = two.init_params(4);
    let bias = store
        .entries()
        .iter()
        .find(|e| e.name.starts_with(STAGE2) && e.name.ends_with(".b"))
        .unwrap()
        .name
        .clone();
    let shape = store.by_name(&bias).unwrap().shape().to_vec();
    let x = noise(5, 4_800);
    let before = two.forward(&store, &x).unwrap();
    store.set(&bias, Tensor::full(&shape, 0.3)).unwrap();
    let after = two.forward(&store, &x).unwrap();
    assert_ne!(before.samples(), after.samples());
}

#[test]
fn band_information_flows_upward_only() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    let store = model.init_params(6);
    let stft = Stft::new(WindowSpec::default()).unwrap();
    let feats = features(&extract(&noise(6, 4_800)).unwrap(), &stft, 0.3).unwrap();
    let d = model.config().mstcn.band_dim;
    let run = |probe| {
        let mut r = Runner::new(&store);
        let (m, c) = (r.input(feats.mag.clone()), r.input(feats.cri.clone()));
        model.spectral_probe(&mut r, &m, &c, probe).unwrap()
    };
    let base = run(BandProbe::default());
    // a runner carries conv history, so every pass gets a fresh one
    let mstcn = |probe| {
        let mut r = Runner::new(&store);
        let (f, d) = (r.input(base.fixed.clone()), r.input(base.dynamic.clone()));
        model.mstcn.forward_probe(&mut r, &f, &d, probe).unwrap()
    };
    let full = mstcn(BandProbe::default());
    for b in 0..2 {
        let cut = mstcn(BandProbe {
            sever_after: Some(b),
        });
        for band in 0..3 {
            let same = full.narrow(band * d, d).unwrap() == cut.narrow(band * d, d).unwrap();
            assert_eq!(same, band <= b, "sever after {b}, band {band}");
        }
    }
    // severing reaches the mask
    let cut = run(BandProbe {
        sever_after: Some(0),
    });
    assert_ne!(base.mask, cut.mask);
}

#[test]
fn dilated_taps_match_scalar_formula() {
    let mut r = rng::seeded(9, 0);
    let t = 12;
    let x = Tensor::from_vec(&[1, t], rng::uniform_vec(&mut r, t, 1.0)).unwrap();
    let (w0, w1, bias) = (0.7, -0.4, 0.1);
    // tap j reads x[t - j*d]
    let w = Tensor::from_vec(&[1, 1, 2], vec![w0, w1]).unwrap();
    let y = conv1d::forward(&x, None, &w, &Tensor::scalar(bias), 3).unwrap();
    for i in 0..t {
        let past = if i >= 3 { x.data()[i - 3] } else { 0.0 };
        let want = w0 * x.data()[i] + w1 * past + bias;
        assert!((y.data()[i] - want).abs() < 1e-15);
    }
}

#[test]
fn decoder_widths_invert_encoder() {
    let cfg = ModelConfig::default();
    let f = cfg.encoder_freqs();
    assert_eq!(f, [161, 79, 39, 19, 9]);
    let u = &cfg.u2lstm;
    for l in 0..u.enc_layers {
        let kf = if l == 0 {
            u.first_kernel.1
        } else {
            u.other_kernel.1
        };
        assert_eq!(deconv2d::natural_freq(f[l + 1], kf, u.stride), f[l]);
    }
}

#[test]
fn halving_widths_quarters_conv_modules() {
    let full = analyze(&ModelConfig::default());
    let half = analyze(&ModelConfig::scaled(2));
    let by = |r: &fbmstcn_core::model::ComplexityReport, m: &str| {
        r.modules()
            .iter()
            .find(|c| c.module == m)
            .map(|c| c.params)
            .unwrap() as f64
    };
    for m in ["gtcm", "mstcn"] {
        let ratio = by(&full, m) / by(&half, m);
        assert!((3.5..=4.5).contains(&ratio), "{m}: {ratio}");
    }
}

#[test]
fn recount_matches_layout() {
    for cfg in [
        ModelConfig::default(),
        ModelConfig::tiny(),
        ModelConfig::small().single_stage(),
    ] {
        let model = Model::new(cfg.clone()).unwrap();
        assert_eq!(
            analyze(&cfg).total_params(),
            model.layout().trainable_count()
        );
    }
}

#[test]
fn perturbation_never_reaches_back_past_latency() {
    let model = Model::new(ModelConfig::tiny()).unwrap();
    let store = model.init_params(2);
    let x = noise(11, 9_600);
    let base = model.forward(&store, &x).unwrap();
    let mut r = rng::seeded(12, 0);
    for _ in 0..10 {
        let s = rand::Rng::gen_range(&mut r, 1_500..9_600);
        let mut y = x.clone();
        y.samples_mut()[s] += 0.5;
        let out = model.forward(&store, &y).unwrap();
        let first = base
            .samples()
            .iter()
            .zip(out.samples())
            .position(|(a, b)| a != b);
        if let Some(i) = first {
            assert!(i + 1440 >= s, "s {s} moved sample {i}");
        }
        assert_eq!(base.samples()[..s - 1440], out.samples()[..s - 1440]);
    }
}
