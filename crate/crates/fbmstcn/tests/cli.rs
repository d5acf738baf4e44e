use fbmstcn_core::dsp::AudioBuffer;
use fbmstcn_core::train::synthetic_pair;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbmstcn"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(path: &Path, a: &AudioBuffer) {
    fbmstcn::wav::write(path, a, fbmstcn::wav::SampleFormat::Float32).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_default_json() {
    let o = bin(&["analyze", "--report", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["algorithmic_latency_ms"], 30.0);
    let p = v["total_params"].as_u64().unwrap() as f64;
    assert!((25.4e6..=34.4e6).contains(&p));
    assert_eq!(v["modules"].as_array().unwrap().len(), 5);
}

#[test]
fn zero_wav_gives_zero_wav() {
    let d = tempfile::tempdir().unwrap();
    let (i, o) = (d.path().join("z.wav"), d.path().join("o.wav"));
    write(&i, &AudioBuffer::full_band(vec![0.0; 4800]));
    for extra in [None, Some("--streaming")] {
        let mut args = vec!["enhance", s(&i), s(&o), "--preset", "tiny"];
        args.extend(extra);
        assert_eq!(code(&bin(&args)), 0);
        let y = fbmstcn::wav::read(&o).unwrap();
        assert_eq!(y.len(), 4800);
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn streaming_and_offline_agree() {
    let d = tempfile::tempdir().unwrap();
    let i = d.path().join("n.wav");
    write(&i, &synthetic_pair(3, 30_000, 5.0).unwrap().noisy);
    let (a, b) = (d.path().join("a.wav"), d.path().join("b.wav"));
    let ra = bin(&[
        "enhance",
        s(&i),
        s(&a),
        "--preset",
        "tiny",
        "--seed",
        "4",
        "--report",
        "json",
    ]);
    let rb = bin(&[
        "enhance",
        s(&i),
        s(&b),
        "--preset",
        "tiny",
        "--seed",
        "4",
        "--streaming",
        "--report",
        "json",
    ]);
    assert_eq!((code(&ra), code(&rb)), (0, 0));
    let (x, y) = (
        fbmstcn::wav::read(&a).unwrap(),
        fbmstcn::wav::read(&b).unwrap(),
    );
    assert_eq!(x.len(), 30_000);
    let err = x
        .samples()
        .iter()
        .zip(y.samples())
        .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    assert!(err <= 1e-5);
    let v = json(&rb);
    assert_eq!(v["latency"]["algorithmic_ms"], 30.0);
    assert!(v["rtf"].as_f64().unwrap() > 0.0);
    assert!(json(&ra)["latency"].is_null());
}

#[test]
fn same_seed_same_bytes() {
    let d = tempfile::tempdir().unwrap();
    let i = d.path().join("n.wav");
    write(&i, &synthetic_pair(5, 9_000, 0.0).unwrap().noisy);
    let outs: Vec<Vec<u8>> = ["1", "1", "2"]
        .iter()
        .map(|seed| {
            let o = d.path().join(format!("o{seed}.wav"));
            // taps force a second, independent pass
            let taps = d.path().join("taps");
            assert_eq!(
                code(&bin(&[
                    "enhance",
                    s(&i),
                    s(&o),
                    "--preset",
                    "tiny",
                    "--seed",
                    seed,
                    "--taps",
                    s(&taps)
                ])),
                0
            );
            assert!(taps.join("stage1_2.wav").exists());
            std::fs::read(o).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_ne!(outs[0], outs[2]);
}

#[test]
fn checkpoint_round_trip_through_cli() {
    let d = tempfile::tempdir().unwrap();
    let ck = d.path().join("m.ckpt");
    assert_eq!(
        code(&bin(&[
            "init",
            "--out",
            s(&ck),
            "--preset",
            "tiny",
            "--seed",
            "9"
        ])),
        0
    );
    let i = d.path().join("n.wav");
    write(&i, &synthetic_pair(1, 4_800, 5.0).unwrap().noisy);
    let (a, b) = (d.path().join("a.wav"), d.path().join("b.wav"));
    assert_eq!(
        code(&bin(&["enhance", s(&i), s(&a), "--checkpoint", s(&ck)])),
        0
    );
    assert_eq!(
        code(&bin(&[
            "enhance",
            s(&i),
            s(&b),
            "--preset",
            "tiny",
            "--seed",
            "9"
        ])),
        0
    );
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let narrow = d.path().join("16k.wav");
    write(&narrow, &AudioBuffer::sub_band(vec![0.0; 1600]));
    let out = d.path().join("o.wav");
    let o = bin(&["enhance", s(&narrow), s(&out), "--preset", "tiny"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("48000"));

    let wide = d.path().join("48k.wav");
    write(&wide, &AudioBuffer::full_band(vec![0.0; 1600]));
    let junk = d.path().join("bad.ckpt");
    std::fs::write(&junk, b"not a checkpoint at all, just some bytes").unwrap();
    assert_eq!(
        code(&bin(&[
            "enhance",
            s(&wide),
            s(&out),
            "--checkpoint",
            s(&junk)
        ])),
        3
    );
    assert_eq!(
        code(&bin(&[
            "enhance",
            s(&d.path().join("missing.wav")),
            s(&out)
        ])),
        2
    );

    assert_eq!(code(&bin(&["enhance"])), 1);
    assert_eq!(code(&bin(&["frobnicate"])), 1);
    assert_eq!(code(&bin(&["analyze", "--report", "yaml"])), 1);
    assert_eq!(code(&bin(&["--help"])), 0);
}

#[test]
fn mix_and_sdr() {
    let d = tempfile::tempdir().unwrap();
    let pair = synthetic_pair(2, 20_000, 100.0).unwrap();
    let (c, n, m) = (
        d.path().join("c.wav"),
        d.path().join("n.wav"),
        d.path().join("m.wav"),
    );
    write(&c, &pair.clean);
    write(
        &n,
        &AudioBuffer::full_band(fbmstcn_core::rng::noise_vec(
            &mut fbmstcn_core::rng::seeded(1, 1),
            7_000,
            0.3,
        )),
    );
    let o = bin(&[
        "mix",
        s(&c),
        s(&n),
        s(&m),
        "--snr",
        "-5",
        "--report",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!((v["measured_snr_db"].as_f64().unwrap() + 5.0).abs() <= 0.01);
    assert_eq!(fbmstcn::wav::read(&m).unwrap().len(), 20_000);

    let same = json(&bin(&["sdr", s(&c), s(&c), "--report", "json"]));
    assert_eq!(same["sdr_db"], 100.0);
    let d2 = json(&bin(&["sdr", s(&c), s(&m), "--report", "json"]))["sdr_db"]
        .as_f64()
        .unwrap();
    assert!(d2 < 0.0, "{d2}");
}

#[test]
fn gradcheck_command_is_deterministic() {
    let a = bin(&["gradcheck", "--seeds", "2", "--report", "json"]);
    let b = bin(&["gradcheck", "--seeds", "2", "--report", "json"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    assert_eq!(v["passed"], true);
}

#[test]
fn selftest_subset() {
    let o = bin(&["selftest", "--only", "7", "--only", "9"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("2/2 criteria passed"), "{text}");
}

#[test]
fn train_writes_a_loadable_checkpoint() {
    let d = tempfile::tempdir().unwrap();
    for k in 0..3 {
        let p = synthetic_pair(k, 9_600, 100.0).unwrap();
        write(&d.path().join(format!("c{k}.wav")), &p.clean);
        write(
            &d.path().join(format!("n{k}.wav")),
            &AudioBuffer::full_band(fbmstcn_core::rng::noise_vec(
                &mut fbmstcn_core::rng::seeded(k, 3),
                9_600,
                0.1,
            )),
        );
    }
    let manifest = d.path().join("train.txt");
    std::fs::write(
        &manifest,
        "# clean noise snr seed\nc0.wav n0.wav 0 1\nc1.wav n1.wav 5 2\nc2.wav n2.wav -5 3\n",
    )
    .unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(
        &cfg,
        "version = 1\npreset = \"tiny\"\n[train]\nval_every = 3\n",
    )
    .unwrap();
    let ck = d.path().join("out.ckpt");
    let o = bin(&[
        "train",
        s(&manifest),
        "--out",
        s(&ck),
        "--config",
        s(&cfg),
        "--epochs",
        "2",
        "--report",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(
        (v["examples"].as_u64(), v["validation"].as_u64()),
        (Some(2), Some(1))
    );
    assert_eq!(v["epochs"].as_array().unwrap().len(), 2);
    let loaded = fbmstcn::checkpoint::Checkpoint::load(&ck).unwrap();
    assert_eq!(loaded.meta["epochs"], 2);
    assert_eq!(code(&bin(&["analyze", "--checkpoint", s(&ck)])), 0);
}
