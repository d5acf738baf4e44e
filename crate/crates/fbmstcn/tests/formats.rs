use fbmstcn::checkpoint::Checkpoint;
use fbmstcn::config_file::RunConfig;
use fbmstcn::{wav, AppError};
use fbmstcn_core::model::ModelConfig;
use std::path::Path;

fn hound_file(path: &Path, channels: u16, rate: u32, bits: u16, samples: &[i32]) {
    let spec = hound::WavSpec {
        channels,
        sample_rate: rate,
        bits_per_sample: bits,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for &v in samples {
        w.write_sample(v).unwrap();
    }
    w.finalize().unwrap();
}

#[test]
fn wav_rejections() {
    let d = tempfile::tempdir().unwrap();
    let stereo = d.path().join("st.wav");
    hound_file(&stereo, 2, 48_000, 16, &[0, 0, 1, 1]);
    assert!(matches!(wav::read(&stereo), Err(AppError::Audio(m)) if m.contains("mono")));

    let cd = d.path().join("cd.wav");
    hound_file(&cd, 1, 44_100, 16, &[0, 1]);
    let e = wav::read(&cd).unwrap_err();
    assert_eq!(e.exit_code(), 2);

    let garbage = d.path().join("g.wav");
    std::fs::write(&garbage, b"RIFF\x00\x00").unwrap();
    assert_eq!(wav::read(&garbage).unwrap_err().exit_code(), 2);
}

#[test]
fn pcm24_is_scaled() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("a.wav");
    hound_file(&p, 1, 16_000, 24, &[1 << 22, -(1 << 23), 0]);
    let a = wav::read(&p).unwrap();
    assert_eq!(a.samples(), &[0.5, -1.0, 0.0]);
}

#[test]
fn checkpoint_file_errors_map_to_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("m.ckpt");
    let ck = Checkpoint::init(ModelConfig::tiny(), 1).unwrap();
    ck.save(&p).unwrap();
    assert_eq!(Checkpoint::load(&p).unwrap(), ck);
    let bytes = std::fs::read(&p).unwrap();
    for cut in [0, 7, 23, bytes.len() / 2, bytes.len() - 1] {
        std::fs::write(&p, &bytes[..cut]).unwrap();
        assert_eq!(
            Checkpoint::load(&p).unwrap_err().exit_code(),
            3,
            "cut {cut}"
        );
    }
    let mut v2 = bytes.clone();
    v2[8] = 2;
    std::fs::write(&p, &v2).unwrap();
    assert!(Checkpoint::load(&p)
        .unwrap_err()
        .to_string()
        .contains("version"));
    assert_eq!(
        Checkpoint::load(&d.path().join("none"))
            .unwrap_err()
            .exit_code(),
        3
    );
}

#[test]
fn config_file_errors_are_usage_errors() {
    for text in [
        "version = 1\npreset = \"huge\"",
        "version = 1\n[model]\ncompression = 0.3",
        "version = 1\n[train]\nepochs = -1",
    ] {
        assert_eq!(RunConfig::parse(text).unwrap_err().exit_code(), 1, "{text}");
    }
    let mut bad = ModelConfig::tiny();
    bad.u2lstm.stride = 0;
    let rc = RunConfig {
        model: Some(bad),
        ..RunConfig::default()
    };
    assert!(RunConfig::parse(&rc.to_toml()).is_err());
}
