//! Mono WAV reading and writing (PCM 16/24/32-bit and 32-bit float).

use crate::error::{AppError, Result};
use fbmstcn_core::dsp::AudioBuffer;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum SampleFormat {
    Pcm16,
    #[default]
    Float32,
}

fn audio_err(path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::Audio(format!("{}: {e}", path.display()))
}

/// Read a mono file at 16 or 48 kHz; samples are scaled to [-1, 1).
pub fn read(path: &Path) -> Result<AudioBuffer> {
    let mut reader = hound::WavReader::open(path).map_err(|e| audio_err(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(audio_err(
            path,
            format!("{} channels, only mono is supported", spec.channels),
        ));
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        hound::SampleFormat::Int => {
            let scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| audio_err(path, e))?;
    AudioBuffer::new(samples, spec.sample_rate).map_err(|e| audio_err(path, e))
}

/// Read and insist on `rate`.
pub fn read_at(path: &Path, rate: u32) -> Result<AudioBuffer> {
    let a = read(path)?;
    if a.sample_rate() != rate {
        return Err(audio_err(
            path,
            format!("sample rate {} Hz, expected {rate} Hz", a.sample_rate()),
        ));
    }
    Ok(a)
}

pub fn write(path: &Path, audio: &AudioBuffer, format: SampleFormat) -> Result<()> {
    let (bits, sample_format) = match format {
        SampleFormat::Pcm16 => (16, hound::SampleFormat::Int),
        SampleFormat::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate(),
        bits_per_sample: bits,
        sample_format,
    };
    let io = |e: hound::Error| match e {
        hound::Error::IoError(e) => AppError::io(format!("writing {}", path.display()), e),
        other => AppError::Usage(format!("writing {}: {other}", path.display())),
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(io)?;
    for &v in audio.samples() {
        match format {
            SampleFormat::Pcm16 => {
                let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                w.write_sample(q).map_err(io)?;
            }
            SampleFormat::Float32 => w.write_sample(v as f32).map_err(io)?,
        }
    }
    w.finalize().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x: Vec<f64> = (0..100)
            .map(|i| ((i as f32 * 0.37).sin() * 0.5) as f64)
            .collect();
        write(
            &p,
            &AudioBuffer::full_band(x.clone()),
            SampleFormat::Float32,
        )
        .unwrap();
        let y = read_at(&p, 48_000).unwrap();
        assert_eq!(y.samples(), &x[..]);
    }

    #[test]
    fn pcm16_quantises() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x = vec![0.0, 0.5, -0.5, 0.999, -1.0];
        write(&p, &AudioBuffer::sub_band(x.clone()), SampleFormat::Pcm16).unwrap();
        let y = read(&p).unwrap();
        assert_eq!(y.sample_rate(), 16_000);
        for (a, b) in x.iter().zip(y.samples()) {
            assert!((a - b).abs() <= 0.5 / 32768.0);
        }
    }
}
