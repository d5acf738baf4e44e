//! Mixing at a target SNR and the simplified energy-ratio SDR.

use crate::dsp::AudioBuffer;
use crate::error::shape_err;
use crate::{math, Error, Result};
use alloc::vec::Vec;

/// Upper (and negated, lower) bound returned by [`sdr`].
pub const SDR_CAP_DB: f64 = 100.0;
/// Mixtures whose peak exceeds this are scaled down jointly.
const PEAK_LIMIT: f64 = 0.99;

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64
}

/// `10 log10(P_signal / P_noise)`.
pub fn snr_db(signal: &[f64], noise: &[f64]) -> f64 {
    10.0 * math::log10(power(signal) / power(noise))
}

/// The components of a mixture after level adjustment; `noisy == clean + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub noisy: AudioBuffer,
    pub clean: AudioBuffer,
    pub noise: AudioBuffer,
    /// Common scale applied to both components for peak protection.
    pub peak_gain: f64,
}

/// Noise is tiled or truncated to the speech length and scaled to
/// `snr_db`; if the sum would clip, speech and noise are scaled together.
pub fn snr_mix_parts(speech: &AudioBuffer, noise: &AudioBuffer, snr_db: f64) -> Result<Mixture> {
    if speech.sample_rate() != noise.sample_rate() {
        return Err(Error::InvalidSampleRate {
            expected: speech.sample_rate(),
            found: noise.sample_rate(),
        });
    }
    if speech.is_empty() || noise.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !snr_db.is_finite() && snr_db != f64::INFINITY {
        return Err(Error::InvalidArgument(alloc::format!("snr {snr_db} dB")));
    }
    let n: Vec<f64> = noise
        .samples()
        .iter()
        .copied()
        .cycle()
        .take(speech.len())
        .collect();
    let (ps, pn) = (power(speech.samples()), power(&n));
    if pn == 0.0 {
        return Err(Error::InvalidArgument("noise has zero power".into()));
    }
    let k = math::sqrt(ps / (pn * math::powf(10.0, snr_db / 10.0)));
    let mut clean = speech.samples().to_vec();
    let mut noise_s: Vec<f64> = n.iter().map(|v| v * k).collect();
    let peak = clean
        .iter()
        .zip(&noise_s)
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    let peak_gain = if peak > PEAK_LIMIT {
        PEAK_LIMIT / peak
    } else {
        1.0
    };
    for v in clean.iter_mut().chain(noise_s.iter_mut()) {
        *v *= peak_gain;
    }
    let noisy = clean.iter().zip(&noise_s).map(|(a, b)| a + b).collect();
    let rate = speech.sample_rate();
    Ok(Mixture {
        noisy: AudioBuffer::new(noisy, rate)?,
        clean: AudioBuffer::new(clean, rate)?,
        noise: AudioBuffer::new(noise_s, rate)?,
        peak_gain,
    })
}

pub fn snr_mix(speech: &AudioBuffer, noise: &AudioBuffer, snr_db: f64) -> Result<AudioBuffer> {
    Ok(snr_mix_parts(speech, noise, snr_db)?.noisy)
}

/// `10 log10(|ref|^2 / |ref - est|^2)`, clamped to `±SDR_CAP_DB`.
pub fn sdr(reference: &AudioBuffer, estimate: &AudioBuffer) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(shape_err!(
            "sdr on {} vs {} samples",
            reference.len(),
            estimate.len()
        ));
    }
    let num: f64 = reference.samples().iter().map(|v| v * v).sum();
    let den: f64 = reference
        .samples()
        .iter()
        .zip(estimate.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if den == 0.0 {
        return Ok(SDR_CAP_DB);
    }
    if num == 0.0 {
        return Ok(-SDR_CAP_DB);
    }
    Ok((10.0 * math::log10(num / den)).clamp(-SDR_CAP_DB, SDR_CAP_DB))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn buf(seed: u64, len: usize, amp: f64) -> AudioBuffer {
        AudioBuffer::sub_band(rng::uniform_vec(&mut rng::seeded(seed, 0), len, amp))
    }

    #[test]
    fn zero_db_equal_powers() {
        let m = snr_mix_parts(&buf(1, 1000, 0.3), &buf(2, 700, 0.1), 0.0).unwrap();
        let (ps, pn) = (power(m.clean.samples()), power(m.noise.samples()));
        assert!((ps / pn - 1.0).abs() < 1e-6);
    }

    #[test]
    fn huge_snr_returns_speech() {
        let s = buf(3, 500, 0.5);
        let y = snr_mix(&s, &buf(4, 500, 0.5), 1e9).unwrap();
        assert!(y
            .samples()
            .iter()
            .zip(s.samples())
            .all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn measured_snr_matches_request() {
        for (i, target) in [-5.0, 0.0, 2.5, 10.0].into_iter().enumerate() {
            let m = snr_mix_parts(
                &buf(10 + i as u64, 4000, 0.9),
                &buf(20 + i as u64, 1234, 0.9),
                target,
            )
            .unwrap();
            assert!((snr_db(m.clean.samples(), m.noise.samples()) - target).abs() <= 0.01);
            assert!(m
                .noisy
                .samples()
                .iter()
                .all(|v| v.abs() <= PEAK_LIMIT + 1e-12));
        }
    }

    #[test]
    fn sdr_cases() {
        let r = buf(5, 800, 0.5);
        assert_eq!(sdr(&r, &r).unwrap(), SDR_CAP_DB);
        let zero = AudioBuffer::sub_band(alloc::vec![0.0; 800]);
        assert!(sdr(&r, &zero).unwrap().abs() < 1e-12);
        // est = ref + e with |e|^2 = |ref|^2 / 100 -> 20 dB
        let e = buf(6, 800, 1.0);
        let k = math::sqrt(r.energy() / (100.0 * e.energy()));
        let est = AudioBuffer::sub_band(
            r.samples()
                .iter()
                .zip(e.samples())
                .map(|(a, b)| a + k * b)
                .collect(),
        );
        assert!((sdr(&r, &est).unwrap() - 20.0).abs() <= 0.01);
        assert!(sdr(&r, &buf(7, 10, 1.0)).is_err());
    }
}
