//! Hamming-window STFT/ISTFT with causal framing.
//!
//! Frames advance by `hop_len` and are left-padded by `win_len - hop_len`
//! zeros, so frame `f` covers samples `[f*hop - pad, f*hop - pad + win)`
//! and every retained sample lies under `win/hop` frames. Synthesis is
//! weighted overlap-add divided by the summed squared window.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::fft::{Complex, Fft};
use super::AudioBuffer;
use crate::error::shape_err;
use crate::{math, Error, Result, SUB_BAND_RATE};

/// Floor on the WOLA denominator.
/// Floor on the overlap-added squared-window denominator.
pub const WOLA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowSpec {
    pub win_len: usize,
    pub hop_len: usize,
    pub fft_len: usize,
}

impl Default for WindowSpec {
    /// 20 ms window, 10 ms hop at 16 kHz.
    fn default() -> Self {
        Self {
            win_len: 320,
            hop_len: 160,
            fft_len: 320,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hop_len == 0 || self.hop_len > self.win_len || self.fft_len < self.win_len {
            return Err(Error::InvalidConfig(alloc::format!(
                "window spec needs 0 < hop <= win <= fft, got {self:?}"
            )));
        }
        if !self.is_wola_normalizable() {
            return Err(Error::InvalidConfig(alloc::format!(
                "window spec {self:?} leaves samples with zero synthesis weight"
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_len / 2 + 1
    }

    /// Causal left padding in samples.
    pub fn pad(&self) -> usize {
        self.win_len - self.hop_len
    }

    /// Periodic Hamming window.
    pub fn window(&self) -> Vec<f64> {
        let n = self.win_len as f64;
        (0..self.win_len)
            .map(|i| 0.54 - 0.46 * math::cos(2.0 * PI * i as f64 / n))
            .collect()
    }

    /// Summed squared window at each of the `hop_len` phases of an
    /// interior sample.
    pub fn wola_norm(&self) -> Vec<f64> {
        let w = self.window();
        (0..self.hop_len)
            .map(|phase| {
                w.iter()
                    .skip(phase)
                    .step_by(self.hop_len)
                    .map(|v| v * v)
                    .sum()
            })
            .collect()
    }

    pub fn is_wola_normalizable(&self) -> bool {
        self.hop_len > 0 && self.wola_norm().iter().all(|&v| v > 0.0)
    }

    /// Number of frames needed so each of `len` samples sees every frame
    /// that overlaps it.
    pub fn frame_count(&self, len: usize) -> usize {
        if len == 0 {
            return 0;
        }
        (len - 1 + self.pad()) / self.hop_len + 1
    }

    /// Length of the zero-padded analysis buffer for `len` samples.
    pub fn padded_len(&self, len: usize) -> usize {
        let frames = self.frame_count(len);
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop_len + self.win_len
        }
    }

    /// Samples produced by synthesis from `frames` frames.
    pub fn synthesis_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop_len + self.win_len - self.pad()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Linear,
    /// Magnitudes raised to this exponent.
    Compressed(f64),
}

/// Frames x bins complex array, row-major by frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    frames: usize,
    bins: usize,
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
    pub domain: Domain,
}

impl ComplexSpectrum {
    pub fn zeros(frames: usize, bins: usize, domain: Domain) -> Self {
        Self {
            frames,
            bins,
            real: vec![0.0; frames * bins],
            imag: vec![0.0; frames * bins],
            domain,
        }
    }

    pub fn from_parts(
        frames: usize,
        bins: usize,
        real: Vec<f64>,
        imag: Vec<f64>,
        domain: Domain,
    ) -> Result<Self> {
        if real.len() != frames * bins || imag.len() != frames * bins {
            return Err(shape_err!(
                "spectrum {frames}x{bins} got {} real / {} imag values",
                real.len(),
                imag.len()
            ));
        }
        Ok(Self {
            frames,
            bins,
            real,
            imag,
            domain,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn get(&self, frame: usize, bin: usize) -> Complex {
        let i = frame * self.bins + bin;
        Complex::new(self.real[i], self.imag[i])
    }

    pub fn set(&mut self, frame: usize, bin: usize, v: Complex) {
        let i = frame * self.bins + bin;
        self.real[i] = v.re;
        self.imag[i] = v.im;
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.frames == other.frames && self.bins == other.bins
    }
}

/// Reusable analysis/synthesis plan.
#[derive(Debug, Clone)]
pub struct Stft {
    spec: WindowSpec,
    window: Vec<f64>,
    norm: Vec<f64>,
    fft: Fft,
}

impl Stft {
    pub fn new(spec: WindowSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            window: spec.window(),
            norm: spec.wola_norm(),
            fft: Fft::new(spec.fft_len),
        })
    }

    pub fn spec(&self) -> &WindowSpec {
        &self.spec
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Summed squared window per hop phase (interior samples).
    pub fn wola_norm(&self) -> &[f64] {
        &self.norm
    }

    /// DFT of one windowed `win_len` segment.
    pub fn analyze_frame(&self, segment: &[f64]) -> Vec<Complex> {
        debug_assert_eq!(segment.len(), self.spec.win_len);
        let mut buf = vec![0.0; self.spec.fft_len];
        for ((b, &s), &w) in buf.iter_mut().zip(segment).zip(&self.window) {
            *b = s * w;
        }
        self.fft.forward_real(&buf)
    }

    /// Inverse DFT of one frame, multiplied by the synthesis window.
    pub fn synthesize_frame(&self, bins: &[Complex]) -> Vec<f64> {
        let mut t = self.fft.inverse_real(bins);
        t.truncate(self.spec.win_len);
        for (v, &w) in t.iter_mut().zip(&self.window) {
            *v *= w;
        }
        t
    }

    pub fn analyze(&self, x: &[f64]) -> Result<ComplexSpectrum> {
        if x.is_empty() {
            return Err(Error::EmptyInput);
        }
        let spec = &self.spec;
        let frames = spec.frame_count(x.len());
        let mut padded = vec![0.0; spec.padded_len(x.len())];
        padded[spec.pad()..spec.pad() + x.len()].copy_from_slice(x);
        let bins = spec.bins();
        let mut out = ComplexSpectrum::zeros(frames, bins, Domain::Linear);
        for f in 0..frames {
            let start = f * spec.hop_len;
            let spectrum = self.analyze_frame(&padded[start..start + spec.win_len]);
            for (k, c) in spectrum.into_iter().enumerate() {
                out.set(f, k, c);
            }
        }
        Ok(out)
    }

    /// Weighted overlap-add; returns `synthesis_len(frames)` samples.
    pub fn synthesize(&self, s: &ComplexSpectrum) -> Result<Vec<f64>> {
        if s.domain != Domain::Linear {
            return Err(Error::DomainError("istft needs a linear-domain spectrum"));
        }
        let spec = &self.spec;
        if s.bins() != spec.bins() {
            return Err(shape_err!(
                "spectrum has {} bins, window spec expects {}",
                s.bins(),
                spec.bins()
            ));
        }
        let frames = s.frames();
        let padded_len = if frames == 0 {
            0
        } else {
            (frames - 1) * spec.hop_len + spec.win_len
        };
        let mut acc = vec![0.0; padded_len];
        let mut weight = vec![0.0; padded_len];
        let mut bins = vec![Complex::ZERO; s.bins()];
        for f in 0..frames {
            for (k, b) in bins.iter_mut().enumerate() {
                *b = s.get(f, k);
            }
            let frame = self.synthesize_frame(&bins);
            let start = f * spec.hop_len;
            for (i, (&v, &w)) in frame.iter().zip(&self.window).enumerate() {
                acc[start + i] += v;
                weight[start + i] += w * w;
            }
        }
        Ok(acc
            .iter()
            .zip(&weight)
            .skip(spec.pad())
            .map(|(&a, &w)| a / w.max(WOLA_FLOOR))
            .collect())
    }
}

pub fn stft(x: &AudioBuffer, w: &WindowSpec) -> Result<ComplexSpectrum> {
    x.require_rate(SUB_BAND_RATE)?;
    Stft::new(*w)?.analyze(x.samples())
}

pub fn istft(s: &ComplexSpectrum, w: &WindowSpec) -> Result<AudioBuffer> {
    let samples = Stft::new(*w)?.synthesize(s)?;
    Ok(AudioBuffer::sub_band(samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    /// Direct-summation DFT of every padded frame.
    fn naive_stft(x: &[f64], spec: &WindowSpec) -> Vec<Vec<(f64, f64)>> {
        let w: Vec<f64> = (0..spec.win_len)
            .map(|i| 0.54 - 0.46 * libm::cos(2.0 * PI * i as f64 / spec.win_len as f64))
            .collect();
        let pad = spec.win_len - spec.hop_len;
        let mut padded = vec![0.0; pad];
        padded.extend_from_slice(x);
        let frames = (x.len() - 1 + pad) / spec.hop_len + 1;
        padded.resize((frames - 1) * spec.hop_len + spec.win_len, 0.0);
        (0..frames)
            .map(|f| {
                (0..=spec.fft_len / 2)
                    .map(|k| {
                        let mut re = 0.0;
                        let mut im = 0.0;
                        for n in 0..spec.win_len {
                            let v = padded[f * spec.hop_len + n] * w[n];
                            let a = -2.0 * PI * (k * n) as f64 / spec.fft_len as f64;
                            re += v * libm::cos(a);
                            im += v * libm::sin(a);
                        }
                        (re, im)
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn frame_count_formula() {
        let spec = WindowSpec::default();
        for len in [1usize, 159, 160, 161, 320, 1600, 16000] {
            let padded = spec.padded_len(len);
            assert_eq!(
                spec.frame_count(len),
                (padded - spec.win_len) / spec.hop_len + 1
            );
            assert!(spec.synthesis_len(spec.frame_count(len)) >= len);
        }
    }

    #[test]
    fn dc_lands_in_bin_zero() {
        let spec = WindowSpec::default();
        let s = stft(&AudioBuffer::sub_band(vec![1.0; 480]), &spec).unwrap();
        // frame 1 covers samples [0, 320): all ones
        let wsum: f64 = spec.window().iter().sum();
        assert!((s.get(1, 0).re - wsum).abs() < 1e-9);
        assert!(s.get(1, 0).im.abs() < 1e-9);
    }

    #[test]
    fn zero_in_zero_out() {
        let spec = WindowSpec::default();
        let s = stft(&AudioBuffer::sub_band(vec![0.0; 1000]), &spec).unwrap();
        assert!(s.real.iter().chain(&s.imag).all(|&v| v == 0.0));
        let y = istft(&s, &spec).unwrap();
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_direct_dft_oracle() {
        let spec = WindowSpec::default();
        let mut r = rng::seeded(11, 0);
        let x = rng::uniform_vec(&mut r, 1600, 1.0);
        let s = stft(&AudioBuffer::sub_band(x.clone()), &spec).unwrap();
        let oracle = naive_stft(&x, &spec);
        assert_eq!(s.frames(), oracle.len());
        for (f, frame) in oracle.iter().enumerate() {
            for (k, &(re, im)) in frame.iter().enumerate() {
                let c = s.get(f, k);
                assert!((c.re - re).abs() <= 1e-9 && (c.im - im).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn parseval_per_frame() {
        let spec = WindowSpec::default();
        let mut r = rng::seeded(12, 0);
        let x = rng::uniform_vec(&mut r, 1600, 1.0);
        let s = stft(&AudioBuffer::sub_band(x.clone()), &spec).unwrap();
        let w = spec.window();
        let mut padded = vec![0.0; spec.pad()];
        padded.extend_from_slice(&x);
        padded.resize(spec.padded_len(x.len()), 0.0);
        let n = spec.fft_len;
        for f in 0..s.frames() {
            let time: f64 = (0..spec.win_len)
                .map(|i| (padded[f * spec.hop_len + i] * w[i]).powi(2))
                .sum();
            let mut freq = 0.0;
            for k in 0..s.bins() {
                let m = s.get(f, k).norm_sqr();
                freq += if k == 0 || k == n / 2 { m } else { 2.0 * m };
            }
            freq /= n as f64;
            assert!((freq - time).abs() <= 1e-9 * time.max(1e-300));
        }
    }

    #[test]
    fn round_trip_reconstructs() {
        let spec = WindowSpec::default();
        let mut r = rng::seeded(13, 0);
        let x = rng::uniform_vec(&mut r, 3000, 1.0);
        let y = istft(
            &stft(&AudioBuffer::sub_band(x.clone()), &spec).unwrap(),
            &spec,
        )
        .unwrap();
        assert!(y.len() >= x.len());
        for (a, b) in x.iter().zip(y.samples()) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3));
        }
    }

    #[test]
    fn single_dc_frame_inverts_to_constant() {
        let spec = WindowSpec::default();
        let wsum: f64 = spec.window().iter().sum();
        let mut s = ComplexSpectrum::zeros(1, spec.bins(), Domain::Linear);
        // DFT of the windowed constant 1.0 segment
        let seg = Stft::new(spec).unwrap().analyze_frame(&vec![1.0; 320]);
        for (k, c) in seg.into_iter().enumerate() {
            s.set(0, k, c);
        }
        assert!((s.get(0, 0).re - wsum).abs() < 1e-9);
        let y = istft(&s, &spec).unwrap();
        assert_eq!(y.len(), 160);
        assert!(y.samples().iter().all(|&v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn errors() {
        let spec = WindowSpec::default();
        assert_eq!(
            stft(&AudioBuffer::sub_band(vec![]), &spec),
            Err(Error::EmptyInput)
        );
        assert!(matches!(
            stft(&AudioBuffer::full_band(vec![0.0; 10]), &spec),
            Err(Error::InvalidSampleRate { .. })
        ));
        let s = ComplexSpectrum::zeros(2, 161, Domain::Compressed(0.3));
        assert!(matches!(istft(&s, &spec), Err(Error::DomainError(_))));
        assert!(WindowSpec {
            win_len: 320,
            hop_len: 400,
            fft_len: 320
        }
        .validate()
        .is_err());
    }
}
