//! Audio in, audio out: polyphase split, per-channel STFT and compression,
//! the spectral network, and the inverse chain.

use super::{Model, StageValues};
use crate::dsp::{
    compress, decompress, extract, interpolate, AudioBuffer, ComplexSpectrum, Domain, Stft,
    SubChannelBank, WindowSpec,
};
use crate::error::shape_err;
use crate::tensor::{ParamStore, Runner, Tensor};
use crate::{math, Result, NUM_SUBCHANNELS};
use alloc::vec::Vec;

/// Network inputs for one utterance.
#[derive(Debug, Clone)]
pub struct Features {
    /// Compressed planes `[6, T, F]`.
    pub cri: Tensor,
    /// Compressed magnitudes `[3, T, F]`.
    pub mag: Tensor,
}

impl Features {
    pub fn from_planes(cri: Tensor) -> Result<Self> {
        let mag = magnitudes(&cri)?;
        Ok(Self { cri, mag })
    }

    pub fn frames(&self) -> usize {
        self.cri.frames()
    }
}

/// Per-utterance pipeline result, with the stage tensors kept for taps.
#[derive(Debug, Clone)]
pub struct Enhancement {
    pub output: AudioBuffer,
    pub features: Features,
    pub stages: StageOutput,
}

pub type StageOutput = StageValues<Tensor>;

/// Stack three spectra as `[re0, re1, re2, im0, im1, im2]` planes.
pub fn spectra_to_planes(specs: &[ComplexSpectrum]) -> Result<Tensor> {
    let first = specs.first().ok_or_else(|| shape_err!("no spectra"))?;
    let (t, f) = (first.frames(), first.bins());
    if specs.iter().any(|s| !s.same_shape(first)) {
        return Err(shape_err!("sub-channel spectra differ in shape"));
    }
    let mut data = Vec::with_capacity(2 * specs.len() * t * f);
    for s in specs {
        data.extend_from_slice(&s.real);
    }
    for s in specs {
        data.extend_from_slice(&s.imag);
    }
    Tensor::from_vec(&[2 * specs.len(), t, f], data)
}

pub fn planes_to_spectra(planes: &Tensor, domain: Domain) -> Result<Vec<ComplexSpectrum>> {
    let [c, t, f] = planes.dims3()?;
    if c % 2 != 0 {
        return Err(shape_err!("odd plane count {c}"));
    }
    let n = c / 2;
    let plane = |p: usize| planes.data()[p * t * f..(p + 1) * t * f].to_vec();
    (0..n)
        .map(|j| ComplexSpectrum::from_parts(t, f, plane(j), plane(n + j), domain))
        .collect()
}

fn magnitudes(cri: &Tensor) -> Result<Tensor> {
    let [c, t, f] = cri.dims3()?;
    let n = c / 2;
    let half = n * t * f;
    let d = cri.data();
    let data = (0..half).map(|k| math::hypot(d[k], d[half + k])).collect();
    Tensor::from_vec(&[n, t, f], data)
}

/// Sub-channel STFTs, compressed with exponent `c`.
pub fn features(bank: &SubChannelBank, stft: &Stft, c: f64) -> Result<Features> {
    let specs = bank
        .channels()
        .iter()
        .map(|ch| compress(&stft.analyze(ch.samples())?, c))
        .collect::<Result<Vec<_>>>()?;
    Features::from_planes(spectra_to_planes(&specs)?)
}

/// Compressed planes back to a 48 kHz signal of `origin_length` samples.
pub fn synthesize(
    planes: &Tensor,
    c: f64,
    stft: &Stft,
    origin_length: usize,
) -> Result<AudioBuffer> {
    let specs = planes_to_spectra(planes, Domain::Compressed(c))?;
    if specs.len() != NUM_SUBCHANNELS {
        return Err(shape_err!(
            "expected {NUM_SUBCHANNELS} sub-channels, got {}",
            specs.len()
        ));
    }
    let ch_len = origin_length.div_ceil(NUM_SUBCHANNELS);
    let mut chans = Vec::with_capacity(NUM_SUBCHANNELS);
    for s in &specs {
        let mut x = stft.synthesize(&decompress(s, c)?)?;
        x.resize(ch_len, 0.0);
        chans.push(AudioBuffer::sub_band(x));
    }
    let chans: [AudioBuffer; NUM_SUBCHANNELS] =
        chans.try_into().map_err(|_| shape_err!("channel count"))?;
    interpolate(&SubChannelBank::new(chans, origin_length)?)
}

impl Model {
    /// Offline enhancement of a 48 kHz signal.
    pub fn forward(&self, store: &ParamStore, noisy: &AudioBuffer) -> Result<AudioBuffer> {
        Ok(self.forward_detailed(store, noisy)?.output)
    }

    pub fn forward_detailed(&self, store: &ParamStore, noisy: &AudioBuffer) -> Result<Enhancement> {
        let bank = extract(noisy)?;
        if noisy.is_empty() {
            return Err(crate::Error::EmptyInput);
        }
        let stft = Stft::new(WindowSpec::default())?;
        let c = self.config().compression;
        let features = features(&bank, &stft, c)?;
        let mut run = Runner::new(store);
        let stages = self.spectral(&mut run, &features.mag, &features.cri)?;
        let output = synthesize(&stages.enhanced, c, &stft, noisy.len())?;
        Ok(Enhancement {
            output,
            features,
            stages,
        })
    }
}
