//! Pure-math core of the fbmstcn full-band speech enhancer.
//!
//! A 48 kHz signal is split into three interleaved 16 kHz sub-channels,
//! each sub-channel is analysed with a 20 ms / 10 ms Hamming STFT, and a
//! two-stage network (complex ratio masking followed by additive
//! compensation) enhances the power-law compressed spectra. The enhanced
//! sub-channels are resynthesised and re-interleaved.
//!
//! The crate is `no_std` + `alloc`. File formats, wall-clock measurement
//! and the command line live in the `fbmstcn` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dsp;
mod error;
pub mod gradcheck;
pub(crate) mod math;
pub mod model;
pub mod rng;
pub mod stream;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};

/// Full-band engine sample rate.
pub const FULL_BAND_RATE: u32 = 48_000;
/// Sub-channel (wide-band) sample rate.
pub const SUB_BAND_RATE: u32 = 16_000;
/// Number of polyphase sub-channels.
pub const NUM_SUBCHANNELS: usize = 3;
