//! Deterministic signal math: polyphase split/merge, STFT/ISTFT and
//! power-law compression of complex spectra.

mod audio;
mod compress;
pub mod fft;
mod polyphase;
mod stft;

pub use audio::AudioBuffer;
pub use compress::{compress, decompress, ZERO_MAGNITUDE};
pub use polyphase::{extract, interpolate, SubChannelBank};
pub use stft::{istft, stft, ComplexSpectrum, Domain, Stft, WindowSpec, WOLA_FLOOR};
