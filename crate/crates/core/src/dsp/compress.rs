//! Power-law magnitude compression with the phase left untouched.

use super::fft::Complex;
use super::stft::{ComplexSpectrum, Domain};
use crate::{math, Error, Result};

/// Bins at or below this magnitude compress to exactly zero.
pub const ZERO_MAGNITUDE: f64 = 1e-12;

#[inline]
pub(crate) fn power_bin(v: Complex, exponent: f64) -> Complex {
    let mag = math::hypot(v.re, v.im);
    if mag < ZERO_MAGNITUDE {
        return Complex::ZERO;
    }
    let scale = math::powf(mag, exponent - 1.0);
    Complex::new(v.re * scale, v.im * scale)
}

fn check_exponent(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidExponent(c));
    }
    Ok(())
}

fn map_bins(s: &ComplexSpectrum, exponent: f64, domain: Domain) -> ComplexSpectrum {
    let mut out = s.clone();
    out.domain = domain;
    for (re, im) in out.real.iter_mut().zip(out.imag.iter_mut()) {
        let v = power_bin(Complex::new(*re, *im), exponent);
        *re = v.re;
        *im = v.im;
    }
    out
}

/// `|S|^c * S/|S|` per bin.
pub fn compress(s: &ComplexSpectrum, c: f64) -> Result<ComplexSpectrum> {
    check_exponent(c)?;
    if s.domain != Domain::Linear {
        return Err(Error::DomainError(
            "compress needs a linear-domain spectrum",
        ));
    }
    Ok(map_bins(s, c, Domain::Compressed(c)))
}

/// Inverse of [`compress`]: magnitudes raised to `1/c`.
pub fn decompress(s: &ComplexSpectrum, c: f64) -> Result<ComplexSpectrum> {
    check_exponent(c)?;
    match s.domain {
        Domain::Compressed(e) if (e - c).abs() <= 1e-12 => Ok(map_bins(s, 1.0 / c, Domain::Linear)),
        Domain::Compressed(_) => Err(Error::DomainError("compression exponent mismatch")),
        Domain::Linear => Err(Error::DomainError("decompress needs a compressed spectrum")),
    }
}
