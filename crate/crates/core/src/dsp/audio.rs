use alloc::vec::Vec;

use crate::{Error, Result, FULL_BAND_RATE, SUB_BAND_RATE};

/// Mono PCM samples at one of the two engine rates.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != FULL_BAND_RATE && sample_rate != SUB_BAND_RATE {
            return Err(Error::InvalidSampleRate {
                expected: FULL_BAND_RATE,
                found: sample_rate,
            });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn full_band(samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: FULL_BAND_RATE,
        }
    }

    pub fn sub_band(samples: Vec<f64>) -> Self {
        Self {
            samples,
            sample_rate: SUB_BAND_RATE,
        }
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(alloc::vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub(crate) fn require_rate(&self, rate: u32) -> Result<()> {
        if self.sample_rate != rate {
            return Err(Error::InvalidSampleRate {
                expected: rate,
                found: self.sample_rate,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsupported_rate() {
        assert!(matches!(
            AudioBuffer::new(alloc::vec![0.0; 4], 44_100),
            Err(Error::InvalidSampleRate { found: 44_100, .. })
        ));
    }
}
