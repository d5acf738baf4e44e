//! Interval sampling of a 48 kHz signal into three 16 kHz sub-channels and
//! the exact inverse: `sub[j][m] = full[3m + j]`.

use alloc::vec::Vec;

use super::AudioBuffer;
use crate::error::shape_err;
use crate::{Result, FULL_BAND_RATE, NUM_SUBCHANNELS};

/// Three phase-aligned sub-channels plus the length of the signal they
/// came from (the source is zero-padded up to a multiple of three).
#[derive(Debug, Clone, PartialEq)]
pub struct SubChannelBank {
    channels: [AudioBuffer; NUM_SUBCHANNELS],
    origin_length: usize,
}

impl SubChannelBank {
    pub fn new(channels: [AudioBuffer; NUM_SUBCHANNELS], origin_length: usize) -> Result<Self> {
        let len = channels[0].len();
        for (j, ch) in channels.iter().enumerate() {
            ch.require_rate(crate::SUB_BAND_RATE)?;
            if ch.len() != len {
                return Err(shape_err!(
                    "sub-channel {j} has {} samples, channel 0 has {len}",
                    ch.len()
                ));
            }
        }
        if origin_length > NUM_SUBCHANNELS * len {
            return Err(shape_err!(
                "origin length {origin_length} exceeds 3 x {len} sub-channel samples"
            ));
        }
        Ok(Self {
            channels,
            origin_length,
        })
    }

    pub fn channels(&self) -> &[AudioBuffer; NUM_SUBCHANNELS] {
        &self.channels
    }

    pub fn channel(&self, j: usize) -> &AudioBuffer {
        &self.channels[j]
    }

    pub fn origin_length(&self) -> usize {
        self.origin_length
    }

    /// Samples per sub-channel.
    pub fn channel_len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn into_channels(self) -> [AudioBuffer; NUM_SUBCHANNELS] {
        self.channels
    }
}

pub fn extract(x: &AudioBuffer) -> Result<SubChannelBank> {
    x.require_rate(FULL_BAND_RATE)?;
    let n = x.len();
    let m = n.div_ceil(NUM_SUBCHANNELS);
    let mut out: [Vec<f64>; NUM_SUBCHANNELS] = core::array::from_fn(|_| alloc::vec![0.0; m]);
    for (i, &s) in x.samples().iter().enumerate() {
        out[i % NUM_SUBCHANNELS][i / NUM_SUBCHANNELS] = s;
    }
    let channels = out.map(AudioBuffer::sub_band);
    Ok(SubChannelBank {
        channels,
        origin_length: n,
    })
}

pub fn interpolate(bank: &SubChannelBank) -> Result<AudioBuffer> {
    let m = bank.channel_len();
    if bank.channels.iter().any(|c| c.len() != m) {
        return Err(shape_err!("sub-channels differ in length"));
    }
    let mut out = alloc::vec![0.0; NUM_SUBCHANNELS * m];
    for (j, ch) in bank.channels.iter().enumerate() {
        for (k, &s) in ch.samples().iter().enumerate() {
            out[NUM_SUBCHANNELS * k + j] = s;
        }
    }
    out.truncate(bank.origin_length);
    Ok(AudioBuffer::full_band(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use proptest::prelude::*;

    #[test]
    fn splits_by_phase() {
        let x = AudioBuffer::full_band(alloc::vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = extract(&x).unwrap();
        assert_eq!(b.channel(0).samples(), &[0.0, 3.0]);
        assert_eq!(b.channel(1).samples(), &[1.0, 4.0]);
        assert_eq!(b.channel(2).samples(), &[2.0, 5.0]);
        assert_eq!(interpolate(&b).unwrap(), x);
    }

    #[test]
    fn zero_signal() {
        let b = extract(&AudioBuffer::full_band(alloc::vec![0.0; 300])).unwrap();
        for ch in b.channels() {
            assert_eq!(ch.len(), 100);
            assert!(ch.samples().iter().all(|&s| s == 0.0));
        }
        let y = interpolate(&b).unwrap();
        assert!(y.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn tail_is_zero_padded() {
        let b = extract(&AudioBuffer::full_band(alloc::vec![1.0; 7])).unwrap();
        assert_eq!(b.channel_len(), 3);
        assert_eq!(b.channel(0).samples(), &[1.0, 1.0, 1.0]);
        assert_eq!(b.channel(1).samples(), &[1.0, 1.0, 0.0]);
        assert_eq!(b.origin_length(), 7);
    }

    #[test]
    fn rejects_sub_band_input() {
        let x = AudioBuffer::sub_band(alloc::vec![0.0; 6]);
        assert!(matches!(extract(&x), Err(Error::InvalidSampleRate { .. })));
    }

    #[test]
    fn rejects_ragged_bank() {
        let chans = [
            AudioBuffer::sub_band(alloc::vec![0.0; 2]),
            AudioBuffer::sub_band(alloc::vec![0.0; 2]),
            AudioBuffer::sub_band(alloc::vec![0.0; 1]),
        ];
        assert!(matches!(
            SubChannelBank::new(chans, 5),
            Err(Error::ShapeMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn interpolate_inverts_extract(x in proptest::collection::vec(-1.0f64..1.0, 0..999)) {
            let buf = AudioBuffer::full_band(x.clone());
            let y = interpolate(&extract(&buf).unwrap()).unwrap();
            prop_assert_eq!(y.samples(), &x[..]);
        }

        #[test]
        fn extract_inverts_interpolate(m in 0usize..200, seed in any::<u64>()) {
            let mut rng = crate::rng::seeded(seed, 0);
            let chans = core::array::from_fn(|_| AudioBuffer::sub_band(crate::rng::uniform_vec(&mut rng, m, 1.0)));
            let bank = SubChannelBank::new(chans, 3 * m).unwrap();
            let again = extract(&interpolate(&bank).unwrap()).unwrap();
            prop_assert_eq!(again, bank);
        }
    }
}
