//! Hyperparameter record for the whole network.

use crate::error::Error;
use crate::Result;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct GtcmConfig {
    pub groups: usize,
    pub dilations: Vec<usize>,
    pub kernel: usize,
    /// Residual stream width.
    pub channels: usize,
    /// Width inside each block.
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct U2LstmConfig {
    pub enc_layers: usize,
    pub channels: usize,
    /// `(time, freq)`.
    pub first_kernel: (usize, usize),
    pub other_kernel: (usize, usize),
    /// Frequency stride of every encoder level.
    pub stride: usize,
    pub lstm_layers: usize,
    pub out_channels: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct MstcnConfig {
    pub groups: usize,
    pub dilations: Vec<usize>,
    pub kernel: usize,
    pub bands: usize,
    pub band_dim: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct MaskHeadConfig {
    pub convs: usize,
    pub kernel: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CompConfig {
    pub enabled: bool,
    pub in_channels: usize,
    pub out_channels: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ModelConfig {
    /// Spectral power-law exponent.
    pub compression: f64,
    pub gtcm: GtcmConfig,
    pub u2lstm: U2LstmConfig,
    pub mstcn: MstcnConfig,
    pub mask_head: MaskHeadConfig,
    pub comp: CompConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            compression: 0.3,
            gtcm: GtcmConfig {
                groups: 3,
                dilations: vec![1, 2, 4, 8, 16, 32],
                kernel: 3,
                channels: 256,
                hidden: 64,
            },
            u2lstm: U2LstmConfig {
                enc_layers: 4,
                channels: 64,
                first_kernel: (2, 5),
                other_kernel: (2, 3),
                stride: 2,
                lstm_layers: 4,
                out_channels: 8,
            },
            mstcn: MstcnConfig {
                groups: 3,
                dilations: vec![1, 3, 5, 7, 11],
                kernel: 3,
                bands: 3,
                band_dim: 256,
                hidden: 64,
            },
            mask_head: MaskHeadConfig {
                convs: 6,
                kernel: 1,
            },
            comp: CompConfig {
                enabled: true,
                in_channels: 12,
                out_channels: 6,
            },
        }
    }
}

fn div(v: usize, by: usize) -> usize {
    (v / by).max(1)
}

impl ModelConfig {
    /// Every channel width divided by `by` (at least 1); topology unchanged.
    pub fn scaled(by: usize) -> Self {
        let mut c = Self::default();
        let by = by.max(1);
        c.gtcm.channels = div(c.gtcm.channels, by);
        c.gtcm.hidden = div(c.gtcm.hidden, by);
        c.u2lstm.channels = div(c.u2lstm.channels, by);
        c.mstcn.band_dim = div(c.mstcn.band_dim, by);
        c.mstcn.hidden = div(c.mstcn.hidden, by);
        c
    }

    /// 1/64 widths.
    pub fn tiny() -> Self {
        Self::scaled(64)
    }

    /// 1/8 widths; fast enough for exhaustive streaming tests.
    pub fn small() -> Self {
        Self::scaled(8)
    }

    pub fn single_stage(mut self) -> Self {
        self.comp.enabled = false;
        self
    }

    /// Frequency sizes of the U2-LSTM encoder, input first.
    pub fn encoder_freqs(&self) -> Vec<usize> {
        let u = &self.u2lstm;
        let mut f = vec![crate::dsp::WindowSpec::default().bins()];
        for l in 0..u.enc_layers {
            let kf = if l == 0 {
                u.first_kernel.1
            } else {
                u.other_kernel.1
            };
            let last = *f.last().unwrap_or(&0);
            f.push(if last >= kf {
                (last - kf) / u.stride + 1
            } else {
                0
            });
        }
        f
    }

    /// `(start, len)` of each MSTCN band over the frequency axis: equal
    /// floor split, remainder to the last band.
    pub fn band_ranges(&self) -> Vec<(usize, usize)> {
        let bins = crate::dsp::WindowSpec::default().bins();
        let n = self.mstcn.bands;
        let w = bins / n;
        (0..n)
            .map(|b| (b * w, if b + 1 == n { bins - b * w } else { w }))
            .collect()
    }

    /// Frames of temporal context seen by one GTCM output frame.
    pub fn gtcm_receptive_field(&self) -> usize {
        let g = &self.gtcm;
        g.groups
            * g.dilations
                .iter()
                .map(|d| (g.kernel - 1) * d)
                .sum::<usize>()
            + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::InvalidConfig(m));
        if !(self.compression > 0.0 && self.compression <= 1.0) {
            return Err(Error::InvalidExponent(self.compression));
        }
        let g = &self.gtcm;
        if g.groups == 0
            || g.dilations.is_empty()
            || g.kernel == 0
            || g.channels == 0
            || g.hidden == 0
        {
            return bad(format!("degenerate gtcm section {g:?}"));
        }
        if g.dilations.contains(&0) {
            return bad(format!("gtcm dilation 0 in {:?}", g.dilations));
        }
        let u = &self.u2lstm;
        if u.enc_layers == 0
            || u.channels == 0
            || u.lstm_layers == 0
            || u.out_channels == 0
            || u.stride == 0
        {
            return bad(format!("degenerate u2lstm section {u:?}"));
        }
        if u.first_kernel.0 == 0
            || u.other_kernel.0 == 0
            || u.first_kernel.1 == 0
            || u.other_kernel.1 == 0
        {
            return bad(format!("zero kernel extent in u2lstm section {u:?}"));
        }
        if self.encoder_freqs().contains(&0) {
            return bad(format!(
                "u2lstm encoder collapses the frequency axis: {:?}",
                self.encoder_freqs()
            ));
        }
        let m = &self.mstcn;
        if m.groups == 0
            || m.dilations.is_empty()
            || m.kernel == 0
            || m.band_dim == 0
            || m.hidden == 0
        {
            return bad(format!("degenerate mstcn section {m:?}"));
        }
        if m.dilations.contains(&0) {
            return bad(format!("mstcn dilation 0 in {:?}", m.dilations));
        }
        if m.bands == 0 || m.bands > crate::dsp::WindowSpec::default().bins() {
            return bad(format!("mstcn bands = {}", m.bands));
        }
        if self.mask_head.convs != 2 * crate::NUM_SUBCHANNELS {
            return bad(format!(
                "mask head needs {} convs, got {}",
                2 * crate::NUM_SUBCHANNELS,
                self.mask_head.convs
            ));
        }
        if self.mask_head.kernel == 0 {
            return bad("mask head kernel 0".into());
        }
        let c = &self.comp;
        if c.in_channels != 4 * crate::NUM_SUBCHANNELS
            || c.out_channels != 2 * crate::NUM_SUBCHANNELS
        {
            return bad(format!(
                "compensation must map 12 -> 6 channels, got {} -> {}",
                c.in_channels, c.out_channels
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.encoder_freqs(), vec![161, 79, 39, 19, 9]);
        assert_eq!(c.band_ranges(), vec![(0, 53), (53, 53), (106, 55)]);
        assert_eq!(c.gtcm_receptive_field(), 379);
    }

    #[test]
    fn scaled_configs_are_valid() {
        for by in [1, 2, 8, 64, 1000] {
            ModelConfig::scaled(by).validate().unwrap();
        }
        assert_eq!(ModelConfig::tiny().u2lstm.channels, 1);
    }

    #[test]
    fn rejects_bad_sections() {
        let mut c = ModelConfig::default();
        c.mask_head.convs = 4;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.comp.in_channels = 6;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.u2lstm.enc_layers = 8;
        assert!(c.validate().is_err());
        let c = ModelConfig {
            compression: 0.0,
            ..ModelConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidExponent(_))));
    }
}
