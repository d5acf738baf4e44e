//! U-shaped gated 2-D conv encoder/decoder with an LSTM bottleneck.
//! Shared by the dynamic embedding unit and the compensation model.

use super::config::ModelConfig;
use super::layers::{Conv2d, GatedConv2d, GatedDeconv2d, InstanceNorm, LstmStack, Prelu};
use crate::error::shape_err;
use crate::tensor::{Backend, LayerSpec, ParamLayout};
use crate::Result;
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct Level<L> {
    pub conv: L,
    pub norm: InstanceNorm,
    pub act: Prelu,
}

#[derive(Debug, Clone)]
pub struct U2Lstm {
    pub in_channels: usize,
    pub out_channels: usize,
    pub encoder: Vec<Level<GatedConv2d>>,
    pub lstm: LstmStack,
    /// Innermost level first.
    pub decoder: Vec<Level<GatedDeconv2d>>,
    pub head: Conv2d,
    /// Encoder frequency sizes, input first.
    pub freqs: Vec<usize>,
}

impl U2Lstm {
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        cfg: &ModelConfig,
        in_channels: usize,
        out_channels: usize,
    ) -> Self {
        let u = &cfg.u2lstm;
        let ch = u.channels;
        let kernel = |l: usize| {
            if l == 0 {
                u.first_kernel
            } else {
                u.other_kernel
            }
        };
        let encoder = (0..u.enc_layers)
            .map(|l| {
                let ci = if l == 0 { in_channels } else { ch };
                let n = format!("{name}.enc{l}");
                Level {
                    conv: GatedConv2d::new(
                        layout,
                        &n,
                        LayerSpec::gconv2d(ci, ch, kernel(l), u.stride),
                    ),
                    norm: InstanceNorm::new(layout, &format!("{n}.norm"), ch),
                    act: Prelu::new(layout, &format!("{n}.act"), ch),
                }
            })
            .collect();
        let freqs = cfg.encoder_freqs();
        let width = ch * freqs[u.enc_layers];
        let lstm = LstmStack::new(layout, &format!("{name}.lstm"), width, width, u.lstm_layers);
        let decoder = (0..u.enc_layers)
            .rev()
            .map(|l| {
                let n = format!("{name}.dec{l}");
                Level {
                    conv: GatedDeconv2d::new(
                        layout,
                        &n,
                        LayerSpec::gdeconv2d(2 * ch, ch, kernel(l), u.stride),
                    ),
                    norm: InstanceNorm::new(layout, &format!("{n}.norm"), ch),
                    act: Prelu::new(layout, &format!("{n}.act"), ch),
                }
            })
            .collect();
        let head = Conv2d::new(layout, &format!("{name}.head"), ch, out_channels, (1, 1), 1);
        Self {
            in_channels,
            out_channels,
            encoder,
            lstm,
            decoder,
            head,
            freqs,
        }
    }

    /// `[C_in, T, F] -> [C_out, T, F]`.
    pub fn forward<B: Backend>(&self, bk: &mut B, x: &B::Value) -> Result<B::Value> {
        let shape = bk.shape(x);
        if shape.len() != 3 || shape[0] != self.in_channels || shape[2] != self.freqs[0] {
            return Err(shape_err!(
                "u2lstm expects [{}, T, {}], got {shape:?}",
                self.in_channels,
                self.freqs[0]
            ));
        }
        let mut skips = Vec::with_capacity(self.encoder.len());
        let mut h = x.clone();
        for lvl in &self.encoder {
            h = lvl.conv.forward(bk, &h)?;
            h = lvl.norm.forward(bk, &h)?;
            h = lvl.act.forward(bk, &h)?;
            skips.push(h.clone());
        }
        let ch = bk.shape(&h)[0];
        let flat = bk.flatten_freq(&h)?;
        let seq = self.lstm.forward(bk, &flat)?;
        let mut h = bk.unflatten_freq(&seq, ch)?;
        for (i, lvl) in self.decoder.iter().enumerate() {
            let level = self.encoder.len() - 1 - i;
            let skip = &skips[level];
            let cat = bk.concat(&[&h, skip])?;
            h = lvl.conv.forward(bk, &cat, self.freqs[level])?;
            h = lvl.norm.forward(bk, &h)?;
            h = lvl.act.forward(bk, &h)?;
        }
        self.head.forward(bk, &h)
    }
}
