//! Gated temporal convolution stack over the compressed magnitudes.
//!
//! Block: pointwise in -> PReLU -> `dil(x) * sigmoid(dil_gate(x))` ->
//! pointwise out, added back onto the residual stream.

use super::config::ModelConfig;
use super::layers::{Conv1d, Prelu};
use crate::tensor::{Backend, LayerSpec, ParamLayout};
use crate::{Result, NUM_SUBCHANNELS};
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct GtcmBlock {
    pub dilation: usize,
    pub inp: Conv1d,
    pub act: Prelu,
    pub conv: Conv1d,
    pub gate: Conv1d,
    pub out: Conv1d,
}

impl GtcmBlock {
    pub fn forward<B: Backend>(&self, bk: &mut B, x: &B::Value) -> Result<B::Value> {
        let h = self.inp.forward(bk, x)?;
        let h = self.act.forward(bk, &h)?;
        let lin = self.conv.forward(bk, &h)?;
        let gate = self.gate.forward(bk, &h)?;
        let gate = bk.sigmoid(&gate);
        let h = bk.mul(&lin, &gate)?;
        let h = self.out.forward(bk, &h)?;
        bk.add(x, &h)
    }
}

#[derive(Debug, Clone)]
pub struct Gtcm {
    pub proj: Conv1d,
    pub blocks: Vec<GtcmBlock>,
    receptive_field: usize,
}

impl Gtcm {
    pub fn new(layout: &mut ParamLayout, name: &str, cfg: &ModelConfig) -> Self {
        let g = &cfg.gtcm;
        let bins = crate::dsp::WindowSpec::default().bins();
        let proj = Conv1d::pointwise(
            layout,
            &format!("{name}.proj"),
            NUM_SUBCHANNELS * bins,
            g.channels,
        );
        let mut blocks = Vec::new();
        for grp in 0..g.groups {
            for (i, &d) in g.dilations.iter().enumerate() {
                let n = format!("{name}.g{grp}.b{i}");
                blocks.push(GtcmBlock {
                    dilation: d,
                    inp: Conv1d::pointwise(layout, &format!("{n}.in"), g.channels, g.hidden),
                    act: Prelu::new(layout, &format!("{n}.act"), g.hidden),
                    conv: Conv1d::new(
                        layout,
                        &format!("{n}.conv"),
                        LayerSpec::conv1d(g.hidden, g.hidden, g.kernel, d),
                    ),
                    gate: Conv1d::new(
                        layout,
                        &format!("{n}.gate"),
                        LayerSpec::conv1d(g.hidden, g.hidden, g.kernel, d),
                    ),
                    out: Conv1d::pointwise(layout, &format!("{n}.out"), g.hidden, g.channels),
                });
            }
        }
        Self {
            proj,
            blocks,
            receptive_field: cfg.gtcm_receptive_field(),
        }
    }

    /// Frames of input context behind each output frame.
    pub fn receptive_field(&self) -> usize {
        self.receptive_field
    }

    /// `[3, T, F]` compressed magnitudes -> `[channels, T]`.
    pub fn forward<B: Backend>(&self, bk: &mut B, mag: &B::Value) -> Result<B::Value> {
        let flat = bk.flatten_freq(mag)?;
        let x = self.proj.forward(bk, &flat)?;
        self.run_blocks(bk, &x)
    }

    /// The residual blocks alone, on an already projected `[channels, T]`.
    pub fn run_blocks<B: Backend>(&self, bk: &mut B, x: &B::Value) -> Result<B::Value> {
        let mut x = x.clone();
        for b in &self.blocks {
            x = b.forward(bk, &x)?;
        }
        Ok(x)
    }
}
