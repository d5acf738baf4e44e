//! Multi-scale sub-band temporal convolution network.
//!
//! The dynamic embedding is cut into frequency bands, each projected to
//! `band_dim` and fused with the fixed (GTCM) embedding. Inside every
//! block band `b` convolves `[F_{b-1}, Y_b]`, where `F_{b-1}` is band
//! `b-1`'s output of the same block, so information only moves upward in
//! band index.

use super::config::ModelConfig;
use super::layers::{Conv1d, Prelu};
use crate::error::shape_err;
use crate::tensor::{Backend, LayerSpec, ParamLayout};
use crate::Result;
use alloc::format;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct BandConv {
    pub conv: Conv1d,
    pub act: Prelu,
    pub out: Conv1d,
}

#[derive(Debug, Clone)]
pub struct MstcnBlock {
    pub dilation: usize,
    pub bands: Vec<BandConv>,
}

#[derive(Debug, Clone)]
pub struct Mstcn {
    pub ranges: Vec<(usize, usize)>,
    pub band_proj: Vec<Conv1d>,
    pub fuse: Vec<Conv1d>,
    pub blocks: Vec<MstcnBlock>,
    pub band_dim: usize,
}

/// Intervention used by the band-directionality probe: band `b`'s block
/// output is replaced by zeros before it reaches band `b + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BandProbe {
    pub sever_after: Option<usize>,
}

impl Mstcn {
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        cfg: &ModelConfig,
        fixed_dim: usize,
        dyn_channels: usize,
    ) -> Self {
        let m = &cfg.mstcn;
        let ranges = cfg.band_ranges();
        let d = m.band_dim;
        let band_proj = ranges
            .iter()
            .enumerate()
            .map(|(b, &(_, len))| {
                Conv1d::pointwise(layout, &format!("{name}.proj{b}"), dyn_channels * len, d)
            })
            .collect();
        let fuse = (0..ranges.len())
            .map(|b| Conv1d::pointwise(layout, &format!("{name}.fuse{b}"), fixed_dim + d, d))
            .collect();
        let mut blocks = Vec::new();
        for grp in 0..m.groups {
            for (i, &dil) in m.dilations.iter().enumerate() {
                let bands = (0..ranges.len())
                    .map(|b| {
                        let n = format!("{name}.g{grp}.b{i}.band{b}");
                        let ci = if b == 0 { d } else { 2 * d };
                        BandConv {
                            conv: Conv1d::new(
                                layout,
                                &format!("{n}.conv"),
                                LayerSpec::conv1d(ci, m.hidden, m.kernel, dil),
                            ),
                            act: Prelu::new(layout, &format!("{n}.act"), m.hidden),
                            out: Conv1d::pointwise(layout, &format!("{n}.out"), m.hidden, d),
                        }
                    })
                    .collect();
                blocks.push(MstcnBlock {
                    dilation: dil,
                    bands,
                });
            }
        }
        Self {
            ranges,
            band_proj,
            fuse,
            blocks,
            band_dim: d,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.band_dim * self.ranges.len()
    }

    /// Per-band fused inputs `Y_b`, each `[band_dim, T]`.
    pub fn band_inputs<B: Backend>(
        &self,
        bk: &mut B,
        fixed: &B::Value,
        dynamic: &B::Value,
    ) -> Result<Vec<B::Value>> {
        let ds = bk.shape(dynamic);
        let bins: usize = self.ranges.iter().map(|r| r.1).sum();
        if ds.len() != 3 || ds[2] != bins {
            return Err(shape_err!(
                "mstcn dynamic embedding {ds:?} does not cover {bins} bins"
            ));
        }
        let mut ys = Vec::with_capacity(self.ranges.len());
        for (b, &(start, len)) in self.ranges.iter().enumerate() {
            let band = bk.narrow_last(dynamic, start, len)?;
            let band = bk.flatten_freq(&band)?;
            let band = self.band_proj[b].forward(bk, &band)?;
            let cat = bk.concat(&[fixed, &band])?;
            ys.push(self.fuse[b].forward(bk, &cat)?);
        }
        Ok(ys)
    }

    /// Residual blocks over already fused bands; returns per-band outputs.
    pub fn run_blocks<B: Backend>(
        &self,
        bk: &mut B,
        ys: Vec<B::Value>,
        probe: BandProbe,
    ) -> Result<Vec<B::Value>> {
        if ys.len() != self.ranges.len() {
            return Err(shape_err!(
                "mstcn expects {} bands, got {}",
                self.ranges.len(),
                ys.len()
            ));
        }
        let mut ys = ys;
        for blk in &self.blocks {
            let mut next: Vec<B::Value> = Vec::with_capacity(ys.len());
            for (b, bc) in blk.bands.iter().enumerate() {
                let inp = match next.last() {
                    None => ys[b].clone(),
                    Some(prev) => {
                        let prev = if probe.sever_after == Some(b - 1) {
                            let shape = bk.shape(prev);
                            bk.input(crate::tensor::Tensor::zeros(&shape))
                        } else {
                            prev.clone()
                        };
                        bk.concat(&[&prev, &ys[b]])?
                    }
                };
                let h = bc.conv.forward(bk, &inp)?;
                let h = bc.act.forward(bk, &h)?;
                let h = bc.out.forward(bk, &h)?;
                next.push(bk.add(&ys[b], &h)?);
            }
            ys = next;
        }
        Ok(ys)
    }

    /// `fixed [D_fixed, T]`, `dynamic [C, T, F]` -> `[bands * band_dim, T]`.
    pub fn forward<B: Backend>(
        &self,
        bk: &mut B,
        fixed: &B::Value,
        dynamic: &B::Value,
    ) -> Result<B::Value> {
        self.forward_probe(bk, fixed, dynamic, BandProbe::default())
    }

    pub fn forward_probe<B: Backend>(
        &self,
        bk: &mut B,
        fixed: &B::Value,
        dynamic: &B::Value,
        probe: BandProbe,
    ) -> Result<B::Value> {
        let ys = self.band_inputs(bk, fixed, dynamic)?;
        let outs = self.run_blocks(bk, ys, probe)?;
        let refs: Vec<&B::Value> = outs.iter().collect();
        bk.concat(&refs)
    }
}
