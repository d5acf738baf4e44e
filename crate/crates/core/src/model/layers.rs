//! Thin layer handles: parameter ids plus the op sequence, generic over
//! the execution backend.

use crate::tensor::{Backend, Init, LayerSpec, LstmIds, NormIds, ParamId, ParamLayout};
use crate::Result;
use alloc::format;
use alloc::vec::Vec;

/// Causal dilated 1-D convolution (`k = 1` is the pointwise case).
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub spec: LayerSpec,
    pub w: ParamId,
    pub b: ParamId,
}

impl Conv1d {
    pub fn new(layout: &mut ParamLayout, name: &str, spec: LayerSpec) -> Self {
        let ids = spec.register(layout, name);
        Self {
            spec,
            w: ids[0],
            b: ids[1],
        }
    }

    pub fn pointwise(layout: &mut ParamLayout, name: &str, ci: usize, co: usize) -> Self {
        Self::new(layout, name, LayerSpec::pointwise(ci, co))
    }

    pub fn forward<B: Backend>(&self, bk: &mut B, x: &B::Value) -> Result<B::Value> {
        bk.conv1d(x, self.w, self.b, self.spec.dilation)
    }
}

/// Ungated 2-D convolution, used as the `1x1` channel mixer.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub w: ParamId,
    pub b: ParamId,
    pub stride: usize,
}

impl Conv2d {
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        ci: usize,
        co: usize,
        kernel: (usize, usize),
        stride: usize,
    ) -> Self {
        let fan = ci * kernel.0 * kernel.1;
        Self {
            w: layout.add(
                format!("{name}.w"),
                &[co, ci, kernel.0, kernel.1],
                Init::fan_in(fan),
            ),
            b: layout.add(format!("{name}.b"), &[co], Init::Zeros),
            stride,
        }
    }

    pub fn forward<B: Backend>(&self, bk: &mut B, x: &B::Value) -> Result<B::Value> {
        bk.conv2d(x, self.w, self.b, self.stride)
    }
}

/// `conv_a(x) * sigmoid(conv_b(x))`.
#[derive(Debug, Clone)]
pub struct GatedConv2d {
    pub spec: LayerSpec,
    ids: Vec<ParamId>,
}

impl GatedConv2d {
    pub fn new(layout: &mut ParamLayout, name: &str, spec: LayerSpec) -> Self {
        Self {
            ids: spec.register(layout, name),
            spec,
        }
    }

    pub fn forward<B: Backend>(&self, bk: &mut B, x: &B::Value) -> Result<B::Value> {
        let lin = bk.conv2d(x, self.ids[0], self.ids[1], self.spec.stride)?;
        let gate = bk.conv2d(x, self.ids[2], self.ids[3], self.spec.stride)?;
        let gate = bk.sigmoid(&gate);
        bk.mul(&lin, &gate)
    }

    pub fn gate_bias(&self) -> ParamId {
        self.ids[3]
    }

    /// Linear and gate kernel ids.
    pub fn weight_ids(&self) -> [ParamId; 2] {
        [self.ids[0], self.ids[2]]
    }
}

/// Gated transposed convolution with an explicit output width.
#[derive(Debug, Clone)]
pub struct GatedDeconv2d {
    pub spec: LayerSpec,
    ids: Vec<ParamId>,
}

impl GatedDeconv2d {
    pub fn new(layout: &mut ParamLayout, name: &str, spec: LayerSpec) -> Self {
        Self {
            ids: spec.register(layout, name),
            spec,
        }
    }

    pub fn forward<B: Backend>(&self, bk: &mut B, x: &B::Value, out_f: usize) -> Result<B::Value> {
        let s = self.spec.stride;
        let lin = bk.deconv2d(x, self.ids[0], self.ids[1], s, out_f)?;
        let gate = bk.deconv2d(x, self.ids[2], self.ids[3], s, out_f)?;
        let gate = bk.sigmoid(&gate);
        bk.mul(&lin, &gate)
    }

    pub fn weight_ids(&self) -> [ParamId; 2] {
        [self.ids[0], self.ids[2]]
    }
}

#[derive(Debug, Clone)]
pub struct InstanceNorm {
    pub ids: NormIds,
}

impl InstanceNorm {
    pub fn new(layout: &mut ParamLayout, name: &str, channels: usize) -> Self {
        Self {
            ids: NormIds::from_slice(&LayerSpec::instance_norm(channels).register(layout, name)),
        }
    }

    pub fn forward<B: Backend>(&self, bk: &mut B, x: &B::Value) -> Result<B::Value> {
        bk.instance_norm(x, self.ids)
    }
}

#[derive(Debug, Clone)]
pub struct Prelu {
    pub slope: ParamId,
}

impl Prelu {
    pub fn new(layout: &mut ParamLayout, name: &str, channels: usize) -> Self {
        Self {
            slope: layout.add(format!("{name}.slope"), &[channels], Init::Const(0.25)),
        }
    }

    pub fn forward<B: Backend>(&self, bk: &mut B, x: &B::Value) -> Result<B::Value> {
        bk.prelu(x, self.slope)
    }
}

/// Stacked unidirectional LSTM over `[D, T]`.
#[derive(Debug, Clone)]
pub struct LstmStack {
    pub layers: Vec<LstmIds>,
}

impl LstmStack {
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        input: usize,
        hidden: usize,
        depth: usize,
    ) -> Self {
        let layers = (0..depth)
            .map(|l| {
                let d = if l == 0 { input } else { hidden };
                LstmIds::from_slice(
                    &LayerSpec::lstm(d, hidden).register(layout, &format!("{name}.{l}")),
                )
            })
            .collect();
        Self { layers }
    }

    pub fn forward<B: Backend>(&self, bk: &mut B, x: &B::Value) -> Result<B::Value> {
        let mut h = x.clone();
        for ids in &self.layers {
            h = bk.lstm(&h, *ids)?;
        }
        Ok(h)
    }
}
