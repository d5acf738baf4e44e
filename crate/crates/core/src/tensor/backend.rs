//! The operation set the model is written against. A backend either runs
//! the op immediately ([`Runner`](super::Runner)) or also records it for
//! reverse mode ([`Tape`](super::Tape)).

use super::{ParamId, ParamStore, Tensor};
use crate::Result;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormIds {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub mean: ParamId,
    pub var: ParamId,
}

impl NormIds {
    /// From the ids returned by `LayerSpec::register` for a norm layer.
    pub fn from_slice(ids: &[ParamId]) -> Self {
        Self {
            gamma: ids[0],
            beta: ids[1],
            mean: ids[2],
            var: ids[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmIds {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b: ParamId,
}

impl LstmIds {
    pub fn from_slice(ids: &[ParamId]) -> Self {
        Self {
            w_ih: ids[0],
            w_hh: ids[1],
            b: ids[2],
        }
    }
}

pub trait Backend {
    type Value: Clone;

    fn store(&self) -> &ParamStore;
    fn value<'v>(&'v self, v: &'v Self::Value) -> &'v Tensor;
    fn input(&mut self, t: Tensor) -> Self::Value;

    fn shape(&self, v: &Self::Value) -> Vec<usize> {
        self.value(v).shape().to_vec()
    }

    /// `[Ci, T] -> [Co, T]`, causal, dilated.
    fn conv1d(
        &mut self,
        x: &Self::Value,
        w: ParamId,
        b: ParamId,
        dilation: usize,
    ) -> Result<Self::Value>;
    /// `[Ci, T, F] -> [Co, T, F']`, causal in time, strided in frequency.
    fn conv2d(
        &mut self,
        x: &Self::Value,
        w: ParamId,
        b: ParamId,
        stride: usize,
    ) -> Result<Self::Value>;
    fn deconv2d(
        &mut self,
        x: &Self::Value,
        w: ParamId,
        b: ParamId,
        stride: usize,
        out_f: usize,
    ) -> Result<Self::Value>;
    fn instance_norm(&mut self, x: &Self::Value, ids: NormIds) -> Result<Self::Value>;
    /// `[D, T] -> [H, T]`.
    fn lstm(&mut self, x: &Self::Value, ids: LstmIds) -> Result<Self::Value>;

    fn prelu(&mut self, x: &Self::Value, slope: ParamId) -> Result<Self::Value>;
    fn sigmoid(&mut self, x: &Self::Value) -> Self::Value;
    fn tanh(&mut self, x: &Self::Value) -> Self::Value;
    fn add(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn sub(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn mul(&mut self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;

    /// Axis-0 concatenation.
    fn concat(&mut self, parts: &[&Self::Value]) -> Result<Self::Value>;
    fn narrow(&mut self, x: &Self::Value, start: usize, len: usize) -> Result<Self::Value>;
    fn narrow_last(&mut self, x: &Self::Value, start: usize, len: usize) -> Result<Self::Value>;
    fn flatten_freq(&mut self, x: &Self::Value) -> Result<Self::Value>;
    fn unflatten_freq(&mut self, x: &Self::Value, channels: usize) -> Result<Self::Value>;
}
