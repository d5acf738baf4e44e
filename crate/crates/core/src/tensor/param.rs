//! Named parameter tensors, their deterministic initialisation, and the
//! per-layer parameter recipes.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::Rng;

use super::Tensor;
use crate::{math, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ParamKind {
    /// Updated by the optimiser.
    Trainable,
    /// Running statistics; stored and checkpointed but never differentiated.
    Buffer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    Const(f64),
    /// Uniform in `[-bound, bound)`.
    Uniform(f64),
}

impl Init {
    /// Fan-in scaled uniform initialisation for convolutions.
    pub fn fan_in(fan_in: usize) -> Self {
        Init::Uniform(1.0 / math::sqrt(fan_in.max(1) as f64))
    }
}

#[derive(Debug, Clone)]
struct LayoutEntry {
    name: String,
    shape: Vec<usize>,
    init: Init,
    kind: ParamKind,
}

/// Ordered list of parameter declarations; ids are positions in it.
#[derive(Debug, Clone, Default)]
pub struct ParamLayout {
    entries: Vec<LayoutEntry>,
}

impl ParamLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, shape: &[usize], init: Init) -> ParamId {
        self.push(name.into(), shape, init, ParamKind::Trainable)
    }

    pub fn buffer(&mut self, name: impl Into<String>, shape: &[usize], init: Init) -> ParamId {
        self.push(name.into(), shape, init, ParamKind::Buffer)
    }

    fn push(&mut self, name: String, shape: &[usize], init: Init, kind: ParamKind) -> ParamId {
        debug_assert!(
            self.entries.iter().all(|e| e.name != name),
            "duplicate parameter {name}"
        );
        self.entries.push(LayoutEntry {
            name,
            shape: shape.to_vec(),
            init,
            kind,
        });
        ParamId(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn trainable_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kind == ParamKind::Trainable)
            .map(|e| e.shape.iter().product::<usize>())
            .sum()
    }

    /// Materialise every tensor. Each parameter draws from its own RNG
    /// stream, so values do not depend on declaration order elsewhere.
    pub fn init(&self, seed: u64) -> ParamStore {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let n: usize = e.shape.iter().product();
                let data = match e.init {
                    Init::Zeros => alloc::vec![0.0; n],
                    Init::Const(v) => alloc::vec![v; n],
                    Init::Uniform(bound) => {
                        let mut r = rng::seeded(seed, i as u64 + 1);
                        (0..n).map(|_| r.gen_range(-bound..bound)).collect()
                    }
                };
                ParamEntry {
                    name: e.name.clone(),
                    tensor: Tensor::from_vec(&e.shape, data).expect("layout shape"),
                    kind: e.kind,
                }
            })
            .collect();
        ParamStore::from_entries(entries, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub tensor: Tensor,
    pub kind: ParamKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
    index: BTreeMap<String, ParamId>,
    seed: u64,
}

impl ParamStore {
    pub fn from_entries(entries: Vec<ParamEntry>, seed: u64) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.clone(), ParamId(i)))
            .collect();
        Self {
            entries,
            index,
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].tensor
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].tensor
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry {
        &self.entries[id.0]
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownParam(name.to_string()))
    }

    pub fn by_name(&self, name: &str) -> Result<&Tensor> {
        Ok(self.get(self.id(name)?))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        (0..self.entries.len()).map(ParamId)
    }

    /// Element count over every stored tensor, buffers included.
    pub fn total_count(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    pub fn trainable_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.kind == ParamKind::Trainable)
            .map(|e| e.tensor.len())
            .sum()
    }

    /// Zero every trainable tensor whose name starts with `prefix`.
    pub fn zero_prefix(&mut self, prefix: &str) -> usize {
        let mut n = 0;
        for e in &mut self.entries {
            if e.kind == ParamKind::Trainable && e.name.starts_with(prefix) {
                e.tensor.data_mut().fill(0.0);
                n += 1;
            }
        }
        n
    }

    /// Replace the tensor stored under `name`, keeping its shape.
    pub fn set(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        let id = self.id(name)?;
        if self.get(id).shape() != tensor.shape() {
            return Err(crate::error::shape_err!(
                "parameter {name} is {:?}, got {:?}",
                self.get(id).shape(),
                tensor.shape()
            ));
        }
        *self.get_mut(id) = tensor;
        Ok(())
    }

    /// True when `other` declares the same names, shapes and kinds.
    pub fn same_layout(&self, other: &ParamStore) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| {
                a.name == b.name && a.kind == b.kind && a.tensor.shape() == b.tensor.shape()
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv1d,
    GConv2d,
    GDeconv2d,
    InstanceNorm,
    Lstm,
    Pointwise,
}

/// Shape recipe for one layer: kernel `(time, freq)`, dilation (time),
/// output channels, stride (freq).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: (usize, usize),
    pub dilation: usize,
    pub stride: usize,
}

impl LayerSpec {
    pub fn conv1d(in_channels: usize, out_channels: usize, k: usize, dilation: usize) -> Self {
        Self {
            kind: LayerKind::Conv1d,
            in_channels,
            out_channels,
            kernel: (k, 1),
            dilation,
            stride: 1,
        }
    }

    pub fn pointwise(in_channels: usize, out_channels: usize) -> Self {
        Self {
            kind: LayerKind::Pointwise,
            ..Self::conv1d(in_channels, out_channels, 1, 1)
        }
    }

    pub fn gconv2d(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
    ) -> Self {
        Self {
            kind: LayerKind::GConv2d,
            in_channels,
            out_channels,
            kernel,
            dilation: 1,
            stride,
        }
    }

    pub fn gdeconv2d(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
    ) -> Self {
        Self {
            kind: LayerKind::GDeconv2d,
            ..Self::gconv2d(in_channels, out_channels, kernel, stride)
        }
    }

    pub fn instance_norm(channels: usize) -> Self {
        Self {
            kind: LayerKind::InstanceNorm,
            in_channels: channels,
            out_channels: channels,
            kernel: (1, 1),
            dilation: 1,
            stride: 1,
        }
    }

    pub fn lstm(input: usize, hidden: usize) -> Self {
        Self {
            kind: LayerKind::Lstm,
            in_channels: input,
            out_channels: hidden,
            kernel: (1, 1),
            dilation: 1,
            stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (kt, kf) = self.kernel;
        if kt == 0
            || kf == 0
            || self.dilation == 0
            || self.out_channels == 0
            || self.in_channels == 0
            || self.stride == 0
        {
            return Err(Error::InvalidConfig(alloc::format!(
                "degenerate layer {self:?}"
            )));
        }
        Ok(())
    }

    /// Frames of history a causal implementation must keep.
    pub fn history(&self) -> usize {
        match self.kind {
            LayerKind::Conv1d | LayerKind::Pointwise => (self.kernel.0 - 1) * self.dilation,
            LayerKind::GConv2d | LayerKind::GDeconv2d => self.kernel.0 - 1,
            LayerKind::InstanceNorm | LayerKind::Lstm => 0,
        }
    }

    /// Declare this layer's tensors under `name`, returned in a fixed order:
    /// conv `[w, b]`, gated conv `[w, b, gate_w, gate_b]`, norm
    /// `[gamma, beta, mean, var]`, lstm `[w_ih, w_hh, b]`.
    pub fn register(&self, layout: &mut ParamLayout, name: &str) -> Vec<ParamId> {
        let (ci, co) = (self.in_channels, self.out_channels);
        let (kt, kf) = self.kernel;
        let p = |s: &str| alloc::format!("{name}.{s}");
        match self.kind {
            LayerKind::Conv1d | LayerKind::Pointwise => alloc::vec![
                layout.add(p("w"), &[co, ci, kt], Init::fan_in(ci * kt)),
                layout.add(p("b"), &[co], Init::Zeros),
            ],
            LayerKind::GConv2d => alloc::vec![
                layout.add(p("w"), &[co, ci, kt, kf], Init::fan_in(ci * kt * kf)),
                layout.add(p("b"), &[co], Init::Zeros),
                layout.add(p("gate_w"), &[co, ci, kt, kf], Init::fan_in(ci * kt * kf)),
                layout.add(p("gate_b"), &[co], Init::Zeros),
            ],
            LayerKind::GDeconv2d => alloc::vec![
                layout.add(p("w"), &[ci, co, kt, kf], Init::fan_in(ci * kt * kf)),
                layout.add(p("b"), &[co], Init::Zeros),
                layout.add(p("gate_w"), &[ci, co, kt, kf], Init::fan_in(ci * kt * kf)),
                layout.add(p("gate_b"), &[co], Init::Zeros),
            ],
            LayerKind::InstanceNorm => alloc::vec![
                layout.add(p("gamma"), &[co], Init::Const(1.0)),
                layout.add(p("beta"), &[co], Init::Zeros),
                layout.buffer(p("running_mean"), &[co], Init::Zeros),
                layout.buffer(p("running_var"), &[co], Init::Const(1.0)),
            ],
            LayerKind::Lstm => {
                let bound = Init::Uniform(1.0 / math::sqrt(co as f64));
                alloc::vec![
                    layout.add(p("w_ih"), &[4 * co, ci], bound),
                    layout.add(p("w_hh"), &[4 * co, co], bound),
                    layout.add(p("b"), &[4 * co], Init::Zeros),
                ]
            }
        }
    }

    /// Stand-alone initialisation of just this layer.
    pub fn init_params(&self, seed: u64) -> ParamStore {
        let mut layout = ParamLayout::new();
        self.register(&mut layout, "layer");
        layout.init(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv1d_count() {
        let store = LayerSpec::conv1d(16, 32, 3, 1).init_params(0);
        assert_eq!(store.total_count(), 3 * 16 * 32 + 32);
        assert_eq!(store.total_count(), store.trainable_count());
    }

    #[test]
    fn same_seed_same_store() {
        let spec = LayerSpec::lstm(5, 7);
        assert_eq!(spec.init_params(9), spec.init_params(9));
        assert_ne!(spec.init_params(9), spec.init_params(10));
    }

    #[test]
    fn buffers_counted_separately() {
        let store = LayerSpec::instance_norm(4).init_params(0);
        assert_eq!(store.total_count(), 16);
        assert_eq!(store.trainable_count(), 8);
    }

    #[test]
    fn history_lengths() {
        assert_eq!(LayerSpec::conv1d(1, 1, 3, 5).history(), 10);
        assert_eq!(LayerSpec::pointwise(1, 1).history(), 0);
        assert_eq!(LayerSpec::gconv2d(1, 1, (2, 5), 2).history(), 1);
    }
}
