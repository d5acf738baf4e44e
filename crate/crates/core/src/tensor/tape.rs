//! Training backend: evaluates eagerly and records every op so that one
//! reverse sweep yields gradients for all parameters and inputs.

use super::backend::{Backend, LstmIds, NormIds};
use super::kernels::{activation, conv1d, conv2d, deconv2d, lstm, norm};
use super::{ParamId, ParamStore, Tensor};
use crate::error::shape_err;
use crate::{Error, Result};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodeId(usize);

/// Batch statistics seen by one norm layer during a forward pass.
#[derive(Debug, Clone)]
pub struct NormStat {
    pub ids: NormIds,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

enum Op {
    Input,
    Conv1d {
        x: NodeId,
        w: ParamId,
        b: ParamId,
        dilation: usize,
    },
    Conv2d {
        x: NodeId,
        w: ParamId,
        b: ParamId,
        stride: usize,
    },
    Deconv2d {
        x: NodeId,
        w: ParamId,
        b: ParamId,
        stride: usize,
    },
    Norm {
        x: NodeId,
        ids: NormIds,
        cache: norm::NormCache,
    },
    Lstm {
        x: NodeId,
        ids: LstmIds,
        cache: lstm::LstmCache,
    },
    Prelu {
        x: NodeId,
        slope: ParamId,
    },
    Sigmoid(NodeId),
    Tanh(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Concat(Vec<NodeId>),
    Narrow {
        x: NodeId,
        start: usize,
    },
    NarrowLast {
        x: NodeId,
        start: usize,
    },
    Flatten(NodeId),
    Unflatten(NodeId),
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Clone, Default)]
pub struct Gradients {
    params: BTreeMap<ParamId, Tensor>,
    inputs: BTreeMap<NodeId, Tensor>,
}

impl Gradients {
    pub fn param(&self, id: ParamId) -> Option<&Tensor> {
        self.params.get(&id)
    }

    pub fn input(&self, id: NodeId) -> Option<&Tensor> {
        self.inputs.get(&id)
    }

    pub fn params(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.params.iter().map(|(k, v)| (*k, v))
    }

    pub fn sq_norm(&self) -> f64 {
        self.params.values().map(|t| t.dot(t)).sum()
    }

    fn acc_param(&mut self, id: ParamId, g: Tensor) {
        match self.params.get_mut(&id) {
            Some(t) => t.add_assign(&g),
            None => {
                self.params.insert(id, g);
            }
        }
    }
}

pub struct Tape<'a> {
    store: &'a ParamStore,
    nodes: Vec<Node>,
    norm_stats: Vec<NormStat>,
    consumed: bool,
}

impl<'a> Tape<'a> {
    pub fn new(store: &'a ParamStore) -> Self {
        Self {
            store,
            nodes: Vec::new(),
            norm_stats: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn norm_stats(&self) -> &[NormStat] {
        &self.norm_stats
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    fn p(&self, id: ParamId) -> &'a Tensor {
        self.store.get(id)
    }

    /// Reverse sweep from `output` seeded with `seed = dL/d(output)`.
    /// A tape can be swept once; a second call is [`Error::StaleGraph`].
    pub fn backward(&mut self, output: NodeId, seed: Tensor) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::StaleGraph);
        }
        if seed.shape() != self.get(output).shape() {
            return Err(shape_err!(
                "seed {:?} for output {:?}",
                seed.shape(),
                self.get(output).shape()
            ));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(seed);
        let mut out = Gradients::default();
        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let mut send = |id: NodeId, t: Tensor| match &mut grads[id.0] {
                Some(acc) => acc.add_assign(&t),
                slot => *slot = Some(t),
            };
            match &node.op {
                Op::Input => {
                    out.inputs.insert(NodeId(idx), g);
                }
                Op::Conv1d { x, w, b, dilation } => {
                    let r = conv1d::backward(self.get(*x), self.p(*w), &g, *dilation)?;
                    send(*x, r.dx);
                    out.acc_param(*w, r.dw);
                    out.acc_param(*b, r.db);
                }
                Op::Conv2d { x, w, b, stride } => {
                    let r = conv2d::backward(self.get(*x), self.p(*w), &g, *stride)?;
                    send(*x, r.dx);
                    out.acc_param(*w, r.dw);
                    out.acc_param(*b, r.db);
                }
                Op::Deconv2d { x, w, b, stride } => {
                    let r = deconv2d::backward(self.get(*x), self.p(*w), &g, *stride)?;
                    send(*x, r.dx);
                    out.acc_param(*w, r.dw);
                    out.acc_param(*b, r.db);
                }
                Op::Norm { x, ids, cache } => {
                    let r = norm::backward_utterance(cache, self.p(ids.gamma), &g)?;
                    send(*x, r.dx);
                    out.acc_param(ids.gamma, r.dgamma);
                    out.acc_param(ids.beta, r.dbeta);
                }
                Op::Lstm { x, ids, cache } => {
                    let r = lstm::backward(cache, self.p(ids.w_ih), self.p(ids.w_hh), &g)?;
                    send(*x, r.dx);
                    out.acc_param(ids.w_ih, r.dw_ih);
                    out.acc_param(ids.w_hh, r.dw_hh);
                    out.acc_param(ids.b, r.db);
                }
                Op::Prelu { x, slope } => {
                    let (dx, da) = activation::prelu_backward(self.get(*x), self.p(*slope), &g)?;
                    send(*x, dx);
                    out.acc_param(*slope, da);
                }
                Op::Sigmoid(x) => {
                    send(*x, g.zip_map(&node.value, |g, y| g * y * (1.0 - y))?);
                }
                Op::Tanh(x) => {
                    send(*x, g.zip_map(&node.value, |g, y| g * (1.0 - y * y))?);
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g);
                }
                Op::Sub(a, b) => {
                    send(*b, g.scale(-1.0));
                    send(*a, g);
                }
                Op::Mul(a, b) => {
                    send(*a, g.zip_map(self.get(*b), |g, v| g * v)?);
                    send(*b, g.zip_map(self.get(*a), |g, v| g * v)?);
                }
                Op::Concat(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let n = self.get(*p).dim(0);
                        send(*p, g.narrow(start, n)?);
                        start += n;
                    }
                }
                Op::Narrow { x, start } => {
                    let src = self.get(*x);
                    let mut dx = Tensor::zeros(src.shape());
                    let row = src.row_len();
                    dx.data_mut()[start * row..start * row + g.len()].copy_from_slice(g.data());
                    send(*x, dx);
                }
                Op::NarrowLast { x, start } => {
                    let src = self.get(*x);
                    let f = src.shape()[2];
                    let len = g.shape()[2];
                    let mut dx = Tensor::zeros(src.shape());
                    for (r, chunk) in g.data().chunks_exact(len).enumerate() {
                        dx.data_mut()[r * f + start..r * f + start + len].copy_from_slice(chunk);
                    }
                    send(*x, dx);
                }
                Op::Flatten(x) => {
                    let c = self.get(*x).dim(0);
                    send(*x, g.unflatten_freq(c)?);
                }
                Op::Unflatten(x) => {
                    send(*x, g.flatten_freq()?);
                }
            }
        }
        Ok(out)
    }
}

impl Backend for Tape<'_> {
    type Value = NodeId;

    fn store(&self) -> &ParamStore {
        self.store
    }

    fn value<'v>(&'v self, v: &'v NodeId) -> &'v Tensor {
        self.get(*v)
    }

    fn input(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Input)
    }

    fn conv1d(&mut self, x: &NodeId, w: ParamId, b: ParamId, dilation: usize) -> Result<NodeId> {
        let y = conv1d::forward(self.get(*x), None, self.p(w), self.p(b), dilation)?;
        Ok(self.push(
            y,
            Op::Conv1d {
                x: *x,
                w,
                b,
                dilation,
            },
        ))
    }

    fn conv2d(&mut self, x: &NodeId, w: ParamId, b: ParamId, stride: usize) -> Result<NodeId> {
        let y = conv2d::forward(self.get(*x), None, self.p(w), self.p(b), stride)?;
        Ok(self.push(
            y,
            Op::Conv2d {
                x: *x,
                w,
                b,
                stride,
            },
        ))
    }

    fn deconv2d(
        &mut self,
        x: &NodeId,
        w: ParamId,
        b: ParamId,
        stride: usize,
        out_f: usize,
    ) -> Result<NodeId> {
        let y = deconv2d::forward(self.get(*x), None, self.p(w), self.p(b), stride, out_f)?;
        Ok(self.push(
            y,
            Op::Deconv2d {
                x: *x,
                w,
                b,
                stride,
            },
        ))
    }

    fn instance_norm(&mut self, x: &NodeId, ids: NormIds) -> Result<NodeId> {
        let (y, cache) =
            norm::forward_utterance(self.get(*x), self.p(ids.gamma), self.p(ids.beta))?;
        self.norm_stats.push(NormStat {
            ids,
            mean: cache.mean.clone(),
            var: cache.var.clone(),
        });
        Ok(self.push(y, Op::Norm { x: *x, ids, cache }))
    }

    fn lstm(&mut self, x: &NodeId, ids: LstmIds) -> Result<NodeId> {
        let (y, cache) = lstm::forward_cached(
            self.get(*x),
            self.p(ids.w_ih),
            self.p(ids.w_hh),
            self.p(ids.b),
        )?;
        Ok(self.push(y, Op::Lstm { x: *x, ids, cache }))
    }

    fn prelu(&mut self, x: &NodeId, slope: ParamId) -> Result<NodeId> {
        let y = activation::prelu(self.get(*x), self.p(slope))?;
        Ok(self.push(y, Op::Prelu { x: *x, slope }))
    }

    fn sigmoid(&mut self, x: &NodeId) -> NodeId {
        let y = activation::sigmoid(self.get(*x));
        self.push(y, Op::Sigmoid(*x))
    }

    fn tanh(&mut self, x: &NodeId) -> NodeId {
        let y = activation::tanh(self.get(*x));
        self.push(y, Op::Tanh(*x))
    }

    fn add(&mut self, a: &NodeId, b: &NodeId) -> Result<NodeId> {
        let y = self.get(*a).zip_map(self.get(*b), |x, y| x + y)?;
        Ok(self.push(y, Op::Add(*a, *b)))
    }

    fn sub(&mut self, a: &NodeId, b: &NodeId) -> Result<NodeId> {
        let y = self.get(*a).zip_map(self.get(*b), |x, y| x - y)?;
        Ok(self.push(y, Op::Sub(*a, *b)))
    }

    fn mul(&mut self, a: &NodeId, b: &NodeId) -> Result<NodeId> {
        let y = self.get(*a).zip_map(self.get(*b), |x, y| x * y)?;
        Ok(self.push(y, Op::Mul(*a, *b)))
    }

    fn concat(&mut self, parts: &[&NodeId]) -> Result<NodeId> {
        let vals: Vec<&Tensor> = parts.iter().map(|p| self.get(**p)).collect();
        let y = Tensor::concat(&vals)?;
        Ok(self.push(y, Op::Concat(parts.iter().map(|p| **p).collect())))
    }

    fn narrow(&mut self, x: &NodeId, start: usize, len: usize) -> Result<NodeId> {
        let y = self.get(*x).narrow(start, len)?;
        Ok(self.push(y, Op::Narrow { x: *x, start }))
    }

    fn narrow_last(&mut self, x: &NodeId, start: usize, len: usize) -> Result<NodeId> {
        let y = self.get(*x).narrow_last(start, len)?;
        Ok(self.push(y, Op::NarrowLast { x: *x, start }))
    }

    fn flatten_freq(&mut self, x: &NodeId) -> Result<NodeId> {
        let y = self.get(*x).flatten_freq()?;
        Ok(self.push(y, Op::Flatten(*x)))
    }

    fn unflatten_freq(&mut self, x: &NodeId, channels: usize) -> Result<NodeId> {
        let y = self.get(*x).unflatten_freq(channels)?;
        Ok(self.push(y, Op::Unflatten(*x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Init, ParamLayout};

    #[test]
    fn second_backward_is_stale() {
        let mut layout = ParamLayout::new();
        let s = layout.add("s", &[1], Init::Const(0.25));
        let store = layout.init(0);
        let mut tape = Tape::new(&store);
        let x = tape.input(Tensor::from_vec(&[1, 2], alloc::vec![-1.0, 2.0]).unwrap());
        let y = tape.prelu(&x, s).unwrap();
        let g = tape.backward(y, Tensor::full(&[1, 2], 1.0)).unwrap();
        assert_eq!(g.param(s).unwrap().data(), &[-1.0]);
        assert_eq!(g.input(x).unwrap().data(), &[0.25, 1.0]);
        assert!(matches!(
            tape.backward(y, Tensor::full(&[1, 2], 1.0)),
            Err(Error::StaleGraph)
        ));
    }

    #[test]
    fn fan_out_accumulates() {
        let store = ParamLayout::new().init(0);
        let mut tape = Tape::new(&store);
        let x = tape.input(Tensor::from_vec(&[1, 1], alloc::vec![3.0]).unwrap());
        let y = tape.mul(&x, &x).unwrap();
        let g = tape.backward(y, Tensor::full(&[1, 1], 1.0)).unwrap();
        assert_eq!(g.input(x).unwrap().data(), &[6.0]);
    }
}
