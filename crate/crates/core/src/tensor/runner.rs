//! Inference backend. Temporal layers read and refresh a [`RunnerCache`],
//! so feeding frames one call at a time gives the same result as one call
//! over the whole sequence.

use super::backend::{Backend, LstmIds, NormIds};
use super::kernels::{activation, conv1d, conv2d, deconv2d, lstm, norm};
use super::{ParamId, ParamStore, Tensor};
use crate::Result;
use alloc::collections::BTreeMap;

/// How instance norm obtains its statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMode {
    /// Stored running mean and variance. Causal.
    #[default]
    Running,
    /// Statistics of the current call. Not causal.
    Utterance,
}

/// Conv input histories keyed by weight id, LSTM states keyed by `w_ih`.
#[derive(Debug, Clone, Default)]
pub struct RunnerCache {
    conv: BTreeMap<ParamId, Tensor>,
    lstm: BTreeMap<ParamId, lstm::LstmState>,
}

impl RunnerCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.conv.clear();
        self.lstm.clear();
    }

    /// Number of stored layer states.
    pub fn len(&self) -> usize {
        self.conv.len() + self.lstm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total f64 values held.
    pub fn footprint(&self) -> usize {
        self.conv.values().map(Tensor::len).sum::<usize>()
            + self.lstm.values().map(|s| 2 * s.h.len()).sum::<usize>()
    }

    /// Stored input history of the conv whose weight is `w`.
    pub fn history(&self, w: ParamId) -> Option<&Tensor> {
        self.conv.get(&w)
    }

    pub fn lstm_state(&self, w_ih: ParamId) -> Option<&lstm::LstmState> {
        self.lstm.get(&w_ih)
    }

    fn take_history(&mut self, key: ParamId, x: &Tensor, frames: usize) -> Option<Tensor> {
        if frames == 0 {
            return None;
        }
        let past = self.conv.remove(&key);
        let joined = match &past {
            Some(h) => Tensor::concat_time(h, x).ok()?,
            None => {
                let mut shape = x.shape().to_vec();
                shape[1] = frames;
                Tensor::concat_time(&Tensor::zeros(&shape), x).ok()?
            }
        };
        self.conv.insert(key, joined.tail_time(frames));
        past
    }
}

pub struct Runner<'a> {
    store: &'a ParamStore,
    cache: RunnerCache,
    mode: NormMode,
}

impl<'a> Runner<'a> {
    pub fn new(store: &'a ParamStore) -> Self {
        Self::with_cache(store, RunnerCache::new())
    }

    pub fn with_cache(store: &'a ParamStore, cache: RunnerCache) -> Self {
        Self {
            store,
            cache,
            mode: NormMode::Running,
        }
    }

    pub fn norm_mode(mut self, mode: NormMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn cache(&self) -> &RunnerCache {
        &self.cache
    }

    pub fn into_cache(self) -> RunnerCache {
        self.cache
    }

    fn p(&self, id: ParamId) -> &'a Tensor {
        self.store.get(id)
    }
}

impl Backend for Runner<'_> {
    type Value = Tensor;

    fn store(&self) -> &ParamStore {
        self.store
    }

    fn value<'v>(&'v self, v: &'v Tensor) -> &'v Tensor {
        v
    }

    fn input(&mut self, t: Tensor) -> Tensor {
        t
    }

    fn conv1d(&mut self, x: &Tensor, w: ParamId, b: ParamId, dilation: usize) -> Result<Tensor> {
        let (wt, bt) = (self.p(w), self.p(b));
        let frames = (wt.dim(2).max(1) - 1) * dilation;
        let hist = self.cache.take_history(w, x, frames);
        conv1d::forward(x, hist.as_ref(), wt, bt, dilation)
    }

    fn conv2d(&mut self, x: &Tensor, w: ParamId, b: ParamId, stride: usize) -> Result<Tensor> {
        let (wt, bt) = (self.p(w), self.p(b));
        let hist = self.cache.take_history(w, x, wt.dim(2).max(1) - 1);
        conv2d::forward(x, hist.as_ref(), wt, bt, stride)
    }

    fn deconv2d(
        &mut self,
        x: &Tensor,
        w: ParamId,
        b: ParamId,
        stride: usize,
        out_f: usize,
    ) -> Result<Tensor> {
        let (wt, bt) = (self.p(w), self.p(b));
        let hist = self.cache.take_history(w, x, wt.dim(2).max(1) - 1);
        deconv2d::forward(x, hist.as_ref(), wt, bt, stride, out_f)
    }

    fn instance_norm(&mut self, x: &Tensor, ids: NormIds) -> Result<Tensor> {
        let (g, b) = (self.p(ids.gamma), self.p(ids.beta));
        match self.mode {
            NormMode::Running => norm::forward_running(x, g, b, self.p(ids.mean), self.p(ids.var)),
            NormMode::Utterance => Ok(norm::forward_utterance(x, g, b)?.0),
        }
    }

    fn lstm(&mut self, x: &Tensor, ids: LstmIds) -> Result<Tensor> {
        let state = self.cache.lstm.get(&ids.w_ih);
        let (y, next) = lstm::forward(x, state, self.p(ids.w_ih), self.p(ids.w_hh), self.p(ids.b))?;
        self.cache.lstm.insert(ids.w_ih, next);
        Ok(y)
    }

    fn prelu(&mut self, x: &Tensor, slope: ParamId) -> Result<Tensor> {
        activation::prelu(x, self.p(slope))
    }

    fn sigmoid(&mut self, x: &Tensor) -> Tensor {
        activation::sigmoid(x)
    }

    fn tanh(&mut self, x: &Tensor) -> Tensor {
        activation::tanh(x)
    }

    fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        a.zip_map(b, |x, y| x + y)
    }

    fn sub(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        a.zip_map(b, |x, y| x - y)
    }

    fn mul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        a.zip_map(b, |x, y| x * y)
    }

    fn concat(&mut self, parts: &[&Tensor]) -> Result<Tensor> {
        Tensor::concat(parts)
    }

    fn narrow(&mut self, x: &Tensor, start: usize, len: usize) -> Result<Tensor> {
        x.narrow(start, len)
    }

    fn narrow_last(&mut self, x: &Tensor, start: usize, len: usize) -> Result<Tensor> {
        x.narrow_last(start, len)
    }

    fn flatten_freq(&mut self, x: &Tensor) -> Result<Tensor> {
        x.flatten_freq()
    }

    fn unflatten_freq(&mut self, x: &Tensor, channels: usize) -> Result<Tensor> {
        x.unflatten_freq(channels)
    }
}
